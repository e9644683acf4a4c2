"""Time the numba and numpy kernel backends side by side.

Run from the repository root:

    python3 benchmarks/bench_kernels.py --batch 20000 --repeats 30

The numbers are best-of-N wall times per call for each kernel in
``cubetutor.kernels.IMPLEMENTATIONS``, on inputs shaped like the solver's
real workload (frontier batches of 54-facelet states, the 12 move gathers,
the white-cross mismatch tables).  Numba functions are called once before
timing so compilation is not billed to the benchmark.

Set CUBETUTOR_NUMBA=0 to see the fallback only, =1 to insist on numba.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from cubetutor import kernels
from cubetutor.cube import MOVE_GATHER, white_cross_goal
from cubetutor.search import MisplacedBound


def build_inputs(batch: int, seed: int) -> dict[str, tuple]:
    rng = np.random.default_rng(seed)
    states = rng.integers(0, 6, size=(batch, 54), dtype=np.uint8)
    move_indices = rng.integers(0, 12, size=batch, dtype=np.int64)
    slots, required, group_ids, n_groups = MisplacedBound()._tables(white_cross_goal())
    return {
        "apply_gather_batch": (states, MOVE_GATHER[0]),
        "apply_moves_batch": (states, move_indices, MOVE_GATHER),
        "expand_all_moves": (states, MOVE_GATHER),
        "mismatch_counts": (states, slots, required),
        "misplaced_group_counts": (states, slots, required, group_ids, n_groups),
        "pack_keys": (states,),
    }


def best_time(fn, args, repeats: int) -> float:
    fn(*args)  # warm up; compiles the numba path on first call
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeats))


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--batch", type=int, default=20_000,
                        help="states per call (default 20000)")
    parser.add_argument("--repeats", type=int, default=30,
                        help="timing repetitions, best is kept (default 30)")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    inputs = build_inputs(args.batch, args.seed)
    backends = list(kernels.IMPLEMENTATIONS)
    print(f"active backend: {kernels.ACTIVE_BACKEND}   "
          f"batch={args.batch}   best of {args.repeats}")
    if "numba" not in backends:
        print("numba unavailable or disabled; timing the numpy path only")

    header = f"{'kernel':<24}" + "".join(f"{b + ' (ms)':>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))

    for name, call_args in inputs.items():
        times = [best_time(kernels.IMPLEMENTATIONS[b][name], call_args, args.repeats)
                 for b in backends]
        row = f"{name:<24}" + "".join(f"{t * 1e3:>14.3f}" for t in times)
        if len(times) == 2 and times[1] > 0:
            row += f"{times[0] / times[1]:>9.2f}x"
        print(row)

    # cross-check: both backends must agree bit for bit on the same inputs
    if len(backends) == 2:
        for name, call_args in inputs.items():
            a = kernels.IMPLEMENTATIONS["numpy"][name](*call_args)
            b = kernels.IMPLEMENTATIONS["numba"][name](*call_args)
            assert np.array_equal(a, b), f"backend mismatch in {name}"
        print("backend agreement: ok")


if __name__ == "__main__":
    main()
