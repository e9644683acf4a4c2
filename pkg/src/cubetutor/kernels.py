"""Hot array kernels with numba-jitted and pure-numpy implementations.

The active path is selected once at import time from the CUBETUTOR_NUMBA
environment variable: "0" forces the numpy fallback, "1" requires numba
(ImportError propagates), anything else tries numba and falls back.

Both implementations are kept importable for the benchmark suite and the
agreement tests; see ``IMPLEMENTATIONS``.
"""
from __future__ import annotations

import os

import numpy as np

_FLAG = os.environ.get("CUBETUTOR_NUMBA", "auto").strip().lower()

if _FLAG in ("0", "off", "false", "no"):
    _HAVE_NUMBA = False
else:
    try:
        from numba import njit

        _HAVE_NUMBA = True
    except ImportError:
        if _FLAG in ("1", "on", "true", "yes"):
            raise
        _HAVE_NUMBA = False

ACTIVE_BACKEND = "numba" if _HAVE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# numpy implementations


def _apply_gather_batch_np(states: np.ndarray, gather: np.ndarray) -> np.ndarray:
    """Apply one permutation to N states: (N, 54) x (54,) -> (N, 54)."""
    return states[:, gather]


def _apply_moves_batch_np(states: np.ndarray, move_indices: np.ndarray,
                          gathers: np.ndarray) -> np.ndarray:
    """Apply a per-row move: row i gets gathers[move_indices[i]]."""
    return np.take_along_axis(states, gathers[move_indices], axis=1)


def _expand_all_moves_np(states: np.ndarray, gathers: np.ndarray) -> np.ndarray:
    """All 12 children of each state: (N, 54) -> (N * 12, 54), move-major per row."""
    return states[:, gathers].reshape(states.shape[0] * gathers.shape[0], 54)


def _mismatch_counts_np(states: np.ndarray, slots: np.ndarray,
                        required: np.ndarray) -> np.ndarray:
    """Per state, how many of the given slots show the wrong color."""
    return (states[:, slots] != required).sum(axis=1).astype(np.int64)


def _misplaced_group_counts_np(states: np.ndarray, slots: np.ndarray,
                               required: np.ndarray, group_ids: np.ndarray,
                               n_groups: int) -> np.ndarray:
    """Per state, how many constraint groups have any mismatched slot.

    ``slots``/``required``/``group_ids`` are parallel flat arrays; groups are
    cubelets, so a group is misplaced as soon as one facelet is off.
    """
    bad = states[:, slots] != required
    out = np.zeros((states.shape[0], n_groups), dtype=bool)
    for g in range(n_groups):
        out[:, g] = bad[:, group_ids == g].any(axis=1)
    return out.sum(axis=1).astype(np.int64)


def _pack_keys_np(states: np.ndarray) -> np.ndarray:
    """Pack base-6 facelets 3-per-byte: (N, 54) uint8 -> (N, 18) uint8."""
    t = states.reshape(states.shape[0], 18, 3).astype(np.uint16)
    packed = t[:, :, 0] + 6 * t[:, :, 1] + 36 * t[:, :, 2]
    return packed.astype(np.uint8)


# ---------------------------------------------------------------------------
# numba implementations

if _HAVE_NUMBA:

    @njit(cache=True)
    def _apply_gather_batch_nb(states, gather):  # pragma: no cover - jitted
        n = states.shape[0]
        out = np.empty_like(states)
        for i in range(n):
            for j in range(54):
                out[i, j] = states[i, gather[j]]
        return out

    @njit(cache=True)
    def _apply_moves_batch_nb(states, move_indices, gathers):  # pragma: no cover
        n = states.shape[0]
        out = np.empty_like(states)
        for i in range(n):
            g = gathers[move_indices[i]]
            for j in range(54):
                out[i, j] = states[i, g[j]]
        return out

    @njit(cache=True)
    def _expand_all_moves_nb(states, gathers):  # pragma: no cover - jitted
        n = states.shape[0]
        m = gathers.shape[0]
        out = np.empty((n * m, 54), dtype=states.dtype)
        for i in range(n):
            for k in range(m):
                row = i * m + k
                for j in range(54):
                    out[row, j] = states[i, gathers[k, j]]
        return out

    @njit(cache=True)
    def _mismatch_counts_nb(states, slots, required):  # pragma: no cover - jitted
        n = states.shape[0]
        out = np.zeros(n, dtype=np.int64)
        for i in range(n):
            c = 0
            for j in range(slots.shape[0]):
                if states[i, slots[j]] != required[j]:
                    c += 1
            out[i] = c
        return out

    @njit(cache=True)
    def _misplaced_group_counts_nb(states, slots, required, group_ids, n_groups):
        n = states.shape[0]  # pragma: no cover - jitted
        out = np.zeros(n, dtype=np.int64)
        for i in range(n):
            count = 0
            g = 0
            while g < n_groups:
                misplaced = False
                for j in range(slots.shape[0]):
                    if group_ids[j] == g and states[i, slots[j]] != required[j]:
                        misplaced = True
                        break
                if misplaced:
                    count += 1
                g += 1
            out[i] = count
        return out

    @njit(cache=True)
    def _pack_keys_nb(states):  # pragma: no cover - jitted
        n = states.shape[0]
        out = np.empty((n, 18), dtype=np.uint8)
        for i in range(n):
            for k in range(18):
                base = 3 * k
                out[i, k] = (states[i, base]
                             + 6 * states[i, base + 1]
                             + 36 * states[i, base + 2])
        return out


_NUMPY_IMPL = {
    "apply_gather_batch": _apply_gather_batch_np,
    "apply_moves_batch": _apply_moves_batch_np,
    "expand_all_moves": _expand_all_moves_np,
    "mismatch_counts": _mismatch_counts_np,
    "misplaced_group_counts": _misplaced_group_counts_np,
    "pack_keys": _pack_keys_np,
}

if _HAVE_NUMBA:
    _NUMBA_IMPL = {
        "apply_gather_batch": _apply_gather_batch_nb,
        "apply_moves_batch": _apply_moves_batch_nb,
        "expand_all_moves": _expand_all_moves_nb,
        "mismatch_counts": _mismatch_counts_nb,
        "misplaced_group_counts": _misplaced_group_counts_nb,
        "pack_keys": _pack_keys_nb,
    }
    IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL, "numba": _NUMBA_IMPL}
else:
    IMPLEMENTATIONS = {"numpy": _NUMPY_IMPL}

_ACTIVE = IMPLEMENTATIONS[ACTIVE_BACKEND]

apply_gather_batch = _ACTIVE["apply_gather_batch"]
apply_moves_batch = _ACTIVE["apply_moves_batch"]
expand_all_moves = _ACTIVE["expand_all_moves"]
mismatch_counts = _ACTIVE["mismatch_counts"]
misplaced_group_counts = _ACTIVE["misplaced_group_counts"]
pack_keys = _ACTIVE["pack_keys"]
