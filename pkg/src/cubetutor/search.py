"""Goal-conditioned search: admissible bound, weighted A*, BFS oracle."""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Protocol

import numpy as np

from . import kernels
from .cube import (
    MOVE_GATHER,
    MOVES,
    CubeState,
    Move,
    PartialGoal,
    goal_cubelet_constraints,
    matches,
)


@dataclass(frozen=True)
class SearchResult:
    path: tuple[Move, ...]
    nodes_expanded: int

    @property
    def cost(self) -> int:
        return len(self.path)


class SearchError(RuntimeError):
    """Search failure; carries the expansion count at failure time."""

    def __init__(self, message: str, nodes_expanded: int):
        super().__init__(message)
        self.nodes_expanded = nodes_expanded


class SearchBudgetError(SearchError):
    """Node budget exhausted before reaching the goal."""


class GoalUnreachableError(SearchError):
    """The goal is not reachable from the start state."""


class Heuristic(Protocol):
    def estimate(self, state: CubeState, goal: PartialGoal) -> float: ...

    def estimate_batch(self, states: np.ndarray, goal: PartialGoal) -> np.ndarray: ...


class MisplacedBound:
    """Admissible lower bound ceil(k / 8).

    k counts goal-constrained non-center cubelets with any goal-fixed facelet
    showing the wrong color.  One quarter turn relocates exactly eight
    non-center cubelets, so it can repair at most eight of them.
    """

    def __init__(self) -> None:
        self._cache: dict[bytes, tuple[np.ndarray, np.ndarray, np.ndarray, int]] = {}

    def _tables(self, goal: PartialGoal) -> tuple[np.ndarray, np.ndarray, np.ndarray, int]:
        cached = self._cache.get(goal.key)
        if cached is None:
            groups = goal_cubelet_constraints(goal)
            slots = np.concatenate([idx for _, idx, _ in groups]) if groups else np.empty(0, np.int64)
            required = np.concatenate([req for _, _, req in groups]) if groups else np.empty(0, np.uint8)
            group_ids = np.concatenate(
                [np.full(len(idx), g, dtype=np.int64) for g, (_, idx, _) in enumerate(groups)]
            ) if groups else np.empty(0, np.int64)
            cached = (slots, required, group_ids, len(groups))
            self._cache[goal.key] = cached
        return cached

    def estimate(self, state: CubeState, goal: PartialGoal) -> float:
        return float(self.estimate_batch(state.facelets[None, :], goal)[0])

    def estimate_batch(self, states: np.ndarray, goal: PartialGoal) -> np.ndarray:
        slots, required, group_ids, n_groups = self._tables(goal)
        if n_groups == 0:
            return np.zeros(states.shape[0], dtype=np.float64)
        counts = kernels.misplaced_group_counts(states, slots, required, group_ids, n_groups)
        return np.ceil(counts / 8.0)


_MISPLACED = MisplacedBound()


def misplaced_bound_heuristic(state: CubeState, goal: PartialGoal) -> int:
    return int(_MISPLACED.estimate(state, goal))


class MaxHeuristic:
    """Pointwise maximum of several estimators (admissible if all are)."""

    def __init__(self, providers: list[Heuristic]):
        if not providers:
            raise ValueError("at least one provider required")
        self.providers = list(providers)

    def estimate(self, state: CubeState, goal: PartialGoal) -> float:
        return max(p.estimate(state, goal) for p in self.providers)

    def estimate_batch(self, states: np.ndarray, goal: PartialGoal) -> np.ndarray:
        out = self.providers[0].estimate_batch(states, goal)
        for p in self.providers[1:]:
            out = np.maximum(out, p.estimate_batch(states, goal))
        return out


def astar_solve(
    start: CubeState,
    goal: PartialGoal,
    heuristic: Heuristic | None = None,
    weight: float = 1.0,
    node_budget: int = 500_000,
) -> SearchResult:
    """Weighted A* over the quarter-turn graph.

    With weight 1 and an admissible heuristic the returned path is optimal.
    Ties on f prefer the larger g, then earlier insertion, which follows the
    move enumeration order; results are fully deterministic.
    """
    if weight < 1.0:
        raise ValueError(f"weight must be >= 1, got {weight}")
    h = heuristic if heuristic is not None else _MISPLACED

    goal_slots = goal.fixed_slots
    goal_req = goal.values[goal_slots]

    start_arr = start.facelets
    start_key = start_arr.tobytes()
    g_best: dict[bytes, int] = {start_key: 0}
    parents: dict[bytes, tuple[bytes, int]] = {}
    arrays: dict[bytes, np.ndarray] = {start_key: start_arr}
    produced_by: dict[bytes, int] = {start_key: -1}

    counter = 0
    h0 = float(h.estimate(start, goal))
    open_heap: list[tuple[float, int, int, bytes]] = [(weight * h0, 0, counter, start_key)]
    nodes_expanded = 0
    closed: set[bytes] = set()

    while open_heap:
        f, neg_g, _, key = heapq.heappop(open_heap)
        g = -neg_g
        if key in closed or g > g_best.get(key, math.inf):
            continue
        arr = arrays[key]
        if np.all(arr[goal_slots] == goal_req):
            path: list[Move] = []
            k = key
            while k != start_key:
                pk, mi = parents[k]
                path.append(MOVES[mi])
                k = pk
            return SearchResult(tuple(reversed(path)), nodes_expanded)
        closed.add(key)
        nodes_expanded += 1
        if nodes_expanded > node_budget:
            raise SearchBudgetError(f"node budget {node_budget} exhausted", nodes_expanded)

        last = produced_by[key]
        skip = MOVES[last].inverse().index if last >= 0 else -1
        children = kernels.expand_all_moves(arr[None, :], MOVE_GATHER)
        hs = h.estimate_batch(children, goal)
        for mi in range(12):
            if mi == skip:  # an immediate undo is never useful
                continue
            child = children[mi]
            ck = child.tobytes()
            if ck in closed:
                continue
            cg = g + 1
            if cg >= g_best.get(ck, math.inf):
                continue
            g_best[ck] = cg
            parents[ck] = (key, mi)
            arrays[ck] = child
            produced_by[ck] = mi
            counter += 1
            heapq.heappush(open_heap, (cg + weight * float(hs[mi]), -cg, counter, ck))

    raise GoalUnreachableError("open set exhausted; goal unreachable", nodes_expanded)


def _void_view(packed: np.ndarray) -> np.ndarray:
    return np.ascontiguousarray(packed).view([("k", "V18")]).ravel()


def bfs_oracle(start: CubeState, goal: PartialGoal, max_depth: int) -> int | None:
    """Exact optimal distance by layered breadth-first search, or None.

    Memory guard: max_depth must be <= 7.  Layers are deduplicated against
    the previous layer only, which is sufficient because every quarter turn
    is an odd facelet permutation, making the search graph bipartite.
    """
    if not 0 <= max_depth <= 7:
        raise ValueError(f"max_depth must be in [0, 7], got {max_depth}")
    if matches(start, goal):
        return 0
    goal_slots = goal.fixed_slots
    goal_req = goal.values[goal_slots]

    frontier = start.facelets[None, :]
    frontier_keys = _void_view(kernels.pack_keys(frontier))
    older_keys = _void_view(np.empty((0, 18), dtype=np.uint8))
    for depth in range(1, max_depth + 1):
        children = kernels.expand_all_moves(frontier, MOVE_GATHER)
        hits = kernels.mismatch_counts(children, goal_slots, goal_req) == 0
        if hits.any():
            return depth
        if depth == max_depth:
            return None
        keys = _void_view(kernels.pack_keys(children))
        uniq, first = np.unique(keys, return_index=True)
        fresh = ~np.isin(uniq, older_keys, assume_unique=True)
        frontier = children[first[fresh]]
        older_keys = frontier_keys
        frontier_keys = uniq[fresh]
    return None
