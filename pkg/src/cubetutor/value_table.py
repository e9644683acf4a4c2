"""Tabular value estimates over goal-relevant facelet patterns.

A pattern keeps only the stickers of the cubelets a goal constrains and
wildcards everything else, so the table generalizes across states that agree
on the goal-relevant pieces.  Values are trained by value iteration over
patterns sampled from reverse scrambles; patterns never sampled fall back to
the admissible misplaced-cubelet bound.
"""
from __future__ import annotations

import itertools
import json
from pathlib import Path

import numpy as np

from .cube import (
    CORNER_SLOTS,
    CubeError,
    CubeState,
    EDGE_SLOTS,
    MOVE_GATHER,
    COLOR_LETTERS,
    PartialGoal,
    _home_color,
    goal_cubelet_constraints,
    goal_cubelets,
    goal_from_pattern,
    home_facelets,
    matches,
    solved_state,
)

FORMAT_VERSION = 1
WILDCARD = 255


class ValueTable:
    """Pattern -> estimated distance-to-goal, with admissible fallback."""

    def __init__(self, goal: PartialGoal, values: dict[bytes, float], metadata: dict):
        self.goal = goal
        self.values = values
        self.metadata = dict(metadata)
        tracked = set(goal_cubelets(goal))
        self._edge_idx = np.array([fs for _, fs in EDGE_SLOTS], dtype=np.int64)
        self._corner_idx = np.array([fs for _, fs in CORNER_SLOTS], dtype=np.int64)
        edge_lut = np.zeros((6, 6), dtype=bool)
        corner_lut = np.zeros((6, 6, 6), dtype=bool)
        for cid in tracked:
            home = home_facelets(cid)
            colors = sorted(int(_home_color(f)) for f in home)
            if len(colors) == 2:
                a, b = colors
                edge_lut[a, b] = edge_lut[b, a] = True
            else:
                for p in itertools.permutations(colors):
                    corner_lut[p] = True
        self._edge_lut = edge_lut
        self._corner_lut = corner_lut
        groups = goal_cubelet_constraints(goal)
        self._goal_slots = np.concatenate([i for _, i, _ in groups]) if groups else np.empty(0, np.int64)
        self._goal_req = np.concatenate([r for _, _, r in groups]) if groups else np.empty(0, np.uint8)
        self._group_ids = np.concatenate(
            [np.full(len(i), g, np.int64) for g, (_, i, _) in enumerate(groups)]
        ) if groups else np.empty(0, np.int64)
        self._n_groups = len(groups)

    # -- patterns ---------------------------------------------------------

    def mask_patterns(self, states: np.ndarray) -> np.ndarray:
        """Wildcard every sticker not belonging to a goal-relevant cubelet."""
        out = np.full_like(states, WILDCARD)
        ec = states[:, self._edge_idx]
        keep = self._edge_lut[ec[:, :, 0], ec[:, :, 1]]
        for j in range(self._edge_idx.shape[0]):
            for f in self._edge_idx[j]:
                out[:, f] = np.where(keep[:, j], states[:, f], WILDCARD)
        cc = states[:, self._corner_idx]
        keepc = self._corner_lut[cc[:, :, 0], cc[:, :, 1], cc[:, :, 2]]
        for j in range(self._corner_idx.shape[0]):
            for f in self._corner_idx[j]:
                out[:, f] = np.where(keepc[:, j], states[:, f], WILDCARD)
        return out

    def pattern_key(self, state: CubeState) -> bytes:
        return self.mask_patterns(state.facelets[None, :])[0].tobytes()

    def _fallback(self, patterns: np.ndarray) -> np.ndarray:
        if self._n_groups == 0:
            return np.zeros(patterns.shape[0], dtype=np.float64)
        bad = patterns[:, self._goal_slots] != self._goal_req
        counts = np.zeros(patterns.shape[0], dtype=np.int64)
        for g in range(self._n_groups):
            counts += bad[:, self._group_ids == g].any(axis=1)
        return np.ceil(counts / 8.0)

    # -- heuristic contract ------------------------------------------------

    def _check_goal(self, goal: PartialGoal) -> None:
        if goal.key == self.goal.key:
            return
        # Accept any goal at least as strict as the trained one; the value
        # then remains a lower bound for the stricter problem.
        mine = self.goal.mask
        stricter = np.all(~mine | (goal.mask & (goal.values == self.goal.values)))
        if not stricter:
            raise CubeError("value table was trained for an incompatible goal")

    def estimate(self, state: CubeState, goal: PartialGoal) -> float:
        return float(self.estimate_batch(state.facelets[None, :], goal)[0])

    def estimate_batch(self, states: np.ndarray, goal: PartialGoal) -> np.ndarray:
        self._check_goal(goal)
        patterns = self.mask_patterns(states)
        out = self._fallback(patterns)
        for i in range(patterns.shape[0]):
            v = self.values.get(patterns[i].tobytes())
            if v is not None:
                out[i] = v
        return out

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        entries = {
            _pattern_to_text(np.frombuffer(k, dtype=np.uint8)): v
            for k, v in sorted(self.values.items())
        }
        doc = {
            "format_version": FORMAT_VERSION,
            "kind": "value-table",
            "goal_pattern": self.goal.pattern(),
            "goal_name": self.goal.name,
            "metadata": self.metadata,
            "entries": entries,
        }
        Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "ValueTable":
        doc = json.loads(Path(path).read_text())
        if doc.get("format_version") != FORMAT_VERSION or doc.get("kind") != "value-table":
            raise CubeError(f"unsupported value table file {path}")
        goal = goal_from_pattern(doc["goal_pattern"])
        goal.name = doc.get("goal_name")
        values = {
            _text_to_pattern(text).tobytes(): float(v) for text, v in doc["entries"].items()
        }
        return cls(goal, values, doc.get("metadata", {}))


def _pattern_to_text(pattern: np.ndarray) -> str:
    return "".join("*" if c == WILDCARD else COLOR_LETTERS[c] for c in pattern)


def _text_to_pattern(text: str) -> np.ndarray:
    return np.array(
        [WILDCARD if ch == "*" else COLOR_LETTERS.index(ch) for ch in text], dtype=np.uint8
    )


def train_value_table(
    goal: PartialGoal,
    samples: int = 2000,
    max_depth: int = 10,
    iterations: int = 60,
    seed: int = 0,
    start: CubeState | None = None,
) -> ValueTable:
    """Approximate value iteration over reverse-scramble pattern samples.

    Deterministic for fixed arguments.  The final Bellman residual is
    reported in ``metadata["bellman_residual"]``.
    """
    if samples < 1 or max_depth < 1 or iterations < 1:
        raise ValueError("samples, max_depth and iterations must be positive")
    start = start if start is not None else solved_state()
    if not matches(start, goal):
        raise CubeError("training start state must satisfy the goal")

    table = ValueTable(goal, {}, {})
    rng = np.random.default_rng(seed)

    # Reverse scrambles from the goal-satisfying start; record every prefix.
    walks = np.empty((samples, max_depth), dtype=np.int64)
    for i in range(samples):
        prev_face = -1
        for j in range(max_depth):
            if prev_face < 0:
                face = int(rng.integers(0, 6))
            else:
                face = int(rng.integers(0, 5))
                if face >= prev_face:
                    face += 1
            walks[i, j] = 2 * face + int(rng.integers(0, 2))
            prev_face = face
    depths = rng.integers(1, max_depth + 1, size=samples)

    seen: dict[bytes, np.ndarray] = {}
    base = table.mask_patterns(start.facelets[None, :])[0]
    seen[base.tobytes()] = base
    cur = np.repeat(start.facelets[None, :], samples, axis=0)
    alive = np.arange(samples)
    for j in range(max_depth):
        alive = alive[depths[alive] > j]
        if alive.size == 0:
            break
        gathers = MOVE_GATHER[walks[alive, j]]
        cur[alive] = np.take_along_axis(cur[alive], gathers, axis=1)
        pats = table.mask_patterns(cur[alive])
        for p in pats:
            key = p.tobytes()
            if key not in seen:
                seen[key] = p.copy()

    keys = sorted(seen)
    pats = np.stack([seen[k] for k in keys])
    n = pats.shape[0]

    sat = np.ones(n, dtype=bool)
    if table._goal_slots.size:
        sat = (pats[:, table._goal_slots] == table._goal_req).all(axis=1)

    # Precompute per-pattern children: table index if sampled, else fallback.
    index = {k: i for i, k in enumerate(keys)}
    child_idx = np.full((n, 12), -1, dtype=np.int64)
    child_fb = np.zeros((n, 12), dtype=np.float64)
    for m in range(12):
        children = pats[:, MOVE_GATHER[m]]
        child_fb[:, m] = table._fallback(children)
        for i in range(n):
            child_idx[i, m] = index.get(children[i].tobytes(), -1)

    v = table._fallback(pats)
    v[sat] = 0.0
    residual = np.inf
    sweeps = 0
    for _ in range(iterations):
        cv = np.where(child_idx >= 0, v[np.clip(child_idx, 0, None)], child_fb)
        new_v = np.where(sat, 0.0, 1.0 + cv.min(axis=1))
        residual = float(np.abs(new_v - v).max())
        v = new_v
        sweeps += 1
        if residual < 1e-12:
            break

    table.values = {k: float(v[i]) for i, k in enumerate(keys)}
    table.metadata = {
        "samples": int(samples),
        "max_depth": int(max_depth),
        "iterations_requested": int(iterations),
        "sweeps": sweeps,
        "seed": int(seed),
        "bellman_residual": residual,
        "patterns": n,
    }
    return table
