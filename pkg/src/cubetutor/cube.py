"""Facelet-level model of the 3x3x3 cube.

Conventions
-----------
A state is a permutation of 54 colored stickers, stored face-major and
row-major within each face.  Faces are ordered U, D, L, R, F, B, so facelet
``face * 9 + row * 3 + col`` addresses sticker (row, col) of that face, with
each face drawn as seen from outside the cube on the usual unfolded cross
(U above F, D below F, L left of F, R right of F, B right of R).  Slot 4 of
every face is its center and never moves.

Colors are the letters W, Y, R, O, G, B.  The home orientation puts white
on Up, yellow on Down, blue on Front, green on Back, orange on Right and
red on Left (a standard color scheme; centers pin it).

Moves are the twelve quarter turns in Singmaster notation: U D L R F B turn
the named face clockwise as seen from outside that face, a trailing
apostrophe marks the counterclockwise turn.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence

import numpy as np


class CubeError(ValueError):
    """Base class for cube model errors."""


class FaceletLengthError(CubeError):
    """Facelet string is not exactly 54 characters."""


class FaceletCharacterError(CubeError):
    """Facelet string contains a character outside WYROGB."""


class FaceletCountError(CubeError):
    """Facelet string does not contain each color exactly nine times."""


class FaceletCenterError(CubeError):
    """Center stickers disagree with the fixed home orientation."""


class Color(IntEnum):
    WHITE = 0
    YELLOW = 1
    RED = 2
    ORANGE = 3
    GREEN = 4
    BLUE = 5


COLOR_LETTERS = "WYROGB"
COLOR_NAMES = ("white", "yellow", "red", "orange", "green", "blue")


class Face(IntEnum):
    U = 0
    D = 1
    L = 2
    R = 3
    F = 4
    B = 5


FACE_LETTERS = "UDLRFB"
FACE_NAMES = ("top", "bottom", "left", "right", "front", "back")

# Home color of each face, indexed by Face.
HOME_COLORS = (Color.WHITE, Color.YELLOW, Color.RED, Color.ORANGE, Color.BLUE, Color.GREEN)

CENTER_SLOTS = tuple(face * 9 + 4 for face in range(6))

# Each clockwise face turn rotates its own eight non-center stickers through
# these two 4-cycles (face-local slots, "sticker at a moves to b's slot").
_RING_CYCLES = ((0, 2, 8, 6), (1, 5, 7, 3))

# Side-strip 4-cycles of absolute facelet indices for each clockwise turn.
# Derived from the net geometry above; validated by the test suite against
# an independently written cycle table and the group-law properties.
_SIDE_CYCLES = {
    Face.U: ((36, 18, 45, 27), (37, 19, 46, 28), (38, 20, 47, 29)),
    Face.D: ((42, 33, 51, 24), (43, 34, 52, 25), (44, 35, 53, 26)),
    Face.L: ((0, 36, 9, 53), (3, 39, 12, 50), (6, 42, 15, 47)),
    Face.R: ((2, 51, 11, 38), (5, 48, 14, 41), (8, 45, 17, 44)),
    Face.F: ((6, 27, 11, 26), (7, 30, 10, 23), (8, 33, 9, 20)),
    Face.B: ((0, 24, 17, 29), (1, 21, 16, 32), (2, 18, 15, 35)),
}


def _face_permutation(face: Face) -> np.ndarray:
    """destination[source] mapping for one clockwise quarter turn."""
    perm = np.arange(54, dtype=np.int64)
    base = int(face) * 9
    cycles = [tuple(base + s for s in cyc) for cyc in _RING_CYCLES]
    cycles.extend(_SIDE_CYCLES[face])
    for cyc in cycles:
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            perm[a] = b
    return perm


def _build_gathers() -> np.ndarray:
    """Gather tables G so that applying move m is ``state[G[m]]``.

    If the move sends the sticker at slot a to slot b, then G[b] = a.
    Index layout: move 2*face is clockwise, 2*face+1 counterclockwise.
    """
    gathers = np.empty((12, 54), dtype=np.int64)
    for face in Face:
        perm = _face_permutation(face)
        gather_cw = np.empty(54, dtype=np.int64)
        gather_cw[perm] = np.arange(54)
        gathers[2 * face] = gather_cw
        gathers[2 * face + 1] = perm  # inverse turn gathers along the forward map
    return gathers


MOVE_GATHER = _build_gathers()
MOVE_GATHER.setflags(write=False)


@dataclass(frozen=True, order=True)
class Move:
    face: Face
    prime: bool = False

    @property
    def index(self) -> int:
        return 2 * int(self.face) + int(self.prime)

    def inverse(self) -> "Move":
        return Move(self.face, not self.prime)

    def __str__(self) -> str:
        return FACE_LETTERS[self.face] + ("'" if self.prime else "")


#: All twelve moves in canonical enumeration order (U U' D D' L L' R R' F F' B B').
MOVES = tuple(Move(face, prime) for face in Face for prime in (False, True))

MOVE_NAMES = tuple(str(m) for m in MOVES)


def parse_move(token: str) -> Move:
    token = token.strip()
    if len(token) not in (1, 2) or token[0] not in FACE_LETTERS:
        raise CubeError(f"unknown move token {token!r}")
    if len(token) == 2 and token[1] != "'":
        raise CubeError(f"unknown move token {token!r}")
    return Move(Face(FACE_LETTERS.index(token[0])), len(token) == 2)


def parse_moves(text: str) -> tuple[Move, ...]:
    """Parse a whitespace-separated move sequence such as ``"D' F' R F"``."""
    return tuple(parse_move(tok) for tok in text.split())


def format_moves(moves: Iterable[Move]) -> str:
    return " ".join(str(m) for m in moves)


def invert_moves(moves: Sequence[Move]) -> tuple[Move, ...]:
    return tuple(m.inverse() for m in reversed(moves))


class CubeState:
    """Immutable 54-facelet state with value semantics."""

    __slots__ = ("_facelets",)

    def __init__(self, facelets: np.ndarray):
        arr = np.asarray(facelets, dtype=np.uint8).copy()
        if arr.shape != (54,):
            raise CubeError(f"expected 54 facelets, got shape {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "_facelets", arr)

    @property
    def facelets(self) -> np.ndarray:
        return self._facelets

    @property
    def key(self) -> bytes:
        return self._facelets.tobytes()

    def __eq__(self, other: object) -> bool:
        return isinstance(other, CubeState) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"CubeState({format_facelets(self)!r})"


_SOLVED = np.repeat(np.array(HOME_COLORS, dtype=np.uint8), 9)
_SOLVED.setflags(write=False)


def solved_state() -> CubeState:
    return CubeState(_SOLVED)


def apply_move(state: CubeState, move: Move) -> CubeState:
    return CubeState(state.facelets[MOVE_GATHER[move.index]])


def apply_sequence(state: CubeState, moves: Iterable[Move]) -> CubeState:
    arr = state.facelets
    for m in moves:
        arr = arr[MOVE_GATHER[m.index]]
    return CubeState(arr)


def sequence_gather(moves: Iterable[Move]) -> np.ndarray:
    """Composed gather table for a whole sequence: ``state[g]`` applies it."""
    g = np.arange(54, dtype=np.int64)
    for m in moves:
        g = g[MOVE_GATHER[m.index]]
    return g


def _build_yaw() -> np.ndarray:
    """Facelet permutation for one whole-cube rotation about the U axis,
    carrying the F face onto R.  Not a legal move (centers travel), but it is
    a symmetry of the move graph: conjugating any move sequence by it yields
    the sequence relabeled through YAW_FACE."""
    perm = np.arange(54, dtype=np.int64)
    side = {Face.F: Face.R, Face.R: Face.B, Face.B: Face.L, Face.L: Face.F}
    for src, dst in side.items():
        for i in range(9):
            perm[9 * src + i] = 9 * dst + i
    for cycle in ((0, 6, 8, 2), (1, 3, 7, 5)):  # U face turns with the cube
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            perm[a] = b
    for cycle in ((9, 11, 17, 15), (10, 14, 16, 12)):  # D face likewise
        for a, b in zip(cycle, cycle[1:] + cycle[:1]):
            perm[a] = b
    gather = np.empty(54, dtype=np.int64)
    gather[perm] = np.arange(54, dtype=np.int64)
    return gather


YAW_GATHER = _build_yaw()
YAW_GATHER.setflags(write=False)

YAW_FACE = {Face.U: Face.U, Face.D: Face.D, Face.F: Face.R,
            Face.R: Face.B, Face.B: Face.L, Face.L: Face.F}
# The piece whose home is a side face takes over the next side face's home.
YAW_COLOR = {Color.WHITE: Color.WHITE, Color.YELLOW: Color.YELLOW,
             Color.BLUE: Color.ORANGE, Color.ORANGE: Color.GREEN,
             Color.GREEN: Color.RED, Color.RED: Color.BLUE}


def yaw_state(state: CubeState, k: int = 1) -> CubeState:
    arr = state.facelets
    for _ in range(k % 4):
        arr = arr[YAW_GATHER]
    return CubeState(arr)


def yaw_move(move: Move, k: int = 1) -> Move:
    face = move.face
    for _ in range(k % 4):
        face = YAW_FACE[face]
    return Move(face, move.prime)


def yaw_cubelet(cubelet_id: str, k: int = 1) -> str:
    colors = [Color(COLOR_LETTERS.index(ch)) for ch in cubelet_id]
    for _ in range(k % 4):
        colors = [YAW_COLOR[c] for c in colors]
    return "".join(COLOR_LETTERS[c] for c in sorted(colors))


def scramble(
    depth: int, seed: int | None = None, rng: np.random.Generator | None = None
) -> tuple[CubeState, tuple[Move, ...]]:
    """Seeded random walk from solved; consecutive same-face turns forbidden."""
    if depth < 1:
        raise CubeError(f"scramble depth must be >= 1, got {depth}")
    if rng is None:
        rng = np.random.default_rng(seed)
    moves: list[Move] = []
    prev_face = -1
    for _ in range(depth):
        if prev_face < 0:
            face = int(rng.integers(0, 6))
        else:
            face = int(rng.integers(0, 5))
            if face >= prev_face:
                face += 1  # skip the previous face, keeping the draw uniform
        prime = bool(rng.integers(0, 2))
        moves.append(Move(Face(face), prime))
        prev_face = face
    return apply_sequence(solved_state(), moves), tuple(moves)


def format_facelets(state: CubeState) -> str:
    return "".join(COLOR_LETTERS[c] for c in state.facelets)


def parse_facelets(text: str) -> CubeState:
    text = text.strip()
    if len(text) != 54:
        raise FaceletLengthError(f"expected 54 facelet characters, got {len(text)}")
    arr = np.empty(54, dtype=np.uint8)
    for i, ch in enumerate(text):
        idx = COLOR_LETTERS.find(ch.upper())
        if idx < 0:
            raise FaceletCharacterError(f"unknown color character {ch!r} at position {i}")
        arr[i] = idx
    counts = np.bincount(arr, minlength=6)
    if not np.all(counts == 9):
        bad = {COLOR_LETTERS[i]: int(counts[i]) for i in range(6) if counts[i] != 9}
        raise FaceletCountError(f"each color must appear exactly 9 times, got {bad}")
    for face in range(6):
        if arr[9 * face + 4] != HOME_COLORS[face]:
            raise FaceletCenterError(
                f"center of the {FACE_LETTERS[face]} face must be "
                f"{COLOR_LETTERS[HOME_COLORS[face]]}; the model keeps the "
                "cube in its home orientation"
            )
    return CubeState(arr)


# ---------------------------------------------------------------------------
# Partial goals


class PartialGoal:
    """Per-slot constraint: a fixed color or a wildcard."""

    __slots__ = ("values", "mask", "name")

    def __init__(self, values: np.ndarray, mask: np.ndarray, name: str | None = None):
        self.values = np.asarray(values, dtype=np.uint8).copy()
        self.mask = np.asarray(mask, dtype=bool).copy()
        if self.values.shape != (54,) or self.mask.shape != (54,):
            raise CubeError("goal arrays must have shape (54,)")
        self.values.setflags(write=False)
        self.mask.setflags(write=False)
        self.name = name

    @property
    def key(self) -> bytes:
        return self.mask.tobytes() + self.values.tobytes()

    @property
    def fixed_slots(self) -> np.ndarray:
        return np.flatnonzero(self.mask)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PartialGoal) and self.key == other.key

    def __hash__(self) -> int:
        return hash(self.key)

    def __repr__(self) -> str:
        return f"PartialGoal(name={self.name!r}, fixed={int(self.mask.sum())})"

    def pattern(self) -> str:
        return "".join(
            COLOR_LETTERS[v] if m else "*" for v, m in zip(self.values, self.mask)
        )


def matches(state: CubeState, goal: PartialGoal) -> bool:
    return bool(np.all(state.facelets[goal.mask] == goal.values[goal.mask]))


def solved_goal() -> PartialGoal:
    return PartialGoal(_SOLVED, np.ones(54, dtype=bool), name="solved")


def goal_from_pattern(text: str) -> PartialGoal:
    """54-character pattern, WYROGB letters or ``*`` wildcards."""
    text = text.strip()
    if len(text) != 54:
        raise FaceletLengthError(f"expected 54 pattern characters, got {len(text)}")
    values = np.zeros(54, dtype=np.uint8)
    mask = np.zeros(54, dtype=bool)
    for i, ch in enumerate(text):
        if ch == "*":
            continue
        idx = COLOR_LETTERS.find(ch.upper())
        if idx < 0:
            raise FaceletCharacterError(f"unknown pattern character {ch!r} at position {i}")
        values[i] = idx
        mask[i] = True
    return PartialGoal(values, mask)


# ---------------------------------------------------------------------------
# Cubelets

# Edge slots as (name, (facelet, facelet)) in a fixed canonical order.
EDGE_SLOTS: tuple[tuple[str, tuple[int, int]], ...] = (
    ("UB", (1, 46)),
    ("UL", (3, 19)),
    ("UR", (5, 28)),
    ("UF", (7, 37)),
    ("FL", (39, 23)),
    ("FR", (41, 30)),
    ("BL", (50, 21)),
    ("BR", (48, 32)),
    ("DF", (10, 43)),
    ("DL", (12, 25)),
    ("DR", (14, 34)),
    ("DB", (16, 52)),
)

# Corner slots as (name, (facelet, facelet, facelet)).
CORNER_SLOTS: tuple[tuple[str, tuple[int, int, int]], ...] = (
    ("UBL", (0, 47, 18)),
    ("UBR", (2, 45, 29)),
    ("UFL", (6, 36, 20)),
    ("UFR", (8, 38, 27)),
    ("DFL", (9, 42, 26)),
    ("DFR", (11, 44, 33)),
    ("DBL", (15, 53, 24)),
    ("DBR", (17, 51, 35)),
)

EDGE_SLOT_INDEX = {name: facelets for name, facelets in EDGE_SLOTS}
CORNER_SLOT_INDEX = {name: facelets for name, facelets in CORNER_SLOTS}


def _home_color(slot: int) -> Color:
    return HOME_COLORS[slot // 9]


def _cubelet_id(colors: Iterable[Color]) -> str:
    return "".join(COLOR_LETTERS[c] for c in sorted(colors))


#: cubelet id -> (slot name, home facelets) for all twelve edges.
EDGE_HOMES = {
    _cubelet_id(_home_color(f) for f in facelets): (name, facelets)
    for name, facelets in EDGE_SLOTS
}

#: cubelet id -> (slot name, home facelets) for all eight corners.
CORNER_HOMES = {
    _cubelet_id(_home_color(f) for f in facelets): (name, facelets)
    for name, facelets in CORNER_SLOTS
}

ALL_CUBELET_IDS = tuple(EDGE_HOMES) + tuple(CORNER_HOMES)

#: The four white edges, keyed by their Up-face slot order (UB, UL, UR, UF).
WHITE_CROSS_EDGES = tuple(
    _cubelet_id(_home_color(f) for f in facelets)
    for name, facelets in EDGE_SLOTS
    if name.startswith("U")
)


def cubelet_name(cubelet_id: str) -> str:
    """Human name, e.g. ``"WO" -> "white-orange edge"``."""
    colors = "-".join(COLOR_NAMES[COLOR_LETTERS.index(ch)] for ch in cubelet_id)
    kind = "edge" if len(cubelet_id) == 2 else "corner"
    return f"{colors} {kind}"


def is_edge(cubelet_id: str) -> bool:
    return len(cubelet_id) == 2


def home_facelets(cubelet_id: str) -> tuple[int, ...]:
    table = EDGE_HOMES if is_edge(cubelet_id) else CORNER_HOMES
    return table[cubelet_id][1]


def is_placed(state: CubeState, cubelet_id: str) -> bool:
    """True when every home facelet of the cubelet shows its home color.

    Sticker colorings are unique per cubelet, so on any reachable state this
    is equivalent to the cubelet sitting at home in home orientation.
    """
    return all(state.facelets[f] == _home_color(f) for f in home_facelets(cubelet_id))


def locate_cubelet(state: CubeState, cubelet_id: str) -> tuple[str, int]:
    """Current (slot name, orientation) of a cubelet.

    Orientation is the index within the slot's facelet tuple where the
    cubelet's lowest-ordered color currently sits.
    """
    colors = sorted(Color(COLOR_LETTERS.index(ch)) for ch in cubelet_id)
    slots = EDGE_SLOTS if is_edge(cubelet_id) else CORNER_SLOTS
    target = colors[0]
    color_set = set(colors)
    for name, facelets in slots:
        found = {Color(int(state.facelets[f])) for f in facelets}
        if found == color_set:
            for i, f in enumerate(facelets):
                if state.facelets[f] == target:
                    return name, i
    raise CubeError(f"cubelet {cubelet_id} not found; state is not reachable")


def cubelet_positions(state: CubeState) -> dict[str, tuple[str, int]]:
    return {cid: locate_cubelet(state, cid) for cid in ALL_CUBELET_IDS}


def sticker_face(state: CubeState, cubelet_id: str, color: Color) -> Face:
    """Face currently showing the given sticker of the given cubelet."""
    slot, _ = locate_cubelet(state, cubelet_id)
    table = EDGE_SLOT_INDEX if is_edge(cubelet_id) else CORNER_SLOT_INDEX
    for f in table[slot]:
        if state.facelets[f] == color:
            return Face(f // 9)
    raise CubeError(f"cubelet {cubelet_id} has no {color.name} sticker")


MIRROR_FACE = {Face.U: Face.U, Face.D: Face.D, Face.F: Face.F,
               Face.B: Face.B, Face.L: Face.R, Face.R: Face.L}
MIRROR_COLOR = {Color.WHITE: Color.WHITE, Color.YELLOW: Color.YELLOW,
                Color.BLUE: Color.BLUE, Color.GREEN: Color.GREEN,
                Color.RED: Color.ORANGE, Color.ORANGE: Color.RED}


def _build_mirror() -> np.ndarray:
    """Facelet permutation reflecting the cube through the plane that holds
    the U, D, F and B centers.  Like the yaw, not a legal move but a symmetry
    of the move graph; handedness flips, so a conjugated move reverses
    direction.  Built slot by slot so no facelet layout convention leaks in."""
    perm = np.empty(54, dtype=np.int64)  # forward map: sticker at i lands at perm[i]
    for face in Face:
        perm[9 * face + 4] = 9 * MIRROR_FACE[face] + 4
    for table in (EDGE_SLOT_INDEX, CORNER_SLOT_INDEX):
        by_faces = {frozenset(n): n for n in table}
        for name, facelets in table.items():
            mapped = "".join(MIRROR_FACE[Face[ch]].name for ch in name)
            dst_facelets = table[by_faces[frozenset(mapped)]]
            for f in facelets:
                want = MIRROR_FACE[Face(f // 9)]
                perm[f] = next(d for d in dst_facelets if d // 9 == want)
    gather = np.empty(54, dtype=np.int64)
    gather[perm] = np.arange(54, dtype=np.int64)
    return gather


MIRROR_GATHER = _build_mirror()
MIRROR_GATHER.setflags(write=False)


def mirror_state(state: CubeState) -> CubeState:
    return CubeState(state.facelets[MIRROR_GATHER])


def mirror_move(move: Move) -> Move:
    return Move(MIRROR_FACE[move.face], not move.prime)


def mirror_cubelet(cubelet_id: str) -> str:
    colors = [MIRROR_COLOR[Color(COLOR_LETTERS.index(ch))] for ch in cubelet_id]
    return "".join(COLOR_LETTERS[c] for c in sorted(colors))


def white_cross_goal() -> PartialGoal:
    values = np.zeros(54, dtype=np.uint8)
    mask = np.zeros(54, dtype=bool)
    for slot in CENTER_SLOTS:
        values[slot] = _home_color(slot)
        mask[slot] = True
    for name, facelets in EDGE_SLOTS:
        if name.startswith("U"):
            for f in facelets:
                values[f] = _home_color(f)
                mask[f] = True
    return PartialGoal(values, mask, name="white-cross")


def goal_cubelets(goal: PartialGoal) -> tuple[str, ...]:
    """Non-center cubelets with at least one goal-fixed facelet."""
    fixed = set(int(i) for i in goal.fixed_slots) - set(CENTER_SLOTS)
    out = []
    for cid in ALL_CUBELET_IDS:
        if any(f in fixed for f in home_facelets(cid)):
            out.append(cid)
    return tuple(out)


def goal_cubelet_constraints(goal: PartialGoal) -> list[tuple[str, np.ndarray, np.ndarray]]:
    """Per constrained cubelet: (id, goal-fixed facelet indices, required colors)."""
    out = []
    for cid in goal_cubelets(goal):
        idx = np.array([f for f in home_facelets(cid) if goal.mask[f]], dtype=np.int64)
        out.append((cid, idx, goal.values[idx].copy()))
    return out


def validate_reachable(state: CubeState) -> None:
    """Check sticker structure: 9 per color, home centers, real cubelets.

    Debug/test helper; raises CubeError on violation.
    """
    counts = np.bincount(state.facelets, minlength=6)
    if not np.all(counts == 9):
        raise CubeError(f"color counts {counts.tolist()} != 9 each")
    for slot in CENTER_SLOTS:
        if state.facelets[slot] != _home_color(slot):
            raise CubeError(f"center {slot} moved")
    seen_edges = {_cubelet_id(Color(int(state.facelets[f])) for f in fs) for _, fs in EDGE_SLOTS}
    if seen_edges != set(EDGE_HOMES):
        raise CubeError("edge sticker pairs are not a permutation of the real edges")
    seen_corners = {_cubelet_id(Color(int(state.facelets[f])) for f in fs) for _, fs in CORNER_SLOTS}
    if seen_corners != set(CORNER_HOMES):
        raise CubeError("corner sticker triples are not a permutation of the real corners")
