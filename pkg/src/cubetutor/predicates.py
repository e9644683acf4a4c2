"""Closed ground-atom vocabulary over cube states, plus clause/program forms.

Atoms describe where cubelets sit (absolutely or relative to centers) and
evaluate in O(1) against a per-state lookup context.  Programs are
disjunctions of conjunctive clauses with a canonical one-line text form,
which is what macro preconditions are stored and shipped as.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

from .cube import (
    ALL_CUBELET_IDS,
    CORNER_SLOTS,
    COLOR_LETTERS,
    COLOR_NAMES,
    Color,
    CubeError,
    CubeState,
    EDGE_SLOTS,
    Face,
    MIRROR_COLOR,
    MIRROR_FACE,
    MIRROR_GATHER,
    YAW_COLOR,
    YAW_FACE,
    YAW_GATHER,
    _home_color,
    home_facelets,
    is_edge,
    locate_cubelet,
)

ATOM_NAMES = ("aligned", "corner_slot", "edge_slot", "placed", "sticker_at")

COLOR_WORDS = COLOR_NAMES
_WORD_TO_COLOR = {w: Color(i) for i, w in enumerate(COLOR_WORDS)}

EDGE_POSITIONS = tuple(name for name, _ in EDGE_SLOTS)
CORNER_POSITIONS = tuple(name for name, _ in CORNER_SLOTS)

_EDGE_FACELETS = {name: fs for name, fs in EDGE_SLOTS}
_CORNER_FACELETS = {name: fs for name, fs in CORNER_SLOTS}

# Home (slot, orientation) for every cubelet, as locate_cubelet reports it.
HOME_LOCATIONS: dict[str, tuple[str, int]] = {}
for _cid in ALL_CUBELET_IDS:
    _fs = home_facelets(_cid)
    _low = min(range(len(_fs)), key=lambda i: int(_home_color(_fs[i])))
    _table = _EDGE_FACELETS if is_edge(_cid) else _CORNER_FACELETS
    _slot = next(n for n, f in _table.items() if set(f) == set(_fs))
    _order = _table[_slot]
    HOME_LOCATIONS[_cid] = (_slot, _order.index(_fs[_low]))
del _cid, _fs, _low, _table, _slot, _order


class PredicateError(CubeError):
    pass


class StateContext:
    """Per-state lookup tables so atom evaluation is dictionary access."""

    __slots__ = ("facelets", "locations")

    def __init__(self, state: CubeState):
        self.facelets = state.facelets
        self.locations = {cid: locate_cubelet(state, cid) for cid in ALL_CUBELET_IDS}


@lru_cache(maxsize=4096)
def state_context(state: CubeState) -> StateContext:
    # CubeState hashes by facelet content, so equal states share a context.
    return StateContext(state)


# Canonical order: placement-style atoms ahead of alignment/sticker atoms,
# then lexicographic.  Clause serialization and induction both follow it.
_NAME_RANK = {"placed": 0, "edge_slot": 1, "corner_slot": 2, "aligned": 3, "sticker_at": 4}


@dataclass(frozen=True)
class Atom:
    """Ground atom, e.g. edge_slot(DR,WO,1) or placed(WB,false)."""

    name: str
    args: tuple[str, ...]

    def __post_init__(self):
        if self.name not in ATOM_NAMES:
            raise PredicateError(f"unknown predicate {self.name!r}")

    @property
    def sort_key(self) -> tuple:
        return (_NAME_RANK[self.name], self.name, self.args)

    def __lt__(self, other: "Atom") -> bool:
        return self.sort_key < other.sort_key

    def serialize(self) -> str:
        return f"{self.name}({','.join(self.args)})"

    def __str__(self) -> str:
        return self.serialize()

    @property
    def cubelet_ref(self) -> str | None:
        """Cubelet id the atom talks about, for grouping in explanations."""
        if self.name in ("placed", "aligned"):
            return self.args[0]
        if self.name in ("edge_slot", "corner_slot"):
            return self.args[1]
        return None

    def evaluate(self, ctx: StateContext) -> bool:
        if self.name == "edge_slot" or self.name == "corner_slot":
            pos, cid, orient = self.args
            return ctx.locations[cid] == (pos, int(orient))
        if self.name == "placed":
            cid, truth = self.args
            return (ctx.locations[cid] == HOME_LOCATIONS[cid]) == (truth == "true")
        if self.name == "aligned":
            cid, color_word, center_word = self.args
            color = _WORD_TO_COLOR[color_word]
            slot, _ = ctx.locations[cid]
            table = _EDGE_FACELETS if is_edge(cid) else _CORNER_FACELETS
            for f in table[slot]:
                if ctx.facelets[f] == color:
                    center = ctx.facelets[(f // 9) * 9 + 4]
                    return center == _WORD_TO_COLOR[center_word]
            return False
        # sticker_at(slot, color)
        return ctx.facelets[int(self.args[0])] == _WORD_TO_COLOR[self.args[1]]


@dataclass(frozen=True)
class Clause:
    """Conjunction of atoms, stored in canonical sorted order."""

    atoms: tuple[Atom, ...]

    def __post_init__(self):
        ordered = tuple(sorted(set(self.atoms)))
        if len(ordered) != len(self.atoms):
            raise PredicateError("duplicate atoms in clause")
        object.__setattr__(self, "atoms", ordered)

    def evaluate(self, ctx: StateContext) -> bool:
        return all(a.evaluate(ctx) for a in self.atoms)

    def serialize(self) -> str:
        return " AND ".join(a.serialize() for a in self.atoms)


@dataclass(frozen=True)
class PredicateProgram:
    """Disjunction of clauses; empty program is identically false."""

    clauses: tuple[Clause, ...]

    def serialize(self) -> str:
        return " OR ".join(c.serialize() for c in self.clauses)

    def __str__(self) -> str:
        return self.serialize()


def evaluate_program(program: PredicateProgram, state: CubeState) -> bool:
    ctx = state_context(state)
    return any(c.evaluate(ctx) for c in program.clauses)


_ATOM_RE = re.compile(r"^([a-z_]+)\(([^()]*)\)$")


def parse_atom(text: str) -> Atom:
    m = _ATOM_RE.match(text.strip())
    if not m:
        raise PredicateError(f"malformed atom {text!r}")
    name, raw = m.group(1), m.group(2)
    args = tuple(a.strip() for a in raw.split(",")) if raw.strip() else ()
    atom = Atom(name, args)
    _validate_args(atom)
    return atom


def _validate_args(atom: Atom) -> None:
    name, args = atom.name, atom.args
    try:
        if name == "edge_slot":
            pos, cid, orient = args
            ok = pos in EDGE_POSITIONS and cid in ALL_CUBELET_IDS and is_edge(cid) \
                and orient in ("0", "1")
        elif name == "corner_slot":
            pos, cid, orient = args
            ok = pos in CORNER_POSITIONS and cid in ALL_CUBELET_IDS \
                and not is_edge(cid) and orient in ("0", "1", "2")
        elif name == "placed":
            cid, truth = args
            ok = cid in ALL_CUBELET_IDS and truth in ("true", "false")
        elif name == "aligned":
            cid, color, center = args
            ok = cid in ALL_CUBELET_IDS and color in COLOR_WORDS and center in COLOR_WORDS
        else:
            slot, color = args
            ok = 0 <= int(slot) < 54 and color in COLOR_WORDS
    except (ValueError, KeyError):
        ok = False
    if not ok:
        raise PredicateError(f"bad arguments for {atom.serialize()!r}")


def parse_program(text: str) -> PredicateProgram:
    text = text.strip()
    if not text:
        return PredicateProgram(())
    clauses = []
    for part in text.split(" OR "):
        atoms = tuple(parse_atom(a) for a in part.split(" AND "))
        clauses.append(Clause(atoms))
    return PredicateProgram(tuple(clauses))


def program_to_predicates(program: PredicateProgram) -> list[list[Atom]]:
    """Atom groups in explanation order: clause order, grouped by cubelet,
    placement facts ahead of alignment facts within a group."""
    groups: list[list[Atom]] = []
    for clause in program.clauses:
        by_ref: dict[str | None, list[Atom]] = {}
        order: list[str | None] = []
        for atom in clause.atoms:
            ref = atom.cubelet_ref
            if ref not in by_ref:
                by_ref[ref] = []
                order.append(ref)
        for atom in clause.atoms:
            by_ref[atom.cubelet_ref].append(atom)
        if None in order:  # slot-level facts trail the cubelet groups
            order.remove(None)
            order.append(None)
        for ref in order:
            atoms = by_ref[ref]
            groups.append(
                sorted(atoms, key=lambda a: (a.name == "aligned", a.serialize()))
            )
    return groups


# -- vocabulary enumeration -------------------------------------------------


def vocabulary_for_cubelets(cubelet_ids: tuple[str, ...]) -> tuple[Atom, ...]:
    """All slot/placement/alignment atoms over the given cubelets, in
    canonical order.  sticker_at atoms are omitted: they are strictly finer
    than the slot atoms and blow up the search space."""
    atoms: set[Atom] = set()
    for cid in cubelet_ids:
        positions = EDGE_POSITIONS if is_edge(cid) else CORNER_POSITIONS
        orients = ("0", "1") if is_edge(cid) else ("0", "1", "2")
        kind = "edge_slot" if is_edge(cid) else "corner_slot"
        for pos in positions:
            for o in orients:
                atoms.add(Atom(kind, (pos, cid, o)))
        for truth in ("true", "false"):
            atoms.add(Atom("placed", (cid, truth)))
        for ch in cid:
            color_word = COLOR_WORDS[COLOR_LETTERS.index(ch)]
            for center in COLOR_WORDS:
                atoms.add(Atom("aligned", (cid, color_word, center)))
    return tuple(sorted(atoms))


# -- whole-cube symmetries of atoms --------------------------------------------
#
# Rotating the cube a quarter turn about the vertical axis (blue -> orange ->
# green -> red relabelling) or reflecting it left-right (red <-> orange) are
# symmetries of the state space that keep centers home.  An atom can be
# carried across either: the transformed atom holds on a state exactly when
# the original holds on the back-transformed, back-recolored state.

_SLOT_BY_FACES = {frozenset(n): n for n in EDGE_POSITIONS}
_SLOT_BY_FACES.update({frozenset(n): n for n in CORNER_POSITIONS})


def _forward_positions(gather: np.ndarray) -> list[int]:
    # gather maps destination -> source; invert to get sticker destinations.
    fwd = [0] * 54
    for i in range(54):
        fwd[int(gather[i])] = i
    return fwd


_YAW_POS = _forward_positions(YAW_GATHER)


def _sym_atom(
    atom: Atom,
    face_map: dict[Face, Face],
    color_map: dict[Color, Color],
    pos_forward: list[int],
) -> Atom:
    """Atom after one application of a centers-fixing cube symmetry.

    Raises PredicateError for corner_slot atoms whose lowest color changes
    under recoloring: the remaining sticker assignment is not recoverable
    from the atom alone.
    """

    def map_cubelet(cid: str) -> str:
        colors = sorted(color_map[Color(COLOR_LETTERS.index(ch))] for ch in cid)
        return "".join(COLOR_LETTERS[c] for c in colors)

    def map_word(word: str) -> str:
        return COLOR_WORDS[color_map[_WORD_TO_COLOR[word]]]

    if atom.name == "placed":
        return Atom("placed", (map_cubelet(atom.args[0]), atom.args[1]))
    if atom.name == "aligned":
        cid, color, center = atom.args
        return Atom("aligned", (map_cubelet(cid), map_word(color), map_word(center)))
    if atom.name == "sticker_at":
        return Atom(
            "sticker_at", (str(pos_forward[int(atom.args[0])]), map_word(atom.args[1]))
        )
    # edge_slot / corner_slot
    pos, cid, orient = atom.args
    table = _EDGE_FACELETS if atom.name == "edge_slot" else _CORNER_FACELETS
    low = min(Color(COLOR_LETTERS.index(ch)) for ch in cid)
    new_cid = map_cubelet(cid)
    new_low = min(Color(COLOR_LETTERS.index(ch)) for ch in new_cid)
    facelet = pos_forward[table[pos][int(orient)]]
    new_pos = _SLOT_BY_FACES[frozenset(face_map[Face[ch]].name for ch in pos)]
    idx = table[new_pos].index(facelet)
    if new_low != color_map[low]:
        if atom.name == "corner_slot":
            raise PredicateError(
                f"cannot transform {atom.serialize()}: lowest color changes under recoloring"
            )
        idx = 1 - idx  # edge: the other sticker is the only other facelet
    return Atom(atom.name, (new_pos, new_cid, str(idx)))


def yaw_atom(atom: Atom, k: int) -> Atom:
    for _ in range(k % 4):
        atom = _sym_atom(atom, YAW_FACE, YAW_COLOR, _YAW_POS)
    return atom


def yaw_program(program: PredicateProgram, k: int) -> PredicateProgram:
    k %= 4
    if k == 0:
        return program
    return PredicateProgram(
        tuple(Clause(tuple(yaw_atom(a, k) for a in c.atoms)) for c in program.clauses)
    )


_MIRROR_POS = _forward_positions(MIRROR_GATHER)


def mirror_atom(atom: Atom) -> Atom:
    return _sym_atom(atom, MIRROR_FACE, MIRROR_COLOR, _MIRROR_POS)


def mirror_program(program: PredicateProgram) -> PredicateProgram:
    return PredicateProgram(
        tuple(Clause(tuple(mirror_atom(a) for a in c.atoms)) for c in program.clauses)
    )
