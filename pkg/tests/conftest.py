"""Shared fixtures: cube states, fixture services, and temp stores."""

from __future__ import annotations

import pytest

from cubetutor.config import packaged_data
from cubetutor.cube import apply_sequence, parse_moves, solved_state
from cubetutor.dialogue import DialogueServices
from cubetutor.macros import MacroLibrary
from cubetutor.stores import ProfileStore

# The cross-minus-one-edge demo configuration: white cross complete except
# the white-orange edge, which sits with white on the orange face and orange
# on the yellow face.
DEMO_FACELETS = "WWGWWGWWWYYYYYOBBORRRRRRRGGOOOOOOOWWBBBBBBRRBYGGYGGGYY"
DEMO_SETUP_MOVES = "F' R' F D"
DEMO_MACRO_MOVES = "D' F' R F"


@pytest.fixture(scope="session")
def demo_state():
    return apply_sequence(solved_state(), parse_moves(DEMO_SETUP_MOVES))


@pytest.fixture(scope="session")
def demo_library():
    return MacroLibrary.load(packaged_data("demo_library.json"))


@pytest.fixture()
def fixture_services(demo_library):
    return DialogueServices(
        profiles=ProfileStore(packaged_data("demo_profiles")),
        library=demo_library,
    )
