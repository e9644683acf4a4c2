"""Rubik's cube tutoring engine.

Cube model, goal-conditioned search, macro discovery with learned
preconditions, template explanations, a guarded dialogue agent, bias
auditing, and an HTTP tutoring service.
"""

__version__ = "0.1.0"

from .cube import (  # noqa: F401
    Color,
    CubeError,
    CubeState,
    Face,
    Move,
    PartialGoal,
    apply_move,
    apply_sequence,
    format_facelets,
    format_moves,
    matches,
    parse_facelets,
    parse_moves,
    scramble,
    solved_goal,
    solved_state,
    white_cross_goal,
)
