"""Value table tests: training, admissible estimates, persistence."""

from __future__ import annotations

import numpy as np
import pytest

from cubetutor.cube import (
    CubeError,
    apply_sequence,
    matches,
    scramble,
    solved_state,
    white_cross_goal,
)
from cubetutor.search import astar_solve, bfs_oracle
from cubetutor.value_table import ValueTable, train_value_table


@pytest.fixture(scope="module")
def table():
    return train_value_table(white_cross_goal(), samples=400, max_depth=6,
                             iterations=40, seed=0)


def test_goal_pattern_estimates_zero(table):
    assert table.estimate(solved_state(), white_cross_goal()) == 0.0


def test_training_is_deterministic(table):
    again = train_value_table(white_cross_goal(), samples=400, max_depth=6,
                              iterations=40, seed=0)
    assert again.values == table.values


def test_estimates_are_admissible_on_shallow_scrambles(table):
    rng = np.random.default_rng(12)
    goal = white_cross_goal()
    for _ in range(30):
        depth = int(rng.integers(1, 6))
        state, _ = scramble(depth, rng=rng)
        truth = bfs_oracle(state, goal, max_depth=depth)
        assert truth is not None
        assert table.estimate(state, goal) <= truth


def test_astar_with_table_stays_optimal(table):
    rng = np.random.default_rng(3)
    goal = white_cross_goal()
    for _ in range(15):
        depth = int(rng.integers(1, 6))
        state, _ = scramble(depth, rng=rng)
        result = astar_solve(state, goal, heuristic=table)
        truth = bfs_oracle(state, goal, max_depth=depth)
        assert len(result.path) == truth
        assert matches(apply_sequence(state, result.path), goal)


def test_bellman_residual_reported(table):
    assert "bellman_residual" in table.metadata
    assert table.metadata["bellman_residual"] >= 0.0


def test_save_load_round_trip(table, tmp_path):
    path = tmp_path / "table.json"
    table.save(path)
    loaded = ValueTable.load(path)
    assert loaded.goal == table.goal
    assert loaded.values == table.values
    state, _ = scramble(4, seed=7)
    assert loaded.estimate(state, white_cross_goal()) == table.estimate(
        state, white_cross_goal()
    )


def test_incompatible_goal_rejected(table):
    import numpy as np

    from cubetutor.cube import PartialGoal

    values = np.zeros(54, dtype=np.uint8)
    mask = np.zeros(54, dtype=bool)
    mask[0] = True
    values[0] = 3  # wants orange on a white-cross slot
    with pytest.raises(CubeError):
        table.estimate(solved_state(), PartialGoal(values, mask))


def test_training_parameters_validated():
    with pytest.raises(ValueError):
        train_value_table(white_cross_goal(), samples=0)
