import numpy as np
import pytest

from follower.costs import (DynamicCostField, compute_static_costs,
                            transition_cost, transition_costs,
                            uniform_static_costs, update_dynamic_costs)
from follower.env import Observation
from follower.grid import Grid

from oracles import brute_static_costs


def test_static_costs_1x3_strip():
    grid = Grid(np.zeros((1, 3), dtype=bool))
    field = compute_static_costs(grid)
    assert field.avg_cost.tolist() == [[1.5, 1.0, 1.5]]
    assert field.cost.tolist() == [[1.0, 1.5, 1.0]]


def test_static_costs_3x3_open():
    grid = Grid(np.zeros((3, 3), dtype=bool))
    field = compute_static_costs(grid)
    assert field.avg_cost[1, 1] == 1.5
    assert field.avg_cost[0, 0] == 2.25
    assert field.avg_cost[0, 1] == 1.875
    assert field.cost[1, 1] == 1.5
    for corner in ((0, 0), (0, 2), (2, 0), (2, 2)):
        assert field.cost[corner] == 1.0
    for mid in ((0, 1), (1, 0), (1, 2), (2, 1)):
        assert field.cost[mid] == 1.2


def test_static_costs_single_free_cell():
    blocked = np.ones((3, 3), dtype=bool)
    blocked[1, 1] = False
    field = compute_static_costs(Grid(blocked))
    assert field.cost[1, 1] == 1.0
    assert np.isnan(field.avg_cost[1, 1])


def test_static_costs_isolated_cell_amid_component():
    # corner cell walled off from an L-shaped free region
    blocked = np.array([
        [False, True, False],
        [False, True, False],
        [False, False, False],
    ])
    field = compute_static_costs(Grid(blocked))
    assert field.cost[0, 0] >= 1.0
    assert np.isnan(field.cost[0, 1])  # obstacle
    assert np.nanmin(field.cost) == 1.0


def test_static_costs_match_bruteforce_oracle():
    rng = np.random.default_rng(42)
    for _ in range(25):
        blocked = rng.random((8, 8)) < 0.25
        field = compute_static_costs(Grid(blocked))
        expected = brute_static_costs(blocked)
        assert np.allclose(field.cost, expected, atol=1e-12, equal_nan=True)


def test_static_costs_deterministic():
    grid = Grid(np.random.default_rng(3).random((12, 12)) < 0.2)
    a = compute_static_costs(grid)
    b = compute_static_costs(grid)
    assert np.array_equal(a.cost, b.cost, equal_nan=True)


def _obs(agents, center, obstacles=None):
    agents = np.asarray(agents, dtype=bool)
    if obstacles is None:
        obstacles = np.zeros_like(agents)
    return Observation(obstacles=np.asarray(obstacles, dtype=bool),
                       agents=agents, center=center)


def test_dynamic_costs_empty_observation_no_change():
    grid = Grid(np.zeros((5, 5), dtype=bool))
    dyn = DynamicCostField.zeros(grid)
    window = np.zeros((3, 3), dtype=bool)
    window[1, 1] = True  # only self
    update_dynamic_costs(dyn, _obs(window, (2, 2)))
    assert dyn.counts.sum() == 0


def test_dynamic_costs_accumulate_three_steps():
    grid = Grid(np.zeros((5, 5), dtype=bool))
    dyn = DynamicCostField.zeros(grid)
    window = np.zeros((3, 3), dtype=bool)
    window[1, 1] = True
    window[1, 2] = True  # neighbour to the right of centre
    for _ in range(3):
        update_dynamic_costs(dyn, _obs(window, (2, 2)))
    assert dyn.counts[2, 3] == 3
    assert dyn.counts.sum() == 3


def test_dynamic_costs_reset_clears_everything():
    grid = Grid(np.zeros((5, 5), dtype=bool))
    dyn = DynamicCostField.zeros(grid)
    dyn.counts[1, 1] = 10
    dyn.reset()
    assert dyn.counts.sum() == 0


def test_dynamic_costs_window_clipped_at_grid_border():
    grid = Grid(np.zeros((4, 4), dtype=bool))
    dyn = DynamicCostField.zeros(grid)
    window = np.ones((5, 5), dtype=bool)  # agents everywhere incl. out of grid
    update_dynamic_costs(dyn, _obs(window, (0, 0)))
    # centre at (0,0): only in-grid cells count, minus the self cell
    assert dyn.counts.sum() == 3 * 3 - 1


def test_transition_cost_values():
    grid = Grid(np.zeros((2, 2), dtype=bool))
    static = compute_static_costs(grid)
    dyn = DynamicCostField.zeros(grid)
    assert transition_cost(static, dyn, (0, 0)) == static.cost[0, 0]
    dyn.counts[0, 0] = 4
    assert transition_cost(static, dyn, (0, 0)) == static.cost[0, 0] + 4.0
    dyn.reset()
    assert np.array_equal(transition_costs(static, dyn), static.cost)


def test_transition_cost_rejects_obstacle():
    blocked = np.zeros((2, 2), dtype=bool)
    blocked[0, 1] = True
    grid = Grid(blocked)
    static = compute_static_costs(grid)
    dyn = DynamicCostField.zeros(grid)
    with pytest.raises(Exception):
        transition_cost(static, dyn, (0, 1))


def test_uniform_static_costs():
    blocked = np.zeros((3, 3), dtype=bool)
    blocked[1, 1] = True
    field = uniform_static_costs(Grid(blocked))
    assert np.nanmax(field.cost) == 1.0 and np.nanmin(field.cost) == 1.0
    assert np.isnan(field.cost[1, 1])


def test_cost_minimum_is_one_on_connected_grids():
    rng = np.random.default_rng(17)
    for _ in range(10):
        from oracles import random_connected_grid
        blocked = random_connected_grid(rng, 7, 7, 0.2)
        field = compute_static_costs(Grid(blocked))
        assert np.nanmin(field.cost) == 1.0
