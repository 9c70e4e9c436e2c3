"""Tests for task objectives, oracles, and regret, against brute-force oracles."""

import itertools

import numpy as np
import pytest

from ptodist.tasks import (
    InfeasibleDecisionError,
    InventoryParams,
    TaskDefinition,
    decision_quality,
    decision_regret,
    empirical_lipschitz,
    fstock,
    inventory_task,
    objective,
    oracle,
    shortest_path_task,
    solve_inventory_qp_projected_gradient,
    topk_task,
    validate_decision,
)


def brute_force_topk(task, y):
    """Best objective over all K-subsets by enumeration."""
    n, k = task.params["n_resources"], task.params["k"]
    best = -np.inf
    for idx in itertools.combinations(range(n), k):
        z = np.zeros(n)
        z[list(idx)] = 1.0
        best = max(best, float(z @ y))
    return best


def brute_force_path_cost(task, y):
    """Cheapest corner-to-corner simple path by exhaustive search with pruning."""
    p = task.params["p"]
    lw = task.params.get("length_weight", 0.0)
    cost = y.reshape(p, p) + lw
    moves = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
    if task.params.get("neighborhood", 8) == 4:
        moves = [(-1, 0), (1, 0), (0, -1), (0, 1)]
    best = [np.inf]

    def dfs(i, j, acc, seen):
        if acc >= best[0]:
            return
        if (i, j) == (p - 1, p - 1):
            best[0] = acc
            return
        for di, dj in moves:
            ni, nj = i + di, j + dj
            if 0 <= ni < p and 0 <= nj < p and (ni, nj) not in seen:
                seen.add((ni, nj))
                dfs(ni, nj, acc + cost[ni, nj], seen)
                seen.remove((ni, nj))

    dfs(0, 0, cost[0, 0], {(0, 0)})
    return best[0]


def grid_search_inventory(task, probs, resolution=1e-4):
    params = task.params["inventory_params"]
    demands = np.asarray(task.params["demand_values"])
    zs = np.arange(0.0, demands.max() + 1.0 + resolution, resolution)
    under = np.maximum(demands[None, :] - zs[:, None], 0.0)
    over = np.maximum(zs[:, None] - demands[None, :], 0.0)
    vals = (
        params.c0 * zs[:, None]
        + 0.5 * params.q0 * zs[:, None] ** 2
        + params.cb * under
        + 0.5 * params.qb * under**2
        + params.ch * over
        + 0.5 * params.qh * over**2
    ) @ probs
    return zs[int(np.argmin(vals))], vals.min()


def test_task_definition_validation():
    with pytest.raises(ValueError):
        topk_task(3, 4)  # K > N
    with pytest.raises(ValueError):
        shortest_path_task(1)
    with pytest.raises(ValueError):
        inventory_task(demand_values=(3.0, 2.0, 1.0))
    with pytest.raises(ValueError):
        TaskDefinition("auction", {})


def test_inventory_params_validation():
    with pytest.raises(ValueError):
        InventoryParams(c0=-1.0)
    with pytest.raises(ValueError):
        InventoryParams(q0=0.0, qb=0.0, qh=1.0)  # no unique minimizer guarantee


def test_fstock_examples():
    p = InventoryParams()
    for z in (0.5, 1.0, 3.0):
        # at z = d the deviation terms vanish, leaving 30z + 5z^2
        assert abs(fstock(p, z, z) - (30.0 * z + 5.0 * z * z)) < 1e-12
    assert abs(fstock(p, 2.0, 0.0) - 24.0) < 1e-12  # only backorder terms active
    zero = InventoryParams(c0=0, q0=1e-12, cb=0, qb=0, ch=0, qh=0)
    assert fstock(zero, 2.0, 1.0) < 1e-11


def test_objective_examples():
    t = topk_task(3, 1)
    z = np.array([0.0, 0.0, 1.0])
    assert objective(t, z, np.array([3.0, 1.0, 2.0])) == 2.0

    sp = shortest_path_task(2)
    z = np.array([1.0, 1.0, 0.0, 1.0])  # cells (0,0), (0,1), (1,1)
    assert objective(sp, z, np.ones(4)) == -3.0

    # point-mass demand met exactly: only the order-cost terms remain
    inv = inventory_task(demand_values=(1.0, 2.0), inventory_params=InventoryParams(
        c0=1.0, q0=0.0, cb=0.0, qb=1.0, ch=0.0, qh=1.0))
    val = objective(inv, np.array([2.0]), np.array([0.0, 1.0]))
    assert abs(val - (-2.0)) < 1e-12


def test_objective_rejects_infeasible_decisions():
    t = topk_task(3, 1)
    with pytest.raises(InfeasibleDecisionError):
        objective(t, np.array([1.0, 1.0, 0.0]), np.array([1.0, 2.0, 3.0]))


def test_topk_oracle_examples():
    t = topk_task(3, 1)
    assert np.array_equal(oracle(t, np.array([3.0, 1.0, 2.0])), [1, 0, 0])
    # ties break to the lowest index
    assert np.array_equal(oracle(t, np.array([2.0, 2.0, 1.0])), [1, 0, 0])


def test_topk_oracle_exhaustive():
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        k = int(rng.integers(1, min(n, 3) + 1))
        t = topk_task(n, k)
        y = rng.normal(0.0, 5.0, n)
        assert abs(objective(t, oracle(t, y), y) - brute_force_topk(t, y)) < 1e-9


def test_shortest_path_oracle_avoids_expensive_center():
    t = shortest_path_task(3)
    y = np.ones(9)
    y[4] = 100.0
    z = oracle(t, y)
    assert z[4] == 0.0
    assert abs(-objective(t, z, y) - brute_force_path_cost(t, y)) < 1e-9


def test_shortest_path_oracle_exhaustive():
    rng = np.random.default_rng(8)
    for _ in range(15):
        p = int(rng.integers(2, 5))
        t = shortest_path_task(p)
        y = rng.uniform(0.8, 9.2, p * p)
        z = oracle(t, y)
        assert validate_decision(t, z)
        assert abs(-objective(t, z, y) - brute_force_path_cost(t, y)) < 1e-9


def test_shortest_path_four_neighborhood_and_length_weight():
    rng = np.random.default_rng(12)
    for _ in range(5):
        t = shortest_path_task(3, neighborhood=4, length_weight=2.0)
        y = rng.uniform(0.5, 5.0, 9)
        z = oracle(t, y)
        assert validate_decision(t, z)
        assert abs(-objective(t, z, y) - brute_force_path_cost(t, y)) < 1e-9


def test_inventory_oracle_matches_grid_search():
    t = inventory_task(demand_values=(1.0, 3.0))
    z = oracle(t, np.array([0.5, 0.5]))
    z_grid, _ = grid_search_inventory(t, np.array([0.5, 0.5]))
    assert abs(z[0] - z_grid) < 1e-3

    rng = np.random.default_rng(19)
    for _ in range(15):
        probs = rng.dirichlet(np.ones(5))
        t = inventory_task()
        z = oracle(t, probs)
        _, best_val = grid_search_inventory(t, probs)
        got = -objective(t, z, probs)
        assert got <= best_val + 1e-3


def test_inventory_oracle_matches_full_qp():
    rng = np.random.default_rng(23)
    t = inventory_task()
    params = t.params["inventory_params"]
    demands = t.params["demand_values"]
    for _ in range(5):
        probs = rng.dirichlet(np.ones(5))
        z_reduced = oracle(t, probs)[0]
        z_qp = solve_inventory_qp_projected_gradient(params, demands, probs)
        assert abs(z_reduced - z_qp) < 1e-3


def test_decision_quality_and_regret_examples():
    t = topk_task(3, 1)
    y_hat = np.array([0.0, 5.0, 0.0])
    y = np.array([3.0, 1.0, 2.0])
    assert decision_quality(t, y_hat, y) == 1.0
    assert decision_regret(t, y_hat, y) == 2.0
    assert decision_regret(t, y, y) == 0.0
    # any prediction inducing the optimal decision has zero regret
    assert decision_regret(t, np.array([9.0, 0.0, 0.0]), y) == 0.0


def test_regret_nonnegative_and_zero_at_truth():
    rng = np.random.default_rng(31)
    inv = inventory_task()
    sp = shortest_path_task(3)
    for _ in range(30):
        y = rng.normal(0.0, 3.0, 5)
        y_hat = rng.normal(0.0, 3.0, 5)
        t = topk_task(5, 2)
        assert decision_regret(t, y_hat, y) >= 0.0
        assert decision_regret(t, y, y) == 0.0
        probs = rng.dirichlet(np.ones(5))
        assert decision_regret(inv, rng.dirichlet(np.ones(5)), probs) >= 0.0
        assert decision_regret(inv, probs, probs) == 0.0
        costs = rng.uniform(0.8, 9.2, 9)
        assert decision_regret(sp, rng.uniform(0.8, 9.2, 9), costs) >= 0.0


def test_validate_decision_cases():
    t = topk_task(3, 1)
    assert validate_decision(t, np.array([0.0, 1.0, 0.0]))
    assert not validate_decision(t, np.array([1.0, 1.0, 0.0]))
    assert not validate_decision(t, np.array([0.0, 0.5, 0.5]))

    sp = shortest_path_task(2)
    assert validate_decision(sp, np.array([1.0, 1.0, 0.0, 1.0]))
    # diagonal corner hop is a path under the 8-neighborhood but not the 4
    assert validate_decision(sp, np.array([1.0, 0.0, 0.0, 1.0]))
    sp4 = shortest_path_task(2, neighborhood=4)
    assert not validate_decision(sp4, np.array([1.0, 0.0, 0.0, 1.0]))
    assert not validate_decision(sp, np.array([0.0, 1.0, 1.0, 1.0]))  # source missing

    inv = inventory_task()
    assert validate_decision(inv, np.array([2.5]))
    assert not validate_decision(inv, np.array([-0.1]))
    assert not validate_decision(inv, np.array([1.0, 2.0]))


def test_empirical_lipschitz_probe_is_finite_positive():
    t = topk_task(5, 1)
    k = empirical_lipschitz(t, 5, trials=2000, seed=0)
    assert 0.0 < k < np.inf
    # deterministic given the seed
    assert k == empirical_lipschitz(t, 5, trials=2000, seed=0)
