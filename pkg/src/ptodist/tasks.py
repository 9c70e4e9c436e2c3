"""Downstream optimization problems: objectives, oracles, and regret.

Three task families are supported:

* ``topk`` -- pick the K highest-utility resources; decisions are binary
  selection masks.
* ``shortest_path`` -- cheapest connected path between opposite corners of a
  p x p cost grid; decisions are binary cell masks.
* ``inventory`` -- scalar order quantity minimizing expected stocking cost
  under a discrete demand distribution; decisions are length-1 vectors.

All objectives are maximized, so the shortest-path objective is the negated
path cost.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np


class InfeasibleDecisionError(ValueError):
    """A decision vector is not feasible for its task."""


@dataclass(frozen=True)
class InventoryParams:
    """Stocking cost coefficients: linear/quadratic order, backorder, holding."""

    c0: float = 30.0
    q0: float = 10.0
    cb: float = 10.0
    qb: float = 2.0
    ch: float = 30.0
    qh: float = 25.0

    def __post_init__(self):
        vals = (self.c0, self.q0, self.cb, self.qb, self.ch, self.qh)
        if any(v < 0 for v in vals):
            raise ValueError("inventory cost coefficients must be nonnegative")
        if not (self.q0 > 0 or (self.qb > 0 and self.qh > 0)):
            raise ValueError("need q0 > 0 or both qb, qh > 0 for a unique minimizer")


@dataclass(frozen=True)
class TaskDefinition:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("topk", "shortest_path", "inventory"):
            raise ValueError(f"unknown task kind {self.kind!r}")
        if self.kind == "topk":
            k = self.params["k"]
            n = self.params["n_resources"]
            if not (1 <= k <= n):
                raise ValueError(f"need 1 <= K <= N, got K={k}, N={n}")
        elif self.kind == "shortest_path":
            p = self.params["p"]
            if p < 2:
                raise ValueError(f"grid side must be >= 2, got {p}")
            if self.params.get("neighborhood", 8) not in (4, 8):
                raise ValueError("neighborhood must be 4 or 8")
        else:
            demands = np.asarray(self.params["demand_values"], dtype=float)
            if demands.size < 2 or np.any(np.diff(demands) <= 0):
                raise ValueError("demand values must be strictly increasing, length >= 2")
            if not isinstance(self.params.get("inventory_params"), InventoryParams):
                raise ValueError("inventory task requires inventory_params")


def topk_task(n_resources: int, k: int) -> TaskDefinition:
    return TaskDefinition("topk", {"n_resources": n_resources, "k": k})


def shortest_path_task(
    p: int,
    neighborhood: int = 8,
    count_start: bool = True,
    length_weight: float = 0.0,
) -> TaskDefinition:
    return TaskDefinition(
        "shortest_path",
        {
            "p": p,
            "neighborhood": neighborhood,
            "count_start": count_start,
            "length_weight": length_weight,
        },
    )


def inventory_task(
    demand_values=(5.0, 10.0, 15.0, 20.0, 25.0),
    inventory_params: InventoryParams | None = None,
) -> TaskDefinition:
    return TaskDefinition(
        "inventory",
        {
            "demand_values": tuple(float(d) for d in demand_values),
            "inventory_params": inventory_params or InventoryParams(),
        },
    )


def fstock(params: InventoryParams, d: float, z: float) -> float:
    """Stocking cost for order quantity z under realized demand d."""
    under = max(d - z, 0.0)
    over = max(z - d, 0.0)
    return (
        params.c0 * z
        + 0.5 * params.q0 * z * z
        + params.cb * under
        + 0.5 * params.qb * under * under
        + params.ch * over
        + 0.5 * params.qh * over * over
    )


def _expected_stock_cost(params: InventoryParams, demands, probs, z: float) -> float:
    return float(sum(p * fstock(params, d, z) for p, d in zip(probs, demands)))


def validate_decision(task: TaskDefinition, z) -> bool:
    z = np.asarray(z, dtype=float)
    if task.kind == "topk":
        n, k = task.params["n_resources"], task.params["k"]
        if z.shape != (n,):
            return False
        binary = np.all((z == 0.0) | (z == 1.0))
        return bool(binary and z.sum() == k)
    if task.kind == "shortest_path":
        p = task.params["p"]
        if z.shape != (p * p,) and z.shape != (p, p):
            return False
        mask = z.reshape(p, p)
        if not np.all((mask == 0.0) | (mask == 1.0)):
            return False
        if mask[0, 0] != 1.0 or mask[p - 1, p - 1] != 1.0:
            return False
        return _mask_is_connected_path(mask, task.params.get("neighborhood", 8))
    # inventory
    return z.shape == (1,) and z[0] >= 0


def _neighbor_moves(neighborhood: int):
    if neighborhood == 4:
        return ((-1, 0), (1, 0), (0, -1), (0, 1))
    return ((-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1))


def _mask_is_connected_path(mask: np.ndarray, neighborhood: int) -> bool:
    # every masked cell reachable from the source through masked cells,
    # with the sink among them
    p = mask.shape[0]
    moves = _neighbor_moves(neighborhood)
    seen = {(0, 0)}
    stack = [(0, 0)]
    while stack:
        i, j = stack.pop()
        for di, dj in moves:
            ni, nj = i + di, j + dj
            if 0 <= ni < p and 0 <= nj < p and mask[ni, nj] == 1.0 and (ni, nj) not in seen:
                seen.add((ni, nj))
                stack.append((ni, nj))
    return len(seen) == int(mask.sum()) and (p - 1, p - 1) in seen


def objective(task: TaskDefinition, z, y) -> float:
    """Decision quality g(z; y); larger is better for every task kind."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if not validate_decision(task, z):
        raise InfeasibleDecisionError(f"infeasible decision for task {task.kind!r}")
    if task.kind == "topk":
        return float(z @ y)
    if task.kind == "shortest_path":
        lw = task.params.get("length_weight", 0.0)
        zf = z.ravel()
        return float(-(zf @ y.ravel()) - lw * zf.sum())
    params: InventoryParams = task.params["inventory_params"]
    demands = task.params["demand_values"]
    return -_expected_stock_cost(params, demands, y, float(z[0]))


def oracle(task: TaskDefinition, y) -> np.ndarray:
    """Optimal decision argmax_z g(z; y). Deterministic; ties break to the lowest index."""
    y = np.asarray(y, dtype=float)
    if task.kind == "topk":
        k = task.params["k"]
        n = task.params["n_resources"]
        order = np.argsort(-y, kind="stable")
        z = np.zeros(n)
        z[order[:k]] = 1.0
        return z
    if task.kind == "shortest_path":
        return _shortest_path_oracle(task, y)
    return _inventory_oracle(task, y)


def _shortest_path_oracle(task: TaskDefinition, y: np.ndarray) -> np.ndarray:
    p = task.params["p"]
    cost = y.reshape(p, p) + task.params.get("length_weight", 0.0)
    count_start = task.params.get("count_start", True)
    moves = _neighbor_moves(task.params.get("neighborhood", 8))
    start_cost = cost[0, 0] if count_start else 0.0
    dist = np.full((p, p), np.inf)
    dist[0, 0] = start_cost
    prev: dict[tuple[int, int], tuple[int, int]] = {}
    pq = [(start_cost, 0, 0)]
    while pq:
        d, i, j = heapq.heappop(pq)
        if d > dist[i, j]:
            continue
        for di, dj in moves:
            ni, nj = i + di, j + dj
            if 0 <= ni < p and 0 <= nj < p:
                nd = d + cost[ni, nj]
                if nd < dist[ni, nj] - 1e-15:
                    dist[ni, nj] = nd
                    prev[(ni, nj)] = (i, j)
                    heapq.heappush(pq, (nd, ni, nj))
    mask = np.zeros((p, p))
    cur = (p - 1, p - 1)
    while True:
        mask[cur] = 1.0
        if cur == (0, 0):
            break
        cur = prev[cur]
    return mask.ravel()


def _inventory_oracle(task: TaskDefinition, y: np.ndarray) -> np.ndarray:
    # for fixed z the auxiliary QP variables collapse to hinge values, leaving a
    # convex piecewise-quadratic in scalar z; minimize piece by piece
    params: InventoryParams = task.params["inventory_params"]
    demands = np.asarray(task.params["demand_values"], dtype=float)
    probs = np.asarray(y, dtype=float)
    knots = np.concatenate([[0.0], demands])
    candidates = list(knots)
    segments = [(knots[i], knots[i + 1]) for i in range(len(knots) - 1)]
    segments.append((knots[-1], knots[-1] + 1.0))  # beyond the largest demand
    for lo, hi in segments:
        mid = 0.5 * (lo + hi)
        under = demands > mid  # demands above the segment: backorder side
        over = demands < mid
        # H(z) = A z^2 + B z + const on this segment
        A = 0.5 * params.q0 + 0.5 * params.qb * probs[under].sum() + 0.5 * params.qh * probs[over].sum()
        B = (
            params.c0
            - probs[under] @ (params.cb + params.qb * demands[under])
            + probs[over] @ (params.ch - params.qh * demands[over])
        )
        if A > 0:
            z_star = -B / (2 * A)
            if lo <= z_star <= hi:
                candidates.append(z_star)
    candidates = [max(c, 0.0) for c in candidates]
    vals = [_expected_stock_cost(params, demands, probs, c) for c in candidates]
    return np.array([candidates[int(np.argmin(vals))]])


def decision_quality(task: TaskDefinition, y_hat, y) -> float:
    """g(w*(y_hat); y): quality under true costs of the decision induced by predictions."""
    return objective(task, oracle(task, y_hat), y)


def decision_regret(task: TaskDefinition, y_hat, y) -> float:
    """|q(y, y) - q(y_hat, y)|; zero when the induced decision is optimal."""
    return abs(decision_quality(task, y, y) - decision_quality(task, y_hat, y))


def empirical_lipschitz(
    task: TaskDefinition,
    label_dim: int,
    scale: float = 10.0,
    trials: int = 20_000,
    seed: int = 0,
) -> float:
    """Largest observed ratio |q(y,y*) - q(z,z*)| / (|y-z| + |y*-z*|).

    A measurement of the decision-quality Lipschitz constants over randomized
    bounded-norm label pairs, not a proof.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        y, y_star, z, z_star = rng.uniform(-scale, scale, size=(4, label_dim))
        if task.kind == "inventory":
            y, y_star, z, z_star = (np.abs(v) / np.abs(v).sum() for v in (y, y_star, z, z_star))
        num = abs(decision_quality(task, y, y_star) - decision_quality(task, z, z_star))
        den = np.linalg.norm(y - z) + np.linalg.norm(y_star - z_star)
        if den > 1e-12:
            best = max(best, num / den)
    return best


def solve_inventory_qp_projected_gradient(
    params: InventoryParams,
    demands,
    probs,
    steps: int = 200_000,
    lr: float = 1e-4,
) -> float:
    """Test-only cross-check: solve the full joint QP over (z, z_b, z_h).

    Projected gradient descent on the quadratic objective with hinge
    constraints z_b >= d - z, z_h >= z - d, all variables nonnegative.
    """
    demands = np.asarray(demands, dtype=float)
    probs = np.asarray(probs, dtype=float)
    k = demands.size
    z = float(np.mean(demands))
    zb = np.maximum(demands - z, 0.0)
    zh = np.maximum(z - demands, 0.0)

    def project(z, zb, zh):
        # cyclic projection onto the coupled half-spaces; the pairwise
        # projections are what transmit the hinge forces onto z
        for _ in range(50):
            moved = False
            for i in range(k):
                gap = (demands[i] - z) - zb[i]
                if gap > 1e-12:
                    z += gap / 2
                    zb[i] += gap / 2
                    moved = True
                gap = (z - demands[i]) - zh[i]
                if gap > 1e-12:
                    z -= gap / 2
                    zh[i] += gap / 2
                    moved = True
            z = max(z, 0.0)
            zb = np.maximum(zb, 0.0)
            zh = np.maximum(zh, 0.0)
            if not moved:
                break
        return z, zb, zh

    for _ in range(steps):
        gz = params.c0 + params.q0 * z
        gzb = probs * (params.cb + params.qb * zb)
        gzh = probs * (params.ch + params.qh * zh)
        z -= lr * gz
        zb -= lr * gzb
        zh -= lr * gzh
        z, zb, zh = project(z, zb, zh)
    return z
