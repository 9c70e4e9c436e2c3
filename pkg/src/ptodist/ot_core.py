"""Discrete optimal transport over precomputed cost matrices.

Exact solutions via assignment (uniform equal-size marginals) or linear
programming; entropic approximations via Sinkhorn scaling with automatic
log-domain stabilization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment, linprog

MARGINAL_SUM_TOL = 1e-9
PLAN_MARGINAL_TOL = 1e-6


class DimensionMismatchError(ValueError):
    """Shapes of a plan/cost/marginal combination do not agree."""


class InfeasibleMarginalsError(ValueError):
    """Marginals do not form valid coupled distributions."""


@dataclass(frozen=True)
class CostMatrix:
    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise ValueError(f"cost matrix must be 2-d and nonempty, got shape {entries.shape}")
        if not np.all(np.isfinite(entries)):
            raise ValueError("cost matrix entries must be finite")
        if np.any(entries < 0):
            raise ValueError("cost matrix entries must be nonnegative")
        object.__setattr__(self, "entries", entries)

    @property
    def n_rows(self) -> int:
        return self.entries.shape[0]

    @property
    def n_cols(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class Marginal:
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or w.size < 1:
            raise ValueError(f"marginal must be a nonempty vector, got shape {w.shape}")
        if np.any(w < 0):
            raise ValueError("marginal weights must be nonnegative")
        if abs(w.sum() - 1.0) > MARGINAL_SUM_TOL:
            raise ValueError(f"marginal weights must sum to 1, got {w.sum()!r}")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, n: int) -> "Marginal":
        return cls(np.full(n, 1.0 / n))

    def __len__(self) -> int:
        return self.weights.size


@dataclass(frozen=True)
class TransportPlan:
    matrix: np.ndarray
    row_marginal: Marginal
    col_marginal: Marginal
    validate: bool = field(default=True, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        object.__setattr__(self, "matrix", m)
        if m.shape != (len(self.row_marginal), len(self.col_marginal)):
            raise DimensionMismatchError(
                f"plan shape {m.shape} does not match marginals "
                f"({len(self.row_marginal)}, {len(self.col_marginal)})"
            )
        if self.validate:
            if np.any(m < -PLAN_MARGINAL_TOL):
                raise ValueError("transport plan entries must be nonnegative")
            row_err = np.abs(m.sum(axis=1) - self.row_marginal.weights).max()
            col_err = np.abs(m.sum(axis=0) - self.col_marginal.weights).max()
            if row_err > PLAN_MARGINAL_TOL or col_err > PLAN_MARGINAL_TOL:
                raise ValueError(
                    f"plan marginals violated: row err {row_err:.3e}, col err {col_err:.3e}"
                )


@dataclass(frozen=True)
class SinkhornResult:
    plan: TransportPlan
    cost: float
    converged: bool
    marginal_violation: float
    iterations: int


def transport_cost(plan: TransportPlan, cost: CostMatrix) -> float:
    """Expected ground cost <plan, cost> of a coupling."""
    if plan.matrix.shape != cost.entries.shape:
        raise DimensionMismatchError(
            f"plan shape {plan.matrix.shape} vs cost shape {cost.entries.shape}"
        )
    return float(np.sum(plan.matrix * cost.entries))


def _check_problem(cost: CostMatrix, a: Marginal, b: Marginal) -> None:
    if len(a) != cost.n_rows or len(b) != cost.n_cols:
        raise DimensionMismatchError(
            f"cost shape {cost.entries.shape} vs marginals ({len(a)}, {len(b)})"
        )
    if abs(a.weights.sum() - b.weights.sum()) > MARGINAL_SUM_TOL:
        raise InfeasibleMarginalsError(
            f"marginal sums differ: {a.weights.sum()!r} vs {b.weights.sum()!r}"
        )


def solve_exact(cost: CostMatrix, a: Marginal, b: Marginal) -> tuple[TransportPlan, float]:
    """Exact OT plan and cost, minimizing <plan, cost> over the coupling polytope."""
    _check_problem(cost, a, b)
    C = cost.entries
    n, m = C.shape
    if n == 1 and m == 1:
        plan = TransportPlan(np.array([[1.0]]), a, b)
        return plan, float(C[0, 0])

    uniform = (
        n == m
        and np.allclose(a.weights, 1.0 / n, atol=1e-12)
        and np.allclose(b.weights, 1.0 / n, atol=1e-12)
    )
    if uniform:
        # uniform equal-size OT reduces to an assignment problem
        rows, cols = linear_sum_assignment(C)
        P = np.zeros_like(C)
        P[rows, cols] = 1.0 / n
        plan = TransportPlan(P, a, b)
        return plan, transport_cost(plan, cost)

    # general marginals: linear program on the flattened coupling
    A_rows = np.zeros((n, n * m))
    for i in range(n):
        A_rows[i, i * m:(i + 1) * m] = 1.0
    A_cols = np.zeros((m - 1, n * m))
    for j in range(m - 1):  # last column constraint is redundant
        A_cols[j, j::m] = 1.0
    A_eq = np.vstack([A_rows, A_cols])
    b_eq = np.concatenate([a.weights, b.weights[:-1]])
    res = linprog(C.ravel(), A_eq=A_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if not res.success:
        raise RuntimeError(f"exact OT linear program failed: {res.message}")
    P = res.x.reshape(n, m)
    P = np.maximum(P, 0.0)
    plan = TransportPlan(P, a, b)
    return plan, transport_cost(plan, cost)


def solve_sinkhorn(
    cost: CostMatrix,
    a: Marginal,
    b: Marginal,
    epsilon: float,
    max_iter: int = 10_000,
    tol: float = 1e-9,
) -> SinkhornResult:
    """Entropically regularized OT via alternating scaling.

    Runs in the log domain whenever epsilon is small relative to the cost
    scale or the Gibbs kernel underflows. The returned plan is rounded onto
    the coupling polytope so its marginals hold exactly; ``marginal_violation``
    reports the scaling loop's residual before rounding. The reported cost is
    <plan, cost> without the entropy term.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    _check_problem(cost, a, b)

    C = cost.entries
    use_log = epsilon < 0.01 * max(C.max(), 1e-300)
    if not use_log:
        K = np.exp(-C / epsilon)
        if np.any(K == 0.0):
            use_log = True

    if use_log:
        plan_matrix, violation, iters = _sinkhorn_log(C, a.weights, b.weights, epsilon, max_iter, tol)
    else:
        plan_matrix, violation, iters = _sinkhorn_scaling(K, a.weights, b.weights, max_iter, tol)

    converged = violation < tol
    plan_matrix = _round_to_polytope(plan_matrix, a.weights, b.weights)
    plan = TransportPlan(plan_matrix, a, b)
    return SinkhornResult(
        plan=plan,
        cost=float(np.sum(plan_matrix * C)),
        converged=converged,
        marginal_violation=float(violation),
        iterations=iters,
    )


def _sinkhorn_scaling(K, a, b, max_iter, tol):
    u = np.ones_like(a)
    v = np.ones_like(b)
    violation = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        u = a / (K @ v)
        v = b / (K.T @ u)
        if it % 10 == 0 or it == max_iter:
            P = u[:, None] * K * v[None, :]
            violation = np.abs(P.sum(axis=1) - a).max()
            if violation < tol:
                break
    P = u[:, None] * K * v[None, :]
    violation = max(np.abs(P.sum(axis=1) - a).max(), np.abs(P.sum(axis=0) - b).max())
    return P, violation, it


def _sinkhorn_log(C, a, b, epsilon, max_iter, tol):
    # potentials kept in units of M = -C/epsilon to avoid per-iteration rescaling
    log_a = np.log(np.maximum(a, 1e-300))
    log_b = np.log(np.maximum(b, 1e-300))
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    M = -C / epsilon
    violation = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        T = M + g[None, :]
        mx = T.max(axis=1)
        f = log_a - (mx + np.log(np.exp(T - mx[:, None]).sum(axis=1)))
        T = M + f[:, None]
        mx = T.max(axis=0)
        g = log_b - (mx + np.log(np.exp(T - mx[None, :]).sum(axis=0)))
        if it % 10 == 0 or it == max_iter:
            P = np.exp(M + f[:, None] + g[None, :])
            violation = np.abs(P.sum(axis=1) - a).max()
            if violation < tol:
                break
    P = np.exp(M + f[:, None] + g[None, :])
    violation = max(np.abs(P.sum(axis=1) - a).max(), np.abs(P.sum(axis=0) - b).max())
    return P, violation, it


def _round_to_polytope(P, a, b):
    """Rescale rows/columns toward the marginals and absorb the residual mass."""
    P = P * np.minimum(1.0, a / np.maximum(P.sum(axis=1), 1e-300))[:, None]
    P = P * np.minimum(1.0, b / np.maximum(P.sum(axis=0), 1e-300))[None, :]
    res_a = a - P.sum(axis=1)
    res_b = b - P.sum(axis=0)
    total = res_a.sum()
    if total > 1e-18:
        P = P + np.outer(res_a, res_b) / total
    return P


def random_coupling(a: Marginal, b: Marginal, rng: np.random.Generator) -> TransportPlan:
    """Random valid coupling via iterative proportional fitting of a positive matrix."""
    n, m = len(a), len(b)
    P = rng.uniform(0.1, 1.0, size=(n, m))
    for _ in range(500):
        P *= (a.weights / P.sum(axis=1))[:, None]
        P *= (b.weights / P.sum(axis=0))[None, :]
        if np.abs(P.sum(axis=1) - a.weights).max() < 1e-12:
            break
    return TransportPlan(P, a, b)
