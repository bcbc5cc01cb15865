"""Dense two-phase simplex for small equality-form linear programs.

    minimize    c @ x
    subject to  A @ x == b,  x >= 0

Pivoting follows Bland's rule (lowest-index entering column, lowest-index
leaving basic variable among ratio ties), which guarantees termination on
degenerate problems. Transportation problems are highly degenerate, and the
instances handled here are at most a few thousand variables, so anti-cycling
correctness matters more than pivot count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, Infeasible, LPError, Unbounded

PIVOT_TOL = 1e-10
FEASIBILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class StandardFormLP:
    cost: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=float)
        A = np.asarray(self.constraint_matrix, dtype=float)
        b = np.asarray(self.rhs, dtype=float)
        if c.ndim != 1:
            raise DimensionMismatch("cost must be a vector")
        if A.ndim == 1 and b.size == 1:
            A = A[None, :]
        if A.ndim != 2 or b.ndim != 1:
            raise DimensionMismatch("constraint matrix must be 2-D and rhs a vector")
        if A.shape != (b.size, c.size):
            raise DimensionMismatch(
                f"constraint matrix is {A.shape}, expected ({b.size}, {c.size})")
        object.__setattr__(self, "cost", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "rhs", b)

    @property
    def n_vars(self) -> int:
        return self.cost.size

    @property
    def n_constraints(self) -> int:
        return self.rhs.size


@dataclass(frozen=True, eq=False)
class LPSolution:
    x: np.ndarray
    objective: float
    basis: tuple[int, ...] = ()
    iterations: int = 0


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    nz = np.nonzero(factors)[0]
    if nz.size:
        T[nz] -= np.outer(factors[nz], T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0


def _run(T: np.ndarray, basis: list[int], n_cols: int, max_iter: int) -> int:
    """Bland-rule simplex on tableau ``T`` (last row: reduced costs, -z)."""
    m = T.shape[0] - 1
    for it in range(max_iter):
        reduced = T[-1, :n_cols]
        entering = np.flatnonzero(reduced < -PIVOT_TOL)
        if entering.size == 0:
            return it
        col = int(entering[0])
        column = T[:m, col]
        eligible = np.flatnonzero(column > PIVOT_TOL)
        if eligible.size == 0:
            raise Unbounded(f"objective unbounded below along column {col}")
        ratios = T[eligible, -1] / column[eligible]
        best = ratios.min()
        ties = eligible[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        row = int(min(ties, key=lambda r: basis[r]))
        _pivot(T, row, col)
        basis[row] = col
    raise LPError(f"simplex did not terminate within {max_iter} pivots")


def solve_lp(problem: StandardFormLP, max_iter: int | None = None) -> LPSolution:
    """Solve ``problem`` to an optimal basic feasible solution.

    Raises
    ------
    Infeasible
        If no x >= 0 satisfies the equality constraints.
    Unbounded
        If the objective decreases without bound over the feasible region.
    """
    c, A, b = problem.cost, problem.constraint_matrix.copy(), problem.rhs.copy()
    m, n = A.shape
    if max_iter is None:
        max_iter = 50 * (m + n) + 1000
    if m == 0:
        if np.any(c < -PIVOT_TOL):
            raise Unbounded("unconstrained problem with a negative cost")
        return LPSolution(np.zeros(n), 0.0)

    neg = b < 0
    A[neg] *= -1
    b[neg] *= -1

    # phase 1: minimize the sum of artificial variables
    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :n] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(n, n + m))
    iters = _run(T, basis, n + m, max_iter)

    scale = max(1.0, float(np.abs(b).sum()))
    if -T[-1, -1] > FEASIBILITY_TOL * scale:
        raise Infeasible(f"no feasible point: residual infeasibility {-T[-1, -1]:.3g}")

    # drive artificials out of the basis; rows where that is impossible are redundant
    keep = []
    for i in range(m):
        if basis[i] >= n:
            candidates = np.flatnonzero(np.abs(T[i, :n]) > PIVOT_TOL)
            if candidates.size == 0:
                continue
            j = int(candidates[0])
            _pivot(T, i, j)
            basis[i] = j
        keep.append(i)

    # phase 2 on the reduced tableau, artificial columns dropped
    T2 = np.empty((len(keep) + 1, n + 1))
    T2[:-1, :n] = T[keep, :n]
    T2[:-1, -1] = T[keep, -1]
    basis = [basis[i] for i in keep]
    T2[-1, :n] = c
    T2[-1, -1] = 0.0
    for i, j in enumerate(basis):
        T2[-1] -= c[j] * T2[i]
    iters += _run(T2, basis, n, max_iter)

    x = np.zeros(n)
    x[basis] = T2[:-1, -1]
    # refine the basic values against the original rows to undo pivot drift
    B = problem.constraint_matrix[np.ix_(keep, basis)]
    try:
        x_b = np.linalg.solve(B, problem.rhs[keep])
        if np.all(x_b > -FEASIBILITY_TOL):
            x[basis] = x_b
    except np.linalg.LinAlgError:
        pass
    x[x < 0] = 0.0
    return LPSolution(x=x, objective=float(c @ x), basis=tuple(basis), iterations=iters)

