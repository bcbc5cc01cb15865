"""Independent reference computations used to freeze expected values.

Nothing here imports the package's solver or barycenter code paths.
"""

import itertools

import numpy as np


def independent_rows(A, tol=1e-9):
    rows = []
    for i in range(A.shape[0]):
        trial = rows + [i]
        if np.linalg.matrix_rank(A[trial], tol=tol) == len(trial):
            rows = trial
    return rows


def enumerate_bfs(c, A, b, tol=1e-9):
    """All basic feasible solutions of {A x = b, x >= 0}, by brute force.

    Returns a list of (x, objective). Redundant rows are dropped first, then
    every column subset of size rank(A) with a nonsingular basis matrix is
    solved and kept when the solution is nonnegative.
    """
    c = np.asarray(c, float)
    A = np.asarray(A, float)
    b = np.asarray(b, float)
    rows = independent_rows(A)
    A_r, b_r = A[rows], b[rows]
    r = len(rows)
    n = A.shape[1]
    out = []
    for cols in itertools.combinations(range(n), r):
        B = A_r[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, b_r)
        if np.any(xb < -tol):
            continue
        x = np.zeros(n)
        x[list(cols)] = np.maximum(xb, 0.0)
        if np.allclose(A @ x, b, atol=1e-9):
            out.append((x, float(c @ x)))
    return out


def brute_force_lp_min(c, A, b):
    vertices = enumerate_bfs(c, A, b)
    if not vertices:
        raise ValueError("no basic feasible solution")
    return min(obj for _, obj in vertices)


def transport_matrix(supplies, demands):
    """Equality constraints of a supplies x demands transportation problem, row-major x."""
    S, T = len(supplies), len(demands)
    A = np.zeros((S + T, S * T))
    for i in range(S):
        A[i, i * T:(i + 1) * T] = 1.0
    for j in range(T):
        A[S + j, j::T] = 1.0
    return A, np.concatenate([supplies, demands])


def w2sq(mu_a, sd_a, mu_b, sd_b):
    """Squared W2 between diagonal Gaussians, written out coordinate by coordinate."""
    total = 0.0
    for ma, sa, mb, sb in zip(np.ravel(mu_a), np.ravel(sd_a), np.ravel(mu_b), np.ravel(sd_b)):
        total += (ma - mb) ** 2 + (sa - sb) ** 2
    return total


def coupled_lp(mixtures, lam):
    """Coupled transport LP over all candidate tuples, built from loops.

    ``mixtures`` is a list of (weights, means, stddevs) triples. Returns
    (cost, A, b, tuples, cand_means, cand_stds).
    """
    L = len(mixtures)
    tuples = list(itertools.product(*(range(len(w)) for w, _, _ in mixtures)))
    M = len(tuples)
    cand_means = [sum(lam[l] * np.asarray(mixtures[l][1][t[l]], float) for l in range(L)) for t in tuples]
    cand_stds = [sum(lam[l] * np.asarray(mixtures[l][2][t[l]], float) for l in range(L)) for t in tuples]
    index = {}
    for l, (w, mu, sd) in enumerate(mixtures):
        for k in range(len(w)):
            for m in range(M):
                index[(l, k, m)] = len(index)
    n = len(index)
    cost = np.zeros(n)
    for (l, k, m), j in index.items():
        w, mu, sd = mixtures[l]
        cost[j] = lam[l] * w2sq(cand_means[m], cand_stds[m], mu[k], sd[k])
    rows, rhs = [], []
    for l, (w, _, _) in enumerate(mixtures):
        for k in range(len(w)):
            row = np.zeros(n)
            for m in range(M):
                row[index[(l, k, m)]] = 1.0
            rows.append(row)
            rhs.append(w[k])
    for l in range(1, L):
        for m in range(M):
            row = np.zeros(n)
            for k in range(len(mixtures[0][0])):
                row[index[(0, k, m)]] += 1.0
            for k in range(len(mixtures[l][0])):
                row[index[(l, k, m)]] -= 1.0
            rows.append(row)
            rhs.append(0.0)
    return cost, np.array(rows), np.array(rhs), tuples, cand_means, cand_stds


def central_gradient(f, x, h=1e-6):
    x = np.asarray(x, float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def trapezoid_2d(f, xs, ys):
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    Z = f(np.column_stack([X.ravel(), Y.ravel()])).reshape(X.shape)
    return np.trapezoid(np.trapezoid(Z, ys, axis=1), xs)
