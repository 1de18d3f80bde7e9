"""Independent reference implementations used by the tests."""
import itertools

import numpy as np


def circumsphere(p):
    """Centre and radius of the circumcircle/sphere of a simplex (d+1, d)."""
    a = 2.0 * (p[1:] - p[0])
    b = np.sum(p[1:] ** 2 - p[0] ** 2, axis=1)
    c = np.linalg.solve(a, b)
    return c, np.linalg.norm(p[0] - c)


def brute_force_delaunay(points, rel_tol=1e-9):
    """Every simplex whose circumsphere has no other point strictly inside."""
    points = np.asarray(points, dtype=float)
    n, d = points.shape
    out = set()
    for s in itertools.combinations(range(n), d + 1):
        p = points[list(s)]
        vol = np.linalg.det(p[1:] - p[0])
        if abs(vol) < 1e-12:
            continue
        c, r = circumsphere(p)
        others = np.delete(points, list(s), axis=0)
        if len(others) == 0 or np.all(np.linalg.norm(others - c, axis=1) > r * (1 + rel_tol)):
            out.add(tuple(sorted(s)))
    return out


def chain_equilibrium(x_left, x_right, l0):
    """Interior positions of a 1-D chain of equal unit springs with both ends fixed.

    Minimises sum (x_{i+1} - x_i - l0_i)^2 directly via the normal equations.
    """
    l0 = np.asarray(l0, dtype=float)
    m = len(l0) - 1
    A = np.zeros((m, m))
    b = np.zeros(m)
    for i in range(m):
        A[i, i] = 2.0
        if i > 0:
            A[i, i - 1] = -1.0
        if i < m - 1:
            A[i, i + 1] = -1.0
        b[i] = l0[i] - l0[i + 1]
    b[0] += x_left
    b[-1] += x_right
    return np.linalg.solve(A, b)
