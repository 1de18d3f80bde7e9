"""Static equilibrium of the virtual spring network.

Every mesh edge is a Hookean spring with stiffness ``k`` and desired length
``l0``.  Each spring is linearised about its current direction, so the
global system ``K x = f`` is linear in the nodal positions.  Boundary nodes
get a local frame ``x = R x'``; the constrained local coordinates (distance
to a line, radius of a circle or sphere) are eliminated before the solve.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConstraintDeficiencyError, NumericalError

logger = logging.getLogger(__name__)

# above these sizes the direct factorization's fill-in is too large (3-D fills far faster)
DIRECT_SOLVE_MAX_DOFS = {2: 100_000, 3: 5_000}
RESIDUAL_TOL = 1e-8


@dataclass
class BoundaryConstraint:
    """Sliding or fixing condition on a single node.

    ``rotation`` maps local to global coordinates (columns are the local
    axes); ``prescribed`` maps local axis index to its fixed value.
    """

    node: int
    kind: str
    rotation: np.ndarray
    prescribed: dict
    angles: tuple = ()


def fixed(node, position):
    position = np.asarray(position, dtype=float)
    d = len(position)
    return BoundaryConstraint(int(node), "fixed", np.eye(d), {a: float(position[a]) for a in range(d)})


def slide_x(node, y):
    """Node slides along the horizontal line at height ``y``."""
    return BoundaryConstraint(int(node), "slide_x", np.eye(2), {1: float(y)})


def slide_y(node, x):
    return BoundaryConstraint(int(node), "slide_y", np.eye(2), {0: float(x)})


def slide_line(node, alpha, offset=0.0):
    """Slide along a line at angle ``alpha`` from +X, ``offset`` from the origin."""
    c, s = np.cos(alpha), np.sin(alpha)
    R = np.array([[c, -s], [s, c]])
    return BoundaryConstraint(int(node), "slide_line", R, {1: float(offset)}, (float(alpha),))


def circle_rotation(theta):
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, s], [-s, c]])


def sphere_rotation(theta, phi):
    """Local frame (e_theta, e_phi, e_r) at colatitude theta, longitude phi."""
    ct, st, cp, sp_ = np.cos(theta), np.sin(theta), np.cos(phi), np.sin(phi)
    return np.array([
        [cp * ct, -sp_, cp * st],
        [sp_ * ct, cp, sp_ * st],
        [-st, 0.0, ct],
    ])


def slide_circle(node, theta, radius, pin_tangent=False):
    """Slide along the tangent of a circle; theta is clockwise from +Y."""
    prescribed = {1: float(radius)}
    if pin_tangent:
        prescribed[0] = 0.0
    return BoundaryConstraint(int(node), "slide_circle", circle_rotation(theta), prescribed,
                              (float(theta), float(radius)))


def slide_sphere(node, theta, phi, radius, pin=()):
    """Slide in the tangent plane of a sphere; ``pin`` also fixes tangent axes."""
    prescribed = {2: float(radius)}
    for a in pin:
        prescribed[a] = 0.0
    return BoundaryConstraint(int(node), "slide_sphere", sphere_rotation(theta, phi), prescribed,
                              (float(theta), float(phi), float(radius)))


def element_stiffness_2d(alpha, k=1.0, l0=1.0):
    """4x4 spring block on (x1, y1, x2, y2) and its rest-length load.

    The block is positive semidefinite; the load vector goes on the
    right-hand side so a spring at rest length exerts no net force.
    """
    c, s = np.cos(alpha), np.sin(alpha)
    R = np.array([[c, s, 0, 0], [0, 0, c, s]])
    B = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return k * R.T @ B @ R, k * l0 * np.array([-c, -s, c, s])


def element_stiffness_3d(alpha, beta, k=1.0, l0=1.0):
    """6x6 block; alpha is the elevation of the spring, beta its azimuth."""
    n = np.array([np.cos(alpha) * np.cos(beta), np.cos(alpha) * np.sin(beta), np.sin(alpha)])
    R = np.zeros((2, 6))
    R[0, :3] = n
    R[1, 3:] = n
    B = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return k * R.T @ B @ R, k * l0 * np.concatenate([-n, n])


def spring_angles(coords, edges):
    """Per-edge angles: alpha in 2-D; (alpha, beta) in 3-D."""
    d = coords[edges[:, 1]] - coords[edges[:, 0]]
    if coords.shape[1] == 2:
        return np.arctan2(d[:, 1], d[:, 0])
    return np.column_stack([np.arctan2(d[:, 2], np.hypot(d[:, 0], d[:, 1])), np.arctan2(d[:, 1], d[:, 0])])


@dataclass
class SpringProblem:
    coords: np.ndarray
    edges: np.ndarray
    l0: np.ndarray
    k: np.ndarray = None
    directions: np.ndarray = field(default=None, repr=False)
    # optional per-node weight tying each node to its current position
    anchor: np.ndarray = None

    def __post_init__(self):
        self.l0 = np.asarray(self.l0, dtype=float)
        if self.k is None:
            self.k = np.ones(len(self.edges))
        self.k = np.broadcast_to(np.asarray(self.k, dtype=float), (len(self.edges),))
        if self.directions is None:
            d = self.coords[self.edges[:, 1]] - self.coords[self.edges[:, 0]]
            self.directions = d / np.linalg.norm(d, axis=1)[:, None]

    @property
    def angles(self):
        return spring_angles(self.coords, self.edges)


@dataclass
class AssembledSystem:
    stiffness: sp.csr_matrix
    rhs: np.ndarray
    free: np.ndarray
    prescribed: np.ndarray
    prescribed_values: np.ndarray
    transform: sp.csr_matrix
    dim: int
    full_stiffness: sp.csr_matrix = field(repr=False, default=None)
    full_rhs: np.ndarray = field(repr=False, default=None)


def global_stiffness(problem: SpringProblem):
    """Unconstrained global K and rest-length load f (scatter-add of all springs)."""
    n_nodes, dim = problem.coords.shape
    e = problem.edges
    n = problem.directions
    kk = problem.k
    dof_i = e[:, :1] * dim + np.arange(dim)
    dof_j = e[:, 1:] * dim + np.arange(dim)
    block = kk[:, None, None] * n[:, :, None] * n[:, None, :]
    rows, cols, vals = [], [], []
    for di, dj, sign in ((dof_i, dof_i, 1), (dof_j, dof_j, 1), (dof_i, dof_j, -1), (dof_j, dof_i, -1)):
        rows.append(np.repeat(di, dim, axis=1).ravel())
        cols.append(np.tile(dj, (1, dim)).ravel())
        vals.append(sign * block.ravel())
    N = n_nodes * dim
    K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)).tocsr()
    f = np.zeros(N)
    load = (kk * problem.l0)[:, None] * n
    np.add.at(f, dof_i.ravel(), -load.ravel())
    np.add.at(f, dof_j.ravel(), load.ravel())
    if problem.anchor is not None:
        w = np.repeat(np.asarray(problem.anchor, dtype=float), dim)
        K = K + sp.diags(w, format="csr")
        f = f + w * problem.coords.ravel()
    return K, f


def transform_matrix(n_nodes, dim, constraints):
    """Block-diagonal T with the local frames of constrained nodes."""
    blocks = np.tile(np.eye(dim), (n_nodes, 1, 1))
    for c in constraints:
        blocks[c.node] = c.rotation
    return sp.block_diag(list(blocks), format="csr") if n_nodes < 64 else _block_diag_fast(blocks)


def _block_diag_fast(blocks):
    n, d, _ = blocks.shape
    base = (np.arange(n) * d)[:, None, None]
    rows = base + np.arange(d)[None, :, None] + np.zeros((1, 1, d), dtype=int)
    cols = base + np.arange(d)[None, None, :] + np.zeros((1, d, 1), dtype=int)
    return sp.csr_matrix((blocks.ravel(), (rows.ravel(), cols.ravel())), shape=(n * d, n * d))


def assemble(problem: SpringProblem, constraints) -> AssembledSystem:
    """K' = T^T K T with constrained local dofs substituted into the load."""
    n_nodes, dim = problem.coords.shape
    K, f = global_stiffness(problem)
    T = transform_matrix(n_nodes, dim, constraints)
    Kp = (T.T @ K @ T).tocsr()
    fp = T.T @ f
    fixed_mask = np.zeros(n_nodes * dim, dtype=bool)
    values = np.zeros(n_nodes * dim)
    for c in constraints:
        for axis, v in c.prescribed.items():
            fixed_mask[c.node * dim + axis] = True
            values[c.node * dim + axis] = v
    free = np.nonzero(~fixed_mask)[0]
    pres = np.nonzero(fixed_mask)[0]
    Kff = Kp[free][:, free].tocsc()
    rhs = fp[free] - Kp[free][:, pres] @ values[pres]
    return AssembledSystem(Kff, rhs, free, pres, values[pres], T, dim, Kp, fp)


def solve(system: AssembledSystem) -> np.ndarray:
    """Local-frame coordinates x' of every dof (prescribed ones included)."""
    K, f = system.stiffness, system.rhs
    n_total = len(system.free) + len(system.prescribed)
    x = np.zeros(n_total)
    x[system.prescribed] = system.prescribed_values
    if len(system.free) == 0:
        return x
    if len(system.free) <= DIRECT_SOLVE_MAX_DOFS.get(system.dim, 5_000):
        try:
            lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A")
        except RuntimeError as exc:
            raise ConstraintDeficiencyError(f"stiffness matrix is singular: {exc}") from exc
        piv = np.abs(lu.U.diagonal())
        if piv.min() <= 1e-12 * piv.max():
            raise ConstraintDeficiencyError(
                f"stiffness matrix is numerically singular (pivot ratio {piv.min() / piv.max():.1e}); "
                "a rigid-body mode is unconstrained"
            )
        xf = lu.solve(f)
        if not np.all(np.isfinite(xf)):
            raise ConstraintDeficiencyError("stiffness factorization produced non-finite values")
    else:
        diag = K.diagonal()
        M = sp.diags(1.0 / np.where(diag > 0, diag, 1.0))
        xf, info = spla.cg(K, f, rtol=RESIDUAL_TOL * 0.1, maxiter=20 * len(f), M=M)
        if info != 0:
            raise NumericalError(f"conjugate gradient did not converge (info={info})")
    fnorm = np.linalg.norm(f)
    res = np.linalg.norm(K @ xf - f)
    if fnorm > 0 and res > RESIDUAL_TOL * fnorm:
        cond = _condition_hint(K)
        raise NumericalError(
            f"relative residual {res / fnorm:.3e} exceeds {RESIDUAL_TOL:.0e} (diag ratio {cond:.3e})"
        )
    x[system.free] = xf
    return x


def _condition_hint(K):
    d = np.abs(K.diagonal())
    d = d[d > 0]
    return float(d.max() / d.min()) if len(d) else np.inf


def recover_global(x_local, system_or_transform, dim=None) -> np.ndarray:
    """x = T x' reshaped to (n_nodes, dim)."""
    if isinstance(system_or_transform, AssembledSystem):
        T, dim = system_or_transform.transform, system_or_transform.dim
    else:
        T = system_or_transform
    return (T @ x_local).reshape(-1, dim)


def project_to_boundary(coords, tags, domain):
    """Pull tangentially displaced boundary nodes back onto the boundary."""
    return domain.project(coords, tags)


def equilibrium(coords, edges, l0, constraints, k=None, anchor=None) -> np.ndarray:
    """Assemble, solve and map back to Cartesian coordinates in one call."""
    problem = SpringProblem(coords, edges, l0, k, anchor=anchor)
    system = assemble(problem, constraints)
    return recover_global(solve(system), system)


def linearized_energy(coords, problem: SpringProblem):
    """Spring energy with lengths measured along the frozen spring directions."""
    d = coords[problem.edges[:, 1]] - coords[problem.edges[:, 0]]
    l = np.einsum("ij,ij->i", d, problem.directions)
    e = float(np.sum(problem.k * (l - problem.l0) ** 2))
    if problem.anchor is not None:
        e += float(np.sum(problem.anchor * np.sum((coords - problem.coords) ** 2, axis=1)))
    return e


def spring_energy(coords, edges, l0, k=None):
    l = np.linalg.norm(coords[edges[:, 1]] - coords[edges[:, 0]], axis=1)
    k = np.ones(len(edges)) if k is None else k
    return float(np.sum(k * (l - l0) ** 2))
