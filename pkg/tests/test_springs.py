import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from springmesh import Annulus, ConstraintDeficiencyError, Rectangle, SphericalShell, delaunay, equilibrium
from springmesh import springs
from springmesh.mesh import INTERIOR, edge_lengths, unique_edges
from springmesh.springs import (
    SpringProblem,
    assemble,
    circle_rotation,
    element_stiffness_2d,
    element_stiffness_3d,
    fixed,
    linearized_energy,
    recover_global,
    slide_circle,
    slide_line,
    slide_sphere,
    slide_x,
    solve,
    sphere_rotation,
    transform_matrix,
)

from oracles import chain_equilibrium

angles = st.floats(-2 * np.pi, 2 * np.pi)


def chain(x, l0):
    coords = np.column_stack([x, np.zeros(len(x))])
    edges = np.column_stack([np.arange(len(x) - 1), np.arange(1, len(x))])
    cons = [fixed(0, coords[0]), fixed(len(x) - 1, coords[-1])]
    cons += [slide_x(i, 0.0) for i in range(1, len(x) - 1)]
    return equilibrium(coords, edges, l0, cons)


def test_chain_oracle():
    out = chain(np.array([0.0, 0.4, 2.7, 3.0]), 1.0)
    np.testing.assert_allclose(out[1:3, 0], [1.0, 2.0], atol=1e-9)
    np.testing.assert_allclose(out[:, 1], 0.0, atol=1e-15)


def test_chain_unequal_rest_lengths_matches_normal_equations():
    l0 = np.array([0.5, 1.5, 0.7, 1.2, 0.9])
    x = np.linspace(0.0, 4.0, 6)
    out = chain(x, l0)
    np.testing.assert_allclose(out[1:-1, 0], chain_equilibrium(0.0, 4.0, l0), atol=1e-9)


def test_two_node_spring():
    coords = np.array([[0.0, 0.0], [0.5, 0.0]])
    out = equilibrium(coords, np.array([[0, 1]]), 2.0, [fixed(0, [0.0, 0.0]), slide_x(1, 0.0)])
    np.testing.assert_allclose(out[1], [2.0, 0.0], atol=1e-12)


def test_equilateral_rest_state_is_fixed_point():
    c = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    e = np.array([[0, 1], [1, 2], [0, 2]])
    out = equilibrium(c, e, 1.0, [fixed(0, c[0]), slide_x(1, 0.0)])
    np.testing.assert_allclose(out, c, atol=1e-12)


@pytest.mark.parametrize("dim", [2, 3])
def test_rest_configuration_fixed_point(dim):
    rng = np.random.default_rng(dim)
    pts = rng.uniform(0, 10, size=(40, dim))
    edges = unique_edges(delaunay(pts).elements)
    l0 = edge_lengths(pts, edges)
    cons = [fixed(i, pts[i]) for i in range(dim + 1)]
    out = equilibrium(pts, edges, l0, cons, k=l0 ** -2.0)
    diam = np.linalg.norm(pts.max(0) - pts.min(0))
    assert np.abs(out - pts).max() <= 1e-9 * diam


def test_stiffness_2d_blocks():
    K, f = element_stiffness_2d(0.0, 1.0, 2.0)
    assert np.count_nonzero(K[[1, 3]]) == 0 and np.count_nonzero(K[:, [1, 3]]) == 0
    x = np.array([0.0, 0.0, 2.0, 0.0])
    np.testing.assert_allclose(K @ x - f, 0.0, atol=1e-15)
    K, _ = element_stiffness_2d(np.pi / 2)
    np.testing.assert_allclose(K[[0, 2]], 0.0, atol=1e-15)
    np.testing.assert_allclose(K[:, [0, 2]], 0.0, atol=1e-15)
    a = 0.7
    K, _ = element_stiffness_2d(a, 3.0)
    w, v = np.linalg.eigh(K)
    assert np.sum(w > 1e-12) == 1
    u = np.array([np.cos(a), np.sin(a), -np.cos(a), -np.sin(a)]) / np.sqrt(2)
    assert abs(v[:, -1] @ u) == pytest.approx(1.0)


def test_stiffness_3d_blocks():
    K, _ = element_stiffness_3d(0.0, 0.0)
    mask = np.zeros(6, dtype=bool)
    mask[[0, 3]] = True
    np.testing.assert_allclose(K[~mask], 0.0, atol=1e-15)
    for beta in (0.0, 1.0, 2.5):
        K, _ = element_stiffness_3d(np.pi / 2, beta)
        mask = np.zeros(6, dtype=bool)
        mask[[2, 5]] = True
        np.testing.assert_allclose(K[~mask], 0.0, atol=1e-15)
        np.testing.assert_allclose(K[:, ~mask], 0.0, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(angles, angles, st.floats(0.1, 10.0))
def test_stiffness_3d_rest_residual(alpha, beta, l0):
    K, f = element_stiffness_3d(alpha, beta, 2.0, l0)
    n = np.array([np.cos(alpha) * np.cos(beta), np.cos(alpha) * np.sin(beta), np.sin(alpha)])
    x = np.concatenate([np.zeros(3), l0 * n])
    np.testing.assert_allclose(K @ x - f, 0.0, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(angles, angles)
def test_transforms_orthogonal(theta, phi):
    for T in (circle_rotation(theta), sphere_rotation(theta, phi), slide_line(0, theta).rotation):
        np.testing.assert_allclose(T.T @ T, np.eye(len(T)), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(angles, angles), min_size=1, max_size=8))
def test_global_transform_orthogonal(frames):
    n = len(frames) + 3
    cons = [slide_sphere(i, t, p, 1.0) for i, (t, p) in enumerate(frames)]
    T = transform_matrix(n, 3, cons).toarray()
    np.testing.assert_allclose(T.T @ T, np.eye(3 * n), atol=1e-12)


def test_circle_constraint_enforces_radius():
    theta, r = 0.9, 2.5
    out = recover_global(np.array([0.3, r]), circle_rotation(theta), 2)[0]
    normal = np.array([np.sin(theta), np.cos(theta)])
    assert out @ normal == pytest.approx(r, abs=1e-12)
    assert np.linalg.norm(out) == pytest.approx(np.hypot(0.3, r), abs=1e-12)


def test_circle_constraint_row_in_solve():
    # hub at the origin pulled by a spring to a node sliding on the circle tangent
    theta, r = 0.4, 2.0
    p = r * np.array([np.sin(theta), np.cos(theta)]) + 0.1 * np.array([np.cos(theta), -np.sin(theta)])
    coords = np.array([[0.0, 0.0], p])
    out = equilibrium(coords, np.array([[0, 1]]), 1.0, [fixed(0, [0.0, 0.0]), slide_circle(1, theta, r)])
    assert out[1] @ np.array([np.sin(theta), np.cos(theta)]) == pytest.approx(r, abs=1e-12)


def test_sphere_pole_frame_is_identity():
    np.testing.assert_allclose(sphere_rotation(0.0, 0.0), np.eye(3), atol=1e-15)
    out = recover_global(np.array([0.0, 0.0, 5.0]), sphere_rotation(0.0, 0.0), 3)[0]
    np.testing.assert_allclose(out, [0, 0, 5.0])


def test_identity_constraint_unchanged():
    T = transform_matrix(3, 2, [])
    x = np.arange(6.0)
    np.testing.assert_array_equal(recover_global(x, T, 2).ravel(), x)


def test_unconstrained_system_is_singular():
    pts = np.random.default_rng(0).uniform(size=(12, 2))
    edges = unique_edges(delaunay(pts).elements)
    with pytest.raises(ConstraintDeficiencyError):
        equilibrium(pts, edges, 0.3, [])


def _relaxation_problem(dim, seed):
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0, 1, size=(60, dim))
    edges = unique_edges(delaunay(pts).elements)
    hull = np.unique(delaunay(pts).hull)
    cons = [fixed(i, pts[i]) for i in hull]
    l0 = rng.uniform(0.1, 0.4, size=len(edges))
    return pts, edges, l0, cons


@pytest.mark.parametrize("dim,seed", [(2, 0), (2, 1), (3, 2), (3, 3)])
def test_energy_non_increase(dim, seed):
    pts, edges, l0, cons = _relaxation_problem(dim, seed)
    problem = SpringProblem(pts, edges, l0)
    out = recover_global(solve(assemble(problem, cons)), assemble(problem, cons))
    e0, e1 = linearized_energy(pts, problem), linearized_energy(out, problem)
    assert e1 <= e0 + 1e-12
    # the solution minimises the energy over feasible perturbations
    free = np.setdiff1d(np.arange(len(pts)), [c.node for c in cons])
    rng = np.random.default_rng(seed + 10)
    for _ in range(5):
        d = np.zeros_like(out)
        d[free] = 1e-3 * rng.normal(size=(len(free), dim))
        assert linearized_energy(out + d, problem) >= e1 - 1e-12


def test_anchor_holds_nodes():
    pts, edges, l0, cons = _relaxation_problem(2, 4)
    free_move = np.abs(equilibrium(pts, edges, l0, cons) - pts).max()
    held = np.abs(equilibrium(pts, edges, l0, cons, anchor=np.full(len(pts), 1e6)) - pts).max()
    assert held < 1e-3 * free_move


def test_iterative_path_matches_direct(monkeypatch):
    pts, edges, l0, cons = _relaxation_problem(3, 5)
    direct = equilibrium(pts, edges, l0, cons)
    monkeypatch.setattr(springs, "DIRECT_SOLVE_MAX_DOFS", {2: 0, 3: 0})
    iterative = equilibrium(pts, edges, l0, cons)
    np.testing.assert_allclose(iterative, direct, atol=1e-6)


def test_domain_constraints_pin_rigid_modes():
    # annulus and shell meshes leave only the pinned tangent modes; the solve succeeds
    for dom, n in ((Annulus(1.0, 2.0), 2), (SphericalShell(1.0, 2.0), 3)):
        rng = np.random.default_rng(n)
        d = rng.normal(size=(300, n))
        d /= np.linalg.norm(d, axis=1)[:, None]
        r = rng.uniform(1.0, 2.0, 300)
        r[:60], r[60:120] = 1.0, 2.0
        pts = d * r[:, None]
        tags = np.zeros(300, dtype=np.int8)
        tags[:60], tags[60:120] = dom.INNER, dom.OUTER
        edges = unique_edges(delaunay(pts).elements)
        out = equilibrium(pts, edges, 0.3, dom.constraints(pts, tags))
        assert np.all(np.isfinite(out))


# boundary projection ---------------------------------------------------------

def _random_boundary(dom, rng, n=50):
    dim = dom.dim
    p = rng.normal(size=(n, dim)) * dom.diameter
    tags = rng.integers(1, len(dom.tag_names), size=n).astype(np.int8)
    return p, tags


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_projection_satisfies_boundary_equations(seed):
    rng = np.random.default_rng(seed)
    for dom in (Rectangle(-3.0, 5.0, -2.0, 0.0), Annulus(3471.0, 6371.0), SphericalShell(347.1, 637.1)):
        p, tags = _random_boundary(dom, rng)
        out = dom.project(p, tags)
        assert dom.boundary_residual(out, tags).max() <= 1e-9


def test_projection_examples():
    dom = Annulus(1.0, 2.0)
    tags = np.array([dom.OUTER, dom.OUTER], dtype=np.int8)
    p = np.array([[0.0, 2.002], [2.0 * np.sin(0.3), 2.0 * np.cos(0.3)]])
    out = dom.project(p, tags)
    np.testing.assert_allclose(out[0], [0.0, 2.0])
    np.testing.assert_allclose(out[1], p[1], rtol=0, atol=1e-15)
    interior = np.array([INTERIOR], dtype=np.int8)
    np.testing.assert_array_equal(dom.project(np.array([[0.1, 1.5]]), interior), [[0.1, 1.5]])


def test_tangent_displacement_projection_angle():
    shell = SphericalShell(1.0, 2.0)
    rng = np.random.default_rng(7)
    for _ in range(20):
        u = rng.normal(size=3)
        u /= np.linalg.norm(u)
        t = np.cross(u, rng.normal(size=3))
        t /= np.linalg.norm(t)
        d = 0.05
        moved = 2.0 * u + d * t
        out = shell.project(moved[None], np.array([shell.OUTER], dtype=np.int8))[0]
        cosang = out @ moved / (np.linalg.norm(out) * np.linalg.norm(moved))
        assert np.arccos(min(1.0, cosang)) <= d / 2.0
        assert np.linalg.norm(out) == pytest.approx(2.0, abs=1e-12)
