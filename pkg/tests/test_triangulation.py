import numpy as np
import pytest

from springmesh import Annulus, DegenerateInputError, Rectangle, delaunay, preset_params
from springmesh.mesh import signed_measure
from springmesh.placement import initial_cloud
from springmesh.triangulation import retriangulate, strip_outside

from oracles import brute_force_delaunay, circumsphere


def as_set(elements):
    return {tuple(sorted(e)) for e in elements.tolist()}


def random_sets(dim, count, max_n, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = int(rng.integers(dim + 2, max_n + 1))
        yield rng.uniform(-1.0, 1.0, size=(n, dim))


@pytest.mark.parametrize("dim,max_n,seed", [(2, 12, 11), (3, 9, 12)])
def test_matches_brute_force(dim, max_n, seed):
    for pts in random_sets(dim, 50, max_n, seed):
        assert as_set(delaunay(pts).elements) == brute_force_delaunay(pts)


def test_unit_square_two_triangles_empty_circles():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    tri = delaunay(pts)
    assert len(tri) == 2
    shared = set(tri.elements[0]) & set(tri.elements[1])
    assert len(shared) == 2
    for el in tri.elements:
        c, r = circumsphere(pts[el])
        assert np.all(np.linalg.norm(pts - c, axis=1) <= r * (1 + 1e-12))


def test_three_points_one_triangle():
    tri = delaunay(np.array([[0.0, 0.0], [2.0, 0.0], [0.3, 1.0]]))
    assert tri.elements.shape == (1, 3)
    assert len(tri.hull) == 3


def test_square_with_centre():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]])
    tri = delaunay(pts)
    assert len(tri) == 4
    assert np.all(np.any(tri.elements == 4, axis=1))


def test_positive_orientation_and_deterministic():
    pts = np.random.default_rng(5).uniform(size=(60, 3))
    a, b = delaunay(pts), delaunay(pts.copy())
    assert np.all(signed_measure(pts, a.elements) > 0)
    np.testing.assert_array_equal(a.elements, b.elements)


def test_degenerate_inputs():
    with pytest.raises(DegenerateInputError):
        delaunay(np.array([[0.0, 0.0], [1.0, 1.0]]))
    with pytest.raises(DegenerateInputError):
        delaunay(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [3.0, 3.0]]))
    with pytest.raises(DegenerateInputError):
        delaunay(np.column_stack([np.random.default_rng(0).uniform(size=(8, 2)), np.zeros(8)]))


def test_strip_outside_rectangle_keeps_all():
    pts = np.random.default_rng(2).uniform(size=(40, 2))
    tri = delaunay(pts)
    out = strip_outside(tri, pts, Rectangle(0, 1, 0, 1))
    np.testing.assert_array_equal(out.elements, tri.elements)


def test_strip_outside_annulus_drops_hole():
    ang = np.linspace(0, 2 * np.pi, 12, endpoint=False)
    ring = lambda r: r * np.column_stack([np.sin(ang), np.cos(ang)])
    pts = np.vstack([ring(1.0), ring(2.0)])
    dom = Annulus(1.0, 2.0)
    tri = delaunay(pts)
    out = strip_outside(tri, pts, dom)
    assert len(out) < len(tri)
    r = np.linalg.norm(pts[out.elements].mean(axis=1), axis=1)
    assert np.all((r >= 1.0) & (r <= 2.0))
    r_all = np.linalg.norm(pts[tri.elements].mean(axis=1), axis=1)
    assert np.any(r_all < 1.0)


def test_shell_strip_scan():
    p = preset_params("shell-small", l0r=60.0, l0c=240.0)
    cloud = initial_cloud(p, seed=0)
    dom = p.domain()
    mesh = retriangulate(cloud.coords, cloud.boundary, dom)
    r = np.linalg.norm(mesh.coords[mesh.elements].mean(axis=1), axis=1)
    assert np.all((r >= dom.r_inner) & (r <= dom.r_outer))
    mesh.validate()
