import numpy as np
import pytest

from springmesh import NumericalError, preset_params, run, run_desk_scale
from springmesh import workflow
from springmesh.guide import build_guide
from springmesh.improvement import edge_l0
from springmesh.mesh import edge_lengths, unique_edges
from springmesh.placement import initial_cloud
from springmesh.triangulation import retriangulate

from conftest import desk_run

TOLERANCES = {"rect-small": (0.45, 0.89), "annulus-small": (0.30, 0.93)}


@pytest.mark.parametrize("name", sorted(TOLERANCES))
def test_desk_2d_converges(name):
    r = desk_run(name)
    q_t, q_mean_t = TOLERANCES[name]
    assert r.converged and r.iterations <= 30
    assert r.final.q_min >= q_t and r.final.q_mean >= q_mean_t
    assert r.final.extra["branch"] == "shape"
    assert r.final.extra["mu_solve"] < r.params.mu_t
    r.mesh.validate()


@pytest.mark.parametrize("name", sorted(TOLERANCES))
def test_desk_2d_deterministic(name):
    a, b = desk_run(name), run_desk_scale(name)
    assert (a.iterations, a.final.nodes, a.final.elements) == (b.iterations, b.final.nodes, b.final.elements)
    np.testing.assert_array_equal(a.mesh.coords, b.mesh.coords)
    np.testing.assert_array_equal(a.mesh.elements, b.mesh.elements)


@pytest.mark.parametrize("name", sorted(TOLERANCES))
def test_converged_mesh_invariants(name):
    r = desk_run(name)
    m, g = r.mesh, r.guide
    dom = g.domain
    assert dom.boundary_residual(m.coords, m.boundary).max() <= 1e-9
    e = unique_edges(m.elements)
    l = edge_lengths(m.coords, e)
    region = g.region_of(dom.to_guide(0.5 * (m.coords[e[:, 0]] + m.coords[e[:, 1]])))
    assert np.median(l[region == 2]) == pytest.approx(g.l0r, rel=0.10)
    assert np.median(l[region == 0]) == pytest.approx(g.l0c, rel=0.15)
    q_mean = [s.q_mean for s in r.stats]
    assert all(b >= a - 0.02 for a, b in zip(q_mean[1:], q_mean[2:]))
    for s in r.stats:
        assert sum(s.histogram) == s.elements
        assert sum(s.region_counts.values()) == s.elements


def test_progress_callback_and_seed():
    seen = []
    r = run(preset_params("rect-small", max_iterations=1), progress=seen.append, seed=3)
    assert r.seed == 3 and len(seen) == 1 and seen[0] is r.final
    assert r.termination in (workflow.CONVERGED, workflow.MAX_ITERATIONS)


def test_shell_pipeline_short_run():
    r = run(preset_params("shell-small", max_iterations=2))
    m = r.mesh
    m.validate()
    assert r.iterations == 2 and m.dim == 3
    assert r.guide.domain.boundary_residual(m.coords, m.boundary).max() <= 1e-9
    for s in r.stats:
        assert set(s.extra) == {"mu_solve", "damping", "branch", "subiterations"}


def test_errors_name_the_iteration(monkeypatch):
    def broken(*a, **k):
        raise NumericalError("solver blew up")

    monkeypatch.setattr(workflow, "relax", broken)
    with pytest.raises(NumericalError, match="iteration 1: solver blew up"):
        run(preset_params("rect-small"))


def test_damped_solve_limits_moves():
    p = preset_params("rect-small")
    dom = p.domain()
    g = build_guide(dom, p)
    c = initial_cloud(p, 0, g)
    mesh = retriangulate(c.coords, c.boundary, dom)
    edges, l0 = edge_l0(mesh, g)
    cons = dom.constraints(mesh.coords, mesh.boundary)
    plain, lam0 = workflow.damped_equilibrium(mesh, g, edges, l0, cons, max_step=1e9)
    assert lam0 == 0.0
    scale = g.l0_at(mesh.coords, clamp=True)
    step = np.max(np.linalg.norm(plain - mesh.coords, axis=1) / scale)
    damped, lam = workflow.damped_equilibrium(mesh, g, edges, l0, cons, max_step=0.5 * step)
    assert lam >= workflow.ANCHOR_START
    assert np.max(np.linalg.norm(damped - mesh.coords, axis=1) / scale) <= 0.5 * step


def test_unknown_preset():
    with pytest.raises(KeyError):
        run_desk_scale("rect")
    with pytest.raises(KeyError):
        preset_params("nope")
