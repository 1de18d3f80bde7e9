"""Outer iteration: solve springs, measure, then add/reject or improve shapes."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import SpringMeshError
from .guide import build_guide
from .improvement import (
    EditLog,
    add_reject_subiterate,
    edge_l0,
    fix_bad_tets,
    remove_slivers,
    smooth_interior,
)
from .mesh import Mesh, edge_lengths
from .params import Table1Params
from .placement import initial_cloud
from .quality import MeshStats, element_quality, mesh_stats, misfit_mu
from .springs import equilibrium
from .triangulation import retriangulate

logger = logging.getLogger(__name__)

CONVERGED = "converged"
MAX_ITERATIONS = "max_iterations"

__all__ = ["Table1Params", "RunResult", "run", "run_desk_scale", "PRESETS"]


@dataclass
class RunResult:
    mesh: Mesh
    stats: list
    termination: str
    params: Table1Params = None
    seed: int = 0
    elapsed: float = 0.0
    guide: object = field(default=None, repr=False)

    @property
    def converged(self):
        return self.termination == CONVERGED

    @property
    def iterations(self):
        return len(self.stats)

    @property
    def final(self) -> MeshStats:
        return self.stats[-1]


def confine(coords, boundary, domain):
    """Drop nodes the solve pushed outside the domain.

    Interior nodes outside are deleted, as are boundary nodes that slid past
    the end of their side (corners are never deleted).
    """
    inside = domain.contains(coords, tol=1e-12) | ~domain.removable(boundary)
    if inside.all():
        return coords, boundary
    logger.debug("deleting %d interior nodes outside the domain", int((~inside).sum()))
    return coords[inside], boundary[inside]


ANCHOR_START = 0.01
ANCHOR_MAX = 100.0


def damped_equilibrium(mesh: Mesh, guide, edges, l0, constraints, power=2.0, max_step=20.0):
    """Spring equilibrium whose node moves are held to ``max_step`` local l0.

    The plain solve is tried first.  If it moves some node further than
    the bound (a soft mode such as a refined block sliding through a
    weak coarse region), each node is tied to its current position with
    weight lam * l0_node**-power and lam grows tenfold until the step fits.
    Returns the new coordinates and the lam used (0 for the plain solve).
    """
    k = l0 ** -power
    scale = guide.l0_at(mesh.coords, clamp=True)
    lam = 0.0
    while True:
        anchor = None if lam == 0 else lam * scale ** -power
        coords = equilibrium(mesh.coords, edges, l0, constraints, k=k, anchor=anchor)
        step = float(np.max(np.linalg.norm(coords - mesh.coords, axis=1) / scale, initial=0.0))
        if step <= max_step or lam >= ANCHOR_MAX:
            break
        lam = ANCHOR_START if lam == 0 else 10.0 * lam
    if lam:
        logger.debug("solve damped with lam %g (largest move %.2f l0)", lam, step)
    return coords, lam


def relax(mesh: Mesh, guide, domain, power=2.0, max_step=20.0) -> tuple[Mesh, float, float]:
    """Spring equilibrium of the current mesh, re-triangulated.

    Returns the mesh, μ after the solve and the damping weight used.
    """
    edges, l0 = edge_l0(mesh, guide)
    constraints = domain.constraints(mesh.coords, mesh.boundary)
    coords, lam = damped_equilibrium(mesh, guide, edges, l0, constraints, power, max_step)
    coords = domain.project(coords, mesh.boundary)
    coords, tags = confine(coords, mesh.boundary, domain)
    mesh = retriangulate(coords, tags, domain)
    edges, l0 = edge_l0(mesh, guide)
    return mesh, misfit_mu(edge_lengths(mesh.coords, edges), l0), lam


def improve_shapes(mesh: Mesh, guide, domain, q_bad, sweeps=2) -> tuple[Mesh, EditLog]:
    """Smoothing, plus bad-element repair and sliver removal in 3-D."""
    log = EditLog(np.zeros((0, mesh.dim)))
    mesh = retriangulate(*_smoothed(mesh, sweeps), domain)
    if mesh.dim == 3:
        edges, l0 = edge_l0(mesh, guide)
        mesh, fix = fix_bad_tets(mesh, l0, domain, q_bad, edges)
        log.merge(fix)
        mesh, sl = remove_slivers(mesh, domain)
        log.merge(sl)
    return mesh, log


def _smoothed(mesh, sweeps):
    m = smooth_interior(mesh, sweeps)
    return m.coords, m.boundary


def run(params: Table1Params, progress=None, seed=None) -> RunResult:
    """Generate a mesh for ``params``; ``progress`` is called with each MeshStats."""
    t0 = time.perf_counter()
    params.validate()
    seed = params.seed if seed is None else seed
    domain = params.domain()
    guide = build_guide(domain, params)
    cloud = initial_cloud(params, seed, guide)
    mesh = retriangulate(cloud.coords, cloud.boundary, domain)
    stats, termination = [], MAX_ITERATIONS
    for it in range(1, params.max_iterations + 1):
        try:
            mesh, mu_solve, lam = relax(mesh, guide, domain, params.stiffness_power, params.max_step)
            if mu_solve >= params.mu_t:
                branch = "add_reject"
                mesh, log = add_reject_subiterate(mesh, guide, domain)
                mesh = retriangulate(*_smoothed(mesh, 1), domain)
            else:
                branch = "shape"
                mesh, log = improve_shapes(mesh, guide, domain, params.q_bad)
            edges, l0 = edge_l0(mesh, guide)
            q = element_quality(mesh)
            st = mesh_stats(mesh, l0, guide, it, edges=edges, q=q)
        except SpringMeshError as exc:
            raise type(exc)(f"iteration {it}: {exc}") from exc
        st.edits_added, st.edits_removed = log.n_added, log.n_removed
        st.extra.update(mu_solve=mu_solve, damping=lam, branch=branch, subiterations=list(log.percentages))
        stats.append(st)
        logger.info(
            "iter %2d %-10s lam %-5g nodes %6d elems %7d mu %.4f (solve %.4f) q_min %.3f q_mean %.3f +%d -%d",
            it, branch, lam, st.nodes, st.elements, st.mu, mu_solve, st.q_min, st.q_mean,
            st.edits_added, st.edits_removed,
        )
        if progress is not None:
            progress(st)
        # the shape branch is only taken with mu after the solve below mu_t
        if branch == "shape" and st.q_min >= params.q_t and st.q_mean >= params.q_mean_t:
            termination = CONVERGED
            break
    return RunResult(mesh, stats, termination, params, seed, time.perf_counter() - t0, guide)


# desk-scale presets: domains shrunk tenfold with l0c/l0r = 10 (2-D) and 8 (3-D).
# The region boxes are sized in units of l0 the way the full-scale ones are:
# the grading band is about 1.6 l0c wide and the refined block holds most
# of the springs, otherwise the graded springs alone keep mu above mu_t.
PRESETS = {
    "rect-small": dict(
        kind="rectangle", depth=290.0, length=4000.0, l0r=4.0, l0c=40.0,
        d_r=100.0, l_r=600.0, d_t=165.0, l_t=730.0,
    ),
    "annulus-small": dict(
        kind="annulus", r_inner=347.1, r_outer=637.1, l0r=4.0, l0c=40.0,
        d_r=100.0, l_r=600.0, d_t=165.0, l_t=730.0,
    ),
    "shell-small": dict(
        kind="shell", r_inner=347.1, r_outer=637.1, l0r=30.0, l0c=240.0,
        d_r=290.0, l_r=600.0, w_r=700.0, d_t=290.0, l_t=900.0, w_t=1000.0,
    ),
}

FULL_SCALE = {
    "rect": dict(
        kind="rectangle", depth=2900.0, length=40000.0, l0r=7.5, l0c=1500.0,
        d_r=300.0, l_r=3333.0, d_t=2900.0, l_t=8000.0,
    ),
    "annulus": dict(
        kind="annulus", r_inner=3471.0, r_outer=6371.0, l0r=10.0, l0c=2000.0,
        d_r=300.0, l_r=3333.0, d_t=2900.0, l_t=8000.0,
    ),
    "shell": dict(
        kind="shell", r_inner=3471.0, r_outer=6371.0, l0r=60.0, l0c=2000.0,
        d_r=300.0, l_r=2200.0, w_r=5000.0, d_t=2900.0, l_t=6800.0, w_t=9600.0,
    ),
}


def preset_params(name, **overrides) -> Table1Params:
    table = PRESETS if name in PRESETS else FULL_SCALE
    if name not in table:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS) + sorted(FULL_SCALE)}")
    return replace(Table1Params(**table[name]), **overrides)


def run_desk_scale(name, progress=None, seed=None, **overrides) -> RunResult:
    if name not in PRESETS:
        raise KeyError(f"unknown desk preset {name!r}; choose from {sorted(PRESETS)}")
    return run(preset_params(name, **overrides), progress=progress, seed=seed)
