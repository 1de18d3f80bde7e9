"""Local mesh surgery driven by spring strain and element quality.

Every pass collects its edits first, applies them together and then
rebuilds connectivity by Delaunay retriangulation.  Within a pass a node
takes part in at most one removal; added midpoints never land on a node
that is being removed.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .mesh import INTERIOR, Mesh, edge_lengths, incidence, orient, unique_edges
from .quality import element_quality, q_triangle_points
from .triangulation import retriangulate

logger = logging.getLogger(__name__)

STRAIN_LIMIT = 0.5
SLIVER_Q = 0.1
MAX_SUBITERATIONS = 20
DUPLICATE_TOL = 1e-9


@dataclass
class EditLog:
    added: np.ndarray = None
    added_from: np.ndarray = None
    removed: np.ndarray = None
    percentages: list = field(default_factory=list)

    def __post_init__(self):
        if self.removed is None:
            self.removed = np.zeros(0, dtype=np.int64)
        if self.added_from is None:
            self.added_from = np.zeros((0, 2), dtype=np.int64)

    @property
    def n_added(self):
        return 0 if self.added is None else len(self.added)

    @property
    def n_removed(self):
        return len(self.removed)

    def merge(self, other: "EditLog"):
        """Accumulate counts of a later pass (node ids refer to that pass's mesh)."""
        if other.added is not None:
            self.added = other.added if self.added is None else np.concatenate([self.added, other.added])
            self.added_from = np.concatenate([self.added_from, other.added_from])
        self.removed = np.concatenate([self.removed, other.removed])
        return self


def edge_l0(mesh: Mesh, guide, edges=None):
    """Springs of the mesh and their desired lengths at the spring midpoints."""
    if edges is None:
        edges = unique_edges(mesh.elements)
    mid = 0.5 * (mesh.coords[edges[:, 0]] + mesh.coords[edges[:, 1]])
    return edges, guide.l0_at(mid, clamp=True)


def violating_fraction(mesh, guide):
    edges, l0 = edge_l0(mesh, guide)
    eps = (edge_lengths(mesh.coords, edges) - l0) / l0
    return float(np.mean(np.abs(eps) > STRAIN_LIMIT)) if len(edges) else 0.0


def _removal_choice(i, j, tags, removable):
    """Endpoint to reject: the interior one, else the higher id; -1 if neither may go."""
    ib, jb = tags[i] != INTERIOR, tags[j] != INTERIOR
    if ib != jb:
        cand = [j, i] if ib else [i, j]
    else:
        cand = [max(i, j), min(i, j)]
    for c in cand:
        if removable[c]:
            return c
    return -1


def apply_edits(mesh: Mesh, domain, remove, add, add_from) -> tuple[Mesh, EditLog]:
    """Delete nodes ``remove``, insert points ``add`` (midpoints of edges ``add_from``)."""
    remove = np.unique(np.asarray(remove, dtype=np.int64))
    add = np.asarray(add, dtype=float).reshape(-1, mesh.dim)
    add_from = np.asarray(add_from, dtype=np.int64).reshape(-1, 2)
    if len(remove) == 0 and len(add) == 0:
        return mesh, EditLog(np.zeros((0, mesh.dim)))
    keep = np.ones(mesh.n_nodes, dtype=bool)
    keep[remove] = False
    coords, tags = mesh.coords[keep], mesh.boundary[keep]
    if len(add):
        t = domain.midpoint_tag(mesh.boundary[add_from[:, 0]], mesh.boundary[add_from[:, 1]], add)
        add = domain.project(add, t)
        tol = DUPLICATE_TOL * domain.diameter
        if len(coords):
            dist, _ = cKDTree(coords).query(add)
            ok = dist > tol
            add, t, add_from = add[ok], t[ok], add_from[ok]
        coords = np.concatenate([coords, add])
        tags = np.concatenate([tags, t])
    log = EditLog(add, add_from, remove)
    return retriangulate(coords, tags, domain), log


def add_reject_pass(mesh: Mesh, l0, domain, edges=None) -> tuple[Mesh, EditLog]:
    """One add/reject sweep over springs strained beyond 50 %."""
    if edges is None:
        edges = unique_edges(mesh.elements)
    l0 = np.asarray(l0, dtype=float)
    eps = (edge_lengths(mesh.coords, edges) - l0) / l0
    removable = domain.removable(mesh.boundary)
    claimed = np.zeros(mesh.n_nodes, dtype=bool)
    remove, add_from = [], []
    for k in np.nonzero(np.abs(eps) > STRAIN_LIMIT)[0]:
        i, j = edges[k]
        if claimed[i] or claimed[j]:
            continue
        if eps[k] > 0:
            add_from.append((i, j))
        else:
            r = _removal_choice(i, j, mesh.boundary, removable)
            if r < 0:
                continue
            remove.append(r)
            claimed[i] = claimed[j] = True
    # adds collected before a later removal claimed their endpoint are dropped
    add_from = [e for e in add_from if not (claimed[e[0]] or claimed[e[1]])]
    add_from = np.array(add_from, dtype=np.int64).reshape(-1, 2)
    add = 0.5 * (mesh.coords[add_from[:, 0]] + mesh.coords[add_from[:, 1]])
    out, log = apply_edits(mesh, domain, remove, add, add_from)
    logger.debug("add/reject: +%d -%d", log.n_added, log.n_removed)
    return out, log


def add_reject_subiterate(mesh: Mesh, guide, domain, max_sub=MAX_SUBITERATIONS) -> tuple[Mesh, EditLog]:
    """Repeat add/reject while the share of violating springs keeps falling."""
    total = EditLog(np.zeros((0, mesh.dim)))
    pct = violating_fraction(mesh, guide)
    total.percentages.append(pct)
    best = mesh
    for _ in range(max_sub):
        edges, l0 = edge_l0(best, guide)
        new, log = add_reject_pass(best, l0, domain, edges)
        if log.n_added == 0 and log.n_removed == 0:
            break
        new_pct = violating_fraction(new, guide)
        total.percentages.append(new_pct)
        if new_pct >= pct:
            break
        best, pct = new, new_pct
        total.merge(log)
    return best, total


def smooth_interior(mesh: Mesh, sweeps=1) -> Mesh:
    """Move interior nodes to the mean barycentre of their incident elements."""
    out = mesh.copy()
    inc = incidence(mesh)
    deg = np.asarray(inc.sum(axis=1)).ravel()
    move = (out.boundary == INTERIOR) & (deg > 0)
    for _ in range(sweeps):
        bary = out.coords[out.elements].mean(axis=1)
        mean = (inc @ bary) / np.maximum(deg, 1)[:, None]
        out.coords[move] = mean[move]
    out.elements = orient(out.coords, out.elements)
    return out


def _edge_index(edges, n_nodes):
    key = edges[:, 0] * n_nodes + edges[:, 1]
    return key


def _lookup(key, n_nodes, a, b):
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return np.searchsorted(key, lo * n_nodes + hi)


def fix_bad_tets(mesh: Mesh, l0, domain, q_bad=0.25, edges=None, q=None) -> tuple[Mesh, EditLog]:
    """Split or collapse the most distorted spring of each element with q < q_bad."""
    if edges is None:
        edges = unique_edges(mesh.elements)
    if q is None:
        q = element_quality(mesh)
    eps = (edge_lengths(mesh.coords, edges) - l0) / l0
    key = _edge_index(edges, mesh.n_nodes)
    removable = domain.removable(mesh.boundary)
    claimed = np.zeros(mesh.n_nodes, dtype=bool)
    nv = mesh.elements.shape[1]
    pairs = np.array(list(itertools.combinations(range(nv), 2)))
    remove, add_from = [], []
    bad = np.nonzero(q < q_bad)[0]
    for e in bad[np.argsort(q[bad], kind="stable")]:
        el = mesh.elements[e]
        ids = _lookup(key, mesh.n_nodes, el[pairs[:, 0]], el[pairs[:, 1]])
        k = ids[np.argmax(np.abs(eps[ids]))]
        i, j = edges[k]
        if claimed[i] or claimed[j] or eps[k] == 0:
            continue
        if eps[k] > 0:
            add_from.append((i, j))
        else:
            r = _removal_choice(i, j, mesh.boundary, removable)
            if r < 0:
                continue
            remove.append(r)
        claimed[i] = claimed[j] = True
    add_from = np.array(add_from, dtype=np.int64).reshape(-1, 2)
    add = 0.5 * (mesh.coords[add_from[:, 0]] + mesh.coords[add_from[:, 1]])
    out, log = apply_edits(mesh, domain, remove, add, add_from)
    logger.debug("bad elements %d: +%d -%d", len(bad), log.n_added, log.n_removed)
    return out, log


# candidate points of a tet: 4 vertices then the 6 edge midpoints
_TET_EDGES = list(itertools.combinations(range(4), 2))
_COVER = [frozenset([v]) for v in range(4)] + [frozenset(e) for e in _TET_EDGES]
SLIVER_CANDIDATES = np.array(
    [c for c in itertools.combinations(range(10), 3) if frozenset().union(*(_COVER[i] for i in c)) == {0, 1, 2, 3}]
)


def remove_slivers(mesh: Mesh, domain, q_sliver=SLIVER_Q, q=None) -> tuple[Mesh, EditLog]:
    """Collapse each sliver (q < q_sliver) to its best-shaped covering triangle."""
    if mesh.dim != 3 or mesh.n_elements == 0:
        return mesh, EditLog(np.zeros((0, mesh.dim)))
    if q is None:
        q = element_quality(mesh)
    removable = domain.removable(mesh.boundary)
    claimed = np.zeros(mesh.n_nodes, dtype=bool)
    edge_pairs = np.array(_TET_EDGES)
    remove, add, add_from = [], [], []
    bad = np.nonzero(q < q_sliver)[0]
    for e in bad[np.argsort(q[bad], kind="stable")]:
        el = mesh.elements[e]
        if claimed[el].any():
            continue
        tags = mesh.boundary[el]
        mid = 0.5 * (mesh.coords[el[edge_pairs[:, 0]]] + mesh.coords[el[edge_pairs[:, 1]]])
        mtag = domain.midpoint_tag(tags[edge_pairs[:, 0]], tags[edge_pairs[:, 1]], mid)
        mid = domain.project(mid, mtag)
        pts = np.concatenate([mesh.coords[el], mid])
        ok = np.ones(len(SLIVER_CANDIDATES), dtype=bool)
        for c, cand in enumerate(SLIVER_CANDIDATES):
            chosen = set(v for v in cand if v < 4)
            for v in range(4):
                if v in chosen:
                    continue
                if not removable[el[v]]:
                    ok[c] = False
                # a boundary vertex may only merge into a midpoint that stays on the boundary
                elif tags[v] != INTERIOR and not any(
                    m >= 4 and v in _COVER[m] and mtag[m - 4] != INTERIOR for m in cand
                ):
                    ok[c] = False
        if not ok.any():
            continue
        cands = SLIVER_CANDIDATES[ok]
        score = q_triangle_points(pts[cands])
        best = cands[int(np.argmax(score))]
        chosen = set(v for v in best if v < 4)
        remove.extend(el[v] for v in range(4) if v not in chosen)
        for m in best:
            if m >= 4:
                a, b = edge_pairs[m - 4]
                add.append(0.5 * (mesh.coords[el[a]] + mesh.coords[el[b]]))
                add_from.append((el[a], el[b]))
        claimed[el] = True
    out, log = apply_edits(mesh, domain, remove, np.array(add).reshape(-1, 3), add_from)
    logger.debug("slivers %d: +%d -%d", len(bad), log.n_added, log.n_removed)
    return out, log
