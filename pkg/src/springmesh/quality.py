"""Element quality factors and convergence statistics."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateInputError, UndefinedStatisticError
from .mesh import Mesh, barycentres, edge_lengths

N_BINS = 20
REGIONS = ("coarse", "transition", "refined")


def q_triangle(a, b, c):
    """Normalised radius ratio 2 r / R of triangles with side lengths a, b, c.

    Works elementwise on arrays.  Radicands that round-off pushes slightly
    below zero are clamped, so degenerate triangles score 0.
    """
    a, b, c = (np.asarray(v, dtype=float) for v in (a, b, c))
    s = a + b + c
    p1, p2, p3 = b + c - a, c + a - b, a + b - c
    tol = 1e-12 * s
    if np.any((p1 < -tol) | (p2 < -tol) | (p3 < -tol)):
        raise DegenerateInputError("side lengths violate the triangle inequality")
    prod = np.clip(p1, 0, None) * np.clip(p2, 0, None) * np.clip(p3, 0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_in = 0.5 * np.sqrt(np.where(s > 0, prod / s, 0.0))
        r_out = a * b * c / np.sqrt(s * prod)
        q = np.where(prod > 0, 2.0 * r_in / r_out, 0.0)
    q = np.clip(q, 0.0, 1.0)
    return float(q) if q.ndim == 0 else q


def q_triangle_points(p):
    """Quality of triangles given vertex coordinates, shape (..., 3, d)."""
    p = np.asarray(p, dtype=float)
    a = np.linalg.norm(p[..., 2, :] - p[..., 1, :], axis=-1)
    b = np.linalg.norm(p[..., 0, :] - p[..., 2, :], axis=-1)
    c = np.linalg.norm(p[..., 1, :] - p[..., 0, :], axis=-1)
    return q_triangle(a, b, c)


def q_tet(vertices):
    """Normalised radius ratio 3 r / R of tetrahedra.

    ``vertices`` has shape (4, 3) or (m, 4, 3).  Edge vectors are taken from
    the first vertex; zero-volume tetrahedra score 0.
    """
    v = np.asarray(vertices, dtype=float)
    single = v.ndim == 2
    v = v.reshape(-1, 4, 3)
    a, b, c = (v[:, i] - v[:, 0] for i in (1, 2, 3))
    _check_distinct(v)
    axb, bxc, cxa = np.cross(a, b), np.cross(b, c), np.cross(c, a)
    vol6 = np.abs(np.einsum("ij,ij->i", a, bxc))
    area2 = (
        np.linalg.norm(axb, axis=1) + np.linalg.norm(bxc, axis=1) + np.linalg.norm(cxa, axis=1)
        + np.linalg.norm(axb + bxc + cxa, axis=1)
    )
    w = (
        np.einsum("ij,ij->i", a, a)[:, None] * bxc
        + np.einsum("ij,ij->i", b, b)[:, None] * cxa
        + np.einsum("ij,ij->i", c, c)[:, None] * axb
    )
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        r_in = vol6 / area2
        r_out = np.linalg.norm(w, axis=1) / (2.0 * vol6)
        q = np.where(vol6 > 0, 3.0 * r_in / r_out, 0.0)
    q = np.clip(np.nan_to_num(q), 0.0, 1.0)
    return float(q[0]) if single else q


def _check_distinct(v):
    d = np.linalg.norm(v[:, :, None, :] - v[:, None, :, :], axis=-1)
    iu = np.triu_indices(v.shape[1], 1)
    if np.any(d[:, iu[0], iu[1]] == 0):
        raise DegenerateInputError("tetrahedron has coincident vertices")


SHAPE_MEASURE_CONST = 72.0 * np.sqrt(3.0)


def shape_measure_s(vertices):
    """Volume/edge-length shape measure, scaled so a regular tet gives 1."""
    v = np.asarray(vertices, dtype=float)
    single = v.ndim == 2
    v = v.reshape(-1, 4, 3)
    _check_distinct(v)
    a, b, c = (v[:, i] - v[:, 0] for i in (1, 2, 3))
    vol = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c))) / 6.0
    iu = np.triu_indices(4, 1)
    l2 = np.sum((v[:, iu[0]] - v[:, iu[1]]) ** 2, axis=(1, 2))
    s = np.clip(SHAPE_MEASURE_CONST * vol / l2 ** 1.5, 0.0, 1.0)
    return float(s[0]) if single else s


def element_quality(mesh: Mesh) -> np.ndarray:
    if mesh.n_elements == 0:
        return np.zeros(0)
    p = mesh.coords[mesh.elements]
    if mesh.dim == 2:
        return q_triangle_points(p)
    return q_tet(p)


def strain_eps(l, l0):
    """Relative length change of springs."""
    return (np.asarray(l, dtype=float) - l0) / l0


def misfit_mu(lengths, l0):
    """Mean absolute relative misfit of spring lengths."""
    lengths = np.asarray(getattr(lengths, "lengths", lengths), dtype=float)
    if len(lengths) == 0:
        raise UndefinedStatisticError("misfit of an empty spring set is undefined")
    return float(np.mean(np.abs(strain_eps(lengths, l0))))


def histogram(q):
    counts, _ = np.histogram(np.clip(q, 0.0, 1.0), bins=N_BINS, range=(0.0, 1.0))
    return counts


def classify_regions(mesh: Mesh, guide) -> np.ndarray:
    """Region index per element: 0 coarse, 1 transition, 2 refined."""
    if mesh.n_elements == 0:
        return np.zeros(0, dtype=np.int8)
    u = guide.domain.to_guide(barycentres(mesh), allow_axis=True)
    return guide.region_of(u)


@dataclass
class MeshStats:
    iteration: int
    q_min: float
    q_mean: float
    mu: float
    histogram: list
    region_counts: dict
    nodes: int
    elements: int
    edits_added: int = 0
    edits_removed: int = 0
    extra: dict = field(default_factory=dict)

    def fraction_below(self, threshold):
        """Fraction of elements whose q falls in bins entirely below ``threshold``."""
        k = int(np.floor(threshold * N_BINS + 1e-9))
        total = sum(self.histogram)
        return sum(self.histogram[:k]) / total if total else 0.0

    def to_dict(self):
        return asdict(self)


def mesh_stats(mesh: Mesh, l0, guide=None, iteration=0, edges=None, q=None) -> MeshStats:
    from .mesh import unique_edges

    if edges is None:
        edges = unique_edges(mesh.elements)
    if q is None:
        q = element_quality(mesh)
    if len(q) == 0:
        raise UndefinedStatisticError("mesh has no elements")
    mu = misfit_mu(edge_lengths(mesh.coords, edges), l0)
    regions = {}
    if guide is not None:
        cls = classify_regions(mesh, guide)
        regions = {name: int(np.sum(cls == i)) for i, name in enumerate(REGIONS)}
    return MeshStats(
        iteration=iteration,
        q_min=float(q.min()),
        q_mean=float(q.mean()),
        mu=mu,
        histogram=histogram(q).tolist(),
        region_counts=regions,
        nodes=mesh.n_nodes,
        elements=mesh.n_elements,
    )
