"""Delaunay triangulation / tetrahedralization of the current node set."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay, QhullError

from .errors import DegenerateInputError
from .mesh import Mesh, orient, signed_measure, unique_rows

logger = logging.getLogger(__name__)

# Relative size below which a simplex is treated as flat: |measure| <= EPS * diam**dim
EPS_GEO = 1e-12


@dataclass
class TriangulationResult:
    elements: np.ndarray
    hull: np.ndarray

    def __len__(self):
        return len(self.elements)


def _flat(points, simplices):
    dim = points.shape[1]
    diam = np.linalg.norm(points.max(axis=0) - points.min(axis=0))
    return np.abs(signed_measure(points, simplices)) <= EPS_GEO * diam ** dim


def delaunay(points, dim=None) -> TriangulationResult:
    """Delaunay simplices of ``points``, positively oriented.

    Cocircular/cospherical configurations are split arbitrarily but
    deterministically; zero-measure simplices produced by such splits are
    dropped.
    """
    points = np.asarray(points, dtype=float)
    dim = points.shape[1] if dim is None else dim
    if points.ndim != 2 or points.shape[1] != dim:
        raise ValueError(f"expected an (n, {dim}) coordinate array")
    if len(points) < dim + 1:
        raise DegenerateInputError(f"need at least {dim + 1} points for a {dim}-D triangulation")
    centred = points - points.mean(axis=0)
    if np.linalg.matrix_rank(centred, tol=EPS_GEO * max(np.abs(centred).max(), 1e-300)) < dim:
        raise DegenerateInputError("points are collinear/coplanar for the requested dimension")
    try:
        tri = Delaunay(points)
    except QhullError as exc:
        raise DegenerateInputError(f"triangulation failed: {exc}") from exc
    simplices = tri.simplices.astype(np.int64)
    flat = _flat(points, simplices)
    if flat.any():
        logger.debug("dropping %d zero-measure simplices", int(flat.sum()))
        simplices = simplices[~flat]
    simplices = orient(points, simplices)
    # canonical order: rotate nothing, sort rows for determinism
    simplices = simplices[np.lexsort(np.sort(simplices, axis=1).T[::-1])]
    return TriangulationResult(simplices, _hull_facets(simplices))


def _hull_facets(simplices):
    """Facets that belong to exactly one simplex."""
    if len(simplices) == 0:
        return simplices[:, :-1]
    nv = simplices.shape[1]
    faces = np.concatenate([np.delete(simplices, i, axis=1) for i in range(nv)])
    key = np.sort(faces, axis=1)
    uniq, counts = unique_rows(key, return_counts=True)
    return uniq[counts == 1]


def strip_outside(tri: TriangulationResult, points, domain) -> TriangulationResult:
    """Keep only simplices whose barycentre lies in the domain."""
    if len(tri.elements) == 0:
        return tri
    bary = np.asarray(points)[tri.elements].mean(axis=1)
    keep = domain.contains(bary)
    if keep.all():
        return tri
    el = tri.elements[keep]
    return TriangulationResult(el, _hull_facets(el))


def retriangulate(coords, boundary, domain) -> Mesh:
    """Delaunay + strip, dropping nodes left without any element."""
    tri = strip_outside(delaunay(coords), coords, domain)
    el = tri.elements
    used = np.zeros(len(coords), dtype=bool)
    used[el.ravel()] = True
    if not used.all():
        logger.debug("dropping %d nodes not referenced by any element", int((~used).sum()))
        new_id = np.cumsum(used) - 1
        coords, boundary, el = coords[used], boundary[used], new_id[el]
    return Mesh(coords, el, boundary)
