"""Mesh containers, connectivity derivation and basic geometric queries."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import StructuralError

INTERIOR = 0


@dataclass
class Mesh:
    """Simplicial mesh: triangles in 2-D, tetrahedra in 3-D.

    ``boundary`` holds one integer tag per node; 0 is interior and positive
    values name a boundary segment or surface of the owning domain.
    """

    coords: np.ndarray
    elements: np.ndarray
    boundary: np.ndarray = field(default=None)

    def __post_init__(self):
        self.coords = np.ascontiguousarray(self.coords, dtype=float)
        self.elements = np.asarray(self.elements, dtype=np.int64).reshape(-1, self.dim + 1)
        if self.boundary is None:
            self.boundary = np.zeros(len(self.coords), dtype=np.int8)
        self.boundary = np.asarray(self.boundary, dtype=np.int8)

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def n_nodes(self) -> int:
        return len(self.coords)

    @property
    def n_elements(self) -> int:
        return len(self.elements)

    def copy(self) -> "Mesh":
        return Mesh(self.coords.copy(), self.elements.copy(), self.boundary.copy())

    def validate(self):
        """Raise :class:`StructuralError` if any invariant is broken."""
        check_elements(self.elements, self.n_nodes)
        if len(self.boundary) != self.n_nodes:
            raise StructuralError("boundary tags must cover every node exactly once")
        if self.n_elements and np.any(signed_measure(self.coords, self.elements) <= 0):
            raise StructuralError("elements must be positively oriented")


@dataclass
class EdgeSet:
    edges: np.ndarray
    lengths: np.ndarray

    def __len__(self):
        return len(self.edges)


def check_elements(elements, n_nodes):
    elements = np.asarray(elements)
    if elements.size == 0:
        return
    if elements.min() < 0 or elements.max() >= n_nodes:
        raise StructuralError("element references an out-of-range node id")
    s = np.sort(elements, axis=1)
    bad = np.nonzero((s[:, 1:] == s[:, :-1]).any(axis=1))[0]
    if len(bad):
        raise StructuralError(f"element {bad[0]} repeats a node id: {elements[bad[0]].tolist()}")


def element_edges(elements: np.ndarray) -> np.ndarray:
    """All (unsorted, duplicated) local edges of every element, shape (m*k, 2)."""
    nv = elements.shape[1]
    pairs = [(a, b) for a in range(nv) for b in range(a + 1, nv)]
    return np.concatenate([elements[:, [a, b]] for a, b in pairs])


def unique_rows(rows: np.ndarray, return_counts=False):
    """np.unique(rows, axis=0) for non-negative int rows, via one int64 key per row."""
    rows = np.asarray(rows, dtype=np.int64)
    base = int(rows.max()) + 1 if rows.size else 1
    if base ** rows.shape[1] >= 2**62:
        return np.unique(rows, axis=0, return_counts=return_counts)
    key = rows @ (base ** np.arange(rows.shape[1] - 1, -1, -1, dtype=np.int64))
    key, first, counts = np.unique(key, return_index=True, return_counts=True)
    out = rows[first]
    return (out, counts) if return_counts else out


def unique_edges(elements: np.ndarray) -> np.ndarray:
    e = np.sort(element_edges(np.asarray(elements, dtype=np.int64)), axis=1)
    if len(e) == 0:
        return e.reshape(0, 2)
    return unique_rows(e)


def derive_edges(mesh: Mesh) -> EdgeSet:
    """Unique springs of the mesh, lexicographically sorted, with current lengths."""
    check_elements(mesh.elements, mesh.n_nodes)
    edges = unique_edges(mesh.elements)
    return EdgeSet(edges, edge_lengths(mesh.coords, edges))


def edge_lengths(coords, edges):
    return np.linalg.norm(coords[edges[:, 1]] - coords[edges[:, 0]], axis=1)


def barycentres(mesh: Mesh) -> np.ndarray:
    return mesh.coords[mesh.elements].mean(axis=1)


def incidence(mesh: Mesh) -> sp.csr_matrix:
    """Sparse node-by-element incidence matrix (1 where the node is a vertex)."""
    m, k = mesh.elements.shape
    rows = mesh.elements.ravel()
    cols = np.repeat(np.arange(m), k)
    return sp.csr_matrix((np.ones(m * k), (rows, cols)), shape=(mesh.n_nodes, m))


def node_element_adjacency(mesh: Mesh) -> dict[int, list[int]]:
    inc = incidence(mesh)
    return {
        i: inc.indices[inc.indptr[i]:inc.indptr[i + 1]].tolist()
        for i in range(mesh.n_nodes)
    }


def signed_measure(coords, elements) -> np.ndarray:
    """Signed area (2-D) or signed volume (3-D) of each simplex."""
    p = coords[elements]
    d = p[:, 1:] - p[:, :1]
    if coords.shape[1] == 2:
        return 0.5 * (d[:, 0, 0] * d[:, 1, 1] - d[:, 0, 1] * d[:, 1, 0])
    return np.einsum("ij,ij->i", np.cross(d[:, 0], d[:, 1]), d[:, 2]) / 6.0


def orient(coords, elements) -> np.ndarray:
    """Swap the last two vertices of negatively oriented simplices."""
    elements = np.array(elements, dtype=np.int64, copy=True)
    neg = signed_measure(coords, elements) < 0
    elements[neg, -2], elements[neg, -1] = elements[neg, -1], elements[neg, -2].copy()
    return elements


def compact(coords, boundary, keep):
    """Drop nodes where ``keep`` is False; returns (coords, boundary, old_to_new).

    ``old_to_new`` maps removed ids to -1.
    """
    keep = np.asarray(keep, dtype=bool)
    old_to_new = np.full(len(coords), -1, dtype=np.int64)
    old_to_new[keep] = np.arange(keep.sum())
    return coords[keep], boundary[keep], old_to_new


def diameter(coords) -> float:
    return float(np.linalg.norm(coords.max(axis=0) - coords.min(axis=0)))
