"""Initial node distributions for the three domains.

Boundary nodes are generated at the local desired spacing directly.
Interior nodes come from an equilateral (2-D) or hexagonal close-packed
(3-D) lattice: spacing l0r over the transition box (which contains the
refined box) and l0c elsewhere.  Rejection thinning then discards lattice
points with probability matched to the local l0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull

from .guide import GuideMesh, build_guide
from .mesh import INTERIOR

logger = logging.getLogger(__name__)

JITTER = 1e-4  # relative lattice jitter, breaks exact cocircularity
LEVEL_SPLIT = 1.0 / np.sqrt(2.0)
# Randomly thinned points have longer Delaunay edges than a lattice of the
# same density; in 3-D this factor brings the mean edge back to l0
# (measured on thinned hcp lattices: factor 1 gives edges ~13 % too long).
THIN_DENSITY = {2: 1.0, 3: 1.4}
# Mean Delaunay edge of an hcp lattice in units of its spacing: one in seven
# edges is an octahedral diagonal of length sqrt(2).
HCP_MEAN_EDGE = 1.0567


@dataclass
class PointCloud:
    coords: np.ndarray
    boundary: np.ndarray
    spacing: np.ndarray
    rng_seed: int = 0

    def __len__(self):
        return len(self.coords)

    def concat(self, other: "PointCloud") -> "PointCloud":
        return PointCloud(
            np.concatenate([self.coords, other.coords]),
            np.concatenate([self.boundary, other.boundary]),
            np.concatenate([self.spacing, other.spacing]),
            self.rng_seed,
        )


def _cloud(coords, tag, spacing, seed=0):
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    return PointCloud(coords, np.full(n, tag, dtype=np.int8), np.broadcast_to(spacing, (n,)).astype(float), seed)


# lattices -----------------------------------------------------------------

def triangular_lattice(lo, hi, h, origin=None):
    """Equilateral-triangle lattice covering the box [lo, hi], spacing h.

    ``origin`` is a lattice point (default ``lo``); rows run along x.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    origin = lo if origin is None else np.asarray(origin, dtype=float)
    dy = h * np.sqrt(3.0) / 2.0
    j = np.arange(np.floor((lo[1] - origin[1]) / dy), np.ceil((hi[1] - origin[1]) / dy) + 1)
    i = np.arange(np.floor((lo[0] - origin[0]) / h) - 1, np.ceil((hi[0] - origin[0]) / h) + 1)
    jj, ii = np.meshgrid(j, i, indexing="ij")
    x = origin[0] + (ii + 0.5 * (jj % 2)) * h
    y = origin[1] + jj * dy
    p = np.column_stack([x.ravel(), y.ravel()])
    return p[np.all((p >= lo) & (p <= hi), axis=1)]


def hcp_lattice(lo, hi, h):
    """Hexagonal close packing of spheres of diameter h covering [lo, hi]."""
    dy = h * np.sqrt(3.0) / 2.0
    dz = h * np.sqrt(6.0) / 3.0
    n = [int(np.floor((hi[0] - lo[0]) / h)) + 2, int(np.floor((hi[1] - lo[1]) / dy)) + 2,
         int(np.floor((hi[2] - lo[2]) / dz)) + 1]
    k, j, i = np.meshgrid(np.arange(n[2]), np.arange(n[1]), np.arange(n[0]), indexing="ij")
    x = lo[0] + (i + 0.5 * ((j + k) % 2)) * h
    y = lo[1] + (j + (k % 2) / 3.0) * dy
    z = lo[2] + k * dz
    p = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    return p[np.all(p <= hi, axis=1)]


def _jitter(p, h, rng):
    return p + JITTER * h * rng.uniform(-1.0, 1.0, p.shape)


def _box_bbox(domain, box, n=24):
    """Cartesian bounding box of a guide-coordinate box."""
    axes = [np.linspace(a, b, n) for a, b in box]
    u = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(box))
    p = domain.from_guide(u)
    return p.min(axis=0), p.max(axis=0)


def _interior_lattices(domain, guide: GuideMesh, l0r, l0c, lattice, rng, origin=None, edge_ratio=1.0):
    """Fine lattice inside the transition box, coarse lattice outside it.

    ``origin`` anchors the fine lattice (used to line rows up with a boundary).
    Lattice spacings are l0 / ``edge_ratio``, where ``edge_ratio`` is the
    mean Delaunay edge of the lattice in units of its spacing.
    """
    lo, hi = _box_bbox(domain, domain.guide_box)
    tlo, thi = _box_bbox(domain, guide.transition_box)
    tlo, thi = np.maximum(tlo - l0r, lo), np.minimum(thi + l0r, hi)
    clouds = []
    for h, (a, b), o, want_inside in (
        (l0r / edge_ratio, (tlo, thi), origin, True),
        (l0c / edge_ratio, (lo, hi), None, False),
    ):
        p = _jitter(lattice(a, b, h) if o is None else lattice(a, b, h, o), h, rng)
        p = p[domain.contains(p)]
        if len(p) == 0:
            continue
        u = domain.to_guide(p, allow_axis=True)
        inside = guide.region_of(u) >= 1
        p, u = p[inside == want_inside], u[inside == want_inside]
        l0 = guide.interp(u)
        p = p[domain.distance_to_boundary(p) > 0.5 * l0]
        clouds.append(_cloud(p, INTERIOR, h))
    out = clouds[0]
    for c in clouds[1:]:
        out = out.concat(c)
    return out


# boundary curves ----------------------------------------------------------

def graded_parameters(l0_along, length, closed=False, samples=None):
    """Curve parameters s in [0, length] spaced by the local desired length.

    ``l0_along(s)`` gives l0 at arclength s.  The number of intervals is the
    rounded integral of ds / l0; endpoints are excluded (open curves) or
    the start point is included once (closed curves).
    """
    if samples is None:
        samples = 64
    s = np.linspace(0.0, length, samples)
    lmin = np.min(l0_along(s))
    n = max(samples, int(np.ceil(16 * length / lmin)) + 1)
    s = np.linspace(0.0, length, n)
    inv = 1.0 / l0_along(s)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (inv[1:] + inv[:-1]) * np.diff(s))])
    total = cum[-1]
    m = max(1, int(round(total)))
    targets = total * np.arange(1, m) / m
    inner = np.interp(targets, cum, s)
    return np.concatenate([[0.0], inner]) if closed else inner


def _rectangle_boundary(domain, guide):
    c = domain.corners()
    parts = [_cloud(c, domain.CORNER, 0.0)]
    sides = ((0, 1, domain.BOTTOM), (1, 2, domain.RIGHT), (2, 3, domain.TOP), (3, 0, domain.LEFT))
    for a, b, tag in sides:
        pa, pb = c[a], c[b]
        length = float(np.linalg.norm(pb - pa))
        direction = (pb - pa) / length

        def l0_along(s, pa=pa, direction=direction):
            return guide.l0_at(pa + s[:, None] * direction)

        s = graded_parameters(l0_along, length)
        pts = pa + s[:, None] * direction
        # exact side coordinate
        pts = domain.project(pts, np.full(len(pts), tag, dtype=np.int8))
        parts.append(_cloud(pts, tag, l0_along(s) if len(s) else 0.0))
    out = parts[0]
    for p in parts[1:]:
        out = out.concat(p)
    return out


def _circle_boundary(domain, guide, radius, tag):
    start = domain.theta_center - np.pi

    def point(s):
        th = start + s / radius
        return np.column_stack([radius * np.sin(th), radius * np.cos(th)])

    def l0_along(s):
        return guide.l0_at(point(s))

    s = graded_parameters(l0_along, 2 * np.pi * radius, closed=True)
    pts = domain.project(point(s), np.full(len(s), tag, dtype=np.int8))
    return _cloud(pts, tag, l0_along(s))


# geodesic sphere ------------------------------------------------------------

@lru_cache(maxsize=1)
def _pentakis_dodecahedron():
    """Dodecahedron with each pentagon fanned from its centroid (32 verts, 60 faces)."""
    g = (1 + np.sqrt(5.0)) / 2
    v = [(x, y, z) for x in (-1, 1) for y in (-1, 1) for z in (-1, 1)]
    for a in (-1, 1):
        for b in (-1, 1):
            v += [(0, a / g, b * g), (a / g, b * g, 0), (a * g, 0, b / g)]
    v = np.array(v, dtype=float)
    v /= np.linalg.norm(v, axis=1)[:, None]
    hull = ConvexHull(v)
    normals = np.round(hull.equations[:, :3], 9)
    _, face_of = np.unique(normals, axis=0, return_inverse=True)
    verts = list(v)
    faces = []
    for f in range(face_of.max() + 1):
        ids = np.unique(hull.simplices[face_of.ravel() == f])
        centre = v[ids].mean(axis=0)
        n = centre / np.linalg.norm(centre)
        ref = v[ids[0]] - centre
        ang = np.arctan2(np.cross(ref, v[ids] - centre) @ n, (v[ids] - centre) @ ref)
        ring = ids[np.argsort(ang)]
        c = len(verts)
        verts.append(n)
        for k in range(len(ring)):
            faces.append((c, ring[k], ring[(k + 1) % len(ring)]))
    return np.array(verts), np.array(faces)


def _subdivision_weights(frequency):
    """Integer barycentric weights over seed vertices, and small faces."""
    V, F = _pentakis_dodecahedron()
    n = int(frequency)
    grid = [(i, j) for i in range(n + 1) for j in range(n + 1 - i)]
    local = {ij: k for k, ij in enumerate(grid)}
    ij = np.array(grid)
    m = len(grid)
    W = np.zeros((len(F) * m, len(V)), dtype=np.int32)
    rows = np.arange(len(F) * m)
    fi = np.repeat(np.arange(len(F)), m)
    wi, wj = np.tile(ij[:, 0], len(F)), np.tile(ij[:, 1], len(F))
    np.add.at(W, (rows, F[fi, 0]), n - wi - wj)
    np.add.at(W, (rows, F[fi, 1]), wi)
    np.add.at(W, (rows, F[fi, 2]), wj)
    uniq, inv = np.unique(W, axis=0, return_inverse=True)
    inv = inv.ravel()
    small = []
    for i in range(n):
        for j in range(n - i):
            small.append((local[(i, j)], local[(i + 1, j)], local[(i, j + 1)]))
            if i + j < n - 1:
                small.append((local[(i + 1, j)], local[(i + 1, j + 1)], local[(i, j + 1)]))
    small = np.array(small)
    faces = (np.arange(len(F))[:, None, None] * m + small[None]).reshape(-1, 3)
    return uniq, inv[faces]


def geodesic_sphere(radius, frequency):
    """Vertices and faces of the frequency-n subdivided pentakis dodecahedron."""
    V, _ = _pentakis_dodecahedron()
    W, faces = _subdivision_weights(frequency)
    p = W @ V
    p *= radius / np.linalg.norm(p, axis=1)[:, None]
    return p, faces


def median_edge(points, faces):
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.unique(np.sort(e, axis=1), axis=0)
    return float(np.median(np.linalg.norm(points[e[:, 0]] - points[e[:, 1]], axis=1)))


@lru_cache(maxsize=1)
def _unit_seed_edge():
    V, F = _pentakis_dodecahedron()
    return median_edge(V, F)


def place_sphere_surface(r, l0_target):
    """Quasi-uniform points on a sphere at spacing close to ``l0_target``."""
    n = max(1, int(round(r * _unit_seed_edge() / l0_target)))
    pts, _ = geodesic_sphere(r, n)
    return pts


def _graded_sphere(domain, guide, radius, tag, l0r, l0c):
    """Sphere points graded by nested frequency doubling between l0c and l0r."""
    n0 = max(1, int(round(radius * _unit_seed_edge() / l0c)))
    h0 = radius * _unit_seed_edge() / n0
    levels = max(0, int(round(np.log2(h0 / l0r))))
    V, _ = _pentakis_dodecahedron()
    W, _ = _subdivision_weights(n0 * 2 ** levels)
    p = W @ V
    p *= radius / np.linalg.norm(p, axis=1)[:, None]
    g = np.gcd.reduce(W, axis=1)
    level = np.zeros(len(W), dtype=int)
    for k in range(1, levels + 1):
        # points not on level k-1 have weights not divisible by 2**(levels-k+1)
        level[(g % 2 ** (levels - k + 1)) != 0] = k
    spacing = h0 / 2.0 ** level
    keep = level == 0
    if levels:
        l0 = guide.l0_at(p)
        keep |= l0 < LEVEL_SPLIT * h0 / 2.0 ** (level - 1)
    # finer levels only where every coarser level was accepted
    return _cloud(p[keep], tag, spacing[keep])


# public placement operations ---------------------------------------------

def place_rectangle(params, seed=0, guide=None) -> PointCloud:
    domain = params.domain()
    guide = guide or build_guide(domain, params)
    rng = np.random.default_rng(seed)
    bnd = _rectangle_boundary(domain, guide)
    # anchor the fine rows on the boundary node nearest the refined centre,
    # so a refined region touching the top or bottom side starts with a full row
    on_side = (bnd.boundary == domain.TOP) | (bnd.boundary == domain.BOTTOM)
    centre = guide.refined_box.mean(axis=1)
    origin = None
    if on_side.any():
        k = np.argmin(np.linalg.norm(bnd.coords[on_side] - centre, axis=1))
        origin = bnd.coords[on_side][k]
    cloud = bnd.concat(
        _interior_lattices(domain, guide, params.l0r, params.l0c, triangular_lattice, rng, origin)
    )
    cloud.rng_seed = seed
    return cloud


def place_annulus(params, seed=0, guide=None) -> PointCloud:
    domain = params.domain()
    guide = guide or build_guide(domain, params)
    rng = np.random.default_rng(seed)
    cloud = _circle_boundary(domain, guide, domain.r_inner, domain.INNER)
    cloud = cloud.concat(_circle_boundary(domain, guide, domain.r_outer, domain.OUTER))
    cloud = cloud.concat(_interior_lattices(domain, guide, params.l0r, params.l0c, triangular_lattice, rng))
    cloud.rng_seed = seed
    return cloud


def place_shell_interior(params, seed=0, guide=None) -> PointCloud:
    domain = params.domain()
    guide = guide or build_guide(domain, params)
    rng = np.random.default_rng(seed)
    cloud = _interior_lattices(domain, guide, params.l0r, params.l0c, hcp_lattice, rng, edge_ratio=HCP_MEAN_EDGE)
    cloud.rng_seed = seed
    return cloud


def place_shell(params, seed=0, guide=None) -> PointCloud:
    domain = params.domain()
    guide = guide or build_guide(domain, params)
    cloud = _graded_sphere(domain, guide, domain.r_inner, domain.INNER, params.l0r, params.l0c)
    cloud = cloud.concat(_graded_sphere(domain, guide, domain.r_outer, domain.OUTER, params.l0r, params.l0c))
    cloud = cloud.concat(place_shell_interior(params, seed, guide))
    cloud.rng_seed = seed
    return cloud


def rejection_thin(cloud: PointCloud, guide: GuideMesh, seed=0) -> PointCloud:
    """Keep each interior point with probability c * (spacing / l0(x)) ** dim.

    ``spacing`` is the lattice spacing the point was generated with, so a
    cloud laid out uniformly at the global minimum l0 follows the
    (l0_min / l0) ** dim law; c is ``THIN_DENSITY[dim]``.  Boundary points
    are always kept.
    """
    rng = np.random.default_rng(seed)
    dim = cloud.coords.shape[1]
    u = rng.uniform(size=len(cloud))
    interior = cloud.boundary == INTERIOR
    prob = np.ones(len(cloud))
    if interior.any():
        l0 = guide.l0_at(cloud.coords[interior])
        c = THIN_DENSITY.get(dim, 1.0)
        prob[interior] = np.minimum(1.0, c * (cloud.spacing[interior] / l0) ** dim)
    keep = ~interior | (u < prob)
    return PointCloud(cloud.coords[keep], cloud.boundary[keep], cloud.spacing[keep], seed)


def initial_cloud(params, seed=0, guide=None) -> PointCloud:
    """Placement plus thinning for any domain kind."""
    domain = params.domain()
    guide = guide or build_guide(domain, params)
    place = {"rectangle": place_rectangle, "annulus": place_annulus, "shell": place_shell}[params.kind]
    cloud = place(params, seed, guide)
    thinned = rejection_thin(cloud, guide, seed + 1)
    logger.info("initial placement: %d points, %d after thinning", len(cloud), len(thinned))
    return thinned
