"""Coarse guide mesh carrying the desired spring-length field l0.

The guide lives in the coordinates natural to the domain (x, y for the
rectangle; theta, r for the annulus; theta, phi, r for the shell).  Its
nodes are the tensor product of the breakpoints of three nested boxes
(refined, transition, domain); each box cell is split into Kuhn simplices
so l0 is piecewise linear and continuous.  The split is mirrored about the
centre of the refined box: every simplex of a cell contains the cell corner
nearest that centre, so the field is symmetric about the refined region.  Nodes in the closed refined box
carry l0r, every other node carries l0c, so the single layer of cells
between the refined and transition boxes grades l0r -> l0c.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, OutOfCoverageError

COVERAGE_TOL = 1e-9


def _axis_breaks(*intervals):
    v = np.unique(np.concatenate([np.asarray(i, dtype=float) for i in intervals]))
    # merge breakpoints closer than round-off
    keep = np.concatenate([[True], np.diff(v) > 1e-12 * max(1.0, np.abs(v).max())])
    return v[keep]


def _inside(u, box, tol=0.0):
    span = box[:, 1] - box[:, 0]
    t = tol * np.maximum(span, 1.0)
    return np.all((u >= box[:, 0] - t) & (u <= box[:, 1] + t), axis=1)


@dataclass
class GuideMesh:
    domain: object
    refined_box: np.ndarray
    transition_box: np.ndarray
    l0r: float
    l0c: float

    def __post_init__(self):
        box = self.domain.guide_box
        self.domain_box = box
        self.breaks = [
            _axis_breaks(box[k], self.transition_box[k], self.refined_box[k]) for k in range(len(box))
        ]
        shape = tuple(len(b) for b in self.breaks)
        grid = np.stack(np.meshgrid(*self.breaks, indexing="ij"), axis=-1)
        self._shape = shape
        self.nodes = grid.reshape(-1, len(shape))
        in_ref = _inside(self.nodes, self.refined_box, 1e-12)
        self.l0_values = np.where(in_ref, self.l0r, self.l0c)
        self._grid_values = self.l0_values.reshape(shape)
        centre = self.refined_box.mean(axis=1)
        # per axis and cell: True when the Kuhn path runs from the upper corner down
        self._flip = [0.5 * (b[1:] + b[:-1]) < c for b, c in zip(self.breaks, centre)]

    @property
    def dim(self):
        return len(self._shape)

    @property
    def coord_system(self):
        return {"rectangle": "cartesian", "annulus": "polar", "shell": "spherical"}[self.domain.kind]

    @property
    def elements(self) -> np.ndarray:
        """Kuhn simplices of every cell as guide-node ids."""
        d = self.dim
        strides = np.array([int(np.prod(self._shape[k + 1:])) for k in range(d)])
        cells = np.stack(
            np.meshgrid(*[np.arange(n - 1) for n in self._shape], indexing="ij"), axis=-1
        ).reshape(-1, d)
        flip = np.stack([self._flip[k][cells[:, k]] for k in range(d)], axis=1)
        start = (cells + flip) @ strides
        step = np.where(flip, -1, 1) * strides
        out = []
        for perm in itertools.permutations(range(d)):
            ids = [start]
            cur = start.copy()
            for axis in perm:
                cur = cur + step[:, axis]
                ids.append(cur)
            out.append(np.stack(ids, axis=1))
        return np.stack(out, axis=1).reshape(-1, d + 1)

    def interp(self, u):
        """Linear interpolation of l0 at guide-coordinate points ``u``."""
        u = np.asarray(u, dtype=float).reshape(-1, self.dim)
        outside = ~_inside(u, self.domain_box, COVERAGE_TOL)
        if outside.any():
            bad = u[np.argmax(outside)]
            raise OutOfCoverageError(f"point {bad.tolist()} lies outside the guide mesh")
        idx, frac, step = [], [], []
        for k, b in enumerate(self.breaks):
            i = np.clip(np.searchsorted(b, u[:, k], side="right") - 1, 0, len(b) - 2)
            t = np.clip((u[:, k] - b[i]) / (b[i + 1] - b[i]), 0.0, 1.0)
            f = self._flip[k][i]
            idx.append(i + f)
            frac.append(np.where(f, 1.0 - t, t))
            step.append(np.where(f, -1, 1))
        idx = np.stack(idx, axis=1)
        frac = np.stack(frac, axis=1)
        step = np.stack(step, axis=1)
        order = np.argsort(-frac, axis=1, kind="stable")
        rows = np.arange(len(u))
        corner = idx.copy()
        val = self._grid_values[tuple(corner.T)]
        out = val.copy()
        for j in range(self.dim):
            axis = order[:, j]
            corner[rows, axis] += step[rows, axis]
            nxt = self._grid_values[tuple(corner.T)]
            out += frac[rows, axis] * (nxt - val)
            val = nxt
        return out

    def l0_at(self, points, clamp=False):
        """l0 at Cartesian points.

        With ``clamp`` the guide coordinates are first clipped to the domain
        box; chords of a curved boundary have midpoints just outside it.
        """
        u = self.domain.to_guide(points, allow_axis=True)
        if clamp:
            u = np.clip(u, self.domain_box[:, 0], self.domain_box[:, 1])
        return self.interp(u)

    def region_of(self, u):
        """0 coarse, 1 transition, 2 refined for guide-coordinate points."""
        u = np.asarray(u, dtype=float).reshape(-1, self.dim)
        out = np.zeros(len(u), dtype=np.int8)
        out[_inside(u, self.transition_box)] = 1
        out[_inside(u, self.refined_box)] = 2
        return out


def interp_l0(guide: GuideMesh, points):
    return guide.interp(points)


def to_guide_coords(domain, points, allow_axis=False):
    return domain.to_guide(points, allow_axis=allow_axis)


def _centred_interval(centre, extent, lo, hi, name):
    """Interval of width ``extent`` centred at ``centre``, shifted inside [lo, hi]."""
    if extent > (hi - lo) * (1 + 1e-12):
        raise ConfigError(f"{name} extent {extent:g} exceeds the domain ({hi - lo:g})", key=name)
    a, b = centre - extent / 2.0, centre + extent / 2.0
    if a < lo:
        a, b = lo, lo + extent
    if b > hi:
        a, b = hi - extent, hi
    return [max(a, lo), min(b, hi)]


def region_boxes(params, domain):
    """Refined and transition boxes in guide coordinates from the region parameters."""
    box = domain.guide_box
    boxes = []
    for tag, depth, length, width in (
        ("r", params.d_r, params.l_r, params.w_r),
        ("t", params.d_t, params.l_t, params.w_t),
    ):
        if params.kind == "rectangle":
            b = [
                _centred_interval(params.x0, length, *box[0], f"l_{tag}"),
                _centred_interval(params.z0, depth, *box[1], f"d_{tag}"),
            ]
        elif params.kind == "annulus":
            half = length / (2.0 * params.r0)
            if 2 * half >= 2 * np.pi:
                raise ConfigError("region length wraps the whole annulus", key=f"l_{tag}")
            b = [
                [params.theta0 - half, params.theta0 + half],
                _centred_interval(params.r0, depth, *box[1], f"d_{tag}"),
            ]
        else:
            th = length / (2.0 * params.r0)
            ph = width / (2.0 * params.r0 * np.sin(params.theta0))
            if params.theta0 - th < 0 or params.theta0 + th > np.pi:
                raise ConfigError("region crosses the pole; move it away from the polar axis", key=f"l_{tag}")
            if 2 * ph >= 2 * np.pi:
                raise ConfigError("region width wraps the whole sphere", key=f"w_{tag}")
            b = [
                [params.theta0 - th, params.theta0 + th],
                [params.phi0 - ph, params.phi0 + ph],
                _centred_interval(params.r0, depth, *box[2], f"d_{tag}"),
            ]
        boxes.append(np.array(b, dtype=float))
    refined, transition = boxes
    if not (np.all(refined[:, 0] >= transition[:, 0] - 1e-9) and np.all(refined[:, 1] <= transition[:, 1] + 1e-9)):
        raise ConfigError("refined region must lie inside the transition region", key="l_r")
    return refined, transition


def build_guide(domain, params) -> GuideMesh:
    if params.l0r > params.l0c:
        raise ConfigError("l0r must not exceed l0c", key="l0r")
    refined, transition = region_boxes(params, domain)
    return GuideMesh(domain, refined, transition, float(params.l0r), float(params.l0c))
