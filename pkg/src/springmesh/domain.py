"""Domain shapes: rectangle, cylindrical annulus and spherical shell.

Each shape knows its boundary tags, how to map Cartesian points to the
coordinates its guide mesh lives in, how to pull boundary nodes back onto
the boundary, and which sliding constraints its boundary nodes obey.
"""
from __future__ import annotations

import numpy as np

from .errors import ConfigError, SingularCoordinateError
from .mesh import INTERIOR
from .springs import (
    BoundaryConstraint,
    fixed,
    slide_circle,
    slide_sphere,
    slide_x,
    slide_y,
)

RADIUS_CLAMP = 1e-6


def _wrap(angle, lo):
    return lo + np.mod(angle - lo, 2 * np.pi)


class Rectangle:
    """Box [xmin, xmax] x [ymin, ymax]; y is the vertical (depth) axis."""

    dim = 2
    kind = "rectangle"
    BOTTOM, RIGHT, TOP, LEFT, CORNER = 1, 2, 3, 4, 5
    tag_names = {0: "interior", 1: "bottom", 2: "right", 3: "top", 4: "left", 5: "corner"}

    def __init__(self, xmin, xmax, ymin, ymax):
        if not (xmax > xmin and ymax > ymin):
            raise ConfigError("rectangle must have positive length and depth")
        self.xmin, self.xmax, self.ymin, self.ymax = map(float, (xmin, xmax, ymin, ymax))

    @property
    def diameter(self):
        return float(np.hypot(self.xmax - self.xmin, self.ymax - self.ymin))

    @property
    def guide_box(self):
        return np.array([[self.xmin, self.xmax], [self.ymin, self.ymax]])

    def to_guide(self, points, allow_axis=False):
        return np.array(points, dtype=float, copy=True).reshape(-1, 2)

    def from_guide(self, u):
        return np.asarray(u, dtype=float).reshape(-1, 2).copy()

    def contains(self, points, tol=0.0):
        p = np.asarray(points).reshape(-1, 2)
        t = tol * self.diameter
        return (
            (p[:, 0] >= self.xmin - t) & (p[:, 0] <= self.xmax + t)
            & (p[:, 1] >= self.ymin - t) & (p[:, 1] <= self.ymax + t)
        )

    def distance_to_boundary(self, points):
        p = np.asarray(points).reshape(-1, 2)
        return np.min(
            [p[:, 0] - self.xmin, self.xmax - p[:, 0], p[:, 1] - self.ymin, self.ymax - p[:, 1]],
            axis=0,
        )

    def boundary_residual(self, coords, tags):
        """Relative violation of each boundary node's boundary equation."""
        res = np.zeros(len(coords))
        scale = self.diameter
        x, y = coords[:, 0], coords[:, 1]
        res[tags == self.BOTTOM] = np.abs(y - self.ymin)[tags == self.BOTTOM]
        res[tags == self.TOP] = np.abs(y - self.ymax)[tags == self.TOP]
        res[tags == self.LEFT] = np.abs(x - self.xmin)[tags == self.LEFT]
        res[tags == self.RIGHT] = np.abs(x - self.xmax)[tags == self.RIGHT]
        c = tags == self.CORNER
        cx = np.where(np.abs(x - self.xmin) < np.abs(x - self.xmax), self.xmin, self.xmax)
        cy = np.where(np.abs(y - self.ymin) < np.abs(y - self.ymax), self.ymin, self.ymax)
        res[c] = np.hypot(x - cx, y - cy)[c]
        return res / scale

    def project(self, coords, tags):
        coords = np.array(coords, dtype=float, copy=True)
        coords[tags == self.BOTTOM, 1] = self.ymin
        coords[tags == self.TOP, 1] = self.ymax
        coords[tags == self.LEFT, 0] = self.xmin
        coords[tags == self.RIGHT, 0] = self.xmax
        c = tags == self.CORNER
        if c.any():
            x, y = coords[c, 0], coords[c, 1]
            coords[c, 0] = np.where(np.abs(x - self.xmin) < np.abs(x - self.xmax), self.xmin, self.xmax)
            coords[c, 1] = np.where(np.abs(y - self.ymin) < np.abs(y - self.ymax), self.ymin, self.ymax)
        return coords

    def constraints(self, coords, tags) -> list[BoundaryConstraint]:
        out = []
        for i in np.nonzero(tags != INTERIOR)[0]:
            t = tags[i]
            if t == self.BOTTOM:
                out.append(slide_x(i, self.ymin))
            elif t == self.TOP:
                out.append(slide_x(i, self.ymax))
            elif t == self.LEFT:
                out.append(slide_y(i, self.xmin))
            elif t == self.RIGHT:
                out.append(slide_y(i, self.xmax))
            else:
                out.append(fixed(i, coords[i]))
        return out

    def removable(self, tags):
        return tags != self.CORNER

    def midpoint_tag(self, ti, tj, mid):
        """Tag of nodes inserted at edge midpoints ``mid`` (edge end tags ti, tj).

        Boundary endpoints sit exactly on their sides, so a midpoint is on a
        side only when both endpoints are.
        """
        ti, tj = np.atleast_1d(ti), np.atleast_1d(tj)
        mid = np.asarray(mid).reshape(-1, 2)
        both = (ti != INTERIOR) & (tj != INTERIOR)
        tol = 1e-12 * self.diameter
        out = np.zeros(len(mid), dtype=np.int8)
        for tag, axis, value in (
            (self.BOTTOM, 1, self.ymin),
            (self.TOP, 1, self.ymax),
            (self.LEFT, 0, self.xmin),
            (self.RIGHT, 0, self.xmax),
        ):
            out[both & (np.abs(mid[:, axis] - value) <= tol)] = tag
        return out

    def corners(self):
        return np.array(
            [[self.xmin, self.ymin], [self.xmax, self.ymin], [self.xmax, self.ymax], [self.xmin, self.ymax]]
        )


class _Radial:
    """Shared behaviour of the annulus and the spherical shell."""

    INNER, OUTER = 1, 2
    tag_names = {0: "interior", 1: "inner", 2: "outer"}

    def __init__(self, r_inner, r_outer):
        if not (0 < r_inner < r_outer):
            raise ConfigError("need 0 < r_inner < r_outer")
        self.r_inner, self.r_outer = float(r_inner), float(r_outer)

    @property
    def diameter(self):
        return 2.0 * self.r_outer

    def contains(self, points, tol=0.0):
        r = np.linalg.norm(np.asarray(points).reshape(-1, self.dim), axis=1)
        t = tol * self.diameter
        return (r >= self.r_inner - t) & (r <= self.r_outer + t)

    def distance_to_boundary(self, points):
        r = np.linalg.norm(np.asarray(points).reshape(-1, self.dim), axis=1)
        return np.minimum(r - self.r_inner, self.r_outer - r)

    def radius_of(self, tags):
        return np.where(tags == self.INNER, self.r_inner, self.r_outer)

    def boundary_residual(self, coords, tags):
        res = np.zeros(len(coords))
        b = tags != INTERIOR
        r = np.linalg.norm(coords[b], axis=1)
        target = self.radius_of(tags[b])
        res[b] = np.abs(r - target) / target
        return res

    def project(self, coords, tags):
        """Radially rescale every boundary node onto its circle or sphere."""
        coords = np.array(coords, dtype=float, copy=True)
        b = tags != INTERIOR
        r = np.linalg.norm(coords[b], axis=1)
        if np.any(r == 0):
            raise SingularCoordinateError("cannot project a boundary node located at the origin")
        coords[b] *= (self.radius_of(tags[b]) / r)[:, None]
        return coords

    def removable(self, tags):
        return np.ones(len(tags), dtype=bool)

    def midpoint_tag(self, ti, tj, mid=None):
        ti, tj = np.atleast_1d(ti), np.atleast_1d(tj)
        return np.where((ti == tj) & (ti != INTERIOR), ti, INTERIOR).astype(np.int8)

    def _clamp_radius(self, r):
        tol = RADIUS_CLAMP * self.r_outer
        r = np.where((r < self.r_inner) & (r >= self.r_inner - tol), self.r_inner, r)
        return np.where((r > self.r_outer) & (r <= self.r_outer + tol), self.r_outer, r)


class Annulus(_Radial):
    """Cylindrical annulus; polar angle theta measured clockwise from +Y.

    ``theta_center`` fixes the branch cut of the guide coordinates at
    ``theta_center + pi`` so the refined region never straddles it.
    """

    dim = 2
    kind = "annulus"

    def __init__(self, r_inner, r_outer, theta_center=0.0):
        super().__init__(r_inner, r_outer)
        self.theta_center = float(theta_center)

    @property
    def guide_box(self):
        c = self.theta_center
        return np.array([[c - np.pi, c + np.pi], [self.r_inner, self.r_outer]])

    def to_guide(self, points, allow_axis=False):
        p = np.asarray(points, dtype=float).reshape(-1, 2)
        r = np.hypot(p[:, 0], p[:, 1])
        if np.any(r == 0):
            raise SingularCoordinateError(f"point {p[np.argmin(r)].tolist()} is at the polar origin")
        theta = _wrap(np.arctan2(p[:, 0], p[:, 1]), self.theta_center - np.pi)
        return np.column_stack([theta, self._clamp_radius(r)])

    def from_guide(self, u):
        u = np.asarray(u, dtype=float).reshape(-1, 2)
        return np.column_stack([u[:, 1] * np.sin(u[:, 0]), u[:, 1] * np.cos(u[:, 0])])

    def constraints(self, coords, tags):
        out = []
        b = np.nonzero(tags != INTERIOR)[0]
        theta = np.arctan2(coords[b, 0], coords[b, 1])
        # pin the tangential dof of the outer node farthest from the refined centre
        outer = tags[b] == self.OUTER
        far = np.abs(np.angle(np.exp(1j * (theta - self.theta_center))))
        pin = b[outer][np.argmax(far[outer])] if outer.any() else -1
        for i, th in zip(b, theta):
            out.append(slide_circle(i, th, self.radius_of(tags[i]), pin_tangent=(i == pin)))
        return out


class SphericalShell(_Radial):
    """Spherical shell; theta is colatitude from +Z, phi longitude from +X."""

    dim = 3
    kind = "shell"

    def __init__(self, r_inner, r_outer, theta_center=np.pi / 2, phi_center=0.0):
        super().__init__(r_inner, r_outer)
        self.theta_center = float(theta_center)
        self.phi_center = float(phi_center)

    @property
    def guide_box(self):
        c = self.phi_center
        return np.array([[0.0, np.pi], [c - np.pi, c + np.pi], [self.r_inner, self.r_outer]])

    def to_guide(self, points, allow_axis=False):
        """(theta, phi, r) of Cartesian points.

        Points on the polar axis have no longitude; they raise unless
        ``allow_axis`` is set, in which case phi is taken at the branch cut.
        """
        p = np.asarray(points, dtype=float).reshape(-1, 3)
        rho = np.hypot(p[:, 0], p[:, 1])
        r = np.hypot(rho, p[:, 2])
        if np.any(r == 0):
            raise SingularCoordinateError("point at the centre of the sphere")
        on_axis = rho <= 1e-14 * r
        if on_axis.any() and not allow_axis:
            raise SingularCoordinateError(
                f"point {p[np.argmax(on_axis)].tolist()} lies on the polar axis"
            )
        theta = np.arctan2(rho, p[:, 2])
        phi = _wrap(np.arctan2(p[:, 1], p[:, 0]), self.phi_center - np.pi)
        phi[on_axis] = self.phi_center - np.pi
        return np.column_stack([theta, phi, self._clamp_radius(r)])

    def from_guide(self, u):
        u = np.asarray(u, dtype=float).reshape(-1, 3)
        th, ph, r = u[:, 0], u[:, 1], u[:, 2]
        return np.column_stack([r * np.sin(th) * np.cos(ph), r * np.sin(th) * np.sin(ph), r * np.cos(th)])

    def centre_direction(self):
        return self.from_guide([[self.theta_center, self.phi_center, 1.0]])[0]

    def constraints(self, coords, tags):
        b = np.nonzero(tags != INTERIOR)[0]
        p = coords[b]
        theta = np.arctan2(np.hypot(p[:, 0], p[:, 1]), p[:, 2])
        phi = np.arctan2(p[:, 1], p[:, 0])
        outer = np.nonzero(tags[b] == self.OUTER)[0]
        pin_full, pin_axis = -1, None
        pin_tangent_node = -1
        if len(outer) >= 2:
            unit = p[outer] / np.linalg.norm(p[outer], axis=1)[:, None]
            # fully fix the outer node nearest the antipode of the refined centre
            a = outer[np.argmin(unit @ self.centre_direction())]
            ua = p[a] / np.linalg.norm(p[a])
            # second node roughly a quarter turn away kills the spin about OA
            cand = outer[outer != a]
            uc = p[cand] / np.linalg.norm(p[cand], axis=1)[:, None]
            bb = cand[np.argmin(np.abs(uc @ ua))]
            spin = np.cross(ua, p[bb])
            th, ph = theta[bb], phi[bb]
            e_theta = np.array([np.cos(ph) * np.cos(th), np.sin(ph) * np.cos(th), -np.sin(th)])
            e_phi = np.array([-np.sin(ph), np.cos(ph), 0.0])
            pin_axis = 0 if abs(spin @ e_theta) >= abs(spin @ e_phi) else 1
            pin_full, pin_tangent_node = b[a], b[bb]
        out = []
        for k, i in enumerate(b):
            pin = ()
            if i == pin_full:
                pin = (0, 1)
            elif i == pin_tangent_node:
                pin = (pin_axis,)
            out.append(slide_sphere(i, theta[k], phi[k], self.radius_of(tags[i]), pin=pin))
        return out
