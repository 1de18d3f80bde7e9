"""Mesh-generation parameters (lengths in km, angles in radians)."""
from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass

from .domain import Annulus, Rectangle, SphericalShell
from .errors import ConfigError

logger = logging.getLogger(__name__)

KINDS = ("rectangle", "annulus", "shell")

# default tolerances (q_t, q_mean_t, mu_t) per domain kind
DEFAULT_TOLERANCES = {
    "rectangle": (0.45, 0.89, 0.025),
    "annulus": (0.30, 0.93, 0.04),
    "shell": (0.23, 0.86, 0.11),
}


@dataclass
class Table1Params:
    kind: str
    l0r: float
    l0c: float
    d_r: float
    l_r: float
    d_t: float
    l_t: float
    w_r: float = 0.0
    w_t: float = 0.0
    # rectangle
    depth: float = 0.0
    length: float = 0.0
    x0: float = 0.0
    z0: float = 0.0
    # annulus / shell
    r_inner: float = 0.0
    r_outer: float = 0.0
    theta0: float = math.pi / 2
    phi0: float = math.pi / 2
    r0: float = 0.0
    # tolerances; None means the per-kind default
    q_t: float = None
    q_mean_t: float = None
    mu_t: float = None
    q_bad: float = 0.25
    # springs get k = l0**-stiffness_power; 0 gives unit stiffness
    stiffness_power: float = 2.0
    # largest node move per solve, in local l0, before the solve is damped
    max_step: float = 20.0
    max_iterations: int = 30
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown domain kind {self.kind!r}", key="domain")
        defaults = DEFAULT_TOLERANCES[self.kind]
        for name, value in zip(("q_t", "q_mean_t", "mu_t"), defaults):
            if getattr(self, name) is None:
                setattr(self, name, value)
        if self.kind != "rectangle" and not self.r0:
            self.r0 = self.r_outer

    @property
    def dim(self):
        return 3 if self.kind == "shell" else 2

    def validate(self):
        if self.l0r <= 0 or self.l0c <= 0:
            raise ConfigError("desired lengths must be positive", key="l0r" if self.l0r <= 0 else "l0c")
        if self.l0r > self.l0c:
            raise ConfigError("l0r must not exceed l0c (keys 'l0r', 'l0c')", key="l0r")
        for name in ("q_t", "q_mean_t", "mu_t"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ConfigError(f"{name} must lie in (0, 1)", key=name)
        if not 0.2 <= self.q_bad <= 0.3:
            raise ConfigError("q_bad must lie in [0.2, 0.3]", key="q_bad")
        if self.max_step <= 0:
            raise ConfigError("max_step must be positive", key="max_step")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be positive", key="max_iterations")
        for inner, outer in (("d_r", "d_t"), ("l_r", "l_t"), ("w_r", "w_t")):
            if getattr(self, inner) > getattr(self, outer):
                raise ConfigError(f"{inner} exceeds {outer}; regions must be nested", key=inner)
        if self.kind == "rectangle":
            if self.depth <= 0 or self.length <= 0:
                raise ConfigError("rectangle needs positive depth and length", key="depth")
        else:
            if not 0 < self.r_inner < self.r_outer:
                raise ConfigError("need 0 < r_inner < r_outer", key="r_inner")
            if self.kind == "shell":
                if self.w_r <= 0 or self.w_t <= 0:
                    raise ConfigError("shell regions need a width", key="w_r")
                polar = min(self.theta0, math.pi - self.theta0)
                if polar < math.radians(20):
                    logger.warning(
                        "refined region centre is %.1f deg from the polar axis; "
                        "l0 interpolation degrades near the axis", math.degrees(polar)
                    )
        # building the guide checks containment of the region boxes
        from .guide import build_guide

        build_guide(self.domain(), self)
        return self

    def domain(self):
        if self.kind == "rectangle":
            return Rectangle(-self.length / 2.0, self.length / 2.0, -self.depth, 0.0)
        if self.kind == "annulus":
            return Annulus(self.r_inner, self.r_outer, theta_center=self.theta0)
        return SphericalShell(self.r_inner, self.r_outer, theta_center=self.theta0, phi_center=self.phi0)

    def to_dict(self):
        return asdict(self)
