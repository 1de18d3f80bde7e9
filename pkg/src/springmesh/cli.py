"""Batch front end: config files, mesh/stat/plot writers and the ``springmesh`` command.

Config grammar: one ``key = value`` per line; ``#`` starts a comment; blank
lines are ignored; keys may appear once.  Lengths are km, angles degrees.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ConfigError, SpringMeshError, UnsupportedDimensionError
from .mesh import INTERIOR, Mesh, unique_edges
from .params import KINDS, Table1Params
from .quality import element_quality
from .workflow import FULL_SCALE, PRESETS, RunResult, preset_params, run

logger = logging.getLogger(__name__)

EXIT_CONVERGED, EXIT_ERROR, EXIT_MAX_ITER = 0, 1, 2
SEED_ENV = "SPRINGMESH_SEED"

# config key -> (Table1Params field, type); angles are converted separately
_PARAM_KEYS = {
    "domain": ("kind", str),
    "l0r": ("l0r", float),
    "l0c": ("l0c", float),
    "d_r": ("d_r", float),
    "l_r": ("l_r", float),
    "w_r": ("w_r", float),
    "d_t": ("d_t", float),
    "l_t": ("l_t", float),
    "w_t": ("w_t", float),
    "depth": ("depth", float),
    "length": ("length", float),
    "x0": ("x0", float),
    "z0": ("z0", float),
    "r_inner": ("r_inner", float),
    "r_outer": ("r_outer", float),
    "r0": ("r0", float),
    "q_t": ("q_t", float),
    "q_mean_t": ("q_mean_t", float),
    "mu_t": ("mu_t", float),
    "q_bad": ("q_bad", float),
    "max_iterations": ("max_iterations", int),
    "seed": ("seed", int),
    "stiffness_power": ("stiffness_power", float),
    "max_step": ("max_step", float),
}
_ANGLE_KEYS = {"theta0": "theta0", "phi0": "phi0"}
_OUTPUT_KEYS = {"out_dir": str, "write_vtk": bool, "write_stats": bool, "write_svg": bool, "verbosity": str}
VERBOSITY = ("debug", "info", "warning", "error")

REQUIRED = {
    "rectangle": ("domain", "l0r", "l0c", "d_r", "l_r", "d_t", "l_t", "depth", "length"),
    "annulus": ("domain", "l0r", "l0c", "d_r", "l_r", "d_t", "l_t", "r_inner", "r_outer"),
    "shell": ("domain", "l0r", "l0c", "d_r", "l_r", "w_r", "d_t", "l_t", "w_t", "r_inner", "r_outer"),
}


@dataclass
class RunConfig:
    """Parsed config: parameter values as written (angles in degrees) plus output options."""

    values: dict
    out_dir: str = "."
    write_vtk: bool = True
    write_stats: bool = True
    write_svg: bool = False
    verbosity: str = "info"
    source: str = field(default=None, compare=False)

    @property
    def kind(self):
        return self.values["domain"]

    @property
    def params(self) -> Table1Params:
        kw = {}
        for key, value in self.values.items():
            if key in _ANGLE_KEYS:
                kw[_ANGLE_KEYS[key]] = math.radians(value)
            else:
                kw[_PARAM_KEYS[key][0]] = value
        return Table1Params(**kw)


def _parse_bool(text, key, line):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}", key=key, line=line)


def _convert(key, text, line):
    if key in _PARAM_KEYS:
        typ = _PARAM_KEYS[key][1]
    elif key in _ANGLE_KEYS:
        typ = float
    else:
        typ = _OUTPUT_KEYS[key]
    if typ is bool:
        return _parse_bool(text, key, line)
    try:
        return typ(text)
    except ValueError:
        raise ConfigError(f"cannot read {text!r} as {typ.__name__}", key=key, line=line) from None


def parse_config_text(text, source=None) -> RunConfig:
    values, out, lines = {}, {}, {}
    for n, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"expected 'key = value', got {body!r}", line=n)
        key, value = (s.strip() for s in body.split("=", 1))
        if key not in _PARAM_KEYS and key not in _ANGLE_KEYS and key not in _OUTPUT_KEYS:
            raise ConfigError("unknown key", key=key, line=n)
        if key in lines:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", key=key, line=n)
        lines[key] = n
        v = _convert(key, value, n)
        if key == "verbosity" and v not in VERBOSITY:
            raise ConfigError(f"verbosity must be one of {', '.join(VERBOSITY)}", key=key, line=n)
        (out if key in _OUTPUT_KEYS else values)[key] = v
    kind = values.get("domain")
    if kind is None:
        raise ConfigError("missing required key", key="domain")
    if kind not in KINDS:
        raise ConfigError(f"domain must be one of {', '.join(KINDS)}", key="domain", line=lines["domain"])
    for key in REQUIRED[kind]:
        if key not in values:
            raise ConfigError("missing required key", key=key)
    cfg = RunConfig(values, source=source, **out)
    try:
        cfg.params.validate()
    except ConfigError as exc:
        # point at the config line of the offending key
        raise ConfigError(exc.reason, key=exc.key, line=lines.get(exc.key)) from None
    return cfg


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file {str(path)!r} not found")
    return parse_config_text(path.read_text(), source=str(path))


def write_config(cfg: RunConfig, path):
    lines = [f"# springmesh run configuration ({cfg.kind})"]
    for key, value in cfg.values.items():
        lines.append(f"{key} = {value!r}" if isinstance(value, float) else f"{key} = {value}")
    for f in fields(RunConfig):
        if f.name in _OUTPUT_KEYS:
            lines.append(f"{f.name} = {getattr(cfg, f.name)}")
    Path(path).write_text("\n".join(lines) + "\n")


def shipped_config(name) -> RunConfig:
    """One of the bundled full-scale configs: rect, annulus or shell."""
    ref = resources.files("springmesh") / "configs" / f"{name}.cfg"
    return parse_config_text(ref.read_text(), source=f"springmesh/configs/{name}.cfg")


# VTK ----------------------------------------------------------------------

_VTK_TYPES = {2: 5, 3: 10}


def write_vtk(mesh: Mesh, path, quality=None):
    """Legacy ASCII unstructured grid with point data ``boundary`` and cell data ``quality``."""
    q = element_quality(mesh) if quality is None else np.asarray(quality)
    nv = mesh.elements.shape[1]
    pts = np.zeros((mesh.n_nodes, 3))
    pts[:, : mesh.dim] = mesh.coords
    out = [
        "# vtk DataFile Version 3.0",
        "springmesh",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {mesh.n_nodes} double",
    ]
    out += [" ".join(repr(float(v)) for v in p) for p in pts]
    out.append(f"CELLS {mesh.n_elements} {mesh.n_elements * (nv + 1)}")
    out += [f"{nv} " + " ".join(str(int(i)) for i in el) for el in mesh.elements]
    out.append(f"CELL_TYPES {mesh.n_elements}")
    out += [str(_VTK_TYPES[mesh.dim])] * mesh.n_elements
    out += [f"POINT_DATA {mesh.n_nodes}", "SCALARS boundary int 1", "LOOKUP_TABLE default"]
    out += [str(int(b != INTERIOR)) for b in mesh.boundary]
    out += [f"CELL_DATA {mesh.n_elements}", "SCALARS quality double 1", "LOOKUP_TABLE default"]
    out += [repr(float(v)) for v in q]
    Path(path).write_text("\n".join(out) + "\n")


def read_vtk(path):
    """Read back a file from ``write_vtk``: (coords, elements, boundary 0/1, quality)."""
    tok = Path(path).read_text().split("\n")
    i = tok.index(next(t for t in tok if t.startswith("POINTS")))
    n = int(tok[i].split()[1])
    pts = np.array([[float(v) for v in t.split()] for t in tok[i + 1 : i + 1 + n]]).reshape(n, 3)
    i += 1 + n
    m = int(tok[i].split()[1])
    cells = np.array([[int(v) for v in t.split()[1:]] for t in tok[i + 1 : i + 1 + m]], dtype=np.int64)
    i += 1 + m
    types = {int(t) for t in tok[i + 1 : i + 1 + m]}
    dim = 2 if types == {5} else 3
    i += 1 + m
    boundary = np.array([int(t) for t in tok[i + 3 : i + 3 + n]], dtype=np.int8)
    i += 3 + n
    quality = np.array([float(t) for t in tok[i + 3 : i + 3 + m]])
    return pts[:, :dim], cells.reshape(m, dim + 1), boundary, quality


# stats and plots ----------------------------------------------------------

def stats_record(st) -> dict:
    keys = ("iteration", "q_min", "q_mean", "mu", "histogram", "region_counts", "nodes", "elements",
            "edits_added", "edits_removed")
    rec = {k: getattr(st, k) for k in keys}
    rec.update(st.extra)
    return rec


def write_stats(result: RunResult, path):
    params = result.params.to_dict() if result.params is not None else {}
    doc = {
        "seed": result.seed,
        "termination": result.termination,
        "params": params,
        "elapsed_s": round(result.elapsed, 3),
        "iterations": [stats_record(st) for st in result.stats],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


# piecewise-linear colour scale for q in [0, 1] (dark blue -> teal -> yellow)
_Q_COLOURS = np.array([[68, 1, 84], [59, 82, 139], [33, 145, 140], [94, 201, 98], [253, 231, 37]], dtype=float)


def q_colour(q):
    t = np.clip(q, 0.0, 1.0) * (len(_Q_COLOURS) - 1)
    k = np.minimum(t.astype(int), len(_Q_COLOURS) - 2)
    f = (t - k)[..., None]
    rgb = np.rint((1 - f) * _Q_COLOURS[k] + f * _Q_COLOURS[k + 1]).astype(int)
    return ["#%02x%02x%02x" % tuple(c) for c in np.atleast_2d(rgb)]


def write_svg_2d(mesh: Mesh, path, zoom=None, width=800):
    """Element edges over elements coloured by q.  ``zoom`` is (xmin, xmax, ymin, ymax)."""
    if mesh.dim != 2:
        raise UnsupportedDimensionError("SVG output is only available for 2-D meshes")
    q = element_quality(mesh)
    elements, coords = mesh.elements, mesh.coords
    if zoom is not None:
        x0, x1, y0, y1 = (float(v) for v in zoom)
        tri = coords[elements]
        hit = (
            (tri[:, :, 0].max(1) >= x0) & (tri[:, :, 0].min(1) <= x1)
            & (tri[:, :, 1].max(1) >= y0) & (tri[:, :, 1].min(1) <= y1)
        )
        elements, q = elements[hit], q[hit]
    else:
        (x0, y0), (x1, y1) = coords.min(axis=0), coords.max(axis=0)
    w = max(x1 - x0, 1e-300)
    h = max(y1 - y0, 1e-300)
    height = max(1, int(round(width * h / w)))
    sx = width / w
    edges = unique_edges(elements) if len(elements) else np.zeros((0, 2), dtype=np.int64)

    def xy(p):
        # y grows upwards in the mesh, downwards in SVG
        return (p[..., 0] - x0) * sx, (y1 - p[..., 1]) * sx

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">'
    ]
    if zoom is not None:
        out.append(f'<clipPath id="win"><rect x="0" y="0" width="{width}" height="{height}"/></clipPath>')
        out.append('<g clip-path="url(#win)">')
    else:
        out.append("<g>")
    colours = q_colour(q) if len(q) else []
    for el, c in zip(elements, colours):
        px, py = xy(coords[el])
        pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(px, py))
        out.append(f'<polygon points="{pts}" fill="{c}"/>')
    ax, ay = xy(coords[edges[:, 0]])
    bx, by = xy(coords[edges[:, 1]])
    for a, b, c, d in zip(ax, ay, bx, by):
        out.append(f'<line x1="{a:.3f}" y1="{b:.3f}" x2="{c:.3f}" y2="{d:.3f}" stroke="black" stroke-width="0.3"/>')
    out.append("</g>")
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


# command line ---------------------------------------------------------------

_SUBCOMMAND_CONFIG = {"rect": "rect", "annulus": "annulus", "sphere": "shell"}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="springmesh",
        description="Spring-relaxation mesh generator for a box, an annulus or a spherical shell.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (default: the bundled full-scale one)")
    common.add_argument("--seed", type=int, default=None, help=f"RNG seed (overrides ${SEED_ENV} and the config)")
    common.add_argument("--out-dir", default=None, help="directory for mesh.vtk, stats.json and mesh.svg")
    common.add_argument("--svg", action="store_true", help="also write an SVG plot (2-D only)")
    common.add_argument("--max-iter", type=int, default=None, help="cap on outer iterations")
    common.add_argument("--quiet", action="store_true", help="only report warnings and errors")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("rect", "rectangular box (2-D)"),
        ("annulus", "cylindrical annulus (2-D)"),
        ("sphere", "spherical shell (3-D)"),
    ):
        sub.add_parser(name, parents=[common], help=help_)
    p = sub.add_parser("preset", parents=[common], help="built-in parameter set")
    p.add_argument("name", choices=sorted(PRESETS) + sorted(FULL_SCALE))
    return parser


def _resolve_seed(flag, cfg_seed):
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV)
    if env is not None and env.strip():
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"${SEED_ENV} must be an integer, got {env!r}") from None
    return cfg_seed


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        if args.command == "preset":
            if args.config:
                raise ConfigError("--config cannot be combined with a preset")
            params = preset_params(args.name)
            cfg = RunConfig({}, out_dir=".")
        else:
            cfg = parse_config(args.config) if args.config else shipped_config(_SUBCOMMAND_CONFIG[args.command])
            want = _SUBCOMMAND_CONFIG[args.command].replace("rect", "rectangle")
            if cfg.kind != want:
                raise ConfigError(f"'{args.command}' needs domain = {want}, config has {cfg.kind}", key="domain")
            params = cfg.params
        if not args.quiet:
            logging.getLogger().setLevel(cfg.verbosity.upper())
        if args.max_iter is not None:
            params.max_iterations = args.max_iter
        params.seed = _resolve_seed(args.seed, params.seed)
        out_dir = Path(args.out_dir or cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        result = run(params)
        if cfg.write_vtk:
            write_vtk(result.mesh, out_dir / "mesh.vtk")
        if cfg.write_stats:
            write_stats(result, out_dir / "stats.json")
        if (args.svg or cfg.write_svg) and result.mesh.dim == 2:
            write_svg_2d(result.mesh, out_dir / "mesh.svg")
        elif args.svg:
            logger.warning("--svg ignored: plots are only drawn for 2-D meshes")
    except (SpringMeshError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_ERROR
    st = result.final
    logger.info(
        "%s after %d iterations: %d nodes, %d elements, q_min %.3f, q_mean %.3f",
        result.termination, result.iterations, st.nodes, st.elements, st.q_min, st.q_mean,
    )
    return EXIT_CONVERGED if result.converged else EXIT_MAX_ITER


if __name__ == "__main__":
    sys.exit(main())
