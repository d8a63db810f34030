"""Command-line driver reproducing the benchmark studies.

Subcommands: converge, well, annulus, sweep, mesh-info.  A JSON config file
mirrors the flags with identical key names ("lambda" for the form parameter);
explicit flags override config values.  Exit codes: 0 on full success, 1 on a
config parse error, 2 when any level failed to converge.

Outputs are deterministic: identical configs produce byte-identical CSV files
(ordered assembly, fixed seeds).  The environment variable LDG_THREADS caps
the BLAS thread pool used by the sparse solvers.
"""

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from .analysis import (
    ConvergenceTable,
    ErrorRecord,
    annulus_study,
    epsilon_sweep,
    polynomial_study,
    well_study,
)
from .mesh import build_annulus_mesh, build_square_mesh, refine_uniform
from .problems import WELL_STATES
from .solver import NewtonConfig

__all__ = [
    "RunConfig",
    "ConfigError",
    "run_study",
    "export_csv",
    "read_csv",
    "export_vtk",
    "main",
]

CSV_HEADER = "h,dofs,err_dg,order_dg,err_l2,order_l2,energy,newton_iters,eps,k"


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    """One study configuration; serializable to/from the JSON config file."""

    problem: str
    k: int = 1
    eps: object = None  # float, or list of floats for sweep
    sigma: float = None  # defaults to 10 k^2 at run time
    lam: int = -1
    penalty: str = "local"
    levels: int = 4
    n: int = None  # square subdivisions / annulus segments
    state: str = None
    out: str = "."
    warmstart: bool = False
    tol_dg: float = 1e-10
    tol_res: float = 1e-10
    max_iter: int = 50
    seed: int = 0

    def to_dict(self):
        d = {}
        for f in fields(self):
            if f.name.startswith("_"):
                continue
            key = "lambda" if f.name == "lam" else f.name
            d[key] = getattr(self, f.name)
        return d

    @classmethod
    def from_dict(cls, data):
        known = {("lambda" if f.name == "lam" else f.name): f.name
                 for f in fields(cls) if not f.name.startswith("_")}
        unknown = set(data) - set(known)
        if unknown:
            raise ConfigError(f"unknown config field(s): {', '.join(sorted(unknown))}")
        if "problem" not in data:
            raise ConfigError("config field 'problem' is required")
        kwargs = {known[k]: v for k, v in data.items()}
        cfg = cls(**kwargs)
        cfg.validate()
        return cfg

    def validate(self):
        if self.k not in (1, 2, 3):
            raise ConfigError("field 'k' must be 1, 2 or 3")
        if self.lam not in (-1, 0, 1):
            raise ConfigError("field 'lambda' must be -1, 0 or 1")
        if self.penalty not in ("local", "global"):
            raise ConfigError("field 'penalty' must be 'local' or 'global'")
        if self.levels < 1:
            raise ConfigError("field 'levels' must be at least 1")
        if self.state is not None and self.state not in WELL_STATES:
            raise ConfigError(f"field 'state' must be one of {sorted(WELL_STATES)}")
        return self


# -- exporters ----------------------------------------------------------------


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def export_csv(table, path):
    """Write a convergence table; order columns are blank on the anchor
    row (the printed tables' '-' convention), error columns blank where
    undefined."""
    if not table.records:
        raise ValueError("refusing to export an empty table")
    lines = [CSV_HEADER]
    for rec, odg, ol2 in zip(table.records, table.orders_dg, table.orders_l2):
        lines.append(
            ",".join(
                [
                    _fmt(rec.h),
                    _fmt(rec.dofs),
                    _fmt(rec.err_dg),
                    _fmt(odg),
                    _fmt(rec.err_l2),
                    _fmt(ol2),
                    _fmt(rec.energy),
                    _fmt(rec.newton_iters),
                    _fmt(rec.eps),
                    _fmt(rec.k),
                ]
            )
        )
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


def read_csv(path):
    """Read a table written by :func:`export_csv`."""
    with open(path) as f:
        lines = [ln for ln in f.read().splitlines() if ln]
    if lines[0] != CSV_HEADER:
        raise ValueError(f"unexpected CSV header in {path}")
    records, odg, ol2 = [], [], []
    for ln in lines[1:]:
        c = ln.split(",")
        opt = lambda s: float(s) if s else None
        records.append(
            ErrorRecord(
                h=float(c[0]),
                dofs=int(c[1]),
                err_dg=opt(c[2]),
                err_l2=opt(c[4]),
                energy=opt(c[6]),
                newton_iters=int(c[7]),
                eps=float(c[8]),
                k=int(c[9]),
            )
        )
        odg.append(opt(c[3]))
        ol2.append(opt(c[5]))
    return ConvergenceTable(records, odg, ol2)


def export_vtk(space, Z, path):
    """Legacy ASCII unstructured-grid export with per-triangle duplicated
    corner points, so inter-element discontinuities survive.

    Point data: the components u and v, the scalar order parameter
    s = sqrt(u^2 + v^2) and the director angle theta = arg(u + i v)/2 on
    the principal branch (-pi/2, pi/2]."""
    if Z.components != 2:
        raise ValueError("VTK export expects a 2-component field")
    mesh = space.mesh
    ntri = mesh.num_triangles
    corners = mesh.vertices[mesh.triangles].reshape(-1, 2)
    u = Z.component(0)[:, :3].ravel()
    v = Z.component(1)[:, :3].ravel()
    s = np.hypot(u, v)
    theta = 0.5 * np.arctan2(v, u)

    lines = [
        "# vtk DataFile Version 3.0",
        "ldg field export",
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {3 * ntri} double",
    ]
    lines += [f"{float(p[0])!r} {float(p[1])!r} 0.0" for p in corners]
    lines.append(f"CELLS {ntri} {4 * ntri}")
    lines += [f"3 {3 * t} {3 * t + 1} {3 * t + 2}" for t in range(ntri)]
    lines.append(f"CELL_TYPES {ntri}")
    lines += ["5"] * ntri
    lines.append(f"POINT_DATA {3 * ntri}")
    for name, arr in (("u", u), ("v", v), ("s", s), ("theta", theta)):
        lines.append(f"SCALARS {name} double 1")
        lines.append("LOOKUP_TABLE default")
        lines += [repr(float(val)) for val in arr]
    with open(path, "w") as f:
        f.write("\n".join(lines) + "\n")


# -- study driver --------------------------------------------------------------


def _newton_cfg(cfg):
    return NewtonConfig(tol_dg=cfg.tol_dg, tol_res=cfg.tol_res, max_iter=cfg.max_iter)


def run_study(cfg):
    """Execute one configuration: per level assemble, compute the initial
    guess, Newton-solve, measure errors and orders; write CSV and VTK into
    cfg.out.  Returns (tables, exit_code): a dict of name -> table and 0 on
    full success or 2 if any level failed to converge."""
    cfg.validate()
    os.makedirs(cfg.out, exist_ok=True)
    ncfg = _newton_cfg(cfg)
    common = dict(sigma=cfg.sigma, lam=cfg.lam, penalty_scaling=cfg.penalty,
                  newton_cfg=ncfg)
    tables = {}

    name = cfg.problem
    state = cfg.state
    if name.startswith("well:"):
        name, state = "well", name.split(":", 1)[1]

    if name == "polynomial":
        if cfg.eps is None:
            raise ConfigError("field 'eps' is required for the polynomial study")
        res = polynomial_study(cfg.eps, cfg.k, cfg.levels, n0=cfg.n or 4,
                               warmstart=cfg.warmstart, strict=False, **common)
        tables["polynomial"] = res.table
        _export_study(cfg, "polynomial", res)
    elif name == "well":
        if cfg.eps is None:
            raise ConfigError("field 'eps' is required for the well study")
        state = state or "D1"
        if state not in WELL_STATES:
            raise ConfigError(f"unknown well state {state!r}")
        out = well_study(cfg.eps, cfg.k, cfg.levels, n0=cfg.n or 16,
                         states=(state,), warmstart=cfg.warmstart, strict=False,
                         **common)
        res = out[state]
        tables[f"well_{state}"] = res.table
        _export_study(cfg, f"well_{state}", res)
    elif name == "annulus":
        res = annulus_study(cfg.k, cfg.levels, n_seg=cfg.n or 32,
                            warmstart=cfg.warmstart, strict=False, **common)
        tables["annulus"] = res.table
        _export_study(cfg, "annulus", res)
    elif name == "sweep":
        eps_values = cfg.eps if isinstance(cfg.eps, (list, tuple)) else [cfg.eps]
        if not eps_values or any(e is None for e in eps_values):
            raise ConfigError("field 'eps' must list the sweep values")
        sweep = epsilon_sweep(eps_values, cfg.levels, k=cfg.k, n0=cfg.n or 4,
                              sigma=cfg.sigma, lam=cfg.lam,
                              penalty_scaling=cfg.penalty, newton_cfg=ncfg)
        for eps, table in sweep.items():
            key = f"sweep_eps{eps:g}"
            tables[key] = table
            export_csv(table, os.path.join(cfg.out, f"{key}_k{cfg.k}.csv"))
    else:
        raise ConfigError(f"unknown problem {cfg.problem!r}")

    ok = all(rec.converged for t in tables.values() for rec in t.records)
    return tables, (0 if ok else 2)


def _export_study(cfg, name, res):
    export_csv(res.table, os.path.join(cfg.out, f"{name}_k{cfg.k}.csv"))
    for i, (space, sol) in enumerate(zip(res.spaces, res.solutions)):
        if sol is not None:
            export_vtk(space, sol, os.path.join(cfg.out, f"{name}_k{cfg.k}_L{i}.vtk"))


def _mesh_info(cfg):
    if cfg.problem == "annulus":
        mesh = build_annulus_mesh(0.5, 1.0, cfg.n or 32)
    else:
        mesh = build_square_mesh(cfg.n or 4)
    for level in range(cfg.levels):
        if level:
            mesh = refine_uniform(mesh)
        ni = int(mesh.edge_is_interior.sum())
        nb = mesh.num_edges - ni
        print(
            f"level {level}: V={mesh.num_vertices} T={mesh.num_triangles} "
            f"E={mesh.num_edges} (interior {ni}, boundary {nb}) "
            f"h={mesh.h:.6g} euler={mesh.euler_characteristic()}"
        )
    return 0


# -- argument handling ----------------------------------------------------------


def _parser():
    p = argparse.ArgumentParser(prog="ldg", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for cmd in ("converge", "well", "annulus", "sweep", "mesh-info"):
        q = sub.add_parser(cmd)
        q.add_argument("--problem", type=str, default=None)
        q.add_argument("--k", type=int, choices=(1, 2, 3), default=None)
        q.add_argument("--eps", type=str, default=None,
                       help="float, or comma-separated list for sweep")
        q.add_argument("--sigma", type=float, default=None)
        q.add_argument("--lambda", dest="lam", type=int, choices=(-1, 0, 1),
                       default=None)
        q.add_argument("--penalty", choices=("local", "global"), default=None)
        q.add_argument("--levels", type=int, default=None)
        q.add_argument("--n", type=int, default=None)
        q.add_argument("--state", choices=sorted(WELL_STATES), default=None)
        q.add_argument("--out", type=str, default=None)
        q.add_argument("--config", type=str, default=None)
        q.add_argument("--warmstart", action="store_true", default=None)
        q.add_argument("--tol-dg", dest="tol_dg", type=float, default=None)
        q.add_argument("--tol-res", dest="tol_res", type=float, default=None)
        q.add_argument("--max-iter", dest="max_iter", type=int, default=None)
        q.add_argument("--seed", type=int, default=None)
    return p


def _parse_eps(text):
    if text is None:
        return None
    parts = [t for t in text.split(",") if t]
    vals = [float(t) for t in parts]
    return vals if len(vals) > 1 else vals[0]


def _limit_threads():
    cap = os.environ.get("LDG_THREADS")
    if not cap:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(int(cap))
    except Exception:
        pass


def _build_config(args):
    data = {}
    if args.config:
        try:
            with open(args.config) as f:
                data = json.load(f)
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config parse error at line {exc.lineno} column {exc.colno}: {exc.msg}"
            ) from exc
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")

    overrides = {
        ("lambda" if k == "lam" else k): v
        for k, v in vars(args).items()
        if k not in ("command", "config") and v is not None
    }
    if "eps" in overrides:
        overrides["eps"] = _parse_eps(overrides["eps"])
    data = {**data, **overrides}

    defaults = {
        "converge": {},
        "well": {"problem": "well"},
        "annulus": {"problem": "annulus"},
        "sweep": {"problem": "sweep"},
        "mesh-info": {"problem": "square", "levels": 1},
    }[args.command]
    for k, v in defaults.items():
        data.setdefault(k, v)
    if args.command == "mesh-info":
        return RunConfig(**{("lam" if k == "lambda" else k): v for k, v in data.items()})
    return RunConfig.from_dict(data)


def main(argv=None):
    _limit_threads()
    args = _parser().parse_args(argv)
    try:
        cfg = _build_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.command == "mesh-info":
        return _mesh_info(cfg)
    try:
        tables, code = run_study(cfg)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for name, table in tables.items():
        print(f"# {name}")
        print(CSV_HEADER)
        for rec, odg, ol2 in zip(table.records, table.orders_dg, table.orders_l2):
            cells = [
                f"{rec.h:.4f}",
                str(rec.dofs),
                "" if rec.err_dg is None else f"{rec.err_dg:.8e}",
                "" if odg is None else f"{odg:.4f}",
                "" if rec.err_l2 is None else f"{rec.err_l2:.8e}",
                "" if ol2 is None else f"{ol2:.4f}",
                "" if rec.energy is None else f"{rec.energy:.8f}",
                str(rec.newton_iters),
                f"{rec.eps:g}",
                str(rec.k),
            ]
            print(",".join(cells))
    return code


if __name__ == "__main__":
    sys.exit(main())
