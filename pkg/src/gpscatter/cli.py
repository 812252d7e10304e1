"""Command-line front end.

Every command prints deterministic JSON; wall-clock time appears only under
``meta.timing``. Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .energies import EnergyError
from .evolution import EvolutionError
from .field import FieldError, GPField, load_field
from .grid import GridError, SampledFunction, make_grid, write_field_file
from .metric import MetricError
from .miura import MiuraError
from .scattering import ScatteringError

NUMERICAL_ERRORS = (ScatteringError, EnergyError, EvolutionError, MiuraError, MetricError, FloatingPointError)
USAGE_ERRORS = (FieldError, GridError, ValueError, KeyError, OSError)


@dataclass
class RunConfig:
    command: str
    init: str | None = None
    equation: str | None = None
    dt: float = 1e-3
    t_final: float = 1.0
    snaps: int = 1
    out: str | None = None
    order: int = 2
    observables: tuple = ()
    tau_grid: tuple | None = None
    xi_grid: tuple | None = None
    eigen: bool = False
    s: float | None = None
    tau: float | None = None
    lmax: int = 1
    a: str | None = None
    b: str | None = None
    suite: str | None = None
    grid: tuple = (40.0, 1024)
    threads: int | None = None


def _range_spec(text: str) -> tuple:
    """``a:b:n`` -> (a, b, n) with ``n >= 1``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected a:b:n, got {text!r}")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"malformed range {text!r}") from exc
    if n < 1 or not (math.isfinite(a) and math.isfinite(b)):
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return a, b, n


def _grid_spec(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected L:n, got {text!r}")
    try:
        return float(parts[0]), int(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"malformed grid {text!r}") from exc


def _positive(kind):
    def conv(text):
        try:
            v = kind(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(f"malformed number {text!r}") from exc
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{text!r} must be positive")
        return v

    return conv


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpscatter", description="Scattering, energies and flows of GP fields.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=_positive(int), default=None)
    common.add_argument("--grid", type=_grid_spec, default=(40.0, 1024), help="L:n for presets")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", parents=[common], help="evolve a field")
    p.add_argument("--eq", dest="equation", choices=("gp", "mkdv", "kdv6"), required=True)
    p.add_argument("--init", required=True)
    p.add_argument("--dt", type=_positive(float), default=1e-3)
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--snap", dest="snaps", type=_positive(int), default=1, help="number of snapshot intervals")
    p.add_argument("--out", default=None)
    p.add_argument("--order", type=int, choices=(2, 4), default=2)
    p.add_argument("--observables", default="", help="comma-separated drift observables")

    p = sub.add_parser("scatter", parents=[common], help="scattering data")
    p.add_argument("--init", required=True)
    p.add_argument("--tau-grid", type=_range_spec, default=None)
    p.add_argument("--xi-grid", type=_range_spec, default=None)
    p.add_argument("--eigen", action="store_true")

    p = sub.add_parser("energies", parents=[common], help="energy report")
    p.add_argument("--init", required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--tau", type=float, default=4.0)
    p.add_argument("--lmax", type=int, default=1)

    p = sub.add_parser("metric", parents=[common], help="energy-space distance")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--s", type=float, required=True)

    p = sub.add_parser("miura-check", parents=[common], help="mKdV/KdV6 correspondence")
    p.add_argument("--init", required=True)
    p.add_argument("--t-final", type=float, default=0.5)
    p.add_argument("--dt", type=_positive(float), default=1e-3)

    p = sub.add_parser("verify", parents=[common], help="run the acceptance suite")
    p.add_argument("--suite", choices=("fast", "full"), default="fast")
    return parser


VALUE_FLAGS = ("--init", "--a", "--b", "--tau-grid", "--xi-grid", "--grid")


def _attach_values(argv: list[str]) -> list[str]:
    """Glue ``--flag -value`` into ``--flag=-value`` so negated presets and ranges parse."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-") and not argv[i + 1].startswith("--"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def parse_args(argv: list[str]) -> RunConfig:
    """Validated configuration; usage errors exit with status 2."""
    parser = build_parser()
    ns = parser.parse_args(_attach_values(list(argv)))
    values = vars(ns)
    cmd = values.pop("command")
    if cmd == "energies":
        if not values["s"] > 0.5:
            parser.error("s must exceed 1/2 for the energies")
        if not values["tau"] >= 2:
            parser.error("tau must be >= 2")
        if values["lmax"] < 0:
            parser.error("lmax must be >= 0")
    if cmd == "metric" and not values["s"] >= 0:
        parser.error("s must be non-negative for the metric")
    if cmd in ("simulate", "miura-check") and not values["t_final"] >= 0:
        parser.error("t-final must be non-negative")
    if cmd == "scatter":
        tg = values.get("tau_grid")
        if tg and min(tg[0], tg[1]) < 2:
            parser.error("tau grid must lie in [2, inf)")
    if "observables" in values:
        values["observables"] = tuple(o for o in values["observables"].split(",") if o)
    cfg = RunConfig(command=cmd)
    for key, val in values.items():
        if not hasattr(cfg, key):
            parser.error(f"unknown option {key}")
        setattr(cfg, key, val)
    return cfg


# --- commands --------------------------------------------------------------------------

def _field(cfg: RunConfig, spec: str) -> GPField:
    length, n = cfg.grid
    return load_field(spec, make_grid(length, n, -length / 2))


def _linspace(spec) -> list[float]:
    a, b, n = spec
    return np.linspace(a, b, n).tolist()


def _c(z) -> dict:
    z = complex(z)
    return dict(re=z.real, im=z.imag)


def cmd_simulate(cfg: RunConfig) -> dict:
    from . import evolution as ev
    from .miura import miura_map

    q0 = _field(cfg, cfg.init)
    if cfg.equation == "gp":
        tr = ev.evolve_gp(q0, cfg.dt, cfg.t_final, cfg.snaps, order=cfg.order)
        names = cfg.observables or ("mass", "momentum", "gl_energy")
    elif cfg.equation == "mkdv":
        tr = ev.evolve_mkdv(q0, cfg.dt, cfg.t_final, cfg.snaps)
        names = cfg.observables or ("mass", "momentum", "gl_energy")
    else:
        u0 = miura_map(q0)
        tr = ev.evolve_kdv6(u0, cfg.dt, cfg.t_final, cfg.snaps)
        names = None
    if names is None:
        dx = u0.grid.dx
        funcs = {"integral_u": lambda u: dx * float(np.sum(u.values)),
                 "integral_u2": lambda u: dx * float(np.sum(u.values**2))}
        table = ev.conservation_monitor(tr, funcs)
    else:
        table = ev.conservation_monitor(tr, list(names))
    files = []
    if cfg.out:
        out = Path(cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        for i, state in enumerate(tr.states):
            samples = state.samples if isinstance(state, GPField) else state
            path = out / f"snapshot_{i:04d}.txt"
            write_field_file(path, SampledFunction(samples.grid, np.asarray(samples.values, dtype=complex)))
            files.append(path.name)
        (out / "drift.csv").write_text(table.to_csv())
    meta = {k: v for k, v in tr.meta.items() if isinstance(v, (int, float, str, bool))}
    return dict(equation=tr.equation, steps=tr.steps, dt=tr.dt, times=list(tr.times),
                max_drift=table.max_drift, snapshots=files, scheme=meta)


def cmd_scatter(cfg: RunConfig) -> dict:
    from . import scattering as sc

    q = _field(cfg, cfg.init)
    taus = _linspace(cfg.tau_grid) if cfg.tau_grid else []
    xis = _linspace(cfg.xi_grid) if cfg.xi_grid else []
    data = sc.scattering_data(q, taus, xis, eigen=cfg.eigen, threads=cfg.threads)
    return dict(
        cut=[dict(xi=xi, re=p.real, im=p.imag, re_minus=m.real, im_minus=m.imag) for xi, p, m in data.cut],
        imag_axis=[dict(tau=t, re_log=lt.real, im_log=lt.imag) for t, lt in data.imag_axis],
        eigenvalues=[dict(**{"lambda": e.lam}, z_im=e.z.imag) for e in data.eigenvalues],
        diagnostics=data.diagnostics,
    )


def cmd_energies(cfg: RunConfig) -> dict:
    from .energies import energy_report

    q = _field(cfg, cfg.init)
    return energy_report(q, cfg.s, cfg.tau, lmax=cfg.lmax, threads=cfg.threads)


def cmd_metric(cfg: RunConfig) -> dict:
    from .metric import metric_distance

    res = metric_distance(_field(cfg, cfg.a), _field(cfg, cfg.b), cfg.s, threads=cfg.threads)
    return dict(distance=res.distance, tail_estimate=res.tail_estimate, y_nodes=res.y_nodes)


def cmd_miura_check(cfg: RunConfig) -> dict:
    from .miura import as_real, mkdv_kdv_correspondence

    q = _field(cfg, cfg.init)
    return mkdv_kdv_correspondence(as_real(q), cfg.t_final, dt=cfg.dt)


def run_verify(suite: str) -> tuple[int, list[dict]]:
    """Run an acceptance suite; exit status 0 iff every criterion passes."""
    from .acceptance import run_suite

    results = run_suite(suite)
    report = [r.to_json() for r in results]
    return (0 if all(r.passed for r in results) else 1), report


COMMANDS = {
    "simulate": cmd_simulate,
    "scatter": cmd_scatter,
    "energies": cmd_energies,
    "metric": cmd_metric,
    "miura-check": cmd_miura_check,
}


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.generic,)):
        obj = obj.item()
    if isinstance(obj, complex):
        return _clean(_c(obj))
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if cfg.threads is not None:
        os.environ["GPSCATTER_THREADS"] = str(cfg.threads)
    t0 = time.perf_counter()
    try:
        if cfg.command == "verify":
            status, report = run_verify(cfg.suite)
            for entry in report:
                print(dumps(entry))
            return status
        result = COMMANDS[cfg.command](cfg)
    except NUMERICAL_ERRORS as exc:
        print(dumps(dict(error=type(exc).__name__, message=str(exc))), file=sys.stderr)
        return 1
    except USAGE_ERRORS as exc:
        print(dumps(dict(error=type(exc).__name__, message=str(exc))), file=sys.stderr)
        return 2
    result = dict(result=result, config=asdict(cfg), meta=dict(timing=time.perf_counter() - t0))
    print(dumps(result))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
