"""Command-line front end.

    cnlslab solve --dim 2 --repulsive --psi0 0.7 --out-dir out/
    cnlslab sweep --dim 2 --attractive --grid 0.65,0.75,1,3,5 --jobs 4
    cnlslab sweep --preset fig3
    cnlslab criterion --dim 2 --repulsive --psi0 0.7
    cnlslab qualify

A ``--config`` file holds ``key = value`` lines using the long flag names
(``dim``, ``interaction``, ``psi0``, ``dpsi0``, ``xmax``, ``rtol``, ``atol``,
``project``, ``potential``, ``grid``, ``preset``, ``jobs``, ``out_dir``); command-line
flags override it. Exit codes: 0 success, 2 usage error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import functools
import io
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Callable, Optional, Sequence

from .analysis import ClassificationReport, Label, classify
from .cnls import PSI_PLUS, BoundaryCondition, EquationSpec, Interaction
from .export import (
    _fmt,
    write_criterion_csv,
    write_events_json,
    write_report_json,
    write_trace_csv,
)
from .integrate import IntegratorConfig, integrate

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

#: Boundary values from the figure captions (``psi'(0) = 0``, ``N = 2``).
PRESETS = {
    "fig1": ("repulsive", (0.7, PSI_PLUS, 0.71)),
    "fig2": ("attractive", (0.65, PSI_PLUS, 0.75)),
    "fig3": ("attractive", (1.0, 3.0, 5.0)),
}

_DEFAULT_CFG = IntegratorConfig()


class UsageError(Exception):
    pass


# potentials are module-level so sweep rows can be sent to worker processes
def _constant_potential(v0: float, x: float) -> float:
    return v0


def _harmonic_potential(omega: float, x: float) -> float:
    return omega * omega * x * x


def parse_potential(text: Optional[str]) -> Optional[Callable[[float], float]]:
    """``none``, ``constant:<v0>`` or ``harmonic:<omega>``."""
    if text is None or text.strip().lower() in ("", "none"):
        return None
    name, _, arg = text.partition(":")
    try:
        value = float(arg)
    except ValueError:
        raise UsageError(f"potential {text!r}: expected <name>:<number>") from None
    if name == "constant":
        return functools.partial(_constant_potential, value)
    if name == "harmonic":
        return functools.partial(_harmonic_potential, value)
    raise UsageError(f"unknown potential preset {name!r}")


@dataclass
class RunConfig:
    dim: int = 2
    interaction: str = "repulsive"
    psi0: Optional[float] = None
    dpsi0: float = 0.0
    xmax: float = _DEFAULT_CFG.x_max
    rtol: float = _DEFAULT_CFG.rel_tol
    atol: float = _DEFAULT_CFG.abs_tol
    project: bool = _DEFAULT_CFG.project_invariant
    potential: str = "none"
    grid: Optional[list] = None
    preset: Optional[str] = None
    jobs: int = 1
    out_dir: str = "."
    trace_csv: str = "trace.csv"
    events_json: str = "events.json"
    report_json: str = "report.json"
    criterion_csv: str = "criterion.csv"
    sweep_csv: str = "sweep.csv"

    def equation(self) -> EquationSpec:
        try:
            return EquationSpec(self.dim, Interaction(self.interaction),
                                potential=parse_potential(self.potential))
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def integrator(self) -> IntegratorConfig:
        try:
            return IntegratorConfig(rel_tol=self.rtol, abs_tol=self.atol, x_max=self.xmax,
                                    project_invariant=self.project)
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def boundary(self, psi0: Optional[float] = None) -> BoundaryCondition:
        psi0 = self.psi0 if psi0 is None else psi0
        if psi0 is None:
            raise UsageError("psi0 is required")
        try:
            bc = BoundaryCondition(psi0, self.dpsi0)
            bc.check(self.equation())
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return bc


_CONVERTERS = {
    "dim": int, "psi0": float, "dpsi0": float, "xmax": float, "rtol": float,
    "atol": float, "jobs": int, "project": lambda s: _parse_bool(s),
    "grid": lambda s: _parse_grid(s),
}


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1", "on"):
        return True
    if t in ("false", "no", "0", "off"):
        return False
    raise ValueError(text)


def _parse_grid(text: str) -> list:
    text = text.strip()
    if not text:
        return []
    try:
        return [float(v) for v in text.replace(";", ",").split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


def read_config_file(path) -> dict:
    """Flat ``key = value`` document; ``#`` starts a comment; unknown keys rejected."""
    known = {f.name for f in fields(RunConfig)}
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep:
            raise UsageError(f"{path}:{n}: expected key = value")
        if key not in known:
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        value = value.strip()
        try:
            out[key] = _CONVERTERS.get(key, str)(value)
        except ValueError:
            raise UsageError(f"{path}:{n}: bad value for {key!r}: {value!r}") from None
    return out


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file with defaults for these flags")
    common.add_argument("--dim", type=int, choices=(1, 2, 3))
    inter = common.add_mutually_exclusive_group()
    inter.add_argument("--repulsive", dest="interaction", action="store_const", const="repulsive")
    inter.add_argument("--attractive", dest="interaction", action="store_const", const="attractive")
    common.add_argument("--psi0", type=float)
    common.add_argument("--dpsi0", type=float)
    common.add_argument("--xmax", type=float)
    common.add_argument("--rtol", type=float)
    common.add_argument("--atol", type=float)
    common.add_argument("--project", action="store_const", const=True,
                        help="project onto the first integral (free N=1 only)")
    common.add_argument("--potential", help="none | constant:<v0> | harmonic:<omega>")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--jobs", type=int)
    common.add_argument("--out-dir", dest="out_dir")

    p = argparse.ArgumentParser(prog="cnlslab", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", parents=[common], help="integrate and classify one boundary value")
    sw = sub.add_parser("sweep", parents=[common], help="classify a grid of psi(0) values")
    sw.add_argument("--grid", type=_parse_grid, help="comma-separated psi(0) values")
    sub.add_parser("criterion", parents=[common], help="criterion table along one solution")
    sub.add_parser("qualify", parents=[common], help="integrator order and oracle checks")
    return p


def resolve_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            values[f.name] = v
    cfg = RunConfig(**values)
    if cfg.preset:
        if cfg.preset not in PRESETS:
            raise UsageError(f"unknown preset {cfg.preset!r}")
        cfg.interaction, grid = PRESETS[cfg.preset]
        cfg.dim = 2
        cfg.dpsi0 = 0.0
        if cfg.grid is None:
            cfg.grid = list(grid)
    if cfg.interaction not in ("repulsive", "attractive"):
        raise UsageError(f"interaction must be repulsive or attractive, got {cfg.interaction!r}")
    if cfg.jobs < 1:
        raise UsageError("jobs must be >= 1")
    return cfg


def solve_one(cfg: RunConfig, psi0: Optional[float] = None):
    spec = cfg.equation()
    bc = cfg.boundary(psi0)
    if cfg.project and not (spec.dimension == 1 and spec.free):
        raise UsageError("--project needs --dim 1 without a potential")
    trace = integrate(spec, bc, cfg.integrator())
    return spec, trace, classify(trace, spec)


def _out_path(cfg: RunConfig, name: str, sub: Optional[str] = None) -> Path:
    base = Path(cfg.out_dir)
    if sub:
        base = base / sub
    base.mkdir(parents=True, exist_ok=True)
    return base / name


def _report_exit(report: ClassificationReport, trace) -> int:
    from .integrate import Termination
    if report.label is Label.UNDETERMINED or trace.termination is Termination.STEP_FAILURE:
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_solve(cfg: RunConfig) -> int:
    values = [cfg.psi0] if cfg.preset is None or cfg.psi0 is not None else list(cfg.grid)
    status = EXIT_OK
    for v in values:
        sub = None if len(values) == 1 else f"psi0_{_fmt(float(v))}"
        spec, trace, report = solve_one(cfg, v)
        write_trace_csv(trace, _out_path(cfg, cfg.trace_csv, sub))
        write_events_json(trace, _out_path(cfg, cfg.events_json, sub))
        write_report_json(report, _out_path(cfg, cfg.report_json, sub))
        print(f"psi0={_fmt(trace.psi[0]) if v is None else _fmt(float(v))} "
              f"label={report.label.value} baseline={_fmt(report.baseline)} "
              f"zero_crossings={report.zero_crossings} inflection_x={_fmt(report.inflection_x)}")
        status = max(status, _report_exit(report, trace))
    return status


SWEEP_HEADER = (
    "psi0", "label", "baseline", "zero_crossings", "extrema_count",
    "first_wavelength", "last_wavelength", "inflection_x", "criterion_consistency", "error",
)


def sweep_row(cfg: RunConfig, psi0: float) -> tuple:
    try:
        _, _, r = solve_one(cfg, psi0)
    except Exception as exc:   # recorded in the row; the sweep continues
        return (psi0, "", None, None, None, None, None, None, None, f"{type(exc).__name__}: {exc}")
    first = r.wavelengths[0][1] if r.wavelengths else None
    last = r.wavelengths[-1][1] if r.wavelengths else None
    return (psi0, r.label.value, r.baseline, r.zero_crossings, r.extrema_count,
            first, last, r.inflection_x, r.criterion_consistency, r.diagnostic)


def run_sweep(cfg: RunConfig, grid: Sequence[float]) -> list[tuple]:
    """Rows in grid order, whatever order the workers finish in."""
    if cfg.jobs > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(functools.partial(sweep_row, cfg), grid))
    return [sweep_row(cfg, v) for v in grid]


def format_sweep(rows: Sequence[tuple]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def cmd_sweep(cfg: RunConfig) -> int:
    if cfg.grid is None:
        raise UsageError("sweep needs --grid or --preset")
    cfg.equation()   # validate before spawning workers
    rows = run_sweep(cfg, cfg.grid)
    text = format_sweep(rows)
    _out_path(cfg, cfg.sweep_csv).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_criterion(cfg: RunConfig) -> int:
    spec, trace, report = solve_one(cfg)
    write_criterion_csv(trace, spec, _out_path(cfg, cfg.criterion_csv))
    write_trace_csv(trace, _out_path(cfg, cfg.trace_csv))
    return _report_exit(report, trace)


#: Soliton oracles sit on separatrices, where plain errors grow like exp(x);
#: projecting onto the first integral keeps the trace on the orbit.
ORACLE_CONFIG = IntegratorConfig(x_max=20.0, project_invariant=True)
#: Unprojected run; drift scales with rel_tol times the cycle count.
ENERGY_CONFIG = IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13)


def qualification_checks() -> list[tuple[str, bool, str]]:
    """Integrator order plus the closed-form oracles; ``(name, ok, detail)``."""
    import numpy as np
    from .cnls import first_integral
    from .integrate import dense_eval, order_check

    results = []
    order = order_check()
    results.append(("order", abs(order - 5) <= 0.3, f"measured order {order:.3f}"))

    tight = ORACLE_CONFIG
    cases = [
        ("sech", EquationSpec.attractive(1), BoundaryCondition(1.0),
         lambda x: 1 / np.cosh(x)),
        ("tanh", EquationSpec.repulsive(1), BoundaryCondition(0.0, 0.5),
         lambda x: np.tanh(x / math.sqrt(2)) / math.sqrt(2)),
    ]
    for name, spec, bc, exact in cases:
        tr = integrate(spec, bc, tight)
        xs = np.linspace(tr.x_start, tr.x_end, 4001)
        err = float(np.max(np.abs(dense_eval(tr, xs)[0] - exact(xs))))
        ok = tr.x_end == 20.0 and err < 1e-6
        results.append((name, ok, f"max error {err:.3g} on [eps, {tr.x_end:.4g}]"))

    for spec, psi0 in ((EquationSpec.repulsive(1), 0.5), (EquationSpec.attractive(1), 1.5)):
        tr = integrate(spec, BoundaryCondition(psi0), ENERGY_CONFIG)
        e = first_integral(spec, tr.psi, tr.dpsi)
        drift = float(np.max(np.abs(e - e[0])))
        results.append((f"energy {spec.interaction.value} psi0={psi0}", drift < 1e-8,
                        f"drift {drift:.3g}"))
    return results


def cmd_qualify(cfg: RunConfig) -> int:
    status = EXIT_OK
    for name, ok, detail in qualification_checks():
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        if not ok:
            status = EXIT_NUMERIC
    return status


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "criterion": cmd_criterion,
            "qualify": cmd_qualify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        if args.command in ("solve", "criterion") and cfg.psi0 is None and not (
            args.command == "solve" and cfg.preset
        ):
            raise UsageError("--psi0 is required")
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        print(f"cnlslab {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cnlslab {args.command}: error: {exc.filename}: {exc.strerror}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
