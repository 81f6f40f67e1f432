"""CSV / JSON writers for traces, events, reports and criterion tables.

Floats are written with ``repr`` (shortest string that round-trips), so
identical inputs give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .analysis import ClassificationReport
from .cnls import EquationSpec, effective_coefficient
from .integrate import Event, EventKind, SolutionTrace


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def write_trace_csv(trace: SolutionTrace, path) -> None:
    _write_csv(path, ("x", "psi", "dpsi"), zip(trace.x, trace.psi, trace.dpsi))


def read_trace_csv(path) -> np.ndarray:
    """Array of shape ``(n, 3)`` with columns ``x, psi, dpsi``."""
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def event_to_dict(e: Event) -> dict:
    return {"kind": e.kind.value, "level": e.level, "x": e.x, "psi": e.psi, "dpsi": e.dpsi}


def event_from_dict(d: dict) -> Event:
    return Event(EventKind(d["kind"]), d["x"], d["psi"], d["dpsi"], d.get("level"))


def write_events_json(trace: SolutionTrace, path) -> None:
    Path(path).write_text(json.dumps([event_to_dict(e) for e in trace.events], indent=1) + "\n")


def read_events_json(path) -> list[Event]:
    return [event_from_dict(d) for d in json.loads(Path(path).read_text())]


def write_report_json(report: ClassificationReport, path) -> None:
    Path(path).write_text(report.to_json(indent=1) + "\n")


def read_report_json(path) -> ClassificationReport:
    return ClassificationReport.from_json(Path(path).read_text())


def criterion_bound_for(dimension: int, x):
    """Oscillation threshold on ``c(x)``: 0 for ``N = 2``, ``1/(4x^2)`` otherwise.

    For ``N = 2`` the first-derivative term ``psi'/x`` cancels in the canonical
    form, leaving ``c > 0``; for ``N = 1`` and ``3`` the canonical criterion
    reduces to ``c > 1/(4x^2)``.
    """
    x = np.asarray(x, dtype=float)
    if dimension == 2:
        return np.zeros_like(x)
    return 1.0 / (4.0 * x * x)


def criterion_table(trace: SolutionTrace, spec: EquationSpec):
    """Columns ``x, psi, c_eff, criterion_bound, holds`` at every trace sample."""
    x = trace.x
    c_eff = np.array([effective_coefficient(spec, p, xx) for xx, p in zip(x, trace.psi)])
    bound = criterion_bound_for(spec.dimension, x)
    holds = c_eff > bound
    return x, trace.psi, c_eff, bound, holds


def write_criterion_csv(trace: SolutionTrace, spec: EquationSpec, path) -> None:
    cols = criterion_table(trace, spec)
    _write_csv(path, ("x", "psi", "c_eff", "criterion_bound", "holds"), zip(*cols))
