"""Classification of radial CNLS traces.

Labels follow the behaviour of the free equations: repulsive solutions
oscillate about 0, stay constant on +-1/sqrt(2) or diverge; attractive ones
settle about +-1/sqrt(2), possibly after crossing 0 ("exotic").
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .cnls import PSI_PLUS, TRIVIAL_SOLUTIONS, EquationSpec, predicts_oscillation
from .integrate import (
    EventKind,
    SolutionTrace,
    Termination,
    dense_eval,
)


class Label(str, enum.Enum):
    CONSTANT = "Constant"
    OSCILLATORY_ABOUT_ZERO = "OscillatoryAboutZero"
    OSCILLATORY_ABOUT_PLUS = "OscillatoryAboutPlus"
    OSCILLATORY_ABOUT_MINUS = "OscillatoryAboutMinus"
    EXOTIC = "Exotic"
    DIVERGENT = "Divergent"
    UNDETERMINED = "Undetermined"


@dataclass(frozen=True)
class Tolerances:
    const_tol: float = 1e-6
    tail_fraction: float = 0.25
    tail_samples: int = 4001


@dataclass
class ClassificationReport:
    label: Label
    baseline: Optional[float] = None
    zero_crossings: int = 0
    extrema_count: int = 0
    wavelengths: list[tuple[float, float]] = field(default_factory=list)
    inflection_x: Optional[float] = None
    criterion_consistency: Optional[float] = None
    diagnostic: str = ""

    def to_dict(self) -> dict:
        d = asdict(self)
        d["label"] = self.label.value
        d["wavelengths"] = [list(w) for w in self.wavelengths]
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, d: dict) -> "ClassificationReport":
        d = dict(d)
        d["label"] = Label(d["label"])
        d["wavelengths"] = [tuple(w) for w in d.get("wavelengths", [])]
        return cls(**d)

    @classmethod
    def from_json(cls, text: str) -> "ClassificationReport":
        return cls.from_dict(json.loads(text))


class InsufficientExtremaError(ValueError):
    pass


def attracting_baseline(trace: SolutionTrace, tol: Tolerances = Tolerances()) -> float:
    """Trivial solution closest on average to the last part of the trace."""
    x0 = trace.x_end - tol.tail_fraction * (trace.x_end - trace.x_start)
    xs = np.linspace(x0, trace.x_end, tol.tail_samples)
    psi, _ = dense_eval(trace, xs)
    dist = [np.mean(np.abs(psi - s)) for s in TRIVIAL_SOLUTIONS]
    return TRIVIAL_SOLUTIONS[int(np.argmin(dist))]


def wavelength_profile(trace: SolutionTrace, baseline: float) -> list[tuple[float, float]]:
    """Full periods between consecutive same-direction crossings of ``baseline``.

    Returns ``(x_mid, wavelength)`` pairs sorted by ``x_mid``; empty when the
    trace crosses the baseline fewer than three times.
    """
    crossings = trace.crossings(baseline)
    if len(crossings) < 3:
        return []
    out = []
    for kind in (EventKind.CROSSING_UP, EventKind.CROSSING_DOWN):
        xs = [e.x for e in crossings if e.kind is kind]
        out.extend(((a + b) / 2, b - a) for a, b in zip(xs, xs[1:]))
    out.sort()
    return out


def detect_inflection_transition(trace: SolutionTrace, level: float = 0.0) -> Optional[float]:
    """Position of the near-tangency on ``level`` after which the trace stops crossing it.

    A crossing that happens on the same approach as the tangency (before the
    next turning point) does not count against it. Returns the earliest
    qualifying event, or ``None``.
    """
    tangencies = trace.events_of(EventKind.NEAR_TANGENCY, level)
    if not tangencies:
        return None
    crossing_x = [e.x for e in trace.crossings(level)]
    turning_x = [e.x for e in trace.extrema()]
    for t in tangencies:
        next_turn = next((x for x in turning_x if x > t.x), math.inf)
        if not any(x > next_turn for x in crossing_x):
            return t.x
    return None


def criterion_consistency(
    trace: SolutionTrace,
    spec: EquationSpec,
    baseline: Optional[float] = None,
    tol: Tolerances = Tolerances(),
) -> float:
    """Fraction of half-cycles on which the pointwise criterion is met.

    Each pair of consecutive extrema is one half-cycle. The criterion is
    checked just off the crossing of the baseline between them, on both
    sides; it counts as met if either side satisfies it. Half-cycles that do
    not cross the baseline are checked at their midpoint.
    """
    if trace.termination is Termination.BLOW_UP:
        raise ValueError("criterion consistency is undefined for a divergent trace")
    ext = trace.extrema()
    if len(ext) < 2:
        raise InsufficientExtremaError(f"need at least 2 extrema, trace has {len(ext)}")
    if baseline is None:
        baseline = attracting_baseline(trace, tol)
    crossings = [e.x for e in trace.crossings(baseline)]

    met = 0
    for a, b in zip(ext, ext[1:]):
        inside = [x for x in crossings if a.x < x < b.x]
        if inside:
            xc = inside[0]
            dx = 1e-6 * (b.x - a.x)
            probes = [max(a.x, xc - dx), min(b.x, xc + dx)]
        else:
            probes = [0.5 * (a.x + b.x)]
        psi, _ = dense_eval(trace, np.array(probes))
        if any(predicts_oscillation(spec, float(p)) for p in psi):
            met += 1
    return met / (len(ext) - 1)


def classify(
    trace: SolutionTrace, spec: EquationSpec, tol: Tolerances = Tolerances()
) -> ClassificationReport:
    """Assign a label; the rules are applied in order:

    1. Divergent if the integration blew up.
    2. Constant if the trace never leaves ``psi(0)`` by ``const_tol`` and
       ``psi(0)`` sits on a trivial solution.
    3. Undetermined if there are fewer than two extrema.
    4. Otherwise the baseline is the trivial solution nearest on average over
       the last ``tail_fraction`` of the trace: 0 gives OscillatoryAboutZero;
       +-1/sqrt(2) gives Exotic if the trace ever crosses 0, else
       OscillatoryAboutPlus/Minus.
    """
    zero_x = trace.crossings(0.0)
    extrema = trace.extrema()
    common = dict(zero_crossings=len(zero_x), extrema_count=len(extrema))

    if trace.termination is Termination.BLOW_UP:
        return ClassificationReport(Label.DIVERGENT, diagnostic=trace.message, **common)

    psi0 = float(trace.psi[0])
    deviation = float(np.max(np.abs(trace.psi - psi0)))
    nearest = min(TRIVIAL_SOLUTIONS, key=lambda s: abs(psi0 - s))
    if deviation < tol.const_tol and abs(psi0 - nearest) < tol.const_tol:
        return ClassificationReport(Label.CONSTANT, baseline=nearest, **common)

    if len(extrema) < 2:
        diag = "fewer than 2 extrema"
        if trace.termination is Termination.STEP_FAILURE:
            diag = f"{trace.message}; {diag}"
        return ClassificationReport(Label.UNDETERMINED, diagnostic=diag, **common)

    baseline = attracting_baseline(trace, tol)
    if baseline == 0.0:
        label = Label.OSCILLATORY_ABOUT_ZERO
    elif zero_x:
        label = Label.EXOTIC
    elif baseline > 0:
        label = Label.OSCILLATORY_ABOUT_PLUS
    else:
        label = Label.OSCILLATORY_ABOUT_MINUS

    diagnostic = ""
    if trace.termination is Termination.STEP_FAILURE:
        diagnostic = trace.message
    return ClassificationReport(
        label,
        baseline=baseline,
        wavelengths=wavelength_profile(trace, baseline),
        inflection_x=detect_inflection_transition(trace),
        criterion_consistency=criterion_consistency(trace, spec, baseline, tol),
        diagnostic=diagnostic,
        **common,
    )


def wavelength_ratio(report: ClassificationReport) -> Optional[float]:
    """Mean wavelength after ``inflection_x`` over mean wavelength before it."""
    if report.inflection_x is None:
        return None
    before = [lam for xm, lam in report.wavelengths if xm < report.inflection_x]
    after = [lam for xm, lam in report.wavelengths if xm > report.inflection_x]
    if not before or not after:
        return None
    return float(np.mean(after) / np.mean(before))


__all__ = [
    "PSI_PLUS",
    "ClassificationReport",
    "InsufficientExtremaError",
    "Label",
    "Tolerances",
    "attracting_baseline",
    "classify",
    "criterion_consistency",
    "detect_inflection_transition",
    "wavelength_profile",
    "wavelength_ratio",
]
