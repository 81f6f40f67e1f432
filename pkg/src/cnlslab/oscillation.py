"""Linear oscillation criterion for ``y'' + b(x) y' + c(x) y = 0``.

The equation is reduced to its canonical form ``u'' + q(x) u = 0`` with

    q = -(b**2 + 2 b' - 4 c) / 4

and solutions oscillate on the intervals where ``q(x) > 1 / (4 (x - c1)**2)``.
With the shift ``c1 = 0`` this is the form used for equations that are
singular at the origin, and ``x = exp(t)`` maps ``x in (0, inf)`` onto the
whole real line.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

ScalarFn = Callable[[float], float]

#: Points per decade of ``|x - c1|`` used when scanning a domain.
POINTS_PER_DECADE = 4096


class CoefficientEvaluationError(ValueError):
    """Raised when one of ``b``, ``c`` or ``b'`` cannot be evaluated."""

    def __init__(self, name: str, x: float, reason: str = "non-finite value"):
        self.name = name
        self.x = x
        super().__init__(f"coefficient {name} failed at x={x!r}: {reason}")


class SingularPointError(ValueError):
    """Raised when the criterion is evaluated at ``x == c1``."""


def _numeric_derivative(fn: ScalarFn, x: float) -> float:
    h = max(1e-6, 1e-6 * abs(x))
    return (fn(x + h) - fn(x - h)) / (2.0 * h)


@dataclass(frozen=True)
class CoefficientPair:
    """Coefficients ``b`` (damping) and ``c`` (restoring) of the linear ODE.

    ``b_prime`` may be an analytic derivative of ``b``; if it is ``None`` the
    derivative is taken by central differences with step
    ``h = max(1e-6, 1e-6 |x|)``.
    """

    b: ScalarFn
    c: ScalarFn
    b_prime: Optional[ScalarFn] = None

    @property
    def numeric_b_prime(self) -> bool:
        return self.b_prime is None

    def db(self, x: float) -> float:
        if self.b_prime is None:
            return _numeric_derivative(self.b, x)
        return self.b_prime(x)

    @classmethod
    def constant(cls, b0: float, c0: float) -> "CoefficientPair":
        return cls(b=lambda x: b0, c=lambda x: c0, b_prime=lambda x: 0.0)


def _evaluate(name: str, fn: ScalarFn, x: float) -> float:
    try:
        value = float(fn(x))
    except (ArithmeticError, ValueError) as exc:
        raise CoefficientEvaluationError(name, x, str(exc)) from exc
    if not math.isfinite(value):
        raise CoefficientEvaluationError(name, x)
    return value


def canonical_q(coeffs: CoefficientPair, x: float) -> float:
    """Canonical coefficient ``q(x) = -(b^2 + 2b' - 4c)/4``."""
    b = _evaluate("b", coeffs.b, x)
    c = _evaluate("c", coeffs.c, x)
    db = _evaluate("b_prime", coeffs.db, x)
    return -(b * b + 2.0 * db - 4.0 * c) / 4.0


def criterion_bound(x: float, shift_c1: float = 0.0) -> float:
    """Right-hand side ``1/(4 (x - c1)^2)`` of the interval criterion."""
    d = x - shift_c1
    if d == 0.0:
        raise SingularPointError(f"criterion is singular at x = c1 = {shift_c1!r}")
    return 1.0 / (4.0 * d * d)


def criterion_holds(q_value: float, x: float, shift_c1: float = 0.0) -> bool:
    """True iff ``q_value > 1/(4 (x - shift_c1)^2)``."""
    return q_value > criterion_bound(x, shift_c1)


@dataclass(frozen=True)
class CriterionRegion:
    """Disjoint, ascending intervals ``(lower, upper)`` where the criterion holds."""

    intervals: tuple[tuple[float, float], ...] = field(default_factory=tuple)
    shift_c1: float = 0.0

    def __post_init__(self):
        prev_hi = -math.inf
        for lo, hi in self.intervals:
            if not lo < hi:
                raise ValueError(f"empty interval ({lo}, {hi})")
            if lo < prev_hi:
                raise ValueError("intervals overlap or are out of order")
            if lo < self.shift_c1 < hi:
                raise ValueError("interval contains the singular point c1")
            prev_hi = hi

    @property
    def empty(self) -> bool:
        return not self.intervals

    def contains(self, x: float) -> bool:
        return any(lo < x <= hi or lo <= x < hi for lo, hi in self.intervals)


def _sample_side(lo: float, hi: float, c1: float, resolution: Optional[int]) -> np.ndarray:
    """Geometric grid in the distance ``|x - c1|`` covering ``[lo, hi]``."""
    sign = 1.0 if lo >= c1 else -1.0
    d_lo, d_hi = sorted((abs(lo - c1), abs(hi - c1)))
    if resolution is None:
        decades = math.log10(d_hi / d_lo) if d_lo > 0 else 1.0
        resolution = max(2, int(math.ceil(POINTS_PER_DECADE * max(decades, 1e-3))) + 1)
    d = np.geomspace(d_lo, d_hi, resolution)
    xs = np.sort(c1 + sign * d)
    xs[0], xs[-1] = lo, hi
    return xs


def _excess(x: float, coeffs: CoefficientPair, c1: float) -> float:
    return canonical_q(coeffs, x) - criterion_bound(x, c1)


def criterion_region(
    coeffs: CoefficientPair,
    domain: Sequence[float],
    shift_c1: float = 0.0,
    resolution: Optional[int] = None,
    xtol: float = 1e-10,
) -> CriterionRegion:
    """Maximal sub-intervals of ``domain`` on which the criterion holds.

    The domain is scanned on a grid that is uniform in ``log |x - c1|``
    (``POINTS_PER_DECADE`` points per decade unless ``resolution`` gives the
    total count per side) and each sign change of ``q - 1/(4(x-c1)^2)`` is
    refined with a bracketing root finder to ``xtol``. Thin slivers narrower
    than the grid spacing can be missed.

    Differences within a few ulps of zero count as "not holding", so the
    tie ``q == 1/(4x^2)`` is never reported as oscillatory because of rounding.
    """
    lo, hi = float(domain[0]), float(domain[1])
    if not lo < hi:
        raise ValueError(f"invalid domain [{lo}, {hi}]")
    if resolution is not None and resolution < 2:
        raise ValueError("resolution must be >= 2")

    sides = []
    if lo < shift_c1 < hi:
        sides = [(lo, shift_c1), (shift_c1, hi)]
    else:
        sides = [(lo, hi)]

    intervals: list[tuple[float, float]] = []
    for a, b in sides:
        # the criterion is singular at c1 itself; back off one ulp-scale step
        if a == shift_c1:
            a = shift_c1 + max(abs(shift_c1), 1.0) * 1e-12
        if b == shift_c1:
            b = shift_c1 - max(abs(shift_c1), 1.0) * 1e-12
        xs = _sample_side(a, b, shift_c1, resolution)
        q = np.array([canonical_q(coeffs, x) for x in xs])
        bound = 1.0 / (4.0 * (xs - shift_c1) ** 2)
        g = q - bound
        tie = 8.0 * np.finfo(float).eps * (np.abs(q) + bound)
        holds = g > tie

        start = xs[0] if holds[0] else None
        for i in range(1, len(xs)):
            if holds[i] == holds[i - 1]:
                continue
            if g[i - 1] * g[i] < 0.0:
                edge = brentq(_excess, xs[i - 1], xs[i], args=(coeffs, shift_c1), xtol=xtol)
            else:
                # flip caused by the tie band only
                edge = xs[i]
            if holds[i]:
                start = edge
            else:
                if edge > start:
                    intervals.append((float(start), float(edge)))
                start = None
        if start is not None and xs[-1] > start:
            intervals.append((float(start), float(xs[-1])))

    return CriterionRegion(intervals=tuple(intervals), shift_c1=shift_c1)


def euler_map(t: float) -> float:
    """``x = exp(t)``."""
    return math.exp(t)


def euler_unmap(x: float) -> float:
    """``t = ln(x)``, defined for ``x > 0``."""
    if x <= 0.0:
        raise ValueError(f"euler_unmap needs x > 0, got {x!r}")
    return math.log(x)
