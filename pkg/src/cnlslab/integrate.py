"""Adaptive Dormand-Prince 5(4) integration of the radial CNLS equations.

The stepper works on scalar second-order equations ``psi'' = a(x, psi, psi')``
written as the system ``(psi, psi')``. Every accepted step keeps the
coefficients of its fourth-order continuous extension, so a finished
:class:`SolutionTrace` can be evaluated anywhere in its range and searched
for events (level crossings, extrema, near-tangencies) after the fact.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy.optimize import brentq

from .cnls import (
    BoundaryCondition,
    EquationSpec,
    first_integral,
    make_accel,
    TRIVIAL_SOLUTIONS,
    taylor_start,
    trivial_solutions,
)

Accel = Callable[[float, float, float], float]

# Dormand-Prince 5(4) tableau.
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
# b - b_hat, the embedded error weights
E1, E3, E4, E5, E6, E7 = (
    71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)

# Continuous extension (Shampine 1986): y(x0 + t h) = y0 + h * sum_k (K^T P)[:, k] t^(k+1)
DENSE_P = np.array([
    [1.0, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0.0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0.0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0.0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0.0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

#: Nominal order of the propagated solution.
ORDER = 5


class Termination(enum.Enum):
    REACHED_X_MAX = "reached_x_max"
    BLOW_UP = "blow_up"
    STEP_FAILURE = "step_failure"


class EventKind(enum.Enum):
    CROSSING_UP = "crossing_up"
    CROSSING_DOWN = "crossing_down"
    MAXIMUM = "maximum"
    MINIMUM = "minimum"
    NEAR_TANGENCY = "near_tangency"
    BLOW_UP = "blow_up"

    @property
    def is_crossing(self) -> bool:
        return self in (EventKind.CROSSING_UP, EventKind.CROSSING_DOWN)

    @property
    def is_extremum(self) -> bool:
        return self in (EventKind.MAXIMUM, EventKind.MINIMUM)


@dataclass(frozen=True)
class Event:
    kind: EventKind
    x: float
    psi: float
    dpsi: float
    level: Optional[float] = None

    @property
    def direction(self) -> int:
        return {EventKind.CROSSING_UP: 1, EventKind.CROSSING_DOWN: -1}.get(self.kind, 0)


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings.

    ``blowup_threshold=None`` means ``10 * max(1, |psi(0)|)``.
    ``tangency_tol`` bounds both ``|psi - level|`` and ``|psi'|`` at the closest
    phase-plane approach for a near-tangency event, relative to the amplitude
    of the swing in which the approach happens.
    ``defect_tol`` bounds the residual of the dense output inside each step
    by ``defect_tol * rel_tol * max(1, |psi|, |psi'|, |psi''|)``; ``None``
    turns the check off.
    ``project_invariant`` (free ``N = 1`` only) projects every accepted step
    back onto the first-integral level of the boundary data.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    x_max: float = 60.0
    epsilon_start: float = 1e-6
    blowup_threshold: Optional[float] = None
    max_steps: int = 10_000_000
    max_step: float = 0.25
    tangency_tol: float = 0.25
    defect_tol: Optional[float] = 50.0
    project_invariant: bool = False

    def __post_init__(self):
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 0 < self.epsilon_start < self.x_max:
            raise ValueError("need 0 < epsilon_start < x_max")
        if self.max_steps < 1 or not self.max_step > 0:
            raise ValueError("max_steps and max_step must be positive")
        if not self.tangency_tol > 0:
            raise ValueError("tangency_tol must be positive")
        if self.defect_tol is not None and not self.defect_tol > 0:
            raise ValueError("defect_tol must be positive or None")

    def threshold_for(self, psi0: float) -> float:
        thr = self.blowup_threshold
        if thr is None:
            thr = 10.0 * max(1.0, abs(psi0))
        if not thr > abs(psi0):
            raise ValueError(f"blowup_threshold {thr} must exceed |psi(0)| = {abs(psi0)}")
        return thr

    def tightened(self, factor: float = 100.0) -> "IntegratorConfig":
        from dataclasses import replace
        return replace(self, rel_tol=self.rel_tol / factor, abs_tol=self.abs_tol / factor)


class TraceRangeError(ValueError):
    """Dense evaluation outside ``[x[0], x[-1]]``."""


@dataclass(frozen=True, eq=False)
class SolutionTrace:
    """Accepted steps of an integration plus their dense-output polynomials.

    ``coeffs[i, j, k]`` is the ``t**k`` coefficient of component ``j``
    (0: psi, 1: psi') on step ``i``, with ``t = (x - x[i]) / (x[i+1] - x[i])``.
    """

    x: np.ndarray
    psi: np.ndarray
    dpsi: np.ndarray
    coeffs: np.ndarray
    events: tuple[Event, ...] = ()
    termination: Termination = Termination.REACHED_X_MAX
    blowup_threshold: float = math.inf
    message: str = ""
    watch_levels: tuple[float, ...] = ()

    def __post_init__(self):
        for name in ("x", "psi", "dpsi", "coeffs"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.x.ndim != 1 or len(self.x) < 2:
            raise ValueError("a trace needs at least two samples")
        if np.any(np.diff(self.x) <= 0):
            raise ValueError("samples must be strictly increasing in x")
        if self.coeffs.shape[0] != len(self.x) - 1:
            raise ValueError("need one dense-output polynomial per step")

    @property
    def x_start(self) -> float:
        return float(self.x[0])

    @property
    def x_end(self) -> float:
        return float(self.x[-1])

    @property
    def n_steps(self) -> int:
        return len(self.x) - 1

    def with_events(self, events: Iterable[Event], watch_levels=()) -> "SolutionTrace":
        from dataclasses import replace
        return replace(
            self,
            events=tuple(sorted(events, key=lambda e: e.x)),
            watch_levels=tuple(watch_levels),
        )

    def events_of(self, kind: EventKind | Sequence[EventKind], level: Optional[float] = None):
        kinds = (kind,) if isinstance(kind, EventKind) else tuple(kind)
        return [
            e for e in self.events
            if e.kind in kinds and (level is None or e.level == level)
        ]

    def crossings(self, level: float) -> list[Event]:
        """Crossings of ``level``; uses recorded events when the level was watched."""
        recorded = self.events_of((EventKind.CROSSING_UP, EventKind.CROSSING_DOWN), level)
        if recorded or level in self.watch_levels:
            return recorded
        return find_events(self, [level], extrema=False, tangency_levels=())

    def extrema(self) -> list[Event]:
        return self.events_of((EventKind.MAXIMUM, EventKind.MINIMUM))

    @classmethod
    def from_hermite(cls, x, psi, dpsi, ddpsi, **kw) -> "SolutionTrace":
        """Trace from exact node data using cubic Hermite pieces.

        ``psi`` is interpolated from ``(psi, psi')`` and ``psi'`` from
        ``(psi', psi'')``; handy for building surrogate traces in tests.
        """
        x = np.asarray(x, float)
        h = np.diff(x)
        coeffs = np.empty((len(h), 2, 5))
        for j, (y, dy) in enumerate(((psi, dpsi), (dpsi, ddpsi))):
            y, dy = np.asarray(y, float), np.asarray(dy, float)
            y0, y1 = y[:-1], y[1:]
            m0, m1 = dy[:-1] * h, dy[1:] * h
            coeffs[:, j, 0] = y0
            coeffs[:, j, 1] = m0
            coeffs[:, j, 2] = 3 * (y1 - y0) - 2 * m0 - m1
            coeffs[:, j, 3] = 2 * (y0 - y1) + m0 + m1
            coeffs[:, j, 4] = 0.0
        return cls(x=x, psi=psi, dpsi=dpsi, coeffs=coeffs, **kw)


def _locate(trace: SolutionTrace, x) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    if np.any(x < trace.x[0]) or np.any(x > trace.x[-1]) or np.any(np.isnan(x)):
        raise TraceRangeError(
            f"x outside trace range [{trace.x[0]}, {trace.x[-1]}]"
        )
    idx = np.searchsorted(trace.x, x, side="right") - 1
    idx = np.minimum(idx, trace.n_steps - 1)
    h = trace.x[idx + 1] - trace.x[idx]
    t = (x - trace.x[idx]) / h
    return idx, t


def _horner(c: np.ndarray, t: np.ndarray) -> np.ndarray:
    out = c[..., 4]
    for k in (3, 2, 1, 0):
        out = out * t + c[..., k]
    return out


def dense_eval(trace: SolutionTrace, x):
    """``(psi, psi')`` at ``x`` (scalar or array); exact at the sample nodes."""
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    idx, t = _locate(trace, xa)
    c = trace.coeffs[idx]                       # (n, 2, 5)
    vals = _horner(c, t[:, None])               # (n, 2)
    at_end = xa == trace.x[-1]
    vals[at_end, 0] = trace.psi[-1]
    vals[at_end, 1] = trace.dpsi[-1]
    if scalar:
        return float(vals[0, 0]), float(vals[0, 1])
    return vals[:, 0], vals[:, 1]


def dense_second_derivative(trace: SolutionTrace, x):
    """``psi''`` from differentiating the ``psi'`` interpolant."""
    scalar = np.ndim(x) == 0
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    idx, t = _locate(trace, xa)
    c = trace.coeffs[idx, 1]                    # (n, 5)
    h = trace.x[idx + 1] - trace.x[idx]
    d = c[:, 4] * 4
    for k in (3, 2, 1):
        d = d * t + k * c[:, k]
    out = d / h
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------- stepping

def _dp5_step(f: Accel, x, p, dp, k1p, k1v, h):
    """One Dormand-Prince step; returns new state, stages and error terms."""
    k2p = dp + h * (A21 * k1v)
    k2v = f(x + C2 * h, p + h * (A21 * k1p), k2p)
    k3p = dp + h * (A31 * k1v + A32 * k2v)
    k3v = f(x + C3 * h, p + h * (A31 * k1p + A32 * k2p), k3p)
    k4p = dp + h * (A41 * k1v + A42 * k2v + A43 * k3v)
    k4v = f(x + C4 * h, p + h * (A41 * k1p + A42 * k2p + A43 * k3p), k4p)
    k5p = dp + h * (A51 * k1v + A52 * k2v + A53 * k3v + A54 * k4v)
    k5v = f(x + C5 * h, p + h * (A51 * k1p + A52 * k2p + A53 * k3p + A54 * k4p), k5p)
    k6p = dp + h * (A61 * k1v + A62 * k2v + A63 * k3v + A64 * k4v + A65 * k5v)
    k6v = f(x + h, p + h * (A61 * k1p + A62 * k2p + A63 * k3p + A64 * k4p + A65 * k5p), k6p)
    p_new = p + h * (B1 * k1p + B3 * k3p + B4 * k4p + B5 * k5p + B6 * k6p)
    dp_new = dp + h * (B1 * k1v + B3 * k3v + B4 * k4v + B5 * k5v + B6 * k6v)
    k7p = dp_new
    k7v = f(x + h, p_new, dp_new)
    err_p = h * (E1 * k1p + E3 * k3p + E4 * k4p + E5 * k5p + E6 * k6p + E7 * k7p)
    err_v = h * (E1 * k1v + E3 * k3v + E4 * k4v + E5 * k5v + E6 * k6v + E7 * k7v)
    K = ((k1p, k2p, k3p, k4p, k5p, k6p, k7p), (k1v, k2v, k3v, k4v, k5v, k6v, k7v))
    return p_new, dp_new, k7v, err_p, err_v, K


def _dense_coeffs(p, dp, K, h) -> np.ndarray:
    c = np.zeros((2, 5))
    c[0, 0], c[1, 0] = p, dp
    c[:, 1:] = h * (np.asarray(K) @ DENSE_P)
    return c


def _initial_step(f: Accel, x0, p, dp, d2, rtol, atol, max_step) -> float:
    """Hairer's starting-step heuristic for a fifth-order method."""
    sp = atol + rtol * abs(p)
    sv = atol + rtol * abs(dp)
    d0 = math.sqrt(((p / sp) ** 2 + (dp / sv) ** 2) / 2)
    d1 = math.sqrt(((dp / sp) ** 2 + (d2 / sv) ** 2) / 2)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h0 = min(h0, max_step)
    p1, dp1 = p + h0 * dp, dp + h0 * d2
    d2b = f(x0 + h0, p1, dp1)
    dd = math.sqrt((((dp1 - dp) / sp) ** 2 + ((d2b - d2) / sv) ** 2) / 2) / h0
    if max(d1, dd) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, dd)) ** (1.0 / ORDER)
    return min(100 * h0, h1, max_step)


def solve_scalar(
    f: Accel,
    x0: float,
    p0: float,
    dp0: float,
    x_max: float,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-12,
    max_step: float = 0.25,
    max_steps: int = 10_000_000,
    blowup_threshold: float = math.inf,
    projector: Optional[Callable[[float, float], tuple[float, float]]] = None,
    defect_tol: Optional[float] = None,
) -> SolutionTrace:
    """Adaptive integration of ``psi'' = f(x, psi, psi')`` from ``x0`` to ``x_max``.

    Stops early on ``|psi| >= blowup_threshold`` (the last step is cut at the
    threshold) or when the step size underflows. With ``defect_tol`` a step
    is also rejected when the dense output misses the ODE by more than
    ``defect_tol * rel_tol`` (relative) at interior probe points. ``projector`` maps each
    accepted end state onto a constraint manifold; the step's dense output is
    shifted linearly so it still ends on the stored sample. The returned trace
    has no events attached.
    """
    xs = [x0]
    ps = [p0]
    dps = [dp0]
    polys = []
    x, p, dp = x0, p0, dp0
    k1v = f(x, p, dp)
    h = _initial_step(f, x, p, dp, k1v, rel_tol, abs_tol, max_step)
    termination = Termination.REACHED_X_MAX
    message = ""
    steps = 0

    while x < x_max:
        if steps >= max_steps:
            termination, message = Termination.STEP_FAILURE, f"max_steps={max_steps} exceeded"
            break
        h = min(h, max_step)
        last = x + h >= x_max
        if last:
            h = x_max - x
        h_min = 16.0 * math.ulp(max(abs(x), 1.0))
        if h < h_min:
            termination, message = Termination.STEP_FAILURE, f"step size underflow at x={x!r}"
            break

        p_new, dp_new, k7v, ep, ev, K = _dp5_step(f, x, p, dp, dp, k1v, h)
        sp = abs_tol + rel_tol * max(abs(p), abs(p_new))
        sv = abs_tol + rel_tol * max(abs(dp), abs(dp_new))
        err = math.sqrt(((ep / sp) ** 2 + (ev / sv) ** 2) / 2)
        if not math.isfinite(err):
            h *= 0.2
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** (-1.0 / ORDER))
            continue

        x_new = x_max if last else x + h
        poly = _dense_coeffs(p, dp, K, h)
        if defect_tol is not None:
            ratio = _defect(f, poly, x, h) / (rel_tol * defect_tol)
            if ratio > 1.0:
                h *= max(0.2, 0.9 * ratio ** -0.25)
                last = False
                continue
            err = max(err, ratio ** (ORDER / 4.0))
        steps += 1
        if projector is not None:
            q_new, dq_new = projector(p_new, dp_new)
            poly[0, 1] += q_new - p_new
            poly[1, 1] += dq_new - dp_new
            if (q_new, dq_new) != (p_new, dp_new):
                p_new, dp_new = q_new, dq_new
                k7v = f(x_new, p_new, dp_new)
        if abs(p_new) >= blowup_threshold:
            x_new, p_new, dp_new, poly = _cut_at_threshold(poly, x, h, blowup_threshold)
            xs.append(x_new); ps.append(p_new); dps.append(dp_new); polys.append(poly)
            termination = Termination.BLOW_UP
            message = f"|psi| reached {blowup_threshold:g} at x={x_new:.6g}"
            break

        xs.append(x_new); ps.append(p_new); dps.append(dp_new); polys.append(poly)
        x, p, dp, k1v = x_new, p_new, dp_new, k7v
        factor = 10.0 if err == 0 else min(10.0, max(0.2, 0.9 * err ** (-1.0 / ORDER)))
        h *= factor

    if len(xs) < 2:
        # nothing accepted; keep a degenerate single-point step so the trace is valid
        xs.append(x0 + max(math.ulp(x0), 1e-300))
        ps.append(p0); dps.append(dp0)
        polys.append(np.array([[p0, 0, 0, 0, 0], [dp0, 0, 0, 0, 0]], dtype=float))

    return SolutionTrace(
        x=np.array(xs), psi=np.array(ps), dpsi=np.array(dps),
        coeffs=np.array(polys).reshape(len(polys), 2, 5),
        termination=termination, blowup_threshold=blowup_threshold, message=message,
    )


_DEFECT_T = np.array([0.2, 0.5, 0.8])


def _defect(f: Accel, poly, x, h) -> float:
    """Largest relative residual ``|v'(t)/h - f|`` of the step's dense output."""
    c = poly[1]
    dv = ((4 * c[4] * _DEFECT_T + 3 * c[3]) * _DEFECT_T + 2 * c[2]) * _DEFECT_T + c[1]
    worst = 0.0
    for t, ddp in zip(_DEFECT_T, dv / h):
        p = float(_horner(poly[0], t))
        v = float(_horner(c, t))
        a = f(x + t * h, p, v)
        scale = max(1.0, abs(p), abs(v), abs(a))
        worst = max(worst, abs(ddp - a) / scale)
    return worst


def _cut_at_threshold(poly, x0, h, threshold):
    """Shorten a step so that it ends where ``|psi|`` first reaches ``threshold``.

    Bisection keeps the right end of the bracket on the ``|psi| >= threshold``
    side, so the final sample always satisfies the blow-up condition.
    """
    def g(t):
        return abs(_horner(poly[0], t)) - threshold

    lo, hi = 0.0, 1.0
    while (hi - lo) * h > 1e-12:
        mid = 0.5 * (lo + hi)
        if g(mid) >= 0.0:
            hi = mid
        else:
            lo = mid
    scale = hi ** np.arange(5)
    cut = poly * scale
    p_end = float(_horner(poly[0], hi))
    dp_end = float(_horner(poly[1], hi))
    return x0 + hi * h, p_end, dp_end, cut


def solve_fixed(f: Accel, x0: float, p0: float, dp0: float, x1: float, n: int):
    """Fixed-step integration with ``n`` equal steps; returns ``(psi, psi')`` at ``x1``."""
    h = (x1 - x0) / n
    x, p, dp = x0, p0, dp0
    k1v = f(x, p, dp)
    for i in range(n):
        p, dp, k1v, *_ = _dp5_step(f, x, p, dp, dp, k1v, h)
        x = x0 + (i + 1) * h
    return p, dp


def order_check(x_end: float = 10.0, steps: Sequence[int] = (40, 80, 160, 320)) -> float:
    """Observed convergence order on ``y'' + y = 0``, ``y(0)=1, y'(0)=0``.

    Fits the log-log slope of the error at ``x_end`` against the step size
    over successive halvings.
    """
    def f(x, p, dp):
        return -p

    errs = []
    hs = []
    for n in steps:
        p, dp = solve_fixed(f, 0.0, 1.0, 0.0, x_end, n)
        errs.append(math.hypot(p - math.cos(x_end), dp + math.sin(x_end)))
        hs.append(x_end / n)
    slope = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    return float(slope)


# ---------------------------------------------------------------- events

_PROBE_T = np.array([0.0, 0.25, 0.5, 0.75])


def _probe(trace: SolutionTrace):
    """Node values plus interior probes of every step, in increasing x."""
    h = np.diff(trace.x)
    xs = (trace.x[:-1, None] + h[:, None] * _PROBE_T).ravel()
    vals = _horner(trace.coeffs[:, None, :, :], _PROBE_T[None, :, None])  # (n, 4, 2)
    psi = vals[..., 0].ravel()
    dpsi = vals[..., 1].ravel()
    # node values are stored exactly; use them rather than t=0 evaluations
    psi[::4] = trace.psi[:-1]
    dpsi[::4] = trace.dpsi[:-1]
    xs = np.append(xs, trace.x[-1])
    psi = np.append(psi, trace.psi[-1])
    dpsi = np.append(dpsi, trace.dpsi[-1])
    return xs, psi, dpsi


def _brackets(g: np.ndarray) -> np.ndarray:
    s = np.where(g >= 0.0, 1, -1)
    return np.nonzero(s[:-1] != s[1:])[0]


def _root(fn, a, b, xtol):
    fa, fb = fn(a), fn(b)
    if fa == 0.0:
        return a
    if fb == 0.0 or (fa > 0) == (fb > 0):
        return b
    return brentq(fn, a, b, xtol=xtol, rtol=4 * np.finfo(float).eps)


def _swing_amplitude(xs, psi, turn, xr, level) -> float:
    """Smaller of the two half-swing amplitudes ``max |psi - level|`` around ``xr``.

    The half-swings run from the turning point before ``xr`` up to ``xr`` and
    from ``xr`` to the turning point after it (or the trace ends).
    """
    guard = 1e-9 * max(1.0, abs(xr))
    before = turn[xs[turn + 1] < xr - guard]
    after = turn[xs[turn] > xr + guard]
    lo = before[-1] if len(before) else 0
    hi = after[0] + 1 if len(after) else len(xs) - 1
    mid = int(np.searchsorted(xs, xr))
    left = np.abs(psi[lo:mid + 1] - level)
    right = np.abs(psi[max(mid - 1, lo):hi + 1] - level)
    return float(min(left.max(), right.max()))


def find_events(
    trace: SolutionTrace,
    levels: Iterable[float] = (),
    extrema: bool = True,
    tangency_levels: Iterable[float] = (0.0,),
    tangency_tol: float = 0.25,
    xtol: float = 1e-12,
) -> list[Event]:
    """Search a finished trace for events, each located on the dense output.

    * crossings of every ``level`` (with direction),
    * extrema (sign changes of ``psi'``),
    * near-tangencies: local minima of ``(psi - L)**2 + psi'**2`` at which
      both ``|psi - L|`` and ``|psi'|`` are below ``tangency_tol`` times the
      amplitude ``max |psi - L|`` of the surrounding swing, taken as the
      smaller of the half-swings before and after the approach. Ordinary oscillations about ``L`` pass with a slope
      comparable to their amplitude and do not qualify.
    """
    xs, psi, dpsi = _probe(trace)
    events: list[Event] = []

    def psi_at(x):
        return dense_eval(trace, x)[0]

    def dpsi_at(x):
        return dense_eval(trace, x)[1]

    def make(kind, x, level=None):
        p, dp = dense_eval(trace, x)
        return Event(kind, float(x), p, dp, level)

    for level in levels:
        level = float(level)
        g = psi - level
        for i in _brackets(g):
            xr = _root(lambda x: psi_at(x) - level, xs[i], xs[i + 1], xtol)
            kind = EventKind.CROSSING_UP if g[i + 1] >= 0 else EventKind.CROSSING_DOWN
            events.append(make(kind, xr, level))

    if extrema:
        for i in _brackets(dpsi):
            xr = _root(dpsi_at, xs[i], xs[i + 1], xtol)
            kind = EventKind.MAXIMUM if dpsi[i] >= 0 else EventKind.MINIMUM
            events.append(make(kind, xr))

    tangency_levels = tuple(tangency_levels)
    if tangency_levels:
        ddpsi = dense_second_derivative(trace, xs)
        turn = _brackets(dpsi)
        for level in tangency_levels:
            level = float(level)

            def slope_sq(x):
                p, dp = dense_eval(trace, x)
                return dp * (p - level + dense_second_derivative(trace, x))

            s = dpsi * (psi - level + ddpsi)
            for i in _brackets(s):
                if s[i] >= 0:   # maximum of the phase-plane distance
                    continue
                xr = _root(slope_sq, xs[i], xs[i + 1], xtol)
                p, dp = dense_eval(trace, xr)
                scale = _swing_amplitude(xs, psi, turn, xr, level)
                if abs(p - level) < tangency_tol * scale and abs(dp) < tangency_tol * scale:
                    events.append(Event(EventKind.NEAR_TANGENCY, float(xr), p, dp, level))

    events.sort(key=lambda e: e.x)
    return events


# ---------------------------------------------------------------- front end

def energy_projector(spec: EquationSpec, level: float):
    """One Newton step along the gradient of the first integral towards ``level``.

    Only meaningful for the free ``N = 1`` equation, where the first integral
    is conserved. States where the gradient vanishes are left unchanged.
    """
    if spec.dimension != 1 or not spec.free:
        raise ValueError("invariant projection needs the free N=1 equation")
    s = float(spec.interaction.sign)

    # exact critical values: V(0) = 0, V(+-1/sqrt 2) = s/8
    offsets = {c: (0.125 * s if c else 0.0) - level for c in TRIVIAL_SOLUTIONS}

    def residual(p, dp):
        # V(p) - V(c) = s (p - c)(p + c)(1 - p^2 - c^2)/2 about the nearest
        # critical point c, which avoids cancellation near the saddles
        c = min(TRIVIAL_SOLUTIONS, key=lambda v: abs(p - v))
        dv = 0.5 * s * (p - c) * (p + c) * (1.0 - p * p - c * c)
        return 0.5 * dp * dp + dv + offsets[c]

    def project(p, dp):
        r = residual(p, dp)
        gp = s * (p - 2.0 * p * p * p)
        g2 = gp * gp + dp * dp
        if r == 0.0 or g2 == 0.0:
            return p, dp
        return p - r * gp / g2, dp - r * dp / g2

    return project


def integrate(
    spec: EquationSpec,
    bc: BoundaryCondition,
    cfg: IntegratorConfig = IntegratorConfig(),
    watch_levels: Optional[Iterable[float]] = None,
    tangency_levels: Iterable[float] = (0.0,),
) -> SolutionTrace:
    """Integrate the radial CNLS equation from the origin.

    Starts from :func:`taylor_start` at ``cfg.epsilon_start``. ``watch_levels``
    defaults to the trivial solutions for the free equation. Step failure is
    reported through ``trace.termination`` rather than raised.
    """
    bc.check(spec)
    if watch_levels is None:
        watch_levels = trivial_solutions(spec) if spec.free else (0.0,)
    watch_levels = tuple(float(v) for v in watch_levels)
    if not all(math.isfinite(v) for v in watch_levels):
        raise ValueError("watch levels must be finite")

    threshold = cfg.threshold_for(bc.psi0)
    x0, p0, dp0 = taylor_start(spec, bc, cfg.epsilon_start)
    projector = None
    if cfg.project_invariant:
        projector = energy_projector(spec, first_integral(spec, bc.psi0, bc.dpsi0))
    trace = solve_scalar(
        make_accel(spec), x0, p0, dp0, cfg.x_max,
        rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol, max_step=cfg.max_step,
        max_steps=cfg.max_steps, blowup_threshold=threshold, projector=projector,
        defect_tol=cfg.defect_tol,
    )
    events = find_events(
        trace, watch_levels, tangency_levels=tangency_levels, tangency_tol=cfg.tangency_tol,
    )
    if trace.termination is Termination.BLOW_UP:
        events.append(Event(EventKind.BLOW_UP, trace.x_end, float(trace.psi[-1]),
                            float(trace.dpsi[-1])))
    return trace.with_events(events, watch_levels)
