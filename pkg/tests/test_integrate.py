import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from cnlslab.cnls import PSI_PLUS, BoundaryCondition, EquationSpec, first_integral, make_accel
from cnlslab.integrate import (
    EventKind,
    IntegratorConfig,
    SolutionTrace,
    Termination,
    TraceRangeError,
    dense_eval,
    dense_second_derivative,
    find_events,
    integrate,
    order_check,
    solve_fixed,
    solve_scalar,
)

REP2 = EquationSpec.repulsive(2)
ATT2 = EquationSpec.attractive(2)


def tanh_exact(x):
    return np.tanh(x / math.sqrt(2)) / math.sqrt(2)


# --- config ------------------------------------------------------------------

def test_config_defaults():
    cfg = IntegratorConfig()
    assert (cfg.rel_tol, cfg.abs_tol, cfg.x_max, cfg.epsilon_start) == (1e-9, 1e-12, 60.0, 1e-6)
    assert cfg.max_steps == 10_000_000
    assert cfg.threshold_for(0.7) == 10.0
    assert cfg.threshold_for(-5.0) == 50.0
    assert not cfg.project_invariant


@pytest.mark.parametrize("kw", [
    dict(rel_tol=0.0), dict(abs_tol=-1.0), dict(epsilon_start=70.0), dict(max_steps=0),
])
def test_config_rejects(kw):
    with pytest.raises(ValueError):
        IntegratorConfig(**kw)


def test_threshold_must_exceed_start():
    with pytest.raises(ValueError):
        IntegratorConfig(blowup_threshold=1.0).threshold_for(2.0)


def test_tightened():
    cfg = IntegratorConfig().tightened(100)
    assert cfg.rel_tol == pytest.approx(1e-11) and cfg.abs_tol == pytest.approx(1e-14)


# --- worked examples -------------------------------------------------------

def test_constant_trace():
    tr = integrate(REP2, BoundaryCondition(PSI_PLUS))
    assert tr.termination is Termination.REACHED_X_MAX
    assert tr.events == ()
    assert np.all(tr.psi == PSI_PLUS) and np.all(tr.dpsi == 0.0)
    p, dp = dense_eval(tr, np.linspace(tr.x_start, tr.x_end, 101))
    assert np.all(p == PSI_PLUS) and np.all(dp == 0.0)


def test_blow_up():
    tr = integrate(REP2, BoundaryCondition(0.71))
    assert tr.termination is Termination.BLOW_UP
    assert tr.x_end < 60.0
    assert abs(tr.psi[-1]) >= tr.blowup_threshold
    assert np.all(np.abs(tr.psi[:-1]) < tr.blowup_threshold)
    assert tr.events[-1].kind is EventKind.BLOW_UP


@pytest.mark.parametrize("spec, psi0", [
    (REP2, 0.7), (ATT2, 0.65), (ATT2, 0.75), (ATT2, 1.0), (ATT2, 3.0), (ATT2, 5.0),
])
def test_no_blow_up_for_oscillatory_cases(spec, psi0):
    tr = integrate(spec, BoundaryCondition(psi0))
    assert tr.termination is Termination.REACHED_X_MAX
    assert not tr.events_of(EventKind.BLOW_UP)


def test_samples_start_at_epsilon():
    tr = integrate(REP2, BoundaryCondition(0.7))
    assert tr.x_start == 1e-6
    assert np.all(np.diff(tr.x) > 0)


def test_sech_oracle_plain_tight():
    # without projection the orbit to the origin saddle needs near machine precision
    cfg = IntegratorConfig(rel_tol=1e-14, abs_tol=1e-16, x_max=20.0)
    tr = integrate(EquationSpec.attractive(1), BoundaryCondition(1.0), cfg)
    xs = np.linspace(tr.x_start, 20.0, 4001)
    assert np.max(np.abs(dense_eval(tr, xs)[0] - 1 / np.cosh(xs))) < 1e-6


def test_tanh_oracle_plain_drifts_off_separatrix():
    # documents why projection exists: the error grows like exp(sqrt(2) x)
    cfg = IntegratorConfig(rel_tol=1e-13, abs_tol=1e-15, x_max=20.0)
    tr = integrate(EquationSpec.repulsive(1), BoundaryCondition(0.0, 0.5), cfg)
    xs = np.linspace(tr.x_start, 20.0, 4001)
    err = np.abs(dense_eval(tr, xs)[0] - tanh_exact(xs))
    assert err[xs < 5].max() < 1e-9
    assert err.max() > 1e-6


@pytest.mark.parametrize("spec, bc, exact", [
    (EquationSpec.attractive(1), BoundaryCondition(1.0), lambda x: 1 / np.cosh(x)),
    (EquationSpec.repulsive(1), BoundaryCondition(0.0, 0.5), tanh_exact),
])
def test_soliton_oracles_projected(spec, bc, exact):
    tr = integrate(spec, bc, IntegratorConfig(x_max=20.0, project_invariant=True))
    xs = np.linspace(tr.x_start, 20.0, 4001)
    assert np.max(np.abs(dense_eval(tr, xs)[0] - exact(xs))) < 1e-6


def test_dense_eval_tanh_example():
    tr = integrate(EquationSpec.repulsive(1), BoundaryCondition(0.0, 0.5),
                   IntegratorConfig(x_max=20.0, project_invariant=True))
    p, _ = dense_eval(tr, 5.0)
    assert p == pytest.approx(0.7059066, abs=1e-7)
    assert p == pytest.approx(tanh_exact(5.0), abs=1e-8)


def test_projection_only_for_free_one_dimensional():
    with pytest.raises(ValueError):
        integrate(REP2, BoundaryCondition(0.5), IntegratorConfig(project_invariant=True))


# --- dense output ------------------------------------------------------------

def test_dense_eval_exact_at_nodes():
    tr = integrate(ATT2, BoundaryCondition(3.0))
    p, dp = dense_eval(tr, tr.x)
    assert np.array_equal(p, tr.psi) and np.array_equal(dp, tr.dpsi)


def test_dense_eval_exact_at_nodes_with_projection():
    tr = integrate(EquationSpec.attractive(1), BoundaryCondition(1.5),
                   IntegratorConfig(project_invariant=True))
    p, dp = dense_eval(tr, tr.x)
    assert np.max(np.abs(p - tr.psi)) < 1e-15 and np.max(np.abs(dp - tr.dpsi)) < 1e-15


def test_dense_eval_range():
    tr = integrate(REP2, BoundaryCondition(0.7), IntegratorConfig(x_max=5.0))
    with pytest.raises(TraceRangeError):
        dense_eval(tr, 0.0)
    with pytest.raises(TraceRangeError):
        dense_eval(tr, 5.1)


@pytest.mark.parametrize("spec, psi0", [(REP2, 0.7), (ATT2, 3.0), (EquationSpec.repulsive(3), 0.5)])
def test_ode_residual_at_random_points(spec, psi0):
    cfg = IntegratorConfig()
    tr = integrate(spec, BoundaryCondition(psi0), cfg)
    rng = np.random.default_rng(7)
    xs = np.sort(rng.uniform(0.1, tr.x_end, 100))
    p, dp = dense_eval(tr, xs)
    ddp = dense_second_derivative(tr, xs)
    accel = make_accel(spec)
    acc = np.array([accel(x, a, b) for x, a, b in zip(xs, p, dp)])
    # local scale: size of the terms of the equation at each point
    scale = np.maximum.reduce([np.ones_like(xs), np.abs(p), np.abs(dp), np.abs(acc)])
    assert np.all(np.abs(ddp - acc) <= 100 * cfg.rel_tol * scale)


def test_matches_scipy_reference():
    spec = ATT2
    accel = make_accel(spec)
    tr = integrate(spec, BoundaryCondition(3.0), IntegratorConfig(x_max=30.0))
    ref = solve_ivp(lambda x, y: [y[1], accel(x, y[0], y[1])], (tr.x_start, 30.0),
                    [tr.psi[0], tr.dpsi[0]], method="DOP853", rtol=1e-12, atol=1e-14,
                    dense_output=True)
    xs = np.linspace(tr.x_start, 30.0, 2001)
    assert np.max(np.abs(dense_eval(tr, xs)[0] - ref.sol(xs)[0])) < 1e-6


# --- qualification -----------------------------------------------------------

def test_order_check():
    assert abs(order_check() - 5.0) <= 0.3


def test_solve_fixed_harmonic():
    p, dp = solve_fixed(lambda x, y, v: -y, 0.0, 1.0, 0.0, 10.0, 400)
    assert p == pytest.approx(math.cos(10.0), abs=1e-9)
    assert dp == pytest.approx(-math.sin(10.0), abs=1e-9)


@pytest.mark.parametrize("interaction, psi0", [("repulsive", 0.5), ("repulsive", 0.7),
                                               ("attractive", 1.5)])
def test_energy_drift(interaction, psi0):
    spec = EquationSpec(1, interaction)
    tr = integrate(spec, BoundaryCondition(psi0), IntegratorConfig(rel_tol=1e-10, abs_tol=1e-13))
    e = first_integral(spec, tr.psi, tr.dpsi)
    assert np.max(np.abs(e - e[0])) < 1e-8


def test_energy_drift_default_tolerance_repulsive():
    spec = EquationSpec.repulsive(1)
    tr = integrate(spec, BoundaryCondition(0.7))
    e = first_integral(spec, tr.psi, tr.dpsi)
    assert abs(e[-1] - e[0]) < 1e-8


def test_projection_conserves_energy():
    spec = EquationSpec.attractive(1)
    tr = integrate(spec, BoundaryCondition(1.5), IntegratorConfig(project_invariant=True))
    e = first_integral(spec, tr.psi, tr.dpsi)
    assert np.max(np.abs(e - first_integral(spec, 1.5, 0.0))) < 1e-13


@pytest.mark.parametrize("spec, psi0", [(REP2, 0.7), (ATT2, 0.75), (ATT2, 1.0)])
def test_tolerance_monotonicity(spec, psi0):
    loose = IntegratorConfig(x_max=20.0)
    a = integrate(spec, BoundaryCondition(psi0), loose)
    b = integrate(spec, BoundaryCondition(psi0), loose.tightened(100))
    c = integrate(spec, BoundaryCondition(psi0), loose.tightened(1e4))
    loose_err = abs(a.psi[-1] - c.psi[-1])
    assert abs(a.psi[-1] - b.psi[-1]) <= 1.01 * loose_err + 1e-15
    assert abs(b.psi[-1] - c.psi[-1]) < loose_err


def test_bit_identical_repeats():
    a = integrate(ATT2, BoundaryCondition(5.0))
    b = integrate(ATT2, BoundaryCondition(5.0))
    assert a.x.tobytes() == b.x.tobytes()
    assert a.psi.tobytes() == b.psi.tobytes()
    assert a.coeffs.tobytes() == b.coeffs.tobytes()
    assert a.events == b.events


def test_step_failure_reported():
    tr = integrate(ATT2, BoundaryCondition(3.0), IntegratorConfig(max_steps=10))
    assert tr.termination is Termination.STEP_FAILURE
    assert "max_steps" in tr.message
    assert tr.x_end < 60.0


def test_step_underflow_reported():
    # psi' = psi^2 from psi = 1 blows up at x = 1; with no threshold the step underflows
    tr = solve_scalar(lambda x, p, dp: 2 * p * dp, 0.0, 1.0, 1.0, 2.0)
    assert tr.termination is Termination.STEP_FAILURE
    assert tr.x_end < 1.0


# --- events ------------------------------------------------------------------

def sin_surrogate(x_max, h=0.005):
    x = np.arange(1e-6, x_max + h / 2, h)
    x[-1] = x_max
    return SolutionTrace.from_hermite(x, np.sin(x), np.cos(x), -np.sin(x))


@pytest.mark.parametrize("x_max", [10.0, 20.0, 60.0])
def test_event_completeness_on_sin(x_max):
    tr = sin_surrogate(x_max)
    ev = find_events(tr, [0.0], extrema=True, tangency_levels=())
    zeros = [e for e in ev if e.kind.is_crossing]
    expected = np.pi * np.arange(1, int(x_max // np.pi) + 1)
    assert len(zeros) == len(expected)
    assert np.max(np.abs([e.x for e in zeros] - expected)) < 1e-10
    for e, k in zip(zeros, range(1, 100)):
        assert e.kind is (EventKind.CROSSING_DOWN if k % 2 else EventKind.CROSSING_UP)
    peaks = [e.x for e in ev if e.kind.is_extremum]
    assert np.max(np.abs(np.array(peaks) - (np.pi / 2 + np.pi * np.arange(len(peaks))))) < 1e-10


@settings(deadline=None, max_examples=25)
@given(level=st.floats(-0.95, 0.95))
def test_crossings_bracket_sign_change(level):
    tr = sin_surrogate(20.0, h=0.05)
    for e in tr.crossings(level):
        d = 1e-7
        probes = np.clip([e.x - d, e.x + d], tr.x_start, tr.x_end)
        before, after = dense_eval(tr, probes)[0] - level
        assert before * after < 0
        assert (after > 0) == (e.kind is EventKind.CROSSING_UP)


def test_events_sorted_and_watched():
    tr = integrate(REP2, BoundaryCondition(0.7))
    xs = [e.x for e in tr.events]
    assert xs == sorted(xs)
    assert set(tr.watch_levels) == {0.0, PSI_PLUS, -PSI_PLUS}
    zeros = tr.crossings(0.0)
    assert len(zeros) >= 5
    assert all(e.level == 0.0 for e in zeros)


def test_unwatched_level_computed_on_demand():
    tr = integrate(REP2, BoundaryCondition(0.7), watch_levels=[0.0])
    assert tr.crossings(0.3)
    assert not tr.events_of(EventKind.CROSSING_UP, 0.3)


def test_near_tangency_on_parabola():
    # (x - 3)^2 touches zero tangentially at x = 3
    x = np.linspace(0.0, 6.0, 601)
    tr = SolutionTrace.from_hermite(x, (x - 3) ** 2, 2 * (x - 3), 2 + 0 * x)
    ev = find_events(tr, [0.0], tangency_levels=(0.0,))
    tang = [e for e in ev if e.kind is EventKind.NEAR_TANGENCY]
    assert len(tang) == 1 and tang[0].x == pytest.approx(3.0, abs=1e-9)


def test_ordinary_crossings_are_not_tangencies():
    tr = integrate(REP2, BoundaryCondition(0.7))
    assert not tr.events_of(EventKind.NEAR_TANGENCY)


def test_trace_validation():
    with pytest.raises(ValueError):
        SolutionTrace.from_hermite([0.0, 0.0], [0, 0], [0, 0], [0, 0])
    with pytest.raises(ValueError):
        SolutionTrace.from_hermite([0.0], [0], [0], [0])


def test_defect_tol_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(defect_tol=0.0)
    IntegratorConfig(defect_tol=None)


def test_defect_control_bounds_dense_residual():
    spec = ATT2
    accel = make_accel(spec)
    on = integrate(spec, BoundaryCondition(5.0))
    off = integrate(spec, BoundaryCondition(5.0), IntegratorConfig(defect_tol=None))

    def worst(tr):
        xs = np.linspace(0.01, tr.x_end, 20001)
        p, dp = dense_eval(tr, xs)
        acc = np.array([accel(x, a, b) for x, a, b in zip(xs, p, dp)])
        scale = np.maximum.reduce([np.ones_like(xs), np.abs(p), np.abs(dp), np.abs(acc)])
        return np.max(np.abs(dense_second_derivative(tr, xs) - acc) / scale) / 1e-9

    assert worst(on) <= 55.0
    assert worst(off) > worst(on)
    assert off.n_steps < on.n_steps
