import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contactlax.jetalg import P, var
from contactlax.numerics import (
    DomainError,
    FieldSampler,
    FlowError,
    FlowState,
    commutation_defect,
    constant_sampler,
    convergence_order,
    defect_sweep,
    integrate_flow,
    lax_test,
    reduced_example1,
    residual_eval,
    simple_wave_sampler,
    write_csv,
)
from contactlax.systemgen import example1, extract_system

ST0 = FlowState(1.0, 0.3, 0.0, 0.0, 0.0)
DELTAS = [0.02, 0.01, 0.005]


# -- single flows ----------------------------------------------------------------


@pytest.mark.parametrize("c", [0.0, 0.7, -1.3])
def test_constant_field_flow_closed_form(c):
    # f = p^2 + c gives X_f = (2p, 0, c - p^2); the flow moves against it
    f, _ = reduced_example1()
    s = 1.0
    out = integrate_flow(f, constant_sampler([c, 0, 0, 1.5 * c]), FlowState(0.2, 0.5, 0.1), "y", s / 4, steps=4)
    assert out.p == pytest.approx(0.5, abs=1e-12)
    assert out.x == pytest.approx(0.2 - 2 * 0.5 * s, abs=1e-12)
    assert out.z == pytest.approx(0.1 - (c - 0.25) * s, abs=1e-12)
    assert out.y == pytest.approx(s)


def test_pure_p_translates_x():
    out = integrate_flow(P, constant_sampler([0.0]), FlowState(1.0, 2.0, 3.0), "t", 0.25)
    assert (out.x, out.p, out.z) == pytest.approx((0.75, 2.0, 3.0), abs=1e-14)
    assert out.t == 0.25


def test_zero_length_flow_is_identity():
    f, _ = reduced_example1()
    out = integrate_flow(f, simple_wave_sampler(), ST0, "y", 0.0)
    assert out == ST0


def test_p_free_x_component_keeps_x():
    # h = u has cx = h_p = 0
    out = integrate_flow(var(0), simple_wave_sampler(), ST0, "t", 0.01, steps=5)
    assert out.x == ST0.x


def test_forward_then_backward_returns():
    f, g = reduced_example1()
    sw = simple_wave_sampler()
    fwd = integrate_flow(g, sw, ST0, "t", 0.01, steps=10)
    back = integrate_flow(g, sw, fwd, "t", -0.01, steps=10)
    assert np.linalg.norm(back.fiber() - ST0.fiber()) < 1e-10
    assert back.t == pytest.approx(0.0, abs=1e-15)


def test_flow_rejects_bad_direction_and_steps():
    f, _ = reduced_example1()
    with pytest.raises(ValueError):
        integrate_flow(f, simple_wave_sampler(), ST0, "x", 0.1)
    with pytest.raises(ValueError):
        integrate_flow(f, simple_wave_sampler(), ST0, "y", 0.1, steps=0)


def test_flow_reports_non_finite_state():
    blowup = FieldSampler(lambda x, y, z, t: ((math.inf,), ((0.0,) * 4,)), 1)
    with pytest.raises(FlowError) as err:
        integrate_flow(var(0) * P, blowup, ST0, "y", 0.1)
    assert isinstance(err.value.state, FlowState)


def test_simple_wave_domain():
    with pytest.raises(DomainError):
        simple_wave_sampler()(0.0, 0.0, 0.0, 0.7)


@given(st.sampled_from([1.0, 1.1]), st.floats(-2, 2), st.floats(-1, 1), st.floats(-1, 1), st.floats(-0.5, 0.3))
@settings(max_examples=40, deadline=None)
def test_simple_wave_derivatives_consistent(scale, x, y, z, t):
    assert simple_wave_sampler(scale).derivative_error([x, y, z, t], 1e-4) < 1e-5


# -- commutation -------------------------------------------------------------------


def test_constant_field_flows_commute():
    f, g = reduced_example1()
    assert commutation_defect(f, g, constant_sampler([0.4, -0.2, 0, 0.6]), ST0, 0.05) <= 1e-12


def test_solution_defect_shrinks_fast():
    f, g = reduced_example1()
    sw = simple_wave_sampler()
    big = commutation_defect(f, g, sw, ST0, 0.02)
    small = commutation_defect(f, g, sw, ST0, 0.01)
    assert big / small >= 8


def test_solution_order_at_least_three():
    rows, order = lax_test(DELTAS)
    assert order >= 3.0
    assert [d for d, _ in rows] == DELTAS


def test_perturbed_order_near_two():
    rows, order = lax_test(DELTAS, perturb=1.1)
    assert 1.8 <= order <= 2.2
    base = dict(lax_test(DELTAS)[0])
    assert dict(rows)[0.01] >= 10 * base[0.01]


def test_sweep_floors_defects():
    f, g = reduced_example1()
    rows = defect_sweep(f, g, constant_sampler([0.4, 0, 0, 0.6]), ST0, DELTAS)
    assert all(e > 0 for _, e in rows)


# -- convergence order ---------------------------------------------------------------


@pytest.mark.parametrize("k", [0.0, 2.0, 3.0, 4.5])
def test_convergence_order_recovers_power(k):
    d = np.array([0.1, 0.05, 0.025, 0.0125])
    assert convergence_order(d, 7 * d ** k) == pytest.approx(k, abs=1e-10)


@given(st.floats(0.5, 6), st.floats(0.01, 100))
@settings(max_examples=40, deadline=None)
def test_convergence_order_ignores_prefactor(k, c):
    d = np.array([0.02, 0.01, 0.005])
    assert convergence_order(d, c * d ** k) == pytest.approx(k, abs=1e-8)


@pytest.mark.parametrize(
    "deltas, defects",
    [
        ([0.1, 0.05], [1.0, 0.5]),
        ([0.1, 0.05, 0.02], [1.0, 0.0, 0.5]),
        ([0.1, -0.05, 0.02], [1.0, 0.5, 0.1]),
        ([0.1, 0.1, 0.1], [1.0, 0.5, 0.1]),
        ([0.1, 0.05, 0.02], [1.0, 0.5]),
    ],
)
def test_convergence_order_rejects_degenerate(deltas, defects):
    with pytest.raises(ValueError):
        convergence_order(deltas, defects)


def test_csv_layout():
    buf = io.StringIO()
    write_csv([(0.02, 1e-10), (0.01, 2e-12)], buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "delta,defect"
    assert lines[1] == "0.02,1e-10"
    assert len(lines) == 3


# -- residuals ----------------------------------------------------------------------


def test_simple_wave_solves_four_component_system():
    system = extract_system(*example1(), ("u", "v", "w", "q"))
    h = 1e-3
    res = residual_eval(system, simple_wave_sampler(), [0.7, 0.0, 0.0, 0.2], h)
    # centered differences of x/(1 - 3t/2) in t carry an O(h^2) error
    assert max(abs(r) for r in res) < 50 * h * h


def test_constant_field_residual_vanishes():
    system = extract_system(*example1(), ("u", "v", "w", "q"))
    res = residual_eval(system, constant_sampler([0.3, -1.0, 0.5, 2.0]), [0.1, 0.2, 0.3, 0.4])
    assert max(abs(r) for r in res) <= 1e-13


def test_perturbed_wave_is_not_a_solution():
    system = extract_system(*example1(), ("u", "v", "w", "q"))
    res = residual_eval(system, simple_wave_sampler(1.1), [0.7, 0.0, 0.0, 0.2])
    assert max(abs(r) for r in res) > 1e-2
