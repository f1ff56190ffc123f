import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bfexact import dist
from bfexact import two_stage as ts
from bfexact.errors import DegenerateDataError, DomainError, NoRealSolutionError, ProtocolError


def pilot_with_variance(n0, var, rng):
    z = rng.normal(size=n0)
    z = (z - z.mean()) / z.std(ddof=1)
    return z * math.sqrt(var)


def test_strict_ceiling():
    assert ts.strict_ceiling(25.3) == 26
    assert ts.strict_ceiling(26.0) == 27
    assert ts.strict_ceiling(0.0) == 1


def test_stage_one_sizes():
    rng = np.random.default_rng(0)
    x0 = pilot_with_variance(10, 4.0, rng)
    y0 = pilot_with_variance(10, 25.3, rng)
    plan = ts.stage_one(x0, y0, 1.0)
    assert plan.s1_sq == pytest.approx(4.0)
    assert plan.n1 == 11
    assert plan.n2 == 26
    assert plan.mean_x0 == pytest.approx(0.0, abs=1e-12)


def test_stage_one_integer_boundary():
    # x0 = (-a, a, 0, ..., 0) has unbiased variance exactly 2a^2 / (n0 - 1)
    x0 = np.zeros(14)
    x0[0], x0[1] = -6.5, 6.5
    assert x0.var(ddof=1) == 6.5
    y0 = pilot_with_variance(14, 1.0, np.random.default_rng(1))
    plan = ts.stage_one(x0, y0, 0.5)  # S^2 / h^2 = 26 exactly
    assert plan.n1 == 27


def test_stage_one_errors():
    with pytest.raises(DegenerateDataError):
        ts.stage_one(np.ones(5), np.arange(5.0), 1.0)
    with pytest.raises(DomainError):
        ts.stage_one(np.arange(5.0), np.arange(6.0), 1.0)
    with pytest.raises(DomainError):
        ts.stage_one(np.arange(5.0), np.arange(5.0), 0.0)


def test_solve_weights_plug_back():
    w = ts.solve_weights(10, 20, 15.0, 1.0)
    assert 10 * w.w1 + 10 * w.w2 == pytest.approx(1.0, abs=1e-12)
    assert 10 * w.w1 ** 2 + 10 * w.w2 ** 2 == pytest.approx(1 / 15, abs=1e-12)
    assert w.w2 >= w.w1 > 0


def test_solve_weights_equal_boundary_and_infeasible():
    w = ts.solve_weights(10, 20, 20.0, 1.0)
    assert w.w1 == pytest.approx(0.05, abs=1e-15)
    assert w.w2 == pytest.approx(0.05, abs=1e-15)
    with pytest.raises(NoRealSolutionError):
        ts.solve_weights(10, 20, 25.0, 1.0)
    with pytest.raises(NoRealSolutionError):
        ts.solve_weights(10, 10, 1.0, 1.0)


@settings(max_examples=200, deadline=None)
@given(n0=st.integers(2, 40), s_sq=st.floats(0.01, 500), h=st.floats(0.05, 5), extra=st.integers(0, 50))
def test_weights_invariants(n0, s_sq, h, extra):
    n_final = max(n0 + 1, ts.strict_ceiling(s_sq / h ** 2)) + extra
    w = ts.solve_weights(n0, n_final, s_sq, h)
    k = n_final - n0
    assert abs(n0 * w.w1 + k * w.w2 - 1) <= 1e-12
    assert abs(n0 * w.w1 ** 2 + k * w.w2 ** 2 - h * h / s_sq) <= 1e-12 * max(1, h * h / s_sq)


def _run_once(seed, n0=10, h=0.4, s1=1.0, s2=9.0):
    gen = dist.RngStream(seed).generator()
    x0, y0 = gen.normal(0, math.sqrt(s1), n0), gen.normal(0, math.sqrt(s2), n0)
    plan = ts.stage_one(x0, y0, h)
    x = np.concatenate([x0, gen.normal(0, math.sqrt(s1), plan.n1 - n0)])
    y = np.concatenate([y0, gen.normal(0, math.sqrt(s2), plan.n2 - n0)])
    return plan, x, y


def test_stage_two_fixed_width():
    widths = set()
    for seed in range(5):
        plan, x, y = _run_once(seed)
        out = ts.stage_two_ci(plan, x, y, alpha=0.05)
        assert out.ci_high - out.ci_low == pytest.approx(2 * out.c_quantile * plan.h, abs=1e-12)
        assert out.half_width == pytest.approx(out.c_quantile * plan.h, rel=1e-15)
        widths.add(round(out.half_width, 14))
    assert len(widths) == 1


def test_h_for_width():
    h = ts.h_for_width(1.0, 10, 0.05)
    assert 2 * h * dist.t_diff_quantile(9, 0.975) == pytest.approx(2.0, rel=1e-14)


def test_stage_two_prefix_protocol():
    plan, x, y = _run_once(3)
    bad = x.copy()
    bad[0] += 1.0
    with pytest.raises(ProtocolError):
        ts.stage_two_ci(plan, bad, y)
    with pytest.raises(ProtocolError):
        ts.stage_two_ci(plan, x[:-1], y)


def test_stage_two_coverage():
    cmp = ts.chapman_vs_te(1.0, 9.0, n0=8, d=0.6, reps=100_000, seed=17, with_te=False)
    cover = 1 - cmp.chapman_noncoverage
    assert abs(cover - 0.95) < 3 * math.sqrt(0.05 * 0.95 / 100_000)


def test_chapman_vs_te_table():
    cmp = ts.chapman_vs_te(1.0, 25.0, n0=10, d=1.0, reps=2000, seed=2)
    assert cmp.chapman_width == 2.0
    assert "not an exact" in cmp.caveat
    assert cmp.mean_n1 >= 11 and cmp.mean_n2 > cmp.mean_n1
    assert 0 <= cmp.te_noncoverage <= 1
    with pytest.raises(DomainError):
        ts.chapman_vs_te(reps=10)
