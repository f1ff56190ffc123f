import math

import numpy as np
import pytest

from bfexact import bf_tests as bt
from bfexact import dist
from bfexact import sim
from bfexact.bf_tests import Method
from bfexact.errors import DomainError

SMALL_GRID = ((1.0, 25.0), (13.0, 13.0), (25.0, 1.0))


def test_canonical_grid():
    g = sim.canonical_grid()
    assert len(g) == 25
    assert g[0] == (1.0, 25.0)
    assert g[12] == (13.0, 13.0)
    assert all(a + b == 26 for a, b in g)


def test_config_validation():
    with pytest.raises(DomainError):
        sim.SweepConfig(reps=10)
    with pytest.raises(DomainError):
        sim.SweepConfig(methods=("tp",))
    with pytest.raises(DomainError):
        sim.SweepConfig(variance_grid=((1.0, -1.0),))
    cfg = sim.SweepConfig(methods=("te", "welch", "te"))
    assert cfg.methods == (Method.TE, Method.WELCH)


def test_sweep_matches_scalar_tests():
    # every replication at grid point 1 redrawn by hand and run through the scalar API
    cfg = sim.SweepConfig(m=9, n=5, variance_grid=SMALL_GRID, reps=1000, seed=4, mu_diff=1.0)
    res = sim.run_sweep(cfg, threads=1)
    gseed = dist.derive_seed(4, 1)
    rej = {m: 0 for m in sim.SWEEP_METHODS}
    for r in range(1000):
        gen = dist.RngStream(gseed, r).generator()
        x = gen.normal(0, math.sqrt(13.0), 9)
        y = gen.normal(-1.0, math.sqrt(13.0), 5)
        for m in (Method.TE, Method.TN, Method.WELCH, Method.SCHEFFE):
            rej[m] += bt.run_test(m, x, y).reject
        rej[Method.PAIRED] += bt.paired_test(x, y, rng=gen).reject
    for m in sim.SWEEP_METHODS:
        assert res.select(m)[1].rejections == rej[m], m


def test_thread_count_invariance(monkeypatch):
    cfg = sim.SweepConfig(m=7, n=5, variance_grid=SMALL_GRID, reps=6000, seed=8)
    serial = sim.run_sweep(cfg, threads=1).to_csv()
    assert sim.run_sweep(cfg, threads=3).to_csv() == serial
    monkeypatch.setenv("BF_EXACT_THREADS", "2")
    assert sim.resolve_threads() == 2
    assert sim.run_sweep(cfg).to_csv() == serial


def test_resolve_threads_env(monkeypatch):
    monkeypatch.setenv("BF_EXACT_THREADS", "0")
    assert sim.resolve_threads() >= 1
    monkeypatch.setenv("BF_EXACT_THREADS", "x")
    with pytest.raises(DomainError):
        sim.resolve_threads()
    assert sim.resolve_threads(5) == 5


def test_te_equals_paired_at_equal_sizes():
    cfg = sim.SweepConfig(m=10, n=10, variance_grid=SMALL_GRID, reps=4000, seed=1, methods=("te", "paired"))
    res = sim.run_sweep(cfg, threads=1)
    for a, b in zip(res.select("te"), res.select("paired")):
        assert a.rejections == b.rejections


def test_alpha_monotone_and_power():
    base = dict(m=7, n=5, variance_grid=SMALL_GRID, reps=4000, seed=2, methods=("te",))
    r05 = sim.run_sweep(sim.SweepConfig(alpha=0.05, **base), threads=1).rates("te")
    r01 = sim.run_sweep(sim.SweepConfig(alpha=0.01, **base), threads=1).rates("te")
    pw = sim.run_sweep(sim.SweepConfig(alpha=0.05, mu_diff=2.0, **base), threads=1).rates("te")
    assert np.all(r01 <= r05)
    assert np.all(pw >= r05)


def test_csv_round_trip_and_se(tmp_path):
    cfg = sim.SweepConfig(m=6, n=4, variance_grid=SMALL_GRID, reps=1000, seed=3)
    res = sim.run_sweep(cfg, threads=1)
    path = tmp_path / "s.csv"
    text = res.to_csv(path)
    assert text.splitlines()[0] == ",".join(sim.CSV_COLUMNS)
    assert len(text.splitlines()) == 1 + len(SMALL_GRID) * len(sim.SWEEP_METHODS)
    back = sim.SweepResult.from_csv(str(path))
    assert back.to_csv() == text
    for row in res.rows:
        assert row.se == pytest.approx(math.sqrt(row.rate * (1 - row.rate) / row.reps), abs=1e-12)
        assert row.degenerate_count == 0


def test_degenerate_draws_are_counted():
    est = np.array([0.0, 1.0, 2.0])
    se = np.array([0.0, 0.0, 0.5])
    rej, deg = sim._decide(est, se, 4.0, 0.05, np.full(3, 1e-13))
    assert list(deg) == [False, True, False]
    assert list(rej) == [False, False, True]


def test_exact_methods_size_small():
    cfg = sim.SweepConfig(m=15, n=15, variance_grid=SMALL_GRID, reps=20_000, seed=6)
    res = sim.run_sweep(cfg, threads=1)
    tol = 3 * math.sqrt(0.05 * 0.95 / 20_000)
    for m in (Method.TE, Method.PAIRED, Method.SCHEFFE):
        assert np.all(np.abs(res.rates(m) - 0.05) <= tol), m


def test_figure_tables_power_ordering():
    tables = sim.figure_tables(sizes=((15, 15), (7, 5)), reps=4000, seed=0, methods=("te",))
    big, small = tables[(15, 15)]["power"].rates("te"), tables[(7, 5)]["power"].rates("te")
    assert np.all(small < big)
    assert set(tables[(7, 5)]) == {"size", "power"}


# Exact Welch size at (m, n) = (50, 5), frozen from a 800 x 800 Gauss-Legendre
# quadrature over the two sample-variance laws (independent of the simulator).
WELCH_EXACT_50_5 = {1: 0.050840325866154765, 8: 0.055426991562111186, 16: 0.058006896119580556,
                    25: 0.04968303928354923}


def test_welch_sweep_matches_exact_size():
    grid = tuple((float(k), float(26 - k)) for k in WELCH_EXACT_50_5)
    cfg = sim.SweepConfig(m=50, n=5, variance_grid=grid, reps=40_000, seed=12, methods=("welch",))
    rates = sim.run_sweep(cfg, threads=1).rates("welch")
    for rate, exact in zip(rates, WELCH_EXACT_50_5.values()):
        assert abs(rate - exact) < 3.5 * math.sqrt(exact * (1 - exact) / 40_000)
