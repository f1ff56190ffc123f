"""Acceptance criteria, one test each, at their stated tolerances.

Every test prints a single ``PASS``/``FAIL`` line (bypassing pytest's output
capture) before asserting. Run the file alone with

    pytest tests/test_acceptance.py -v

or directly with ``python tests/test_acceptance.py``.
"""

import json
import math
import sys

import numpy as np
import pytest

from bfexact import bf_tests as bt
from bfexact import cli, dist, sim, tp_family, two_stage
from bfexact.mv_te import mv_te_test

SEED = 20240611


def binom_se(p, reps):
    return math.sqrt(p * (1 - p) / reps)


@pytest.fixture
def report(request):
    capman = request.config.pluginmanager.getplugin("capturemanager")

    def emit(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        if capman is not None:
            with capman.global_and_fixture_disabled():
                print("\n" + line, flush=True)
        else:
            print(line, flush=True)
        assert ok, line
    return emit


# 1 ---------------------------------------------------------------------------


def test_c01_te_exact_size(report):
    reps, tol = 20_000, 4 * binom_se(0.05, 20_000)
    worst = 0.0
    for i, (m, n) in enumerate(sim.FIGURE_SIZES):
        cfg = sim.SweepConfig(m=m, n=n, reps=reps, alpha=0.05, seed=dist.derive_seed(SEED, 1, i), methods=("te",))
        dev = np.abs(sim.run_sweep(cfg).rates("te") - 0.05)
        worst = max(worst, float(dev.max()))
    report(1, worst <= tol, f"max |TE rate - 0.05| = {worst:.4f} over 4 size pairs x 25 grid points (tol {tol:.4f})")


# 2 ---------------------------------------------------------------------------


def test_c02_paired_equivalence(report):
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        scale = rng.uniform(0.1, 10, 2)
        x = rng.normal(rng.normal(), scale[0], n)
        y = rng.normal(rng.normal(), scale[1], n)
        delta0 = float(rng.normal())
        a, b = bt.te_test(x, y, delta0), bt.paired_test(x, y, delta0)
        for f in ("statistic", "df", "p_value", "ci_low", "ci_high"):
            u, v = getattr(a, f), getattr(b, f)
            worst = max(worst, abs(u - v) / max(1.0, abs(v)))
    report(2, worst <= 1e-12, f"max scaled discrepancy TE vs paired over 1000 datasets = {worst:.2e} (tol 1e-12)")


# 3 ---------------------------------------------------------------------------


def test_c03_welch_failure_exhibit(report):
    cfg = sim.SweepConfig(m=50, n=5, reps=100_000, alpha=0.05, seed=dist.derive_seed(SEED, 3), methods=("te", "welch"))
    res = sim.run_sweep(cfg)
    te_dev = np.abs(res.rates("te") - 0.05)
    welch_dev = np.abs(res.rates("welch") - 0.05)
    ok = bool(welch_dev.max() > 0.01 and te_dev.max() <= 0.005)
    report(3, ok, f"max |Welch - 0.05| = {welch_dev.max():.4f} (> 0.01 needed), "
                  f"max |TE - 0.05| = {te_dev.max():.4f} (<= 0.005 needed)")


# 4 ---------------------------------------------------------------------------


def test_c04_lemma_identities(report):
    worst, where = 0.0, ""
    for n in (2, 3, 5, 10):
        lc = tp_family.lemma_constants_mc(n, sample_count=10**6, seed=SEED)
        for name, (est, se) in lc.residuals.items():
            z = abs(est) / se
            if z > worst:
                worst, where = z, f"{name} at n={n}"
    report(4, worst <= 3.0, f"largest |residual| / SE = {worst:.2f} ({where}); tol 3")


# 5 ---------------------------------------------------------------------------


def test_c05_ratio_law_closed_form(report):
    from scipy import special

    z = np.geomspace(0.01, 20.0, 100)
    worst = 0.0
    for n in (2, 5, 10):
        closed = z ** -0.5 * (1 + z) ** (-(n + 1) / 2) / math.exp(special.betaln(0.5, n / 2))
        worst = max(worst, float(np.max(np.abs(tp_family.f_p_pdf(z, n, 2) - closed))))
    report(5, worst <= 1e-6, f"max |f_p_pdf - closed form| at p=2 = {worst:.2e} (tol 1e-6)")


# 6 ---------------------------------------------------------------------------


def test_c06_stationarity(report):
    others = (0.5, 1.0, 1.5, 2.5, 3.0, 4.0)
    worst_rel, ok_min, worst_gap = 0.0, True, math.inf
    for n in (3, 5, 10):
        for alpha in (0.05, 0.1):
            rep = tp_family.stationarity_check(n, alpha, h=0.05, grid=others)
            worst_rel = max(worst_rel, rep.relative_derivative)
            gap = min(v for _, v in rep.l_values) - rep.l_at_2
            worst_gap = min(worst_gap, gap)
            ok_min &= gap >= 0
    ok = worst_rel < 0.01 and ok_min
    report(6, ok, f"max |l'(2)|/l(2) = {worst_rel:.2e} (tol 0.01); min over grid of l(p) - l(2) = {worst_gap:.4f} (>= 0)")


# 7 ---------------------------------------------------------------------------


def test_c07_chapman(report):
    reps, alpha = 20_000, 0.05
    tol = 3 * binom_se(alpha, reps)
    worst, lengths, k = 0.0, {}, 0
    for n0 in (10, 20):
        for s1, s2 in ((1.0, 25.0), (13.0, 13.0), (25.0, 1.0)):
            res = two_stage.chapman_vs_te(s1, s2, n0=n0, d=1.0, alpha=alpha, reps=reps, seed=SEED, stream_path=(7, k))
            k += 1
            worst = max(worst, abs(res.chapman_noncoverage - alpha))
            if (s1, s2) == (1.0, 25.0):
                lengths[n0] = res.te_mean_length
    ok = worst <= tol and all(v < 2.0 for v in lengths.values())
    report(7, ok, f"max |non-coverage - 0.05| = {worst:.4f} (tol {tol:.4f}); mean T_e length at sigma^2=(1,25): "
                  f"n0=10 {lengths[10]:.4f}, n0=20 {lengths[20]:.4f} (< 2 needed)")


# 8 ---------------------------------------------------------------------------


def test_c08_multivariate(report):
    reps = 100_000
    cal = sim.mv_calibration([[1.0, 0.5], [0.5, 2.0]], [[9.0, -2.0], [-2.0, 1.5]], m=12, n=8, reps=reps, seed=SEED)
    tol = 3 * binom_se(0.05, reps)
    rng = np.random.default_rng(SEED)
    worst = 0.0
    for _ in range(200):
        m, n = (int(v) for v in rng.integers(2, 20, 2))
        x, y = rng.normal(0, rng.uniform(0.2, 5), (m, 1)), rng.normal(1, rng.uniform(0.2, 5), (n, 1))
        t2 = mv_te_test(x, y).t2
        ref = bt.te_test(x[:, 0], y[:, 0]).statistic ** 2
        worst = max(worst, abs(t2 - ref) / max(1.0, ref))
    ok = abs(cal.rate - 0.05) <= tol and worst <= 1e-10
    report(8, ok, f"mv rate = {cal.rate:.4f} (0.05 +- {tol:.4f}); p=1 reduction max scaled error {worst:.1e} (tol 1e-10)")


# 9 ---------------------------------------------------------------------------


def test_c09_determinism(report, tmp_path):
    outs = {}
    for threads in (1, 8):
        out = tmp_path / f"t{threads}.csv"
        code = cli.main(["simulate", "--m", "7", "--n", "5", "--reps", "4000", "--seed", str(SEED),
                         "--threads", str(threads), "--out", str(out)])
        assert code == 0
        manifest = json.loads((tmp_path / f"t{threads}.csv.manifest.json").read_text())
        manifest.pop("timestamp")
        manifest.pop("outputs")
        outs[threads] = (out.read_bytes(), manifest)
    ok = outs[1][0] == outs[8][0] and outs[1][1] == outs[8][1]
    report(9, ok, f"1-thread and 8-thread CSVs bitwise {'identical' if ok else 'different'} "
                  f"({len(outs[1][0])} bytes, 125 rows), manifests equal modulo timestamp")


# 10 --------------------------------------------------------------------------


def test_c10_round_trips(report):
    rng = np.random.default_rng(SEED)
    worst = {"t": 0.0, "F": 0.0, "t_diff": 0.0}
    for _ in range(300):
        q, nu = rng.uniform(1e-4, 1 - 1e-4), rng.uniform(0.5, 200)
        worst["t"] = max(worst["t"], abs(float(dist.t_cdf(dist.t_quantile(q, nu), nu)) - q))
        d1, d2 = rng.uniform(0.5, 100, 2)
        worst["F"] = max(worst["F"], abs(float(dist.f_cdf(dist.f_quantile(q, d1, d2), d1, d2)) - q))
    for _ in range(40):
        q, nu = rng.uniform(1e-3, 1 - 1e-3), int(rng.integers(1, 60))
        worst["t_diff"] = max(worst["t_diff"], abs(dist.t_diff_cdf(dist.t_diff_quantile(nu, q), nu) - q))
    ok = max(worst.values()) <= 1e-9
    report(10, ok, "max |cdf(quantile(q)) - q|: " + ", ".join(f"{k} {v:.1e}" for k, v in worst.items()) + " (tol 1e-9)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
