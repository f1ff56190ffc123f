"""Chapman's two-stage fixed-width interval for ``mu_x - mu_y``.

Stage one draws ``n0`` observations from each population and sizes the
second stage from the pilot variances. Unequal weights ``a1`` (pilot) and
``a2`` (stage two) make ``(sum a_i x_i - mu_x) / h`` exactly Student t with
``n0 - 1`` df, so the difference of the two weighted means has the
t-difference law and the interval ``+-c h`` has exact coverage and a width
that does not depend on the data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import dist
from .bf_tests import te_parts
from .errors import DegenerateDataError, DomainError, InsufficientSampleError, NoRealSolutionError, ProtocolError

__all__ = [
    "COMBINED_CAVEAT",
    "ChapmanComparison",
    "ChapmanOutcome",
    "StageOnePlan",
    "StageWeights",
    "chapman_vs_te",
    "h_for_width",
    "solve_weights",
    "stage_one",
    "stage_two_ci",
    "strict_ceiling",
]

PLUGBACK_TOL = 1e-12
COMBINED_CAVEAT = (
    "T_e on the pooled two-stage samples is not an exact procedure: the stage-two "
    "sizes depend on the pilot variances"
)


def strict_ceiling(x: float) -> int:
    """Smallest integer strictly greater than ``x`` (so 26.0 maps to 27)."""
    return math.floor(x) + 1


@dataclass(frozen=True)
class StageOnePlan:
    n0: int
    h: float
    mean_x0: float
    mean_y0: float
    s1_sq: float
    s2_sq: float
    n1: int
    n2: int
    x0: np.ndarray
    y0: np.ndarray


@dataclass(frozen=True)
class StageWeights:
    """Pilot weight ``w1`` and stage-two weight ``w2`` for one population."""

    w1: float
    w2: float
    n0: int
    n_final: int

    def apply(self, sample) -> float:
        sample = np.asarray(sample, dtype=float)
        return self.w1 * sample[: self.n0].sum() + self.w2 * sample[self.n0:].sum()


@dataclass(frozen=True)
class ChapmanOutcome:
    weighted_mean_x: float
    weighted_mean_y: float
    ci_low: float
    ci_high: float
    c_quantile: float
    half_width: float
    weights_x: StageWeights
    weights_y: StageWeights

    @property
    def estimate(self) -> float:
        return self.weighted_mean_x - self.weighted_mean_y

    def covers(self, delta) -> bool:
        return self.ci_low <= delta <= self.ci_high


def _pilot(v, name, n0=None):
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise InsufficientSampleError(f"{name} must be a 1-D sample with at least 2 observations")
    if n0 is not None and v.size != n0:
        raise DomainError(f"stage-one samples must have equal size, got {v.size} and {n0}")
    if not np.all(np.isfinite(v)):
        raise DomainError(f"{name} contains non-finite values")
    return v


def stage_one(x0, y0, h) -> StageOnePlan:
    """Pilot statistics and final sizes ``n_i = max(n0 + 1, [S_i^2 / h^2])``."""
    x0 = _pilot(x0, "x0")
    y0 = _pilot(y0, "y0", x0.size)
    h = float(h)
    if not h > 0 or not math.isfinite(h):
        raise DomainError("h must be a positive real")
    n0 = x0.size
    s1, s2 = float(x0.var(ddof=1)), float(y0.var(ddof=1))
    if s1 <= 0 or s2 <= 0:
        raise DegenerateDataError("stage-one variance is zero")
    n1 = max(n0 + 1, strict_ceiling(s1 / h ** 2))
    n2 = max(n0 + 1, strict_ceiling(s2 / h ** 2))
    return StageOnePlan(n0, h, float(x0.mean()), float(y0.mean()), s1, s2, n1, n2, x0, y0)


def solve_weights(n0, n_final, s_sq, h) -> StageWeights:
    """Solve ``n0 w1 + k w2 = 1`` and ``n0 w1^2 + k w2^2 = h^2 / s_sq`` with ``k = n_final - n0``.

    Writing ``N = n_final`` and ``r = h^2 / s_sq`` the roots are
    ``w1 = (1 -+ sqrt(k (N r - 1) / n0)) / N`` with matching
    ``w2 = (1 +- sqrt(n0 (N r - 1) / k)) / N``; they are real iff ``N r >= 1``.
    An all-positive root is preferred, and among equals the one with
    ``w2 >= w1``.
    """
    n0, n_final = int(n0), int(n_final)
    s_sq, h = float(s_sq), float(h)
    if n0 < 2 or s_sq <= 0 or h <= 0:
        raise DomainError("need n0 >= 2, s_sq > 0 and h > 0")
    k = n_final - n0
    if k < 1:
        raise NoRealSolutionError(f"n_final={n_final} must exceed n0={n0}")
    r = h * h / s_sq
    disc = n_final * r - 1.0
    if disc < -1e-14:
        raise NoRealSolutionError(f"n_final={n_final} is below s_sq/h^2={1 / r:.6g}")
    disc = max(disc, 0.0)
    d1 = math.sqrt(k * disc / n0) / n_final
    d2 = math.sqrt(n0 * disc / k) / n_final
    base = 1.0 / n_final
    upper = (base - d1, base + d2)  # w2 >= w1
    lower = (base + d1, base - d2)
    choice = upper if min(upper) > 0 or min(lower) <= 0 else lower
    w = StageWeights(choice[0], choice[1], n0, n_final)
    if abs(n0 * w.w1 + k * w.w2 - 1.0) > PLUGBACK_TOL or abs(n0 * w.w1 ** 2 + k * w.w2 ** 2 - r) > PLUGBACK_TOL * max(1.0, r):
        raise NoRealSolutionError("weight equations not satisfied to tolerance")
    return w


def _check_prefix(full, pilot, size, name):
    full = np.asarray(full, dtype=float)
    if full.ndim != 1 or full.size != size:
        raise ProtocolError(f"{name} must hold exactly {size} observations, got {full.size}")
    if not np.array_equal(full[: pilot.size], pilot):
        raise ProtocolError(f"the first {pilot.size} entries of {name} must be the stage-one sample")
    return full


def stage_two_ci(plan: StageOnePlan, x_full, y_full, alpha=0.05) -> ChapmanOutcome:
    """Fixed-width interval ``Xw - Yw +- c h`` with c from the t-difference law."""
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    x_full = _check_prefix(x_full, plan.x0, plan.n1, "x_full")
    y_full = _check_prefix(y_full, plan.y0, plan.n2, "y_full")
    wx = solve_weights(plan.n0, plan.n1, plan.s1_sq, plan.h)
    wy = solve_weights(plan.n0, plan.n2, plan.s2_sq, plan.h)
    mx, my = wx.apply(x_full), wy.apply(y_full)
    c = dist.t_diff_quantile(plan.n0 - 1, 1.0 - alpha / 2.0)
    half = c * plan.h
    return ChapmanOutcome(mx, my, mx - my - half, mx - my + half, c, half, wx, wy)


def h_for_width(d, n0, alpha) -> float:
    """Stage-one ``h`` giving a full interval width of exactly ``2 d``."""
    return float(d) / dist.t_diff_quantile(int(n0) - 1, 1.0 - float(alpha) / 2.0)


@dataclass(frozen=True)
class ChapmanComparison:
    """Mean interval lengths and non-coverage for Chapman and pooled T_e."""

    sigma1_sq: float
    sigma2_sq: float
    n0: int
    d: float
    alpha: float
    reps: int
    seed: int
    chapman_width: float
    chapman_noncoverage: float
    te_mean_length: float
    te_noncoverage: float
    mean_n1: float
    mean_n2: float
    caveat: str = COMBINED_CAVEAT

    @property
    def chapman_se(self) -> float:
        return math.sqrt(self.alpha * (1 - self.alpha) / self.reps)

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def chapman_vs_te(sigma1_sq=1.0, sigma2_sq=25.0, n0=10, d=1.0, alpha=0.05, reps=20_000, seed=0,
                  mu1=0.0, mu2=0.0, with_te=True, stream_path=()) -> ChapmanComparison:
    """Replicate Chapman's procedure at width ``2 d`` and T_e on the pooled samples.

    Each replication uses its own counter-based stream: the two pilot
    samples come first, then the stage-two extensions for x and y.
    """
    reps, n0 = int(reps), int(n0)
    if reps < 1000:
        raise DomainError("reps must be at least 1000")
    if n0 < 2:
        raise DomainError("n0 must be at least 2")
    if sigma1_sq <= 0 or sigma2_sq <= 0 or d <= 0:
        raise DomainError("variances and d must be positive")
    alpha = float(alpha)
    c = dist.t_diff_quantile(n0 - 1, 1.0 - alpha / 2.0)
    h = float(d) / c
    delta = mu1 - mu2
    sd1, sd2 = math.sqrt(sigma1_sq), math.sqrt(sigma2_sq)
    gseed = dist.derive_seed(seed, *stream_path)
    pool = dist.StreamPool()
    miss_c = miss_te = 0
    te_len = 0.0
    tot_n1 = tot_n2 = 0
    crit_cache = {}
    for r in range(reps):
        gen = pool.generator(dist.RngStream(gseed, r))
        x0 = gen.normal(mu1, sd1, n0)
        y0 = gen.normal(mu2, sd2, n0)
        s1, s2 = x0.var(ddof=1), y0.var(ddof=1)
        n1 = max(n0 + 1, strict_ceiling(s1 / h ** 2))
        n2 = max(n0 + 1, strict_ceiling(s2 / h ** 2))
        x = np.concatenate([x0, gen.normal(mu1, sd1, n1 - n0)])
        y = np.concatenate([y0, gen.normal(mu2, sd2, n2 - n0)])
        wx = solve_weights(n0, n1, s1, h)
        wy = solve_weights(n0, n2, s2, h)
        est = wx.apply(x) - wy.apply(y)
        miss_c += abs(est - delta) > d
        tot_n1 += n1
        tot_n2 += n2
        if with_te:
            e, se, df = te_parts(x, y)
            crit = crit_cache.get(df)
            if crit is None:
                crit = crit_cache[df] = dist.t_quantile(1.0 - alpha / 2.0, df)
            te_len += 2.0 * crit * float(se)
            miss_te += abs(float(e) - delta) > crit * float(se)
    nan = float("nan")
    return ChapmanComparison(
        sigma1_sq=float(sigma1_sq), sigma2_sq=float(sigma2_sq), n0=n0, d=float(d), alpha=alpha,
        reps=reps, seed=int(seed), chapman_width=2.0 * float(d),
        chapman_noncoverage=miss_c / reps,
        te_mean_length=te_len / reps if with_te else nan,
        te_noncoverage=miss_te / reps if with_te else nan,
        mean_n1=tot_n1 / reps, mean_n2=tot_n2 / reps,
    )
