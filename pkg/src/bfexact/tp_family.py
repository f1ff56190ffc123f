"""Generalized chi^p laws, the t_p test family and its interval length l(p).

For iid standard normals X_1..X_n, ``W = sum |X_i|^p`` follows chi^p_n. Its
density is obtained by repeated one-dimensional convolution of the chi^p_1
density. Writing ``a = 1/p`` and ``s = W**a`` (the p-norm of X), the density
factors as

    f_W(y) = y**(n*a - 1) * g_n(s),

where ``g_n`` is an entire function of ``s**2``. The convolution step

    g_{k+1}(s) = int_0^1 t**(a-1) (1-t)**(k*a-1) g_k(s (1-t)**a) h(s t**a) dt,
    h(r) = 2/(p sqrt(2 pi)) exp(-r**2 / 2),

is evaluated with tanh-sinh quadrature, which absorbs the algebraic endpoint
singularities, and ``log g_k`` is tabulated at Chebyshev nodes in ``s`` and
interpolated barycentrically. Everything downstream (normalization, moments,
the ratio law chi^p_1 / chi^p_n) reduces to smooth integrals in ``s`` that
Gauss-Legendre quadrature handles to near machine precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special, stats
from scipy.interpolate import BarycentricInterpolator

from . import dist
from .bf_tests import Method, TestOutcome, _as_sample, _check_alpha
from .errors import DegenerateDataError, DomainError, NumericAccuracyError
from .transform import project_many

__all__ = [
    "ChiPDensity",
    "IdentityCheck",
    "LemmaConstants",
    "StationarityReport",
    "TpModel",
    "chi_p_1_pdf",
    "chi_p_n_pdf",
    "ci_length_expectation",
    "f_p_cdf",
    "f_p_pdf",
    "f_p_sf",
    "integral_identity_checks",
    "lemma_constants_mc",
    "stationarity_check",
    "tp_expectation",
    "tp_quantile",
    "tp_test",
]

CHEB_NODES = 160
TS_STEP = 1.0 / 64.0
TS_RANGE = 4.0
GL_NODES = 400
TAIL_MASS = 1e-16
MASS_TOL = 1e-8


def _check_p(p):
    p = float(p)
    if not p > 0 or not math.isfinite(p):
        raise DomainError(f"p must be a positive real, got {p!r}")
    return p


def _check_n(n):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return int(n)


def chi_p_1_pdf(x, p):
    """Density of ``|X|**p`` for standard normal X (zero for x <= 0)."""
    p = _check_p(p)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        val = (
            2.0 / (p * math.sqrt(2 * math.pi))
            * np.exp(-0.5 * x ** (2.0 / p))
            * x ** (1.0 / p - 1.0)
        )
    out = np.where(x > 0, val, 0.0)
    return out[()] if out.ndim == 0 else out


def _ts_range(p):
    # the t**(1/p - 1) endpoint mass below t = eps is ~ eps**(1/p), so the
    # truncation point must reach eps = exp(-40 p)
    return max(TS_RANGE, math.asinh(40.0 * p / math.pi))


@lru_cache(maxsize=16)
def _tanh_sinh(tau_max=TS_RANGE):
    tau = np.arange(-tau_max, tau_max + TS_STEP / 2, TS_STEP)
    u = math.pi * np.sinh(tau)
    log_t = -np.logaddexp(0.0, -u)
    log_1mt = -np.logaddexp(0.0, u)
    log_w = math.log(TS_STEP * math.pi) + np.log(np.cosh(tau)) + log_t + log_1mt
    return log_t, log_1mt, log_w


@lru_cache(maxsize=1)
def _gauss_legendre():
    x, w = np.polynomial.legendre.leggauss(GL_NODES)
    return (x + 1.0) / 2.0, w / 2.0


def _norm_bound(n, p):
    """Radius beyond which ``||X||_p`` has probability below TAIL_MASS.

    Uses ``||X||_p <= n**max(0, 1/p - 1/2) ||X||_2`` and the chi tail.
    """
    r2 = math.sqrt(stats.chi2.isf(TAIL_MASS, n))
    return r2 * n ** max(0.0, 1.0 / p - 0.5)


@dataclass(frozen=True)
class ChiPDensity:
    """Tabulated chi^p_n density.

    ``nodes`` are Chebyshev points in the norm variable ``s = y**(1/p)`` on
    ``[0, bound]`` and ``log_g`` the tabulated ``log g_n``. ``grid`` and
    ``values`` give the same table on the original ``y`` scale.
    """

    p: float
    n: int
    bound: float
    nodes: np.ndarray = field(repr=False)
    log_g: np.ndarray = field(repr=False)
    _interp: BarycentricInterpolator = field(repr=False, compare=False)

    @property
    def grid(self) -> np.ndarray:
        return self.nodes ** self.p

    @property
    def values(self) -> np.ndarray:
        return self.pdf(self.grid)

    def g(self, s):
        s = np.asarray(s, dtype=float)
        out = np.exp(self._interp(np.clip(s, 0.0, self.bound)))
        return np.where(s <= self.bound, out, 0.0)

    def pdf(self, y):
        """Density of W = sum |X_i|**p at ``y`` (zero outside the table)."""
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(y > 0, y, 1.0) ** (1.0 / self.p)
            val = np.where(y > 0, y, 1.0) ** (self.n / self.p - 1.0) * self.g(s)
        out = np.where(y > 0, val, 0.0)
        return out[()] if out.ndim == 0 else out

    def norm_pdf(self, s):
        """Density of ``R = W**(1/p)``, i.e. of the p-norm."""
        s = np.asarray(s, dtype=float)
        return self.p * s ** (self.n - 1) * self.g(s)

    def quadrature(self, upper=None):
        """Gauss-Legendre nodes and weights in ``s`` on ``[0, upper]``."""
        upper = self.bound if upper is None else min(upper, self.bound)
        x, w = _gauss_legendre()
        return upper * x, upper * w

    def expect(self, func, upper=None):
        """E[func(R)] over the tabulated law of the p-norm."""
        s, w = self.quadrature(upper)
        return float(np.sum(w * self.norm_pdf(s) * func(s)))

    def mass(self) -> float:
        return self.expect(np.ones_like)

    def cdf(self, y):
        """P(W <= y) by quadrature of the tabulated density."""
        r = float(y) ** (1.0 / self.p) if y > 0 else 0.0
        if r <= 0:
            return 0.0
        s, w = self.quadrature(r)
        return float(np.sum(w * self.norm_pdf(s)))


def _convolve_step(nodes, log_g, k, p):
    """log g_{k+1} at ``nodes`` from the table of log g_k."""
    a = 1.0 / p
    log_t, log_1mt, log_w = _tanh_sinh(_ts_range(p))
    log_h0 = math.log(2.0 / (p * math.sqrt(2 * math.pi)))
    interp = BarycentricInterpolator(nodes, log_g)
    inner = nodes[:, None] * np.exp(a * log_1mt)[None, :]
    lg = interp(inner.ravel()).reshape(inner.shape)
    lh = log_h0 - 0.5 * (nodes[:, None] ** 2) * np.exp(2.0 * a * log_t)[None, :]
    terms = lg + lh + ((a - 1.0) * log_t + (k * a - 1.0) * log_1mt + log_w)[None, :]
    return special.logsumexp(terms, axis=1)


@lru_cache(maxsize=64)
def _build(n, p):
    bound = _norm_bound(n, p)
    k = np.arange(CHEB_NODES + 1)
    nodes = bound * (np.cos(np.pi * k / CHEB_NODES)[::-1] + 1.0) / 2.0
    log_h0 = math.log(2.0 / (p * math.sqrt(2 * math.pi)))
    log_g = log_h0 - 0.5 * nodes ** 2
    for k in range(1, n):
        log_g = _convolve_step(nodes, log_g, k, p)
    if not np.all(np.isfinite(log_g[:-1])):
        raise NumericAccuracyError(f"chi^p table for n={n}, p={p} under/overflowed")
    log_g = np.where(np.isfinite(log_g), log_g, -1e300)
    dens = ChiPDensity(p, n, bound, nodes, log_g, BarycentricInterpolator(nodes, log_g))
    err = abs(dens.mass() - 1.0)
    if err > MASS_TOL:
        raise NumericAccuracyError(f"chi^p table for n={n}, p={p} has normalization error {err:.2e}")
    return dens


def chi_p_n_pdf(n, p) -> ChiPDensity:
    """Tabulated density of ``sum_{i<=n} |X_i|**p`` (cached per (n, p))."""
    return _build(_check_n(n), _check_p(p))


# ---------------------------------------------------------------------------
# ratio law chi^p_1 / chi^p_n
# ---------------------------------------------------------------------------


def f_p_pdf(z, n, p):
    """Density of ``chi^p_1 / chi^p_n`` with independent numerator and denominator."""
    dens = chi_p_n_pdf(n, p)
    p = dens.p
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.zeros_like(z)
    c = 2.0 / (p * math.sqrt(2 * math.pi))
    for i, zi in enumerate(z):
        if zi <= 0:
            continue
        scale = zi ** (1.0 / p)
        # exp(-(scale s)^2 / 2) is negligible beyond scale * s = 40
        s, w = dens.quadrature(40.0 / scale)
        integrand = s ** dens.n * dens.g(s) * np.exp(-0.5 * (scale * s) ** 2)
        out[i] = c * p * zi ** (1.0 / p - 1.0) * np.sum(w * integrand)
    return float(out[0]) if scalar else out


def _ratio_sf(dens, r):
    # P(|X_1| > r R); the integrand is negligible once r s exceeds 40
    if r <= 0:
        return 1.0
    return dens.expect(lambda s: 2.0 * special.ndtr(-r * s), upper=40.0 / r)


def _ratio_cdf(dens, r):
    if r > 1.0:
        return 1.0 - _ratio_sf(dens, r)
    return dens.expect(lambda s: special.erf(r * s / math.sqrt(2.0)))


def _ratio_cdf_dr(dens, r):
    if r <= 0:
        return dens.expect(lambda s: 2.0 * s / math.sqrt(2 * math.pi))
    return dens.expect(lambda s: 2.0 * s * np.exp(-0.5 * (r * s) ** 2) / math.sqrt(2 * math.pi), upper=40.0 / r)


def f_p_sf(z, n, p):
    """Upper tail ``P(chi^p_1 / chi^p_n > z) = E[2 Phi(-z**(1/p) R)]``."""
    dens = chi_p_n_pdf(n, p)
    z = float(z)
    if z <= 0:
        return 1.0
    return _ratio_sf(dens, z ** (1.0 / dens.p))


def f_p_cdf(z, n, p):
    dens = chi_p_n_pdf(n, p)
    z = float(z)
    if z <= 0:
        return 0.0
    return _ratio_cdf(dens, z ** (1.0 / dens.p))


def tp_quantile(n, p, alpha):
    """Upper ``alpha`` point ``q`` of the ratio law: ``P(ratio <= q) = 1 - alpha``.

    Solved on the root scale ``r = q**(1/p)`` (the quantile of
    ``|X_1| / ||X||_p``) and returned on the ratio scale.
    """
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    dens = chi_p_n_pdf(n, p)
    if alpha > 0.5:
        func, target = (lambda r: _ratio_cdf(dens, r)), 1.0 - alpha
    else:
        func, target = (lambda r: -_ratio_sf(dens, r)), -alpha
    r = dist._solve_increasing(func, target, 0.0, 1.0, deriv=lambda r: _ratio_cdf_dr(dens, r))
    if not r > 0:
        raise NumericAccuracyError("tp_quantile root finding failed")
    return r ** dens.p


def tp_expectation(n, p):
    """E[(chi^p_n)**(1/p)], the mean p-norm of n standard normals."""
    return chi_p_n_pdf(n, p).expect(lambda s: s)


@dataclass(frozen=True)
class TpModel:
    p: float
    n: int
    alpha: float
    q_alpha: float
    expectation: float
    length: float


def ci_length_expectation(n, p, alpha) -> TpModel:
    """Expected interval length ``l(p) = 2 q**(1/p) E[(chi^p_n)**(1/p)]`` at unit scale."""
    p = _check_p(p)
    q = tp_quantile(n, p, alpha)
    e = tp_expectation(n, p)
    return TpModel(p=p, n=int(n), alpha=float(alpha), q_alpha=q, expectation=e, length=2.0 * q ** (1.0 / p) * e)


@dataclass(frozen=True)
class StationarityReport:
    n: int
    alpha: float
    h: float
    l_at_2: float
    l_deriv_at_2: float
    l_values: tuple  # ((p, l(p)), ...)

    @property
    def relative_derivative(self) -> float:
        return abs(self.l_deriv_at_2) / self.l_at_2

    def argmin(self) -> float:
        return min(self.l_values, key=lambda pv: pv[1])[0]


DEFAULT_P_GRID = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0)


def stationarity_check(n, alpha, h=0.05, grid=DEFAULT_P_GRID) -> StationarityReport:
    """Central difference of l at p = 2 plus l(p) on a grid."""
    h = float(h)
    if not 0.0 < h <= 0.5:
        raise DomainError("h must lie in (0, 0.5]")
    length = lambda p: ci_length_expectation(n, p, alpha).length
    deriv = (length(2.0 + h) - length(2.0 - h)) / (2.0 * h)
    values = tuple((float(p), length(p)) for p in grid)
    return StationarityReport(int(n), float(alpha), h, length(2.0), deriv, values)


# ---------------------------------------------------------------------------
# Monte Carlo constants and 1-D identity checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LemmaConstants:
    """Monte Carlo estimates of the constants A, B, C, D, G, F at p = 2.

    ``residuals`` maps each identity to ``(estimate, std_error)`` of its
    left-hand side minus right-hand side, estimated per draw so that the
    standard error accounts for the correlation between constants.
    """

    n: int
    sample_count: int
    seed: int
    A: float
    B: float
    C: float
    D: float
    G: float
    F: float
    std_errors: dict
    residuals: dict

    @property
    def F_exact(self) -> float:
        return math.sqrt(2.0) * math.exp(special.gammaln((self.n + 1) / 2) - special.gammaln(self.n / 2))


def lemma_constants_mc(n, p=2, sample_count=10**6, seed=0, chunk=100_000) -> LemmaConstants:
    """Estimate the constants as expectations over iid chi^2_1 draws."""
    n = _check_n(n)
    if float(p) != 2.0:
        raise DomainError("the constants are defined at p = 2 only")
    if sample_count < 10**5:
        raise DomainError("sample_count must be at least 1e5")
    f_exact = math.sqrt(2.0) * math.exp(special.gammaln((n + 1) / 2) - special.gammaln(n / 2))
    names = ("A", "B", "C", "D", "G", "F", "BF", "DG", "AC", "F_closed")
    sums = np.zeros(len(names))
    sq = np.zeros(len(names))
    gen = dist.RngStream(seed, n).generator()
    done = 0
    while done < sample_count:
        size = min(chunk, sample_count - done)
        y = gen.standard_normal((size, n)) ** 2
        w = y.sum(axis=1)
        rw = np.sqrt(w)
        lw = np.log(w)
        A = rw * np.sum(y * np.log(y), axis=1)
        B = w * rw
        C = rw * np.sum(np.log(y), axis=1)
        D = w * rw * lw
        G = rw * lw
        F = rw
        cols = np.stack([
            A, B, C, D, G, F,
            B - (n + 1) * F,
            D - (n + 1) * G - 2 * F,
            n * A - (n + 1) * C - (2 * n * n + 2 * n - 2) * F,
            F - f_exact,
        ], axis=1)
        sums += cols.sum(axis=0)
        sq += (cols ** 2).sum(axis=0)
        done += size
    mean = sums / sample_count
    var = np.maximum(sq / sample_count - mean ** 2, 0.0) * sample_count / (sample_count - 1)
    se = np.sqrt(var / sample_count)
    est = dict(zip(names, mean))
    err = dict(zip(names, se))
    return LemmaConstants(
        n=n,
        sample_count=int(sample_count),
        seed=int(seed),
        A=float(est["A"]), B=float(est["B"]), C=float(est["C"]), D=float(est["D"]), G=float(est["G"]), F=float(est["F"]),
        std_errors={k: float(err[k]) for k in "ABCDGF"},
        residuals={k: (float(est[k]), float(err[k])) for k in ("BF", "DG", "AC", "F_closed")},
    )


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    u: float
    v: float
    quadrature: float
    closed_form: float
    tolerance: float

    @property
    def abs_error(self) -> float:
        return abs(self.quadrature - self.closed_form)

    @property
    def passed(self) -> bool:
        return self.abs_error <= self.tolerance


BETA_LOG_GRID = ((1.0, 1.0), (2.0, 3.0), (0.5, 2.5), (1.5, 0.5), (3.0, 4.0), (1.5, 4.5))
GAMMA_LOG_GRID = ((1.0, 1.0), (2.0, 0.5), (0.5, 3.0), (1.5, 2.5), (3.0, 1.0))


def _beta_log_integral(u, v):
    # QAWS weight (x)^(u-1) (1-x)^(v-1) log(x) handles both endpoint singularities.
    val, _ = dist.adaptive_quad(lambda x: 1.0, 0.0, 1.0, epsabs=1e-12, weight="alg-loga", wvar=(u - 1.0, v - 1.0))
    return val


def _gamma_log_integral(u, v):
    head, _ = dist.adaptive_quad(lambda x: math.exp(-u * x), 0.0, 1.0, epsabs=1e-12, weight="alg-loga", wvar=(v - 1.0, 0.0))
    tail, _ = dist.adaptive_quad(lambda x: x ** (v - 1.0) * math.exp(-u * x) * math.log(x), 1.0, math.inf, epsabs=1e-12)
    return head + tail


def integral_identity_checks(beta_grid=BETA_LOG_GRID, gamma_grid=GAMMA_LOG_GRID, tolerance=1e-8):
    """Quadrature versus closed form for the two log-moment identities.

    ``int_0^1 x^(u-1) (1-x)^(v-1) ln x dx = B(u, v) [psi(u) - psi(u+v)]`` and
    ``int_0^inf x^(v-1) e^(-u x) ln x dx = Gamma(v) u^(-v) [psi(v) - ln u]``.
    """
    out = []
    for u, v in beta_grid:
        closed = math.exp(special.betaln(u, v)) * (dist.digamma(u) - dist.digamma(u + v))
        out.append(IdentityCheck("beta_log", u, v, _beta_log_integral(u, v), closed, tolerance))
    for u, v in gamma_grid:
        closed = math.gamma(v) * u ** (-v) * (dist.digamma(v) - math.log(u))
        out.append(IdentityCheck("gamma_log", u, v, _gamma_log_integral(u, v), closed, tolerance))
    return out


# ---------------------------------------------------------------------------
# the t_p test
# ---------------------------------------------------------------------------


def tp_parts(x, y, p):
    """Batched centre ``z1`` and p-norm scale of the remaining coordinates."""
    z = project_many(x, y)
    return z[..., 0], np.sum(np.abs(z[..., 1:]) ** p, axis=-1) ** (1.0 / p)


def tp_test(x, y, p=2.0, alpha=0.05, delta0=0.0) -> TestOutcome:
    """Two-sided t_p test built on the projected coordinates.

    The statistic ``|z1 - delta0|**p / sum_{i>=2} |z_i|**p`` is referred to
    the chi^p_1 / chi^p_{n-1} law. At ``p = 2`` it equals ``T_e**2 / (n-1)``.
    ``std_error`` in the returned outcome holds the p-norm scale.
    """
    x, y = _as_sample(x, "x"), _as_sample(y, "y")
    alpha = _check_alpha(alpha)
    p = _check_p(p)
    sign = 1.0
    if x.size < y.size:
        x, y, sign = y, x, -1.0
    n = y.size
    z1, scale = tp_parts(x, y, p)
    z1, scale = sign * float(z1), float(scale)
    delta0 = float(delta0)
    if scale <= 1e-13 * max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(y)))):
        raise DegenerateDataError("t_p: the residual coordinates are all zero")
    stat = abs(z1 - delta0) ** p / scale ** p
    q = tp_quantile(n - 1, p, alpha)
    half = q ** (1.0 / p) * scale
    p_value = f_p_sf(stat, n - 1, p)
    return TestOutcome(Method.TP, stat, float(n - 1), p_value, z1 - half, z1 + half, alpha, delta0, z1, scale)
