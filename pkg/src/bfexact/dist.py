"""Special functions, distribution functions and seeded sampling.

Scalar special functions delegate to :mod:`scipy.special`; the Student-t and
F distribution functions are assembled from the regularized incomplete beta
function and inverted by bracketed root finding. The law of the difference of
two independent Student-t variables has no closed form and is obtained by
adaptive numerical convolution.

Random streams are counter based: a stream is a Philox generator whose key is
``(seed, stream_id)`` and whose counter starts at zero, so any replication can
be regenerated on its own without replaying the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, optimize, special

from .errors import DomainError, NumericAccuracyError

__all__ = [
    "RngStream",
    "StreamPool",
    "TDiffTable",
    "adaptive_quad",
    "digamma",
    "f_cdf",
    "f_pdf",
    "f_quantile",
    "f_sf",
    "ln_gamma",
    "norm_cdf",
    "norm_quantile",
    "norm_sf",
    "reg_inc_beta",
    "sample_normal",
    "t_cdf",
    "t_diff_cdf",
    "t_diff_pdf",
    "t_diff_quantile",
    "t_diff_sf",
    "t_diff_table",
    "t_pdf",
    "t_quantile",
    "t_sf",
]

QUAD_EPSABS = 1e-10
QUAD_LIMIT = 200
ROOT_XTOL = 1e-13

_MASK64 = (1 << 64) - 1


# ---------------------------------------------------------------------------
# quadrature and root finding
# ---------------------------------------------------------------------------


def adaptive_quad(func, a, b, *, epsabs=QUAD_EPSABS, epsrel=1e-10, limit=QUAD_LIMIT, **kwargs):
    """Integrate ``func`` over ``[a, b]`` with QUADPACK.

    Unlike :func:`scipy.integrate.quad` this never returns a degraded
    estimate: any QUADPACK warning (subdivision cap reached, roundoff
    detected, divergence) raises :class:`NumericAccuracyError`.
    """
    res = integrate.quad(
        func, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit, full_output=1, **kwargs
    )
    value, abserr = res[0], res[1]
    # QUADPACK appends a message only when ier != 0.
    if len(res) > 3 and abserr > max(epsabs, epsrel * abs(value)):
        raise NumericAccuracyError(f"quadrature did not converge: {res[3]} (abserr={abserr:.3g})")
    return value, abserr


def _solve_increasing(func, target, lo, hi, *, deriv=None):
    """Find x with ``func(x) == target`` for a nondecreasing ``func``.

    The bracket ``[lo, hi]`` is widened until it straddles the target,
    Brent's method narrows it, and one Newton step (kept only when it
    reduces the residual) polishes the root.
    """
    g = lambda x: func(x) - target
    glo, ghi = g(lo), g(hi)
    for _ in range(200):
        if glo <= 0:
            break
        lo, hi, ghi = lo - 2 * (hi - lo), lo, glo
        glo = g(lo)
    for _ in range(200):
        if ghi >= 0:
            break
        lo, hi, glo = hi, hi + 2 * (hi - lo), ghi
        ghi = g(hi)
    if glo > 0 or ghi < 0:
        raise NumericAccuracyError("could not bracket the root")
    if glo == 0:
        return lo
    if ghi == 0:
        return hi
    x = optimize.brentq(g, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=500)
    if deriv is not None:
        d = deriv(x)
        if d > 0 and math.isfinite(d):
            r = g(x)
            x_new = x - r / d
            if lo <= x_new <= hi and abs(g(x_new)) < abs(r):
                x = x_new
    return x


def _check_prob(q, name="q"):
    if not (0.0 < q < 1.0) or math.isnan(q):
        raise DomainError(f"{name} must lie in (0, 1), got {q!r}")


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------


def ln_gamma(x):
    """Natural log of the gamma function for ``x > 0``."""
    x = float(x)
    if not x > 0:
        raise DomainError(f"ln_gamma requires x > 0, got {x!r}")
    return float(special.gammaln(x))


def digamma(z):
    """Digamma function psi(z) = d/dz ln Gamma(z) for ``z > 0``."""
    z = float(z)
    if not z > 0:
        raise DomainError(f"digamma requires z > 0, got {z!r}")
    return float(special.psi(z))


def reg_inc_beta(a, b, x):
    """Regularized incomplete beta function I_x(a, b)."""
    a, b, x = float(a), float(b), float(x)
    if not (a > 0 and b > 0):
        raise DomainError("reg_inc_beta requires a > 0 and b > 0")
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"reg_inc_beta requires 0 <= x <= 1, got {x!r}")
    return float(special.betainc(a, b, x))


# ---------------------------------------------------------------------------
# normal
# ---------------------------------------------------------------------------


def norm_cdf(x):
    return special.ndtr(x)


def norm_sf(x):
    return special.ndtr(-np.asarray(x, dtype=float))


def norm_quantile(q):
    _check_prob(float(q))
    return float(special.ndtri(q))


# ---------------------------------------------------------------------------
# Student t
# ---------------------------------------------------------------------------


def _check_df(nu, name="nu"):
    if not np.all(np.asarray(nu) > 0):
        raise DomainError(f"{name} must be positive")


def t_pdf(t, nu):
    t = np.asarray(t, dtype=float)
    nu = np.asarray(nu, dtype=float)
    _check_df(nu)
    logc = special.gammaln((nu + 1) / 2) - special.gammaln(nu / 2) - 0.5 * np.log(nu * math.pi)
    return np.exp(logc - (nu + 1) / 2 * np.log1p(t * t / nu))


def _t_tail(t, nu):
    """P(T > |t|), accurate both near the centre and far in the tail."""
    t2 = t * t
    x = nu / (nu + t2)
    xc = t2 / (nu + t2)
    with np.errstate(invalid="ignore"):
        far = 0.5 * special.betainc(nu / 2, 0.5, x)
        near = 0.5 - 0.5 * special.betainc(0.5, nu / 2, xc)
    # the direct form keeps relative precision in the tail; the complement
    # form is used near the centre, where the tail is close to 1/2
    return np.where(far < 0.25, far, near)


def t_cdf(t, nu):
    """Student-t CDF; vectorized over ``t`` and ``nu``."""
    t = np.asarray(t, dtype=float)
    nu = np.asarray(nu, dtype=float)
    _check_df(nu)
    tail = _t_tail(t, nu)
    out = np.where(t > 0, 1.0 - tail, tail)
    return out[()] if out.ndim == 0 else out


def t_sf(t, nu):
    """Upper tail P(T > t), computed without cancellation."""
    t = np.asarray(t, dtype=float)
    nu = np.asarray(nu, dtype=float)
    _check_df(nu)
    tail = _t_tail(t, nu)
    out = np.where(t > 0, tail, 1.0 - tail)
    return out[()] if out.ndim == 0 else out


def _t_upper_quantile(tail, nu):
    guess = math.tan(math.pi * (0.5 - tail)) if nu == 1.0 else float(special.ndtri(1.0 - tail))
    return _solve_increasing(
        lambda t: -float(t_sf(t, nu)),
        -tail,
        0.0,
        max(2.0 * guess, 1.0),
        deriv=lambda t: float(t_pdf(t, nu)),
    )


def t_quantile(q, nu):
    """Inverse of :func:`t_cdf` in its first argument (scalar)."""
    q, nu = float(q), float(nu)
    _check_prob(q)
    _check_df(nu)
    if q == 0.5:
        return 0.0
    # Solve on the smaller tail so extreme probabilities keep precision.
    if q < 0.5:
        return -_t_upper_quantile(q, nu)
    return _t_upper_quantile(1.0 - q, nu)


# ---------------------------------------------------------------------------
# F
# ---------------------------------------------------------------------------


def f_pdf(f, d1, d2):
    f = np.asarray(f, dtype=float)
    _check_df(d1, "d1")
    _check_df(d2, "d2")
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = (
            0.5 * d1 * np.log(d1) + 0.5 * d2 * np.log(d2) + (0.5 * d1 - 1) * np.log(f)
            - 0.5 * (d1 + d2) * np.log(d1 * f + d2) - special.betaln(d1 / 2, d2 / 2)
        )
        out = np.where(f > 0, np.exp(logp), 0.0)
    return out[()] if out.ndim == 0 else out


def f_cdf(f, d1, d2):
    f = np.asarray(f, dtype=float)
    _check_df(d1, "d1")
    _check_df(d2, "d2")
    fp = np.maximum(f, 0.0)
    lower = special.betainc(d1 / 2, d2 / 2, d1 * fp / (d1 * fp + d2))
    upper = special.betainc(d2 / 2, d1 / 2, d2 / (d1 * fp + d2))
    x = d1 * fp / (d1 * fp + d2)
    out = np.where(x < 0.5, lower, 1.0 - upper)
    out = np.where(f > 0, out, 0.0)
    return out[()] if out.ndim == 0 else out


def f_sf(f, d1, d2):
    """Upper tail P(F > f)."""
    f = np.asarray(f, dtype=float)
    _check_df(d1, "d1")
    _check_df(d2, "d2")
    fp = np.maximum(f, 0.0)
    upper = special.betainc(d2 / 2, d1 / 2, d2 / (d1 * fp + d2))
    out = np.where(f > 0, upper, 1.0)
    return out[()] if out.ndim == 0 else out


def f_quantile(q, d1, d2):
    """Inverse of :func:`f_cdf` in its first argument (scalar)."""
    q, d1, d2 = float(q), float(d1), float(d2)
    _check_prob(q)
    _check_df(d1, "d1")
    _check_df(d2, "d2")
    if q > 0.5:
        tail = 1.0 - q
        func, target = (lambda x: -float(f_sf(x, d1, d2))), -tail
    else:
        func, target = (lambda x: float(f_cdf(x, d1, d2))), q
    # Search on log scale: the support is (0, inf).
    root = _solve_increasing(lambda u: func(math.exp(u)), target, -1.0, 1.0)
    x = math.exp(root)
    d = float(f_pdf(x, d1, d2))
    if d > 0:
        r = func(x) - target
        x_new = x - r / d
        if x_new > 0 and abs(func(x_new) - target) < abs(r):
            x = x_new
    return x


# ---------------------------------------------------------------------------
# random streams
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream identified by ``(seed, stream_id)``.

    Two streams with the same pair produce the same draws; streams that
    differ in either field use different Philox keys.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if not (0 <= int(v) <= _MASK64):
                raise DomainError(f"{name} must be a 64-bit unsigned integer")

    @property
    def key(self):
        return int(self.seed) | (int(self.stream_id) << 64)

    def generator(self) -> np.random.Generator:
        """Fresh generator positioned at the start of this stream."""
        return np.random.Generator(np.random.Philox(key=self.key))

    def child(self, stream_id: int) -> "RngStream":
        return RngStream(self.seed, stream_id)


def derive_seed(seed: int, *path: int) -> int:
    """Deterministic 64-bit seed for a named sub-experiment of ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, np.uint64)[0])


class StreamPool:
    """Reuses one Philox object to visit many streams cheaply.

    ``pool.generator(stream)`` yields the same draws as
    ``stream.generator()``; it only avoids re-allocating the bit generator,
    which dominates the cost of a small Monte Carlo replication. The pool is
    not thread safe; give each worker its own.
    """

    def __init__(self):
        self._bitgen = np.random.Philox(key=0)
        self._gen = np.random.Generator(self._bitgen)
        self._state = self._bitgen.state

    def generator(self, stream: RngStream) -> np.random.Generator:
        st = self._state
        st["state"]["key"][:] = (int(stream.seed), int(stream.stream_id))
        st["state"]["counter"][:] = 0
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bitgen.state = st
        return self._gen


def sample_normal(rng, mu, sigma2, count):
    """Draw ``count`` values from N(mu, sigma2).

    ``rng`` is an :class:`RngStream` (a fresh generator is started for it)
    or a :class:`numpy.random.Generator` (drawn from in place).
    """
    sigma2 = float(sigma2)
    if sigma2 < 0 or math.isnan(sigma2):
        raise DomainError("sigma2 must be nonnegative")
    count = int(count)
    if count < 1:
        raise DomainError("count must be positive")
    gen = rng.generator() if isinstance(rng, RngStream) else rng
    z = gen.standard_normal(count)
    return mu + math.sqrt(sigma2) * z


# ---------------------------------------------------------------------------
# difference of two independent Student-t variables
# ---------------------------------------------------------------------------


def _check_nu_int(nu):
    if int(nu) != nu or nu < 1:
        raise DomainError(f"nu must be a positive integer, got {nu!r}")
    return int(nu)


def _integrate_line(f, points):
    """Integrate over the real line, splitting at the given peak locations."""
    pts = sorted(set(points))
    total, _ = adaptive_quad(f, -math.inf, pts[0], epsabs=1e-12)
    for a, b in zip(pts[:-1], pts[1:]):
        total += adaptive_quad(f, a, b, epsabs=1e-12)[0]
    total += adaptive_quad(f, pts[-1], math.inf, epsabs=1e-12)[0]
    return total


def t_diff_pdf(x, nu):
    """Density of T1 - T2 for independent T1, T2 ~ t(nu)."""
    nu = _check_nu_int(nu)
    x = float(x)
    if nu == 1:
        # Cauchy(0, 1) - Cauchy(0, 1) is Cauchy(0, 2).
        return 2.0 / (math.pi * (4.0 + x * x))
    f = lambda u: float(t_pdf(u, nu) * t_pdf(u - x, nu))
    return _integrate_line(f, (0.0, x / 2.0, x))


def t_diff_sf(x, nu):
    """Upper tail P(T1 - T2 > x)."""
    nu = _check_nu_int(nu)
    x = float(x)
    if nu == 1:
        return 0.5 - math.atan(x / 2.0) / math.pi
    if x < 0:
        return 1.0 - t_diff_sf(-x, nu)
    # P(T1 > x + T2) = E[sf_t(x + T2)]
    f = lambda u: float(t_pdf(u, nu) * t_sf(x + u, nu))
    return _integrate_line(f, (0.0, -x / 2.0, -x))


def t_diff_cdf(x, nu):
    x = float(x)
    if x > 0:
        return 1.0 - t_diff_sf(x, nu)
    return t_diff_sf(-x, nu)


@lru_cache(maxsize=256)
def _t_diff_upper_quantile(nu, tail):
    scale = math.sqrt(2.0 * nu / (nu - 2.0)) if nu > 2 else 2.0
    guess = scale * max(float(special.ndtri(1.0 - tail)), 0.1)
    return _solve_increasing(
        lambda x: -t_diff_sf(x, nu),
        -tail,
        0.0,
        2.0 * guess,
        deriv=lambda x: t_diff_pdf(x, nu),
    )


def t_diff_quantile(nu, prob):
    """Quantile of the difference of two independent t(nu) variables.

    Antisymmetric by construction: ``t_diff_quantile(nu, p) ==
    -t_diff_quantile(nu, 1 - p)`` and the median is exactly 0.
    """
    nu = _check_nu_int(nu)
    prob = float(prob)
    _check_prob(prob, "prob")
    if prob == 0.5:
        return 0.0
    if prob < 0.5:
        return -t_diff_quantile(nu, 1.0 - prob)
    if nu == 1:
        return 2.0 * math.tan(math.pi * (prob - 0.5))
    return _t_diff_upper_quantile(nu, 1.0 - prob)


@dataclass(frozen=True)
class TDiffTable:
    """Tabulated density of t(nu) - t(nu) on a grid covering +-``bound``."""

    nu: int
    grid: np.ndarray = field(repr=False)
    density: np.ndarray = field(repr=False)
    bound: float
    probs: tuple
    quantiles: tuple

    def integral(self):
        """Simpson integral of the tabulated density (should be ~1)."""
        return float(integrate.simpson(self.density, x=self.grid))


@lru_cache(maxsize=32)
def t_diff_table(nu, n_points=801, probs=(0.9, 0.95, 0.975, 0.99, 0.995)):
    """Build the :class:`TDiffTable` for ``nu`` degrees of freedom.

    The grid reaches the point beyond which at most 1e-8 of the mass lies,
    using P(|T1 - T2| > 2a) <= 2 P(|T| > a). Grid points are sinh spaced so
    the centre is finely resolved while the heavy tails are still covered.
    """
    nu = _check_nu_int(nu)
    a = t_quantile(1.0 - 0.25e-8, nu) if nu > 1 else math.tan(math.pi * (0.5 - 0.25e-8))
    bound = 2.0 * a
    half = (n_points - 1) // 2
    u = np.linspace(-1.0, 1.0, 2 * half + 1)
    stretch = math.asinh(bound / 0.05)
    grid = 0.05 * np.sinh(u * stretch)
    grid[0], grid[-1] = -bound, bound
    dens_half = np.array([t_diff_pdf(x, nu) for x in grid[half:]])
    density = np.concatenate([dens_half[:0:-1], dens_half])
    qs = tuple(t_diff_quantile(nu, p) for p in probs)
    return TDiffTable(nu=nu, grid=grid, density=density, bound=bound, probs=tuple(probs), quantiles=qs)
