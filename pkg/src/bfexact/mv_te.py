"""Multivariate T_e: a Hotelling T^2 pivot for two mean vectors.

Each coordinate is projected exactly as in the univariate test. The first
projected row estimates ``mu_x - mu_y`` and the remaining ``n - 1`` rows give
a Wishart matrix with the same scale, so

    (n - 1) d' S^{-1} d * (n - p) / (p (n - 1))  ~  F(p, n - p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from . import dist
from .errors import ConditioningError, DomainError, InsufficientSampleError
from .transform import project_many

__all__ = ["ConfidenceRegion", "MvOutcome", "mv_confidence_region", "mv_te_test", "mv_te_parts"]

RCOND_MIN = 1e-12


@dataclass(frozen=True)
class MvOutcome:
    t2: float
    f_stat: float
    df1: int
    df2: int
    p_value: float
    center: np.ndarray
    shape: np.ndarray
    radius2: float
    alpha: float
    delta0: np.ndarray

    @property
    def reject(self) -> bool:
        return self.p_value < self.alpha


@dataclass(frozen=True)
class ConfidenceRegion:
    """Ellipsoid ``{delta : (center - delta)' S^{-1} (center - delta) <= radius2}``."""

    center: np.ndarray
    shape: np.ndarray
    radius2: float

    def distance2(self, delta) -> float:
        d = self.center - np.asarray(delta, dtype=float)
        return float(d @ linalg.cho_solve(linalg.cho_factor(self.shape), d))

    def contains(self, delta) -> bool:
        return self.distance2(delta) <= self.radius2


def _as_matrix(a, name):
    a = np.asarray(a, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise DomainError(f"{name} must be a (rows, p) matrix")
    if a.shape[0] < 2:
        raise InsufficientSampleError(f"{name} needs at least 2 rows")
    if not np.all(np.isfinite(a)):
        raise DomainError(f"{name} contains non-finite values")
    return a


def mv_te_parts(x, y):
    """Projected center and scatter matrix for batches.

    ``x`` has shape ``(..., m, p)`` and ``y`` shape ``(..., n, p)`` with
    ``m >= n``. Returns ``center`` of shape ``(..., p)`` and ``S`` of shape
    ``(..., p, p)``.
    """
    xt = np.swapaxes(np.asarray(x, dtype=float), -1, -2)
    yt = np.swapaxes(np.asarray(y, dtype=float), -1, -2)
    z = project_many(xt, yt)  # (..., p, n)
    rest = z[..., 1:]
    return z[..., 0], rest @ np.swapaxes(rest, -1, -2)


def _check_conditioning(s):
    w = np.linalg.eigvalsh(s)
    if w[-1] <= 0 or w[0] <= RCOND_MIN * w[-1]:
        raise ConditioningError("scatter matrix S is numerically singular")


def mv_te_test(x, y, delta0=None, alpha=0.05) -> MvOutcome:
    """Two-sample Hotelling-type test with unequal covariance matrices.

    Parameters
    ----------
    x, y : array_like, shapes (m, p) and (n, p)
        Observations in rows. When ``m < n`` the samples are swapped and
        the result is reported for ``mu_x - mu_y`` all the same.
    delta0 : array_like, shape (p,), optional
        Hypothesized difference ``mu_x - mu_y``; zero by default.
    alpha : float
        Level used for ``radius2``.
    """
    x, y = _as_matrix(x, "x"), _as_matrix(y, "y")
    if x.shape[1] != y.shape[1]:
        raise DomainError("x and y must have the same number of columns")
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise DomainError("alpha must lie in (0, 1)")
    p = x.shape[1]
    delta0 = np.zeros(p) if delta0 is None else np.asarray(delta0, dtype=float).reshape(p)
    sign = 1.0
    if x.shape[0] < y.shape[0]:
        x, y, sign = y, x, -1.0
    n = y.shape[0]
    if n <= p:
        raise InsufficientSampleError(f"need min(m, n) > p; got n={n}, p={p}")
    center, s = mv_te_parts(x, y)
    center = sign * center
    _check_conditioning(s)
    d = center - delta0
    factor = linalg.cho_factor(s)
    t2 = float((n - 1) * d @ linalg.cho_solve(factor, d))
    df1, df2 = p, n - p
    f_stat = t2 * df2 / (df1 * (n - 1))
    p_value = float(dist.f_sf(f_stat, df1, df2))
    radius2 = df1 / df2 * dist.f_quantile(1.0 - alpha, df1, df2)
    return MvOutcome(t2, f_stat, df1, df2, p_value, center, s, radius2, alpha, delta0)


def mv_confidence_region(outcome: MvOutcome, alpha=None) -> ConfidenceRegion:
    """Confidence ellipsoid for ``mu_x - mu_y`` at level ``1 - alpha``."""
    if alpha is None or float(alpha) == outcome.alpha:
        r2 = outcome.radius2
    else:
        r2 = outcome.df1 / outcome.df2 * dist.f_quantile(1.0 - float(alpha), outcome.df1, outcome.df2)
    return ConfidenceRegion(outcome.center, outcome.shape, r2)
