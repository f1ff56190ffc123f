"""Helmert-type orthogonal bases and the projected difference vector.

The basis rows follow the canonical order: the first row is constant, the
second row ``(1, ..., 1, -(n-1)) / sqrt(n(n-1))`` puts its contrast on the
last coordinate, and each later row moves the contrast one position to the
left, ending with ``(1, -1, 0, ..., 0) / sqrt(2)``.

Because the test outcome depends on the basis and on the order of the
observations, both are fixed: the samples are used in the caller's order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

__all__ = ["OrthoBasis", "ProjectedVector", "helmert_basis", "partial_basis", "project", "project_many"]


@dataclass(frozen=True)
class OrthoBasis:
    """Rows of an orthogonal matrix (or its first ``n_rows`` rows)."""

    rows: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_cols(self) -> int:
        return self.rows.shape[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.rows, dtype=dtype)


@lru_cache(maxsize=128)
def _helmert_rows(m: int, k: int) -> np.ndarray:
    rows = np.zeros((k, m))
    rows[0, :] = 1.0 / math.sqrt(m)
    for i in range(1, k):
        # row i (0-based) carries ones on the first j = m - i entries
        j = m - i
        norm = math.sqrt((j + 1) * j)
        rows[i, :j] = 1.0 / norm
        rows[i, j] = -j / norm
    rows.setflags(write=False)
    return rows


def helmert_basis(n: int) -> OrthoBasis:
    """The n x n Helmert-type orthogonal matrix."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    return OrthoBasis(_helmert_rows(int(n), int(n)))


def partial_basis(n: int, m: int) -> OrthoBasis:
    """First ``n`` rows of the m x m Helmert-type matrix."""
    if int(n) != n or int(m) != m or n < 1 or m < 1:
        raise DomainError("n and m must be positive integers")
    if n > m:
        raise DomainError(f"partial_basis needs n <= m, got n={n}, m={m}")
    return OrthoBasis(_helmert_rows(int(m), int(n)))


@dataclass(frozen=True)
class ProjectedVector:
    """Z = Q^T x / sqrt(m) - P^T y / sqrt(n) with its summary pieces."""

    z: np.ndarray

    @property
    def z1(self) -> float:
        return float(self.z[0])

    @property
    def ss_rest(self) -> float:
        return float(np.sum(self.z[1:] ** 2))

    @property
    def n(self) -> int:
        return self.z.shape[0]


def project_many(x, y):
    """Vectorized projection along the last axis.

    ``x`` has shape ``(..., m)`` and ``y`` shape ``(..., n)`` with ``m >= n``;
    for matrix-valued observations pass ``(m, p)`` arrays transposed so that
    observations run along the last axis. Returns ``(..., n)``.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    m, n = x.shape[-1], y.shape[-1]
    if m < n:
        raise DomainError(f"project needs len(x) >= len(y); got m={m} < n={n}, swap the samples")
    q = _helmert_rows(m, n)
    p = _helmert_rows(n, n)
    return x @ q.T / math.sqrt(m) - y @ p.T / math.sqrt(n)


def project(x, y) -> ProjectedVector:
    """Project the samples onto the shared n-dimensional coordinates."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.ndim != 1 or y.ndim != 1:
        raise DomainError("project expects one-dimensional samples")
    if y.shape[0] < 2:
        raise DomainError("the smaller sample needs at least 2 observations")
    return ProjectedVector(project_many(x, y))
