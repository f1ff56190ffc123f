"""Deterministic Monte Carlo sweeps of size and power.

Replication ``r`` at grid point ``g`` draws from its own Philox stream
``RngStream(derive_seed(seed, g), r)``: first the x sample, then the y
sample, then (for unequal sizes) the random pairing used by the paired
t-test. Replications are grouped in fixed-size chunks that may run in any
order on any number of worker processes; the chunk totals are integer
counts, so the merged result is the same for every thread count.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import bf_tests as bt
from . import dist
from .bf_tests import Method
from .errors import DomainError
from .mv_te import mv_te_parts

__all__ = [
    "CSV_COLUMNS",
    "FIGURE_SIZES",
    "SWEEP_METHODS",
    "SweepConfig",
    "SweepResult",
    "SweepRow",
    "canonical_grid",
    "figure_tables",
    "mv_calibration",
    "resolve_threads",
    "run_sweep",
]

SWEEP_METHODS = (Method.TE, Method.TN, Method.WELCH, Method.PAIRED, Method.SCHEFFE)
FIGURE_SIZES = ((50, 50), (15, 15), (50, 5), (7, 5))
REP_CHUNK = 2500
THREADS_ENV = "BF_EXACT_THREADS"
CSV_COLUMNS = (
    "method", "sigma1_sq", "sigma2_sq", "m", "n", "mu_diff", "alpha", "reps", "rate", "se", "degenerate_count",
)


def canonical_grid():
    """The 25 variance pairs ``(k, 26 - k)``, k = 1..25."""
    return [(float(k), float(26 - k)) for k in range(1, 26)]


@dataclass(frozen=True)
class SweepConfig:
    m: int = 15
    n: int = 15
    variance_grid: tuple = field(default_factory=lambda: tuple(canonical_grid()))
    mu_diff: float = 0.0
    alpha: float = 0.05
    reps: int = 20_000
    seed: int = 0
    methods: tuple = SWEEP_METHODS

    def __post_init__(self):
        if int(self.m) != self.m or int(self.n) != self.n or self.m < 2 or self.n < 2:
            raise DomainError("m and n must be integers >= 2")
        if int(self.reps) != self.reps or self.reps < 1000:
            raise DomainError("reps must be an integer >= 1000")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")
        grid = tuple((float(a), float(b)) for a, b in self.variance_grid)
        if not grid or any(a <= 0 or b <= 0 for a, b in grid):
            raise DomainError("variance_grid needs positive (sigma1_sq, sigma2_sq) pairs")
        methods = tuple(Method.parse(mth) for mth in self.methods)
        if not methods or any(mth not in SWEEP_METHODS for mth in methods):
            raise DomainError(f"methods must be a non-empty subset of {[x.value for x in SWEEP_METHODS]}")
        object.__setattr__(self, "variance_grid", grid)
        object.__setattr__(self, "methods", tuple(dict.fromkeys(methods)))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "reps", int(self.reps))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "mu_diff", float(self.mu_diff))
        object.__setattr__(self, "alpha", float(self.alpha))

    def as_dict(self) -> dict:
        return {
            "m": self.m, "n": self.n, "variance_grid": [list(p) for p in self.variance_grid],
            "mu_diff": self.mu_diff, "alpha": self.alpha, "reps": self.reps, "seed": self.seed,
            "methods": [mth.value for mth in self.methods],
        }


@dataclass(frozen=True)
class SweepRow:
    method: Method
    sigma1_sq: float
    sigma2_sq: float
    m: int
    n: int
    mu_diff: float
    alpha: float
    reps: int
    rejections: int
    degenerate_count: int

    @property
    def rate(self) -> float:
        return self.rejections / self.reps

    @property
    def se(self) -> float:
        r = self.rate
        return math.sqrt(r * (1.0 - r) / self.reps)


@dataclass(frozen=True)
class SweepResult:
    rows: tuple

    def select(self, method) -> list:
        method = Method.parse(method)
        return [r for r in self.rows if r.method is method]

    def rates(self, method) -> np.ndarray:
        return np.array([r.rate for r in self.select(method)])

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([
                r.method.value, repr(r.sigma1_sq), repr(r.sigma2_sq), r.m, r.n, repr(r.mu_diff),
                repr(r.alpha), r.reps, repr(r.rate), repr(r.se), r.degenerate_count,
            ])
        text = buf.getvalue()
        if path is not None:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_csv(cls, source) -> "SweepResult":
        """Parse CSV text or a path written by :meth:`to_csv`."""
        if isinstance(source, str) and "\n" not in source and os.path.exists(source):
            with open(source, encoding="utf-8") as fh:
                source = fh.read()
        reader = csv.DictReader(io.StringIO(source))
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise DomainError(f"unexpected CSV header {reader.fieldnames}")
        rows = []
        for rec in reader:
            reps = int(rec["reps"])
            rows.append(SweepRow(
                Method.parse(rec["method"]), float(rec["sigma1_sq"]), float(rec["sigma2_sq"]),
                int(rec["m"]), int(rec["n"]), float(rec["mu_diff"]), float(rec["alpha"]), reps,
                round(float(rec["rate"]) * reps), int(rec["degenerate_count"]),
            ))
        return cls(tuple(rows))


def resolve_threads(threads=None) -> int:
    """Worker count: explicit value, else ``BF_EXACT_THREADS``, else all CPUs (0 = auto)."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "0").strip() or "0"
        try:
            threads = int(raw)
        except ValueError:
            raise DomainError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    threads = int(threads)
    if threads < 0:
        raise DomainError("thread count must be >= 0")
    return threads or (os.cpu_count() or 1)


def _draw_chunk(gseed, lo, hi, m, n, sd1, sd2, mu_diff, need_pairs):
    pool = dist.StreamPool()
    k = hi - lo
    x = np.empty((k, m))
    y = np.empty((k, n))
    idx = np.empty((k, min(m, n)), dtype=np.intp) if need_pairs else None
    for i in range(k):
        gen = pool.generator(dist.RngStream(gseed, lo + i))
        x[i] = gen.normal(0.0, sd1, m)
        y[i] = gen.normal(-mu_diff, sd2, n)
        if need_pairs:
            idx[i] = bt.subset_indices(gen, max(m, n), min(m, n))
    return x, y, idx


def _parts(method, x, y, idx):
    if method is Method.TE:
        return bt.te_parts(x, y)
    if method is Method.TN:
        return bt.tn_parts(x, y)
    if method is Method.WELCH:
        return bt.welch_parts(x, y)
    if method is Method.SCHEFFE:
        return bt.scheffe_parts(x, y)
    if x.shape[-1] >= y.shape[-1]:
        return bt.paired_parts(x, y, idx)
    est, se, df = bt.paired_parts(y, x, idx)
    return -est, se, df


def _decide(est, se, df, alpha, tol):
    """Rejection and degenerate indicators mirroring the scalar tests at delta0 = 0."""
    degenerate_se = se <= tol
    exact_null = degenerate_se & (np.abs(est) <= tol)
    with np.errstate(divide="ignore", invalid="ignore"):
        stat = np.abs(est) / np.where(degenerate_se, 1.0, se)
    if np.isscalar(df) and math.isinf(df):
        p = 2.0 * dist.norm_sf(stat)
    else:
        p = 2.0 * dist.t_sf(stat, df)
    reject = (p < alpha) & ~degenerate_se
    return reject, degenerate_se & ~exact_null


def _run_unit(args):
    gseed, lo, hi, m, n, sd1, sd2, mu_diff, alpha, methods = args
    methods = [Method(v) for v in methods]
    need_pairs = Method.PAIRED in methods and m != n
    x, y, idx = _draw_chunk(gseed, lo, hi, m, n, sd1, sd2, mu_diff, need_pairs)
    tol = 1e-13 * np.maximum(1.0, np.maximum(np.abs(x).max(axis=1), np.abs(y).max(axis=1)))
    out = []
    for mth in methods:
        est, se, df = _parts(mth, x, y, idx)
        rej, deg = _decide(est, se, df, alpha, tol)
        out.append((int(rej.sum()), int(deg.sum())))
    return out


def _units(config: SweepConfig):
    methods = tuple(m.value for m in config.methods)
    for g, (s1, s2) in enumerate(config.variance_grid):
        gseed = dist.derive_seed(config.seed, g)
        for lo in range(0, config.reps, REP_CHUNK):
            hi = min(lo + REP_CHUNK, config.reps)
            yield g, (gseed, lo, hi, config.m, config.n, math.sqrt(s1), math.sqrt(s2),
                      config.mu_diff, config.alpha, methods)


def run_sweep(config: SweepConfig, threads=None) -> SweepResult:
    """Rejection rates for every method at every grid point.

    Rows are ordered by method (in ``config.methods`` order), then by grid
    point. ``threads`` overrides ``BF_EXACT_THREADS``; the output does not
    depend on it.
    """
    workers = resolve_threads(threads)
    units = list(_units(config))
    if workers == 1 or len(units) == 1:
        results = [_run_unit(u) for _, u in units]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_run_unit, [u for _, u in units], chunksize=max(1, len(units) // (4 * workers))))
    n_grid, n_meth = len(config.variance_grid), len(config.methods)
    rej = np.zeros((n_meth, n_grid), dtype=np.int64)
    deg = np.zeros((n_meth, n_grid), dtype=np.int64)
    for (g, _), res in zip(units, results):
        for j, (r, d) in enumerate(res):
            rej[j, g] += r
            deg[j, g] += d
    rows = []
    for j, mth in enumerate(config.methods):
        for g, (s1, s2) in enumerate(config.variance_grid):
            rows.append(SweepRow(mth, s1, s2, config.m, config.n, config.mu_diff, config.alpha,
                                 config.reps, int(rej[j, g]), int(deg[j, g])))
    return SweepResult(tuple(rows))


def figure_tables(sizes=FIGURE_SIZES, reps=20_000, seed=0, alpha=0.05, methods=SWEEP_METHODS, threads=None):
    """Size (mu_diff = 0) and power (mu_diff = 2) sweeps for each (m, n) pair.

    Returns ``{(m, n): {"size": SweepResult, "power": SweepResult}}``. Each
    table draws from its own seed branch so the tables are independent.
    """
    out = {}
    for i, (m, n) in enumerate(sizes):
        tables = {}
        for j, (label, mu) in enumerate((("size", 0.0), ("power", 2.0))):
            cfg = SweepConfig(m=m, n=n, mu_diff=mu, alpha=alpha, reps=reps,
                              seed=dist.derive_seed(seed, i, j), methods=methods)
            tables[label] = run_sweep(cfg, threads)
        out[(m, n)] = tables
    return out


@dataclass(frozen=True)
class MvCalibration:
    m: int
    n: int
    reps: int
    rejections: int
    alpha: float
    conditioning_failures: int

    @property
    def rate(self) -> float:
        return self.rejections / self.reps

    @property
    def se(self) -> float:
        return math.sqrt(self.alpha * (1 - self.alpha) / self.reps)


def mv_calibration(cov_x, cov_y, m=12, n=8, reps=100_000, alpha=0.05, seed=0, mean_diff=None) -> MvCalibration:
    """Rejection rate of the multivariate T_e test under ``mu_x - mu_y = mean_diff``.

    Nearly singular scatter matrices (which the scalar test rejects with a
    conditioning error) are counted separately and not rejected.
    """
    cov_x, cov_y = np.atleast_2d(cov_x).astype(float), np.atleast_2d(cov_y).astype(float)
    p = cov_x.shape[0]
    if cov_y.shape != (p, p) or min(m, n) <= p:
        raise DomainError("need matching p x p covariances and min(m, n) > p")
    lx, ly = np.linalg.cholesky(cov_x), np.linalg.cholesky(cov_y)
    shift = np.zeros(p) if mean_diff is None else np.asarray(mean_diff, dtype=float).reshape(p)
    small = min(m, n)
    f_crit = dist.f_quantile(1.0 - alpha, p, small - p)
    pool = dist.StreamPool()
    gseed = dist.derive_seed(seed, m, n, p)
    rejections = failures = 0
    for lo in range(0, reps, REP_CHUNK):
        hi = min(lo + REP_CHUNK, reps)
        x = np.empty((hi - lo, m, p))
        y = np.empty((hi - lo, n, p))
        for i in range(hi - lo):
            gen = pool.generator(dist.RngStream(gseed, lo + i))
            x[i] = gen.standard_normal((m, p)) @ lx.T + shift
            y[i] = gen.standard_normal((n, p)) @ ly.T
        if m >= n:
            center, s = mv_te_parts(x, y)
        else:
            center, s = mv_te_parts(y, x)
            center = -center
        w = np.linalg.eigvalsh(s)
        ok = (w[:, -1] > 0) & (w[:, 0] > 1e-12 * w[:, -1])
        d = center - shift
        quad = np.einsum("ri,ri->r", d, np.linalg.solve(s, d[..., None])[..., 0])
        f_stat = quad * (small - p) / p
        rejections += int(np.sum((f_stat > f_crit) & ok))
        failures += int(np.sum(~ok))
    return MvCalibration(m, n, reps, rejections, alpha, failures)
