"""Summary statistics, rate fits, goodness of fit and reflected-BM oracles.

When every edge carries ``b = 0`` and ``sigma = 1`` the radial part of the
limit process is reflected Brownian motion, whatever ``alpha`` is. Its closed
forms are used here as independent references:

* law of ``|x0 + W_T|``: ``F(z) = Phi((z - x0)/sqrt T) + Phi((z + x0)/sqrt T) - 1``;
* mean local time at 0: ``E l_T = 2 (sqrt(T) phi(a) - x0 (1 - Phi(a)))`` with
  ``a = x0 / sqrt(T)``, i.e. ``sqrt(2T/pi)`` from the vertex;
* mean time within ``eps`` of the vertex:
  ``int_0^T Phi((eps - x0)/sqrt s) - Phi((-eps - x0)/sqrt s) ds``.

:func:`reflected_walk_local_time` simulates a lattice walk reflected at 0 as a
second, simulation-based check of the local-time mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, stats


def mean_stderr(values) -> tuple[float, float, int]:
    v = np.asarray(values, dtype=float).ravel()
    n = len(v)
    if n == 0:
        raise ValueError("no samples")
    se = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return float(v.mean()), se, n


def z_score(mean: float, se: float, target: float = 0.0) -> float:
    """``(mean - target) / se``; a zero error bar gives 0 or +-inf."""
    gap = mean - target
    if se > 0:
        return gap / se
    return 0.0 if gap == 0 else math.copysign(math.inf, gap)


@dataclass
class CheckpointStat:
    t: float
    mean: float
    stderr: float
    z: float
    flagged: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class StatsReport:
    """Per-checkpoint zero-mean statistics; ``flagged`` marks ``|z| > z_max``."""

    rows: list[CheckpointStat] = field(default_factory=list)
    n: int = 0
    z_max: float = 3.0

    @property
    def passed(self) -> bool:
        return not any(r.flagged for r in self.rows)

    def as_dict(self) -> dict:
        return {"n": self.n, "z_max": self.z_max, "passed": self.passed,
                "checkpoints": [r.as_dict() for r in self.rows]}


def zero_mean_report(values: np.ndarray, checkpoints: Sequence[float],
                     z_max: float = 3.0, min_samples: int = 30) -> StatsReport:
    """Zero-mean test on ``values[path, checkpoint]``."""
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[1] != len(checkpoints):
        raise ValueError("values must have shape (n_paths, n_checkpoints)")
    if v.shape[0] < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {v.shape[0]}")
    rep = StatsReport(n=v.shape[0], z_max=z_max)
    for j, t in enumerate(checkpoints):
        m, se, _ = mean_stderr(v[:, j])
        z = z_score(m, se)
        rep.rows.append(CheckpointStat(float(t), m, se, z, bool(abs(z) > z_max)))
    return rep


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r2: float

    def as_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r2": self.r2}


def fit_convergence_rate(points: Sequence[tuple[float, float]]) -> RateFit:
    """OLS of ``log(error)`` on ``log(scale)``.

    ``R^2`` is 1 when the errors are constant (no variation to explain).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
        raise ValueError("need at least two (scale, error) pairs")
    if np.any(pts <= 0) or not np.all(np.isfinite(pts)):
        raise ValueError("scales and errors must be positive and finite")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise ValueError("scales must not all be equal")
    res = stats.linregress(lx, ly)
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else float(res.rvalue ** 2)
    return RateFit(float(res.slope), float(res.intercept), r2)


def monotone_with_inversions(values: Sequence[float], decreasing: bool = True) -> int:
    """Number of adjacent pairs that break the requested trend."""
    v = np.asarray(values, dtype=float)
    d = np.diff(v)
    return int(np.sum(d > 0)) if decreasing else int(np.sum(d < 0))


@dataclass(frozen=True)
class KSResult:
    D: float
    n: int
    critical: float

    @property
    def passed(self) -> bool:
        return self.D <= self.critical

    def as_dict(self) -> dict:
        return {"D": self.D, "n": self.n, "critical_1pct": self.critical, "passed": self.passed}


KS_CRITICAL_1PCT = 1.63


def ks_statistic(samples, cdf: Callable[[np.ndarray], np.ndarray]) -> KSResult:
    """One-sample Kolmogorov-Smirnov test at the asymptotic 1% level ``1.63/sqrt(n)``."""
    x = np.asarray(samples, dtype=float).ravel()
    if len(x) < 100:
        raise ValueError(f"KS test needs at least 100 samples, got {len(x)}")
    D = float(stats.kstest(x, cdf).statistic)
    return KSResult(D, len(x), KS_CRITICAL_1PCT / math.sqrt(len(x)))


# -- reflected Brownian motion ---------------------------------------------------


def folded_normal_cdf(x0: float, T: float) -> Callable[[np.ndarray], np.ndarray]:
    """CDF of ``|x0 + W_T|``."""
    s = math.sqrt(T)

    def cdf(z):
        z = np.maximum(np.asarray(z, dtype=float), 0.0)
        return stats.norm.cdf((z - x0) / s) + stats.norm.cdf((z + x0) / s) - 1.0

    return cdf


def reflected_bm_local_time_mean(T: float, x0: float = 0.0) -> float:
    s = math.sqrt(T)
    a = x0 / s
    return 2.0 * (s * stats.norm.pdf(a) - x0 * stats.norm.sf(a))


def reflected_bm_occupation_mean(T: float, eps: float, x0: float = 0.0) -> float:
    """``E int_0^T 1{|x0 + W_s| <= eps} ds`` by adaptive quadrature."""

    def p(s):
        if s == 0.0:
            return 1.0 if x0 <= eps else 0.0
        r = math.sqrt(s)
        return stats.norm.cdf((eps - x0) / r) - stats.norm.cdf((-eps - x0) / r)

    val, _ = integrate.quad(p, 0.0, T, limit=200, epsabs=1e-12, epsrel=1e-10)
    return float(val)


def reflected_walk_local_time(T: float, n_steps: int, n_paths: int, seed: int = 0,
                              x0: float = 0.0) -> tuple[float, float]:
    """Mean and standard error of the local time of a reflected lattice walk.

    The walk moves ``+-sqrt(h)`` with ``h = T / n_steps`` and reflects at 0;
    its local time is ``sqrt(h)`` times the number of visits to 0 (discrete
    Tanaka formula). ``x0`` is rounded to the lattice.
    """
    rng = np.random.default_rng(seed)
    step = math.sqrt(T / n_steps)
    pos = np.full(n_paths, int(round(x0 / step)), np.int64)
    visits = np.zeros(n_paths, np.int64)
    for _ in range(n_steps):
        at0 = pos == 0
        visits += at0
        pos = np.abs(pos + rng.integers(0, 2, n_paths, dtype=np.int8) * 2 - 1)
    m, se, _ = mean_stderr(step * visits)
    return m, se
