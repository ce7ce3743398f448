"""
Estimators of the vertex local time ``l(t)``.

* ``jump_count``: ``delta * N(t)``.
* ``occupation``: ``(1 / (2 eps sum_{k in I} alpha_k)) sum_{j in I} int_0^t
  sigma_j(s, 0)^2 1{0 <= y(s) <= eps, j(s) = j} ds`` for an edge subset ``I``
  (all edges by default, where the prefactor is ``1 / (2 eps)``).
* ``phi_decomposition``: ``phi(y_t) - phi(y_0) - int phi'(y)(b ds + sigma dW)``
  with the smoothed ramp ``phi`` below. By Ito's formula this isolates the
  ``1/(2 eps) int sigma^2 1{y < eps}`` term, so it is a third route to ``l``.

All integrals are left-endpoint sums on the path grid.
"""
from __future__ import annotations

import io
import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .engine import Observer
from .junction import CoefficientField, VertexWeights
from .paths import PathRecord

ESTIMATORS = ("jump_count", "occupation_full", "occupation_subset", "phi_decomposition")


@dataclass(frozen=True, eq=False)
class LocalTimeSeries:
    """Estimated local time on a path grid.

    ``values`` starts at 0 and is nondecreasing. ``raw`` holds the unclamped
    series for estimators that are not monotone pathwise.
    """

    time_grid: np.ndarray
    values: np.ndarray
    estimator_tag: str
    raw: np.ndarray | None = None

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", v)
        if v.shape != np.shape(self.time_grid):
            raise ValueError("values must live on the time grid")
        if v[0] != 0.0 or np.any(np.diff(v) < 0):
            raise ValueError("local time must start at 0 and be nondecreasing")

    @property
    def final(self) -> float:
        return float(self.values[-1])

    def increments(self) -> np.ndarray:
        return np.diff(self.values)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# junctionsde localtime-csv v1\n")
        buf.write("t,value,estimator_tag\n")
        for t, v in zip(self.time_grid, self.values):
            buf.write(f"{float(t)!r},{float(v)!r},{self.estimator_tag}\n")
        return buf.getvalue()


def jump_count_local_time(p: PathRecord) -> LocalTimeSeries:
    if not p.delta > 0:
        raise ValueError("jump-count local time needs delta > 0")
    n = p.jump_counter - p.jump_counter[0]
    return LocalTimeSeries(p.time_grid, p.delta * n, "jump_count")


def _subset(subset, edge_count: int) -> tuple[int, ...]:
    if subset is None:
        return tuple(range(1, edge_count + 1))
    s = tuple(sorted(set(int(i) for i in subset)))
    if not s:
        raise ValueError("edge subset must be nonempty")
    if s[0] < 1 or s[-1] > edge_count:
        raise ValueError(f"edge subset {s} outside 1..{edge_count}")
    return s


def _vertex_sigma2(field: CoefficientField, edges: np.ndarray, t: np.ndarray) -> np.ndarray:
    # sigma_j(t_k, 0)^2, evaluated at the vertex rather than the current position
    return np.array([float(field.diffusion[j - 1](float(tk), 0.0)) ** 2 for j, tk in zip(edges, t)])


def coefficients_along(p: PathRecord, field: CoefficientField) -> tuple[np.ndarray, np.ndarray]:
    """``(b, sigma)`` at the left end of every step of ``p``."""
    t, x, e = p.time_grid[:-1], p.positions[:-1], p.edges[:-1]
    b = np.empty(len(t))
    s = np.empty(len(t))
    for k in range(len(t)):
        b[k] = field.drift[e[k] - 1](float(t[k]), float(x[k]))
        s[k] = field.diffusion[e[k] - 1](float(t[k]), float(x[k]))
    return b, s


def occupation_local_time(p: PathRecord, field: CoefficientField, alpha: VertexWeights,
                          epsilon: float, subset: Sequence[int] | None = None) -> LocalTimeSeries:
    """Occupation estimator over an edge subset (all edges when ``subset`` is None)."""
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    s = _subset(subset, alpha.edge_count)
    pref = 1.0 / (2.0 * epsilon * alpha.subset_mass(s))
    t, x, e = p.time_grid[:-1], p.positions[:-1], p.edges[:-1]
    dt = np.diff(p.time_grid)
    near = (x >= 0) & (x <= epsilon) & np.isin(e, s)
    integrand = np.zeros(len(t))
    if near.any():
        integrand[near] = _vertex_sigma2(field, e[near], t[near])
    values = np.concatenate([[0.0], np.cumsum(pref * integrand * dt)])
    tag = "occupation_full" if subset is None or len(s) == alpha.edge_count else \
        f"occupation_subset({','.join(map(str, s))})"
    return LocalTimeSeries(p.time_grid, values, tag)


def phi_epsilon(y, epsilon: float):
    """``phi(y) = y^2/(2 eps)`` on ``[0, eps]``, ``y - eps/2`` beyond.

    Returns ``(phi, phi', phi'')``. The second derivative jumps at ``eps``;
    there the left value ``1/eps`` is returned.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be > 0")
    y = np.asarray(y, dtype=float)
    inside = y <= epsilon
    v = np.where(inside, y * y / (2 * epsilon), y - epsilon / 2)
    d1 = np.where(inside, y / epsilon, 1.0)
    d2 = np.where(inside, 1.0 / epsilon, 0.0)
    if v.ndim == 0:
        return float(v), float(d1), float(d2)
    return v, d1, d2


def phi_decomposition_local_time(p: PathRecord, field: CoefficientField,
                                 epsilon: float) -> LocalTimeSeries:
    """Diagnostic local time from the smoothed-ramp decomposition.

    The raw series is not monotone at finite resolution; ``values`` is its
    running maximum (floored at 0) and ``raw`` keeps the series itself.
    """
    if not p.has_noise:
        raise ValueError("phi decomposition needs the stored noise increments")
    dt = np.diff(p.time_grid)
    b, s = coefficients_along(p, field)
    phi, d1, _ = phi_epsilon(p.positions, epsilon)
    martingale_and_drift = np.concatenate([[0.0], np.cumsum(d1[:-1] * (b * dt + s * p.noise_increments))])
    raw = phi - phi[0] - martingale_and_drift
    values = np.maximum.accumulate(np.maximum(raw, 0.0))
    return LocalTimeSeries(p.time_grid, values, "phi_decomposition", raw=raw)


def occupation_time_near_zero(p: PathRecord, epsilon: float) -> float:
    """Left-endpoint sum of ``1{y <= eps} dt``; ``eps = 0`` measures time at the vertex."""
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    dt = np.diff(p.time_grid)
    return float(np.sum(dt[p.positions[:-1] <= epsilon]))


def compare_estimators(first: np.ndarray, second: np.ndarray, epsilon: float,
                       delta: float) -> dict:
    """``{epsilon, delta, mean_abs_gap, stderr}`` for per-path final values."""
    gap = np.abs(np.asarray(first) - np.asarray(second))
    n = len(gap)
    return {"epsilon": epsilon, "delta": delta, "mean_abs_gap": float(gap.mean()),
            "stderr": float(gap.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0, "n": n}


def comparison_json(rows: Sequence[dict]) -> str:
    return json.dumps(list(rows), indent=2, sort_keys=True)


class LocalTimeObserver(Observer):
    """Streaming final values of every estimator for a whole ensemble.

    Produces ``lt_jump`` (``delta N(T)``) and, per requested parameter,
    occupation, phi-decomposition (raw, unclamped) and near-vertex time per path. Keys carry the parameters,
    e.g. ``"lt_occ@0.05@1,2"``.
    """

    def __init__(self, field: CoefficientField, alpha: VertexWeights,
                 epsilons: Sequence[float] = (), subsets: Sequence[Sequence[int] | None] = (None,),
                 phi_epsilons: Sequence[float] = (), near_zero: Sequence[float] = ()):
        self.field = field
        self.alpha = alpha
        self.epsilons = list(epsilons)
        self.subsets = [_subset(s, alpha.edge_count) for s in subsets]
        self.phi_epsilons = list(phi_epsilons)
        self.near_zero = list(near_zero)

    @staticmethod
    def occ_key(eps, subset) -> str:
        return f"lt_occ@{eps!r}@{','.join(map(str, subset))}"

    def start(self, info, x, e):
        P = len(x)
        self.delta = info.cfg.delta
        I = self.alpha.edge_count
        self.prefs = [1.0 / (2 * eps * self.alpha.subset_mass(s))
                      for eps in self.epsilons for s in self.subsets]
        self.occ = np.zeros((len(self.epsilons), len(self.subsets), P))
        self.in_subset = np.array([[i in s for i in range(I + 1)] for s in self.subsets])
        self.phi_acc = np.zeros((len(self.phi_epsilons), P))
        self.phi0 = [phi_epsilon(x, eps)[0].copy() for eps in self.phi_epsilons]
        self.near = np.zeros((len(self.near_zero), P))

    def step(self, s):
        x = s.x
        if self.epsilons:
            sig0 = np.empty(len(x))
            for j in range(1, self.alpha.edge_count + 1):
                m = s.e == j
                if m.any():
                    sig0[m] = self.field.diffusion[j - 1](s.t, 0.0)
            w = sig0 ** 2 * s.dt
            for a, eps in enumerate(self.epsilons):
                close = (x <= eps) * w
                for c in range(len(self.subsets)):
                    self.occ[a, c] += close * self.in_subset[c][s.e]
        for a, eps in enumerate(self.phi_epsilons):
            _, d1, _ = phi_epsilon(x, eps)
            self.phi_acc[a] += d1 * (s.drift * s.dt + s.sigma * s.dW)
        for a, eps in enumerate(self.near_zero):
            self.near[a] += (x <= eps) * s.dt
        self._last = s

    def finish(self):
        out = {"lt_jump": self.delta * self._last.n_new.astype(float)}
        i = 0
        for a, eps in enumerate(self.epsilons):
            for c, sub in enumerate(self.subsets):
                out[self.occ_key(eps, sub)] = self.prefs[i] * self.occ[a, c]
                i += 1
        for a, eps in enumerate(self.phi_epsilons):
            out[f"lt_phi@{eps!r}"] = phi_epsilon(self._last.x_new, eps)[0] - self.phi0[a] - self.phi_acc[a]
        for a, eps in enumerate(self.near_zero):
            out[f"occ_time@{eps!r}"] = self.near[a]
        return out
