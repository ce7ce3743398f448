"""
Test functions on the junction and residuals of the vertex Ito formula.

For ``f`` smooth on every edge and continuous at the vertex,

    f(t, X_t) = f(0, X_0) + int L f ds + int d_y f sigma dW
                + sum_i alpha_i int d_y f_i(s, 0) dl(s),

with ``L f = d_t f + b d_y f + sigma^2 d_yy f / 2`` on the current edge. The
residual ``M`` is the left side minus the ``ds`` and ``dl`` terms, which
should be a centered martingale; subtracting the stochastic integral as well
leaves a discretization error only.
"""
from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .engine import Observer
from .junction import CheckItem, CoefficientField, JunctionPoint, ValidationReport, VertexWeights
from .localtime import LocalTimeSeries, coefficients_along
from .paths import PathRecord
from .stats import StatsReport, zero_mean_report

AGAINST_LOCAL_TIME = "against_local_time"
AGAINST_STOCHASTIC_INTEGRAL = "against_stochastic_integral"
MODES = (AGAINST_LOCAL_TIME, AGAINST_STOCHASTIC_INTEGRAL)

Fn = Callable[[object, object], object]


@dataclass(frozen=True, eq=False)
class TestFunction:
    """Per-edge ``f_i`` with its derivatives ``d_t``, ``d_y`` and ``d_yy``.

    Each callable takes ``(t, y)`` and must broadcast over numpy arrays in
    both arguments.
    """

    __test__ = False  # not a pytest class

    name: str
    f: tuple
    d_t: tuple
    d_y: tuple
    d_yy: tuple

    def __post_init__(self):
        for attr in ("f", "d_t", "d_y", "d_yy"):
            object.__setattr__(self, attr, tuple(getattr(self, attr)))
        if not len(self.f) == len(self.d_t) == len(self.d_y) == len(self.d_yy) >= 1:
            raise ValueError("one callable per edge for f and each derivative")

    @property
    def edge_count(self) -> int:
        return len(self.f)

    @classmethod
    def symmetric(cls, name, f, d_t, d_y, d_yy, edge_count: int) -> "TestFunction":
        return cls(name, (f,) * edge_count, (d_t,) * edge_count, (d_y,) * edge_count,
                   (d_yy,) * edge_count)

    def _eval(self, fns: tuple, e, t, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if all(g is fns[0] for g in fns):
            return np.broadcast_to(np.asarray(fns[0](t, y), dtype=float), y.shape).copy()
        e = np.broadcast_to(np.asarray(e), y.shape)
        tt = np.broadcast_to(np.asarray(t, dtype=float), y.shape)
        out = np.empty(y.shape)
        for i in range(1, len(fns) + 1):
            m = e == i
            if m.any():
                out[m] = fns[i - 1](tt[m], y[m])
        return out

    def value(self, e, t, y):
        return self._eval(self.f, e, t, y)

    def dt(self, e, t, y):
        return self._eval(self.d_t, e, t, y)

    def dy(self, e, t, y):
        return self._eval(self.d_y, e, t, y)

    def dyy(self, e, t, y):
        return self._eval(self.d_yy, e, t, y)

    def vertex_slope(self, alpha: VertexWeights, t) -> np.ndarray:
        """``sum_i alpha_i d_y f_i(t, 0)``."""
        t = np.asarray(t, dtype=float)
        z = np.zeros(t.shape)
        return sum(a * np.asarray(self.d_y[i](t, z), dtype=float) for i, a in enumerate(alpha.alpha))


def linear_combination(terms: Sequence[tuple[float, TestFunction]], name: str = "combination"
                       ) -> TestFunction:
    """``sum_k a_k f_k`` edge by edge."""
    I = terms[0][1].edge_count
    if any(g.edge_count != I for _, g in terms):
        raise ValueError("all terms must have the same number of edges")

    def comb(attr, i):
        parts = [(a, getattr(g, attr)[i]) for a, g in terms]
        return lambda t, y: sum(a * fn(t, y) for a, fn in parts)

    return TestFunction(name, *([comb(attr, i) for i in range(I)] for attr in ("f", "d_t", "d_y", "d_yy")))


# -- catalog --------------------------------------------------------------------


def _zero(t, y):
    return 0.0 * np.asarray(y, dtype=float) + 0.0 * np.asarray(t, dtype=float)


def _const(c):
    return lambda t, y: c + _zero(t, y)


def _constant(I: int) -> TestFunction:
    return TestFunction.symmetric("constant", _const(1.0), _zero, _zero, _zero, I)


def _linear_symmetric(I: int) -> TestFunction:
    return TestFunction.symmetric("linear_symmetric", lambda t, y: y + _zero(t, y), _zero,
                                  _const(1.0), _zero, I)


def _quadratic(I: int) -> TestFunction:
    return TestFunction.symmetric("quadratic", lambda t, y: y * y + _zero(t, y), _zero,
                                  lambda t, y: 2.0 * y + _zero(t, y), _const(2.0), I)


def _edge_weighted_linear(I: int) -> TestFunction:
    # f_i = i tanh(y): slope i at the vertex, flat far away
    def make(c):
        return (lambda t, y: c * np.tanh(y) + _zero(t, y),
                _zero,
                lambda t, y: c / np.cosh(y) ** 2 + _zero(t, y),
                lambda t, y: -2.0 * c * np.tanh(y) / np.cosh(y) ** 2 + _zero(t, y))

    parts = [make(float(i)) for i in range(1, I + 1)]
    return TestFunction("edge_weighted_linear", *zip(*parts))


def _time_decay_sin(I: int) -> TestFunction:
    return TestFunction.symmetric(
        "time_decay_sin",
        lambda t, y: np.exp(-t) * np.sin(y),
        lambda t, y: -np.exp(-t) * np.sin(y),
        lambda t, y: np.exp(-t) * np.cos(y),
        lambda t, y: -np.exp(-t) * np.sin(y),
        I)


CATALOG: dict[str, Callable[[int], TestFunction]] = {
    "constant": _constant,
    "linear_symmetric": _linear_symmetric,
    "quadratic": _quadratic,
    "edge_weighted_linear": _edge_weighted_linear,
    "time_decay_sin": _time_decay_sin,
}


def catalog_function(name: str, edge_count: int) -> TestFunction:
    try:
        return CATALOG[name](edge_count)
    except KeyError:
        raise KeyError(f"unknown test function {name!r}; known: {sorted(CATALOG)}") from None


# -- operator and validation -------------------------------------------------------


def dynkin_apply(f: TestFunction, field: CoefficientField, t: float, p: JunctionPoint) -> float:
    """``d_t f_j + b_j d_y f_j + sigma_j^2 d_yy f_j / 2`` on edge ``j = p.i`` at ``(t, p.x)``."""
    j = p.i
    if not 1 <= j <= min(f.edge_count, field.edge_count):
        raise ValueError(f"edge {j} not covered by the test function and field")
    b = float(field.drift[j - 1](t, p.x))
    s = float(field.diffusion[j - 1](t, p.x))
    return float(f.d_t[j - 1](t, p.x) + b * f.d_y[j - 1](t, p.x)
                 + 0.5 * s * s * f.d_yy[j - 1](t, p.x))


def validate_test_function(f: TestFunction, T: float, n_t: int = 17, n_y: int = 33,
                           y_max: float = 3.0, vertex_tol: float = 1e-9) -> ValidationReport:
    """Vertex continuity on a time grid and derivatives against central differences.

    Derivative tolerance is ``max(1e-5, 1e-3 |value|)``. Finite differences
    use ``y >= 2 step`` so that stencils stay on the edge.
    """
    ts = np.linspace(0.0, T, n_t)
    rep = ValidationReport(note=f"t-grid of {n_t} points on [0,{T}], y-grid of {n_y} points on (0,{y_max}]")
    v0 = np.array([np.broadcast_to(f.f[i](ts, np.zeros_like(ts)), ts.shape) for i in range(f.edge_count)])
    for i in range(1, f.edge_count):
        gap = float(np.abs(v0[i] - v0[0]).max())
        rep.items.append(CheckItem("vertex_continuity", gap <= vertex_tol, gap, vertex_tol, i + 1,
                                   "max_t |f_i(t,0) - f_1(t,0)|"))

    hs, ht = 1e-4, 1e-5
    ys = np.linspace(2 * hs, y_max, n_y)
    tc = np.linspace(ht, T - ht, n_t) if T > 2 * ht else np.array([T / 2])
    Tg, Yg = np.meshgrid(tc, ys, indexing="ij")
    for i in range(f.edge_count):
        fi = f.f[i]
        fd = {
            "d_t": (fi(Tg + ht, Yg) - fi(Tg - ht, Yg)) / (2 * ht),
            "d_y": (fi(Tg, Yg + hs) - fi(Tg, Yg - hs)) / (2 * hs),
            "d_yy": (fi(Tg, Yg + hs) - 2 * fi(Tg, Yg) + fi(Tg, Yg - hs)) / hs ** 2,
        }
        for name, approx in fd.items():
            exact = np.broadcast_to(np.asarray(getattr(f, name)[i](Tg, Yg), dtype=float), Yg.shape)
            tol = np.maximum(1e-5, 1e-3 * np.abs(exact))
            excess = float(np.max(np.abs(exact - approx) - tol))
            worst = float(np.max(np.abs(exact - approx)))
            rep.items.append(CheckItem(name, bool(np.all(np.isfinite(exact)) and excess <= 0),
                                       worst, None, i + 1, "supplied vs central difference"))
    return rep


# -- residuals ------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ResidualSeries:
    time_grid: np.ndarray
    values: np.ndarray
    mode: str

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.values[0] != 0.0:
            raise ValueError("residual must vanish at t = 0")

    def at(self, t: float) -> float:
        """Value at the last grid time ``<= t``."""
        k = int(np.searchsorted(self.time_grid, t + 1e-12, side="right")) - 1
        return float(self.values[max(k, 0)])

    def sup_abs(self) -> float:
        return float(np.abs(self.values).max())

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("# junctionsde residual-csv v1\n")
        buf.write("t,M,mode\n")
        for t, m in zip(self.time_grid, self.values):
            buf.write(f"{float(t)!r},{float(m)!r},{self.mode}\n")
        return buf.getvalue()


def ito_residual(p: PathRecord, f: TestFunction, field: CoefficientField, alpha: VertexWeights,
                 l: LocalTimeSeries, mode: str = AGAINST_LOCAL_TIME) -> ResidualSeries:
    """Left-endpoint residual of the vertex Ito formula along ``p``.

    ``l`` supplies the local-time increments, so any estimator can be used.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if len(l.time_grid) != len(p.time_grid) or not np.array_equal(l.time_grid, p.time_grid):
        raise ValueError("local time and path live on different grids")
    if mode == AGAINST_STOCHASTIC_INTEGRAL and not p.has_noise:
        raise ValueError("the stochastic-integral mode needs stored noise increments")
    t, x, e = p.time_grid, p.positions, p.edges
    dt = np.diff(t)
    b, s = coefficients_along(p, field)
    tl, xl, el = t[:-1], x[:-1], e[:-1]
    Lf = f.dt(el, tl, xl) + b * f.dy(el, tl, xl) + 0.5 * s * s * f.dyy(el, tl, xl)
    incr = Lf * dt + f.vertex_slope(alpha, tl) * np.diff(l.values)
    if mode == AGAINST_STOCHASTIC_INTEGRAL:
        incr = incr + f.dy(el, tl, xl) * s * p.noise_increments
    fv = f.value(e, t, x)
    M = fv - fv[0] - np.concatenate([[0.0], np.cumsum(incr)])
    M[0] = 0.0
    return ResidualSeries(t, M, mode)


def martingale_zero_mean_test(ensemble: Sequence[ResidualSeries], checkpoints: Sequence[float],
                              z_max: float = 3.0) -> StatsReport:
    """Mean, standard error and z-score of ``M(t)`` at each checkpoint; flags ``|z| > z_max``."""
    if len(ensemble) < 30:
        raise ValueError(f"need at least 30 residual series, got {len(ensemble)}")
    vals = np.array([[r.at(c) for c in checkpoints] for r in ensemble])
    return zero_mean_report(vals, checkpoints, z_max)


def checkpoint_indices(grid: np.ndarray, checkpoints: Sequence[float]) -> np.ndarray:
    """Index of the last grid time ``<= c`` for each checkpoint."""
    idx = np.searchsorted(grid, np.asarray(checkpoints, dtype=float) + 1e-12, side="right") - 1
    if np.any(idx < 0):
        raise ValueError("checkpoints must be >= 0")
    return idx


class ItoObserver(Observer):
    """Streaming residuals for several test functions, with ``l = delta N``.

    Per function ``name`` it returns ``ito_lt@name`` (shape ``(paths,
    checkpoints)``, against-local-time residual), ``ito_si@name`` (same for
    the stochastic-integral mode) and ``ito_sup@name`` (``sup_t`` of the
    stochastic-integral residual).
    """

    def __init__(self, functions: Sequence[TestFunction], alpha: VertexWeights,
                 checkpoints: Sequence[float]):
        self.functions = list(functions)
        self.alpha = alpha
        self.checkpoints = list(checkpoints)

    def start(self, info, x, e):
        P = len(x)
        self.delta = info.cfg.delta
        self.cp = {int(k): j for j, k in enumerate(checkpoint_indices(info.time_grid, self.checkpoints))}
        nf, nc = len(self.functions), len(self.checkpoints)
        self.f0 = np.array([g.value(e, 0.0, x) for g in self.functions])
        self.A = np.zeros((nf, P))      # ds and dl terms
        self.S = np.zeros((nf, P))      # stochastic integral
        self.sup = np.zeros((nf, P))
        self.lt = np.zeros((nf, P, nc))
        self.si = np.zeros((nf, P, nc))  # a checkpoint at t = 0 stays 0

    def step(self, s):
        dl = self.delta * s.jumps
        for a, g in enumerate(self.functions):
            dy = g.dy(s.e, s.t, s.x)
            Lf = g.dt(s.e, s.t, s.x) + s.drift * dy + 0.5 * s.sigma ** 2 * g.dyy(s.e, s.t, s.x)
            self.A[a] += Lf * s.dt + float(g.vertex_slope(self.alpha, s.t)) * dl
            self.S[a] += dy * s.sigma * s.dW
            m_lt = g.value(s.e_new, s.t + s.dt, s.x_new) - self.f0[a] - self.A[a]
            m_si = m_lt - self.S[a]
            np.maximum(self.sup[a], np.abs(m_si), out=self.sup[a])
            j = self.cp.get(s.k + 1)
            if j is not None:
                self.lt[a, :, j] = m_lt
                self.si[a, :, j] = m_si

    def finish(self):
        out = {}
        for a, g in enumerate(self.functions):
            out[f"ito_lt@{g.name}"] = self.lt[a]
            out[f"ito_si@{g.name}"] = self.si[a]
            out[f"ito_sup@{g.name}"] = self.sup[a]
        return out
