"""
Star junction geometry and coefficient fields.

A junction is ``I`` half-lines glued at a single vertex. Points are pairs
``(x, i)`` with ``x >= 0`` and ``i`` in ``1..I``; every point with ``x == 0``
is the vertex, whatever its label. The label is kept for bookkeeping, and only
equality and the metric apply the identification.

Coefficients are opaque evaluators ``b_i(t, x)`` and ``sigma_i(t, x)``. They
must accept a scalar time and a scalar or ndarray position and broadcast like
numpy ufuncs. Bounds are *declared* and checked by sampling, see
:func:`validate_assumption_H`.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

Evaluator = Callable[[float, "np.ndarray | float"], "np.ndarray | float"]

ALPHA_TOL = 1e-12


@dataclass(frozen=True)
class Junction:
    """A star graph with ``edge_count`` edges numbered ``1..edge_count``."""

    edge_count: int

    def __post_init__(self):
        if int(self.edge_count) != self.edge_count or self.edge_count < 1:
            raise ValueError(f"edge_count must be a positive integer, got {self.edge_count!r}")

    @property
    def edges(self) -> range:
        return range(1, self.edge_count + 1)

    def check_edge(self, i: int) -> int:
        if not 1 <= i <= self.edge_count:
            raise ValueError(f"edge index {i} out of range 1..{self.edge_count}")
        return int(i)

    def point(self, x: float, i: int) -> "JunctionPoint":
        return JunctionPoint(x, self.check_edge(i))


@dataclass(frozen=True, eq=False)
class JunctionPoint:
    """A point ``(x, i)``; all points with ``x == 0`` compare equal."""

    x: float
    i: int

    def __post_init__(self):
        if not math.isfinite(self.x) or self.x < 0:
            raise ValueError(f"position must be finite and >= 0, got {self.x!r}")
        if int(self.i) != self.i or self.i < 1:
            raise ValueError(f"edge index must be an integer >= 1, got {self.i!r}")

    @property
    def is_vertex(self) -> bool:
        return self.x == 0.0

    def __eq__(self, other):
        if not isinstance(other, JunctionPoint):
            return NotImplemented
        if self.is_vertex and other.is_vertex:
            return True
        return self.x == other.x and self.i == other.i

    def __hash__(self):
        return hash((0.0,)) if self.is_vertex else hash((self.x, self.i))


def junction_distance(x1, e1, x2, e2):
    """Vectorized junction metric: ``|x1 - x2|`` on a shared edge, ``x1 + x2`` otherwise.

    When either position is 0 both branches agree, so the vertex label never
    matters.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    return np.where(np.asarray(e1) == np.asarray(e2), np.abs(x1 - x2), x1 + x2)


def d_junction(p: JunctionPoint, q: JunctionPoint, junction: Junction | None = None) -> float:
    """Distance between two junction points.

    Parameters
    ----------
    p, q : JunctionPoint
    junction : Junction, optional
        When given, edge indices are range-checked against it.
    """
    if junction is not None:
        junction.check_edge(p.i)
        junction.check_edge(q.i)
    if p.i == q.i:
        return abs(p.x - q.x)
    return p.x + q.x


@dataclass(frozen=True)
class VertexWeights:
    """Edge-selection probabilities at the vertex."""

    alpha: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in self.alpha)
        object.__setattr__(self, "alpha", a)
        if len(a) < 1:
            raise ValueError("alpha must have at least one entry")
        if len(a) == 1:
            # a single edge forces alpha = (1,)
            if abs(a[0] - 1.0) > ALPHA_TOL:
                raise ValueError("single-edge alpha must be (1.0,)")
            return
        if any(not (0.0 < v < 1.0) for v in a):
            raise ValueError(f"alpha entries must lie in (0, 1), got {a}")
        if abs(math.fsum(a) - 1.0) > ALPHA_TOL:
            raise ValueError(f"alpha must sum to 1 (got {math.fsum(a)!r})")

    @property
    def edge_count(self) -> int:
        return len(self.alpha)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.alpha, dtype=float)

    def subset_mass(self, subset: Sequence[int]) -> float:
        return math.fsum(self.alpha[i - 1] for i in subset)


# -- built-in evaluators ------------------------------------------------------
# Small callable classes rather than lambdas so fields pickle and echo cleanly.


@dataclass(frozen=True)
class Constant:
    value: float

    def __call__(self, t, x):
        return self.value + 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else float(self.value)

    def describe(self) -> str:
        return f"constant({self.value!r})"


@dataclass(frozen=True)
class LinearDecay:
    """``-rate * x``."""

    rate: float

    def __call__(self, t, x):
        return -self.rate * np.asarray(x, dtype=float) if np.ndim(x) else -self.rate * float(x)

    def describe(self) -> str:
        return f"linear_decay(rate={self.rate!r})"


@dataclass(frozen=True)
class TimeRamp:
    """``base * (1 + slope * t)``, constant in space."""

    base: float
    slope: float

    def __call__(self, t, x):
        v = self.base * (1.0 + self.slope * t)
        return v + 0.0 * np.asarray(x, dtype=float) if np.ndim(x) else float(v)

    def describe(self) -> str:
        return f"time_ramp(base={self.base!r}, slope={self.slope!r})"


def _builtin_constant(drift=0.0, sigma=1.0):
    return Constant(float(drift)), Constant(float(sigma))


def _builtin_linear_decay(rate=1.0, sigma=1.0):
    return LinearDecay(float(rate)), Constant(float(sigma))


def _builtin_time_ramp(drift=0.0, sigma=1.0, slope=0.5):
    return Constant(float(drift)), TimeRamp(float(sigma), float(slope))


FIELD_KINDS: dict[str, Callable[..., tuple[Evaluator, Evaluator]]] = {
    "constant": _builtin_constant,
    "linear_decay": _builtin_linear_decay,
    "time_ramp": _builtin_time_ramp,
}


def register_field_kind(name: str, factory: Callable[..., tuple[Evaluator, Evaluator]]) -> None:
    """Make ``factory(**params) -> (drift, diffusion)`` addressable by name in config files."""
    FIELD_KINDS[name] = factory


def make_edge_coefficients(kind: str, **params) -> tuple[Evaluator, Evaluator]:
    try:
        factory = FIELD_KINDS[kind]
    except KeyError:
        raise KeyError(f"unknown coefficient kind {kind!r}; known: {sorted(FIELD_KINDS)}") from None
    return factory(**params)


def _describe(fn) -> str:
    d = getattr(fn, "describe", None)
    return d() if callable(d) else getattr(fn, "__name__", repr(fn))


@dataclass(frozen=True)
class CoefficientField:
    """Per-edge drift and diffusion plus the declared ellipticity and bound constants.

    Attributes
    ----------
    drift, diffusion : tuple of callables
        ``drift[i - 1](t, x)`` is ``b_i``; likewise for ``sigma_i``.
    c : float
        Declared ellipticity floor.
    bound_b, bound_sigma : float
        Declared bounds on ``sup|b_i| + Lip_x(b_i)`` and the same for ``sigma_i``.
    T : float
        Time horizon.
    """

    drift: tuple
    diffusion: tuple
    c: float
    bound_b: float
    bound_sigma: float
    T: float

    def __post_init__(self):
        object.__setattr__(self, "drift", tuple(self.drift))
        object.__setattr__(self, "diffusion", tuple(self.diffusion))
        if len(self.drift) != len(self.diffusion) or not self.drift:
            raise ValueError("drift and diffusion need one evaluator per edge")
        for name in ("c", "bound_b", "bound_sigma", "T"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a positive finite number, got {v!r}")

    @classmethod
    def uniform(cls, drift: Evaluator, diffusion: Evaluator, edge_count: int, *,
                c: float, bound_b: float, bound_sigma: float, T: float) -> "CoefficientField":
        """Same coefficients on every edge."""
        return cls((drift,) * edge_count, (diffusion,) * edge_count, c, bound_b, bound_sigma, T)

    @classmethod
    def from_kinds(cls, kinds: Sequence[tuple[str, dict]], *, c, bound_b, bound_sigma, T):
        pairs = [make_edge_coefficients(k, **p) for k, p in kinds]
        return cls(tuple(p[0] for p in pairs), tuple(p[1] for p in pairs), c, bound_b, bound_sigma, T)

    @property
    def edge_count(self) -> int:
        return len(self.drift)

    @property
    def homogeneous(self) -> bool:
        return all(b == self.drift[0] for b in self.drift) and all(
            s == self.diffusion[0] for s in self.diffusion)

    def coefficients(self, edges: np.ndarray, t: float, x: np.ndarray):
        """Evaluate ``(b, sigma)`` for an ensemble; ``edges[k]`` selects the edge of path ``k``."""
        x = np.asarray(x, dtype=float)
        if self.homogeneous:
            b = np.broadcast_to(self.drift[0](t, x), x.shape)
            s = np.broadcast_to(self.diffusion[0](t, x), x.shape)
            return b, s
        b = np.empty_like(x)
        s = np.empty_like(x)
        for i in range(1, self.edge_count + 1):
            m = edges == i
            if m.any():
                xm = x[m]
                b[m] = self.drift[i - 1](t, xm)
                s[m] = self.diffusion[i - 1](t, xm)
        return b, s

    def describe(self) -> dict:
        return {
            "drift": [_describe(f) for f in self.drift],
            "diffusion": [_describe(f) for f in self.diffusion],
            "c": self.c,
            "bound_b": self.bound_b,
            "bound_sigma": self.bound_sigma,
            "T": self.T,
        }


def eval_coeff(field: CoefficientField, i: int, t: float, x: float) -> tuple[float, float]:
    """Return ``(b_i(t, x), sigma_i(t, x))`` after domain and finiteness checks."""
    if not 1 <= i <= field.edge_count:
        raise ValueError(f"edge index {i} out of range 1..{field.edge_count}")
    if not 0.0 <= t <= field.T:
        raise ValueError(f"time {t!r} outside [0, {field.T}]")
    if not (math.isfinite(x) and x >= 0.0):
        raise ValueError(f"position {x!r} outside [0, inf)")
    b = float(field.drift[i - 1](t, x))
    s = float(field.diffusion[i - 1](t, x))
    if not (math.isfinite(b) and math.isfinite(s)):
        raise ValueError(f"non-finite coefficient on edge {i} at (t={t!r}, x={x!r}): ({b}, {s})")
    return b, s


@dataclass
class CheckItem:
    name: str
    passed: bool
    observed: float | None = None
    threshold: float | None = None
    edge: int | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None and v != ""}


@dataclass
class ValidationReport:
    """Pass/fail items from a sampling-based check."""

    items: list[CheckItem] = dc_field(default_factory=list)
    note: str = ""

    @property
    def passed(self) -> bool:
        return all(it.passed for it in self.items)

    def failures(self) -> list[CheckItem]:
        return [it for it in self.items if not it.passed]

    def item(self, name: str, edge: int | None = None) -> CheckItem:
        for it in self.items:
            if it.name == name and (edge is None or it.edge == edge):
                return it
        raise KeyError((name, edge))

    def as_dict(self) -> dict:
        return {"passed": self.passed, "note": self.note, "items": [it.as_dict() for it in self.items]}

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), indent=2, sort_keys=True)


def default_x_max(field: CoefficientField, x0: float) -> float:
    return x0 + 6.0 * field.bound_sigma * math.sqrt(field.T)


def _max_lipschitz(values: np.ndarray, xs: np.ndarray) -> float:
    # values: (n_t, n_x); quotients between adjacent x samples
    dx = np.diff(xs)
    q = np.abs(np.diff(values, axis=1)) / dx
    return float(q.max()) if q.size else 0.0


def validate_assumption_H(field: CoefficientField, alpha: VertexWeights, *, n_t: int = 64,
                          n_x: int = 64, x_max: float | None = None, x0: float = 0.0
                          ) -> ValidationReport:
    """Sample the coefficients on a ``n_t x n_x`` grid over ``[0, T] x [0, x_max]``.

    Checks, per edge, ``min sigma_i >= c`` and ``sup|f| + Lip_x(f) <= bound``
    for ``f`` in ``(b_i, sigma_i)``, plus the simplex condition on ``alpha``.
    Violations are reported, never raised. Sampling can only refute the
    assumption; a passing report is a necessary check.
    """
    if x_max is None:
        x_max = default_x_max(field, x0)
    ts = np.linspace(0.0, field.T, n_t)
    xs = np.linspace(0.0, x_max, n_x)
    report = ValidationReport(note=(
        f"sampled on {n_t}x{n_x} grid over [0,{field.T}]x[0,{x_max:.6g}]; "
        "sampling is a necessary check only and cannot certify the bounds"))

    for i in range(1, field.edge_count + 1):
        B = np.array([np.broadcast_to(field.drift[i - 1](t, xs), xs.shape) for t in ts], dtype=float)
        S = np.array([np.broadcast_to(field.diffusion[i - 1](t, xs), xs.shape) for t in ts], dtype=float)
        finite = bool(np.isfinite(B).all() and np.isfinite(S).all())
        report.items.append(CheckItem("finite", finite, edge=i))
        if not finite:
            continue
        smin = float(S.min())
        report.items.append(CheckItem("ellipticity", smin >= field.c, smin, field.c, i,
                                      "min sigma_i >= c"))
        for name, V, bound in (("drift_bound", B, field.bound_b),
                               ("diffusion_bound", S, field.bound_sigma)):
            sup = float(np.abs(V).max())
            lip = _max_lipschitz(V, xs)
            report.items.append(CheckItem(name, sup + lip <= bound, sup + lip, bound, i,
                                          f"sup={sup:.6g} lip={lip:.6g}"))

    a = alpha.alpha
    ok = (len(a) == field.edge_count and abs(math.fsum(a) - 1.0) <= ALPHA_TOL
          and (len(a) == 1 or all(0.0 < v < 1.0 for v in a)))
    report.items.append(CheckItem("alpha_simplex", ok, math.fsum(a), 1.0,
                                  detail=f"alpha={list(a)} for {field.edge_count} edges"))
    return report
