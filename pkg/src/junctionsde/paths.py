"""
Discretized junction paths and path-space diagnostics.

All continuum suprema are taken over the stored grid, so every quantity here is
a grid value (a lower bound of the continuum supremum for the modulus, an upper
bound for the Skorokhod distance).
"""
from __future__ import annotations

import io
import json
import os
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .junction import junction_distance

PATH_CSV_VERSION = 1
PACK_VERSION = 1
_TIME_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class PathRecord:
    """A sampled trajectory of the jump process or a synthetic junction path.

    Attributes
    ----------
    time_grid : ndarray, shape (n + 1,)
        Strictly increasing, starts at 0.
    positions : ndarray, shape (n + 1,)
        Distance to the vertex, nonnegative.
    edges : ndarray of int, shape (n + 1,)
        Edge label of each grid point, ``1..I``.
    jump_counter : ndarray of int, shape (n + 1,)
        Number of vertex jumps up to and including each grid time.
    noise_increments : ndarray, shape (n,)
        Brownian increment used on each step (zeros for synthetic paths).
    delta : float
        Restart distance; 0 for limit or synthetic paths.
    """

    time_grid: np.ndarray
    positions: np.ndarray
    edges: np.ndarray
    jump_counter: np.ndarray
    noise_increments: np.ndarray
    delta: float = 0.0

    def __post_init__(self):
        t = np.asarray(self.time_grid, dtype=float)
        x = np.asarray(self.positions, dtype=float)
        e = np.asarray(self.edges, dtype=np.int64)
        n = np.asarray(self.jump_counter, dtype=np.int64)
        w = np.asarray(self.noise_increments, dtype=float)
        for name, v in (("time_grid", t), ("positions", x), ("edges", e),
                        ("jump_counter", n), ("noise_increments", w)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)
        if t.ndim != 1 or len(t) < 2:
            raise ValueError("time_grid needs at least two points")
        if not (len(x) == len(e) == len(n) == len(t)) or len(w) != len(t) - 1:
            raise ValueError("array lengths disagree (noise_increments must be one shorter)")
        if t[0] != 0.0 or not np.all(np.diff(t) > 0):
            raise ValueError("time_grid must start at 0 and be strictly increasing")
        if not np.all(np.isfinite(x)) or x.min() < 0:
            raise ValueError("positions must be finite and nonnegative")
        if e.min() < 1:
            raise ValueError("edge labels start at 1")
        dn = np.diff(n)
        if n[0] < 0 or dn.min(initial=0) < 0:
            raise ValueError("jump_counter must be nonnegative and nondecreasing")
        if np.any((np.diff(e) != 0) & (dn == 0)):
            k = int(np.nonzero((np.diff(e) != 0) & (dn == 0))[0][0])
            raise ValueError(f"edge label changes at step {k} without a vertex jump")
        if self.delta < 0:
            raise ValueError("delta must be >= 0")

    @classmethod
    def synthetic(cls, time_grid, positions, edges=1, delta: float = 0.0, jump_counter=None):
        """Build a path without noise data; scalar ``edges`` is broadcast."""
        t = np.asarray(time_grid, dtype=float)
        e = np.broadcast_to(np.asarray(edges, dtype=np.int64), t.shape).copy()
        n = np.zeros(len(t), np.int64) if jump_counter is None else jump_counter
        return cls(t, positions, e, n, np.zeros(len(t) - 1), delta)

    @property
    def T(self) -> float:
        return float(self.time_grid[-1])

    @property
    def n_steps(self) -> int:
        return len(self.time_grid) - 1

    @property
    def has_noise(self) -> bool:
        return bool(np.any(self.noise_increments != 0.0))

    def jump_steps(self) -> np.ndarray:
        """Indices ``k`` such that a jump lands at ``time_grid[k + 1]``."""
        return np.nonzero(np.diff(self.jump_counter))[0]

    # -- serialization --------------------------------------------------------

    def to_csv(self, path_or_buf=None) -> str | None:
        """Write ``t,x,edge,N,dW`` rows; ``dW`` of the last row is empty."""
        buf = io.StringIO()
        buf.write(f"# junctionsde path-csv v{PATH_CSV_VERSION} delta={self.delta!r}\n")
        buf.write("t,x,edge,N,dW\n")
        n = len(self.time_grid)
        for k in range(n):
            dw = repr(float(self.noise_increments[k])) if k < n - 1 else ""
            buf.write(f"{float(self.time_grid[k])!r},{float(self.positions[k])!r},"
                      f"{int(self.edges[k])},{int(self.jump_counter[k])},{dw}\n")
        text = buf.getvalue()
        if path_or_buf is None:
            return text
        if hasattr(path_or_buf, "write"):
            path_or_buf.write(text)
        else:
            with open(path_or_buf, "w", newline="") as fh:
                fh.write(text)
        return None

    @classmethod
    def from_csv(cls, path_or_buf) -> "PathRecord":
        if hasattr(path_or_buf, "read"):
            text = path_or_buf.read()
        else:
            with open(path_or_buf) as fh:
                text = fh.read()
        lines = text.splitlines()
        m = re.match(r"# junctionsde path-csv v(\d+) delta=(\S+)$", lines[0])
        if m is None:
            raise ValueError("missing path-csv header line")
        if int(m.group(1)) != PATH_CSV_VERSION:
            raise ValueError(f"unsupported path-csv version {m.group(1)}")
        delta = float(m.group(2))
        if lines[1].strip() != "t,x,edge,N,dW":
            raise ValueError(f"unexpected columns {lines[1]!r}")
        rows = [ln.split(",") for ln in lines[2:] if ln.strip()]
        t = np.array([float(r[0]) for r in rows])
        x = np.array([float(r[1]) for r in rows])
        e = np.array([int(r[2]) for r in rows])
        n = np.array([int(r[3]) for r in rows])
        w = np.array([float(r[4]) for r in rows[:-1]])
        return cls(t, x, e, n, w, delta)


def save_pack(paths: Sequence[PathRecord], file, extra: dict | None = None) -> None:
    """Binary ensemble pack (``.npz``): stacked arrays plus a JSON header.

    All paths must share one time grid. ``extra`` is stored in the header.
    """
    if not paths:
        raise ValueError("empty ensemble")
    grid = paths[0].time_grid
    for p in paths:
        if len(p.time_grid) != len(grid) or not np.array_equal(p.time_grid, grid):
            raise ValueError("all paths in a pack must share one time grid")
    header = {"format": "junctionsde-pack", "version": PACK_VERSION, "n_paths": len(paths),
              "extra": extra or {}}
    np.savez_compressed(
        file,
        header=np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8),
        time_grid=grid,
        positions=np.stack([p.positions for p in paths]),
        edges=np.stack([p.edges for p in paths]).astype(np.int16),
        jump_counter=np.stack([p.jump_counter for p in paths]).astype(np.int32),
        noise_increments=np.stack([p.noise_increments for p in paths]),
        delta=np.array([p.delta for p in paths]),
    )


def load_pack(file) -> tuple[list[PathRecord], dict]:
    with np.load(file) as z:
        header = json.loads(bytes(z["header"]).decode())
        if header.get("format") != "junctionsde-pack" or header.get("version") != PACK_VERSION:
            raise ValueError(f"unsupported pack header {header}")
        grid = z["time_grid"]
        paths = [PathRecord(grid, z["positions"][k], z["edges"][k], z["jump_counter"][k],
                            z["noise_increments"][k], float(z["delta"][k]))
                 for k in range(header["n_paths"])]
    return paths, header


# -- distances ----------------------------------------------------------------


def _check_same_grid(a: PathRecord, b: PathRecord) -> None:
    if len(a.time_grid) != len(b.time_grid) or not np.allclose(a.time_grid, b.time_grid,
                                                               rtol=0, atol=_TIME_TOL):
        raise ValueError("paths are on different time grids")


def uniform_distance(a: PathRecord, b: PathRecord) -> float:
    """Grid supremum of the junction distance between two paths on one grid."""
    _check_same_grid(a, b)
    return float(junction_distance(a.positions, a.edges, b.positions, b.edges).max())


class _RangeMax:
    """Sparse table answering max over ``[lo, hi]`` for many queries at once."""

    def __init__(self, values: np.ndarray):
        levels = [values]
        span = 1
        while 2 * span <= len(values):
            prev = levels[-1]
            levels.append(np.maximum(prev[:-span], prev[span:]))
            span *= 2
        self.levels = levels

    def query(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        length = hi - lo + 1
        k = np.floor(np.log2(length)).astype(int)
        out = np.empty(len(lo))
        for j in np.unique(k):
            m = k == j
            lvl = self.levels[j]
            out[m] = np.maximum(lvl[lo[m]], lvl[hi[m] - (1 << j) + 1])
        return out


def modulus_arrays(t: np.ndarray, x: np.ndarray, e: np.ndarray, theta: float) -> float:
    """Grid modulus of continuity from raw arrays.

    For each window ``[t_k, t_k + theta]`` (both ends included) the largest
    pairwise junction distance is the larger of the widest same-edge spread
    and the sum of the two largest positions sitting on different edges.
    """
    n = len(t)
    lo = np.arange(n)
    hi = np.searchsorted(t, t + theta + _TIME_TOL * max(1.0, t[-1]), side="right") - 1
    labels = np.unique(e)
    best = np.zeros(n)
    top1 = np.full(n, -np.inf)
    top2 = np.full(n, -np.inf)
    for lab in labels:
        on = e == lab
        mx = _RangeMax(np.where(on, x, -np.inf)).query(lo, hi)
        mn = -_RangeMax(np.where(on, -x, -np.inf)).query(lo, hi)
        present = np.isfinite(mx)
        best = np.where(present, np.maximum(best, mx - mn), best)
        # running top-two over distinct labels
        new_top2 = np.where(mx > top1, top1, np.maximum(top2, mx))
        top1 = np.maximum(top1, mx)
        top2 = new_top2
    cross = np.where(np.isfinite(top2), top1 + top2, -np.inf)
    return float(max(best.max(), cross.max(), 0.0))


def modulus_of_continuity(p: PathRecord, theta: float) -> float:
    """Grid value of ``sup d(p(u), p(s))`` over ``|u - s| <= theta``.

    A lower bound of the continuum modulus; windows include both endpoints.
    """
    if not 0 < theta <= p.T:
        raise ValueError(f"theta must lie in (0, T={p.T}], got {theta!r}")
    return modulus_arrays(p.time_grid, p.positions, p.edges, theta)


def _step_value_at(path: PathRecord, s: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # right-continuous step interpolation of a cadlag grid path
    k = np.searchsorted(path.time_grid, s + _TIME_TOL * max(1.0, path.T), side="right") - 1
    k = np.clip(k, 0, len(path.time_grid) - 1)
    return path.positions[k], path.edges[k]


def skorokhod_distance_upper(a: PathRecord, b: PathRecord, warp_resolution: int = 32,
                             max_shifts: int = 129) -> float:
    """Upper bound on the Skorokhod distance (the ``|lambda - Id|`` form).

    Minimizes ``max(|lambda - Id|, sup_t d(a(lambda(t)), b(t)))`` over
    piecewise-linear increasing ``lambda`` with knots at ``warp_resolution``
    equally spaced times. Interior knot images are the knot time plus a shift
    drawn from a lattice (spacing = ``a``'s grid step, coarsened to at most
    ``max_shifts`` values), and the best chain is found by bottleneck dynamic
    programming. A coarsened search is repeated inside the best value found
    until the lattice reaches the grid step. ``lambda = Id`` is always a candidate, so the result never
    exceeds the grid sup distance when the grids coincide.
    """
    if warp_resolution < 2:
        raise ValueError("warp_resolution must be >= 2")
    T = b.T
    if abs(a.T - T) > _TIME_TOL * max(1.0, T):
        raise ValueError("paths must share the horizon T")
    tb = b.time_grid
    knots = np.linspace(0.0, T, warp_resolution)
    seg = np.clip(np.searchsorted(knots, tb, side="right") - 1, 0, warp_resolution - 2)

    xa0, ea0 = _step_value_at(a, tb)
    identity = float(junction_distance(xa0, ea0, b.positions, b.edges).max())
    if warp_resolution == 2:
        return identity
    grid_step = float(np.median(np.diff(a.time_grid)))
    best = identity
    width = min(identity, T / 2)
    # coarse lattice over the full window, then re-search inside the best value found
    while width > 0:
        half = int(np.floor(width / grid_step + 1e-9))
        step = grid_step
        if 2 * half + 1 > max_shifts:
            half = (max_shifts - 1) // 2
            step = width / half
        if half == 0:
            break
        found = _warp_search(a, b, knots, seg, step * np.arange(-half, half + 1), half)
        best = min(best, found)
        if step == grid_step or best >= width:
            break
        width = best
    return float(best)


def _warp_search(a: PathRecord, b: PathRecord, knots: np.ndarray, seg: np.ndarray,
                 shifts: np.ndarray, zero: int) -> float:
    # cost[s] = best bottleneck value of a chain ending with knot j mapped to knots[j] + shifts[s]
    T = b.T
    tb = b.time_grid
    K = len(shifts)
    m = len(knots)
    cost = np.full(K, np.inf)
    cost[zero] = 0.0
    for j in range(m - 1):
        u0, u1 = knots[j], knots[j + 1]
        v0 = u0 + shifts
        last = j + 1 == m - 1
        v1 = np.array([T]) if last else u1 + shifts
        s1 = np.array([0.0]) if last else shifts
        valid0 = (v0 >= 0) & (v0 <= T) & np.isfinite(cost)
        valid1 = (v1 >= 0) & (v1 <= T)
        pts = tb[seg == j]
        rx = b.positions[seg == j]
        re = b.edges[seg == j]
        # lambda(t) for all (s0, s1, point) triples
        frac = (pts - u0) / (u1 - u0)
        lam = v0[:, None, None] + (v1[None, :, None] - v0[:, None, None]) * frac[None, None, :]
        lam = np.clip(lam, 0.0, T)
        xa, ea = _step_value_at(a, lam.ravel())
        d = junction_distance(xa.reshape(lam.shape), ea.reshape(lam.shape), rx, re)
        segsup = d.max(axis=2) if len(pts) else np.zeros((K, len(v1)))
        total = np.maximum(segsup, np.maximum(np.abs(shifts)[:, None], np.abs(s1)[None, :]))
        total = np.maximum(total, cost[:, None])
        ok = valid0[:, None] & valid1[None, :] & (v1[None, :] > v0[:, None])
        total = np.where(ok, total, np.inf)
        cost = total.min(axis=0)
    return float(cost.min())


# -- membership in the jump space ---------------------------------------------


@dataclass
class MembershipReport:
    """Outcome of :func:`validate_Ddelta_membership`.

    ``jump_steps`` are steps where the counter moved. ``large_steps`` are steps
    whose junction-distance increment exceeds ``jump_tolerance``. A declared
    jump is accepted when the continuous travel inside its step (to the vertex,
    any intermediate restarts, and away from the landing point) stays within
    ``jump_tolerance``; it is *exact* when the left grid point sits at the
    vertex and the right one at ``delta`` within ``position_tolerance``.
    """

    delta: float
    jump_tolerance: float
    position_tolerance: float
    jump_steps: list[int] = field(default_factory=list)
    large_steps: list[int] = field(default_factory=list)
    exact_jumps: int = 0
    multi_jump_steps: int = 0
    n_jumps: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        d = dict(self.__dict__)
        d["passed"] = self.passed
        return d


def increment_scale(p: PathRecord) -> float:
    """Robust scale (1.4826 * median absolute increment) of the non-jump steps."""
    inc = junction_distance(p.positions[:-1], p.edges[:-1], p.positions[1:], p.edges[1:])
    quiet = inc[np.diff(p.jump_counter) == 0]
    return float(1.4826 * np.median(quiet)) if len(quiet) else 0.0


def validate_Ddelta_membership(p: PathRecord, jump_tolerance: float | None = None,
                               position_tolerance: float | None = None) -> MembershipReport:
    """Check that every discontinuity is a vertex-to-``delta`` restart.

    Defaults: ``position_tolerance = delta / 100`` and ``jump_tolerance =
    max(delta / 2, 10 * s)`` where ``s`` is :func:`increment_scale`; a fixed
    ``delta / 2`` would misclassify ordinary Gaussian increments once the step
    size is comparable to ``delta**2``.
    """
    d = p.delta
    if not d > 0:
        raise ValueError("membership needs delta > 0")
    pos_tol = d / 100 if position_tolerance is None else position_tolerance
    tau = max(d / 2, 10 * increment_scale(p)) if jump_tolerance is None else jump_tolerance
    rep = MembershipReport(d, tau, pos_tol)

    x, e, N = p.positions, p.edges, p.jump_counter
    inc = junction_distance(x[:-1], e[:-1], x[1:], e[1:])
    dn = np.diff(N)
    rep.large_steps = [int(k) for k in np.nonzero(inc > tau)[0]]
    rep.jump_steps = [int(k) for k in np.nonzero(dn)[0]]
    rep.n_jumps = int(N[-1] - N[0])
    rep.multi_jump_steps = int(np.sum(dn > 1))

    for k in np.nonzero((inc > tau) & (dn == 0))[0]:
        rep.violations.append(
            f"step {k}: increment {inc[k]:.6g} > {tau:.6g} without a vertex jump "
            f"(from x={x[k]:.6g} on edge {e[k]} to x={x[k + 1]:.6g} on edge {e[k + 1]})")
    for k in rep.jump_steps:
        m = int(dn[k])
        travel = x[k] + (m - 1) * d + abs(x[k + 1] - d)
        if x[k] <= pos_tol and abs(x[k + 1] - d) <= pos_tol and m == 1:
            rep.exact_jumps += 1
        if travel > tau:
            rep.violations.append(
                f"step {k}: jump not from the vertex to {d:g} (left x={x[k]:.6g}, "
                f"right x={x[k + 1]:.6g}, {m} restart(s), continuous travel {travel:.6g} > {tau:.6g})")
    return rep


def write_paths_csv(paths: Iterable[PathRecord], directory, prefix: str = "path") -> list[str]:
    os.makedirs(directory, exist_ok=True)
    names = []
    for k, p in enumerate(paths):
        name = os.path.join(directory, f"{prefix}_{k:06d}.csv")
        p.to_csv(name)
        names.append(name)
    return names
