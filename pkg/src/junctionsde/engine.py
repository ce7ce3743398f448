"""
Euler simulation of the vertex-jump process.

Between vertex hits the radial part follows the Euler step of the current
edge. When a proposal lands at or below 0 the path has reached the vertex
inside the step: the jump counter moves, a new edge is drawn from ``alpha``
and the position restarts at ``delta``. Two restart rules are available:

``"carry"`` (default)
    The fresh edge diffusion starts at ``delta`` at the hitting time and keeps
    the part of the step's increment left after the hit, so the new position
    is ``delta + proposal``. If that is still ``<= 0`` the vertex is hit again
    within the step and the restart repeats. This keeps the discrete identity
    ``x' = x + b h + sigma dW + delta dN`` exact.
``"reset"``
    The new position is exactly ``delta``. The overshoot below the vertex is
    discarded, which biases ``delta * N`` downward by a factor of roughly
    ``1 / (1 + 0.58 sqrt(h) / delta)``.

Paths are simulated as vectorized ensembles; observers receive every step and
accumulate whatever statistics an experiment needs, so long runs never store
full trajectories.
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
import multiprocessing as mp
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .junction import CoefficientField, VertexWeights
from .paths import PathRecord, save_pack, write_paths_csv
from .rng import PathStreams, check_seed, stream_id

WORKERS_ENV = "JUNCTIONSDE_WORKERS"
DRAW_FROM_ALPHA = "draw-from-alpha"
RESTART_RULES = ("carry", "reset")


class SimulationError(RuntimeError):
    """Non-finite state or another per-path failure during stepping."""

    def __init__(self, message: str, step: int | None = None, path_index: int | None = None):
        super().__init__(message)
        self.step = step
        self.path_index = path_index


@dataclass(frozen=True)
class SimConfig:
    """Everything needed to simulate the jump process.

    ``h=None`` means ``delta**2 / 8``; steps above ``delta**2 / 4`` are
    rejected unless ``allow_coarse_step`` is set, in which case they warn.
    ``T=None`` takes the field's horizon.
    """

    field: CoefficientField
    alpha: VertexWeights
    x0: float
    delta: float
    h: float | None = None
    T: float | None = None
    initial_edge: int | str = DRAW_FROM_ALPHA
    seed: int = 0
    restart: str = "carry"
    allow_coarse_step: bool = False

    def __post_init__(self):
        if self.alpha.edge_count != self.field.edge_count:
            raise ValueError("alpha and field disagree on the number of edges")
        if not self.x0 > 0:
            raise ValueError(f"x0 must be > 0, got {self.x0!r}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta!r}")
        if self.T is None:
            object.__setattr__(self, "T", self.field.T)
        if not 0 < self.T <= self.field.T * (1 + 1e-12):
            raise ValueError(f"horizon T={self.T!r} must lie in (0, field.T={self.field.T}]")
        if self.h is None:
            object.__setattr__(self, "h", self.delta ** 2 / 8)
        if not self.h > 0:
            raise ValueError(f"step h must be > 0, got {self.h!r}")
        if self.h > self.delta ** 2 / 4 * (1 + 1e-12):
            msg = f"step h={self.h:g} exceeds delta**2/4={self.delta ** 2 / 4:g}"
            if not self.allow_coarse_step:
                raise ValueError(msg + " (set allow_coarse_step to override)")
            warnings.warn(msg, stacklevel=3)
        if self.initial_edge != DRAW_FROM_ALPHA:
            if not (isinstance(self.initial_edge, (int, np.integer))
                    and 1 <= self.initial_edge <= self.field.edge_count):
                raise ValueError(f"initial_edge must be 1..{self.field.edge_count} "
                                 f"or {DRAW_FROM_ALPHA!r}")
        if self.restart not in RESTART_RULES:
            raise ValueError(f"restart must be one of {RESTART_RULES}")
        object.__setattr__(self, "seed", check_seed(self.seed))
        if self.delta >= self.x0 * (1 + 1e-12):
            warnings.warn(f"delta={self.delta:g} >= x0={self.x0:g}; restarts land beyond the "
                          "initial point", stacklevel=3)

    @property
    def n_steps(self) -> int:
        return max(1, math.ceil(self.T / self.h - 1e-9))

    def time_grid(self) -> np.ndarray:
        """``t_k = k h``; the last point is ``T`` (a short final step if ``h`` does not divide ``T``)."""
        n = self.n_steps
        grid = np.arange(n + 1, dtype=float) * self.h
        grid[-1] = self.T
        return grid

    def describe(self) -> dict:
        return {
            "field": self.field.describe(),
            "alpha": list(self.alpha.alpha),
            "x0": self.x0,
            "delta": self.delta,
            "h": self.h,
            "T": self.T,
            "n_steps": self.n_steps,
            "initial_edge": self.initial_edge,
            "seed": self.seed,
            "restart": self.restart,
        }


@dataclass(frozen=True)
class EdgeSampler:
    """Inverse-CDF sampler for ``P(Z = i) = alpha_i``."""

    alpha: VertexWeights

    @property
    def cumulative(self) -> np.ndarray:
        c = np.cumsum(self.alpha.as_array())
        c[-1] = 1.0
        return c


def draw_edge(s: EdgeSampler, u):
    """Least ``i`` with ``u < cumulative[i]`` (1-based); vectorized over ``u``."""
    c = s.cumulative
    i = np.minimum(np.searchsorted(c, u, side="right"), len(c) - 1) + 1
    return int(i) if np.ndim(i) == 0 else i


# -- observers ------------------------------------------------------------------


@dataclass
class RunInfo:
    cfg: SimConfig
    time_grid: np.ndarray
    path_ids: np.ndarray


@dataclass
class StepState:
    """One Euler step for the whole chunk; arrays are indexed by path."""

    k: int
    t: float
    dt: float
    x: np.ndarray          # position at t
    e: np.ndarray          # edge at t
    drift: np.ndarray      # b at (t, x) on edge e
    sigma: np.ndarray      # sigma at (t, x) on edge e
    dW: np.ndarray
    x_new: np.ndarray      # position at t + dt
    e_new: np.ndarray
    jumps: np.ndarray      # restarts during the step (0, 1, rarely more)
    n_new: np.ndarray      # jump counter at t + dt


class Observer:
    """Receives the initial state and every step; returns per-path arrays."""

    def start(self, info: RunInfo, x: np.ndarray, e: np.ndarray) -> None:
        pass

    def step(self, s: StepState) -> None:
        pass

    def finish(self) -> dict[str, np.ndarray]:
        return {}


class PathRecorder(Observer):
    """Stores full trajectories (memory ``~ 25 bytes x paths x steps``)."""

    def start(self, info, x, e):
        n = len(info.time_grid)
        P = len(x)
        self.grid = info.time_grid
        self.X = np.empty((P, n))
        self.E = np.empty((P, n), np.int16)
        self.N = np.empty((P, n), np.int32)
        self.W = np.empty((P, n - 1))
        self.X[:, 0] = x
        self.E[:, 0] = e
        self.N[:, 0] = 0

    def step(self, s):
        k = s.k
        self.X[:, k + 1] = s.x_new
        self.E[:, k + 1] = s.e_new
        self.N[:, k + 1] = s.n_new
        self.W[:, k] = s.dW

    def finish(self):
        return {"positions": self.X, "edges": self.E, "jump_counter": self.N,
                "noise_increments": self.W}


class TerminalState(Observer):
    """Position, edge and jump count at ``T`` plus ``sup |x|^2``."""

    def start(self, info, x, e):
        self.sup2 = x ** 2

    def step(self, s):
        np.maximum(self.sup2, s.x_new ** 2, out=self.sup2)
        self._last = s

    def finish(self):
        s = self._last
        return {"x_T": s.x_new.copy(), "edge_T": s.e_new.copy(), "N_T": s.n_new.copy(),
                "sup_x2": self.sup2}


# -- core stepping -------------------------------------------------------------


class _EdgeUniforms:
    """Column buffer of per-path edge uniforms; grows on demand, stream order kept."""

    def __init__(self, streams: Sequence[PathStreams], width: int = 64):
        self.streams = streams
        self.width = width
        self.buf = np.stack([s.uniforms(width) for s in streams])
        self.ptr = np.zeros(len(streams), np.int64)

    def take(self, idx: np.ndarray) -> np.ndarray:
        if len(idx) and self.ptr[idx].max() >= self.buf.shape[1]:
            extra = np.stack([s.uniforms(self.width) for s in self.streams])
            self.buf = np.concatenate([self.buf, extra], axis=1)
        u = self.buf[idx, self.ptr[idx]]
        self.ptr[idx] += 1
        return u


def _run_chunk(cfg: SimConfig, path_ids: np.ndarray, observers: Sequence[Observer],
               block: int = 1024) -> dict[str, np.ndarray]:
    P = len(path_ids)
    streams = [PathStreams(cfg.seed, int(k)) for k in path_ids]
    sampler = EdgeSampler(cfg.alpha)
    edge_u = _EdgeUniforms(streams)
    grid = cfg.time_grid()
    n = len(grid) - 1
    field = cfg.field
    delta = cfg.delta
    carry = cfg.restart == "carry"

    # Z_0 always consumes the first edge uniform, fixed initial edge or not
    z0 = draw_edge(sampler, edge_u.take(np.arange(P)))
    e = np.asarray(z0, np.int64) if cfg.initial_edge == DRAW_FROM_ALPHA else \
        np.full(P, int(cfg.initial_edge), np.int64)
    x = np.full(P, float(cfg.x0))
    N = np.zeros(P, np.int64)
    no_jumps = np.zeros(P, np.int64)
    info = RunInfo(cfg, grid, np.asarray(path_ids))
    for ob in observers:
        ob.start(info, x.copy(), e.copy())

    sqrt_dt = np.sqrt(np.diff(grid))
    xi = np.empty((min(block, n), P))
    for b0 in range(0, n, block):
        b1 = min(n, b0 + block)
        for j, s in enumerate(streams):
            xi[: b1 - b0, j] = s.normals(b1 - b0)
        for k in range(b0, b1):
            t = grid[k]
            dt = grid[k + 1] - t
            b, sig = field.coefficients(e, t, x)
            dW = sqrt_dt[k] * xi[k - b0]
            prop = x + b * dt + sig * dW
            if not np.isfinite(prop).all():
                bad = int(np.nonzero(~np.isfinite(prop))[0][0])
                raise SimulationError(f"non-finite state at step {k} (t={t:g}) on path "
                                      f"{int(path_ids[bad])}", k, int(path_ids[bad]))
            hit = prop <= 0.0
            if hit.any():
                if carry:
                    m = np.where(hit, np.floor(-prop / delta) + 1.0, 0.0)
                    x_new = prop + m * delta
                    low = x_new <= 0.0
                    while low.any():
                        m = m + low
                        x_new = np.where(low, x_new + delta, x_new)
                        low = x_new <= 0.0
                    m = m.astype(np.int64)
                else:
                    m = hit.astype(np.int64)
                    x_new = np.where(hit, delta, prop)
                e_new = e.copy()
                idx = np.nonzero(hit)[0]
                for r in range(int(m[idx].max())):
                    sub = idx[m[idx] > r]
                    e_new[sub] = draw_edge(sampler, edge_u.take(sub))
                N = N + m
            else:
                m = no_jumps
                x_new = prop
                e_new = e
            st = StepState(k, t, dt, x, e, b, sig, dW, x_new, e_new, m, N)
            for ob in observers:
                ob.step(st)
            x, e = x_new, e_new

    out: dict[str, np.ndarray] = {}
    for ob in observers:
        for key, val in ob.finish().items():
            if key in out:
                raise ValueError(f"two observers produced {key!r}")
            out[key] = val
    return out


def resolve_workers(workers: int | None) -> int:
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


_JOB: tuple | None = None


def _job_chunk(ids: np.ndarray) -> dict[str, np.ndarray]:
    cfg, factory = _JOB
    return _run_chunk(cfg, ids, factory())


def run_ensemble(cfg: SimConfig, n_paths: int, observers: Callable[[], Sequence[Observer]], *,
                 workers: int | None = None, chunk_size: int = 4096,
                 first_index: int = 0) -> dict[str, np.ndarray]:
    """Simulate paths ``first_index .. first_index + n_paths - 1``.

    ``observers`` is a factory returning fresh observers for each chunk. The
    per-path arrays they return are concatenated in path order, so the result
    does not depend on ``chunk_size`` or ``workers``.
    """
    global _JOB
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    ids = np.arange(first_index, first_index + n_paths)
    chunks = [ids[i:i + chunk_size] for i in range(0, n_paths, chunk_size)]
    workers = min(resolve_workers(workers), len(chunks))
    if workers == 1:
        parts = [_run_chunk(cfg, c, observers()) for c in chunks]
    else:
        _JOB = (cfg, observers)
        try:
            with ProcessPoolExecutor(workers, mp_context=mp.get_context("fork")) as pool:
                parts = list(pool.map(_job_chunk, chunks))
        finally:
            _JOB = None
    return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}


def _records(cfg: SimConfig, arrays: dict) -> list[PathRecord]:
    grid = cfg.time_grid()
    return [PathRecord(grid, arrays["positions"][k], arrays["edges"][k], arrays["jump_counter"][k],
                       arrays["noise_increments"][k], cfg.delta)
            for k in range(len(arrays["positions"]))]


def simulate_delta_path(cfg: SimConfig, stream_index: int = 0) -> PathRecord:
    """One trajectory using the streams derived from ``(cfg.seed, stream_index)``."""
    return _records(cfg, _run_chunk(cfg, np.array([stream_index]), [PathRecorder()]))[0]


def simulate_batch(cfg: SimConfig, n_paths: int, *, workers: int | None = None,
                   chunk_size: int = 1024) -> list[PathRecord]:
    """``n_paths`` independent trajectories; path ``k`` uses stream ``k``."""
    return _records(cfg, run_ensemble(cfg, n_paths, lambda: [PathRecorder()], workers=workers,
                                      chunk_size=chunk_size))


def simulate_coupled_refinement(cfg: SimConfig, deltas: Sequence[float],
                                shared_seed: int | None = None,
                                stream_index: int = 0) -> list[PathRecord]:
    """Paths for several ``delta`` driven by one noise stream.

    The common step is ``cfg.h`` when it resolves the smallest ``delta``
    (``h <= min(delta)**2 / 4``), otherwise ``min(delta)**2 / 8``. Every path
    draws one Gaussian per grid step from the same stream and takes its
    ``n``-th edge from the same uniform.
    """
    deltas = [float(d) for d in deltas]
    if not deltas or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("deltas must be a nonempty strictly decreasing list")
    dmin = deltas[-1]
    h = cfg.h if cfg.h <= dmin ** 2 / 4 else dmin ** 2 / 8
    seed = cfg.seed if shared_seed is None else shared_seed
    return [simulate_delta_path(replace(cfg, delta=d, h=h, seed=seed), stream_index)
            for d in deltas]


def write_ensemble(paths: Sequence[PathRecord], cfg: SimConfig, out_dir, fmt: str = "csv",
                   first_index: int = 0) -> str:
    """Write per-path CSVs or one binary pack plus ``manifest.json``; returns the manifest path."""
    import json

    os.makedirs(out_dir, exist_ok=True)
    if fmt == "csv":
        files = [os.path.basename(f) for f in write_paths_csv(paths, out_dir)]
    elif fmt == "binary":
        save_pack(paths, os.path.join(out_dir, "paths.npz"), extra={"config": cfg.describe()})
        files = ["paths.npz"]
    else:
        raise ValueError(f"unknown format {fmt!r}")
    manifest = {
        "format": fmt,
        "code_version": __version__,
        "config": cfg.describe(),
        "n_paths": len(paths),
        "streams": [stream_id(cfg.seed, first_index + k) for k in range(len(paths))],
        "files": files,
    }
    name = os.path.join(out_dir, "manifest.json")
    with open(name, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return name
