"""Grid arithmetic, model parameters and reproducible path simulation.

Everything downstream (constant estimation, ruin estimators, the CLI) draws
its randomness through :func:`make_rng`, which maps a ``(seed, stream_id)``
pair to an independent counter-based Philox stream.  Aggregates computed from
fixed stream ids are therefore bit-identical no matter how many workers run
concurrently or in which order streams are consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "Grid",
    "ModelParams",
    "VariantParams",
    "PathSample",
    "make_rng",
    "simulate_path",
    "path_block",
    "default_horizon",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Grid:
    """Uniform monitoring grid of step ``delta``.

    Grid point ``i`` lives at time ``i * delta`` computed by a single
    multiplication, never by repeated addition, so there is no accumulated
    floating-point drift.
    """

    delta: float

    def __post_init__(self):
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")

    def time(self, i: int) -> float:
        return i * self.delta

    def times(self, n_steps: int) -> np.ndarray:
        return np.arange(n_steps + 1) * self.delta

    def n_steps_for(self, horizon: float) -> int:
        """Smallest step count whose grid covers ``[0, horizon]``."""
        return int(math.ceil(horizon / self.delta - 1e-9))

    def is_multiple(self, t: float) -> bool:
        ratio = t / self.delta
        return abs(ratio - round(ratio)) < 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Premium rate ``c`` and initial capital ``u``."""

    c: float
    u: float

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"premium rate c must be positive, got {self.c}")
        if not (self.u >= 0 and math.isfinite(self.u)):
            raise ValueError(f"initial capital u must be nonnegative, got {self.u}")


@dataclass(frozen=True)
class VariantParams:
    """Parameters of the non-classical ruin variants.

    At most one of ``gamma`` (reflected), ``parisian_T`` (Parisian) or
    ``cumulative_k`` (cumulative) may be active for a single request.
    """

    gamma: float | None = None
    parisian_T: float | None = None
    cumulative_k: int | None = None

    def __post_init__(self):
        active = sum(x is not None for x in (self.gamma, self.parisian_T, self.cumulative_k))
        if active > 1:
            raise ValueError("at most one variant parameter may be set")
        if self.gamma is not None and not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie in (0, 1), got {self.gamma}")
        if self.parisian_T is not None and self.parisian_T < 0:
            raise ValueError(f"parisian_T must be nonnegative, got {self.parisian_T}")
        if self.cumulative_k is not None and self.cumulative_k < 0:
            raise ValueError(f"cumulative_k must be nonnegative, got {self.cumulative_k}")

    def validate_against(self, grid: Grid) -> None:
        if self.parisian_T is not None and not grid.is_multiple(self.parisian_T):
            raise ValueError(
                f"parisian_T={self.parisian_T} must be an integer multiple of delta={grid.delta}"
            )


@dataclass
class PathSample:
    """A simulated net-loss path on the grid, ``values[i] = S_i`` with S_0 = 0."""

    steps: int
    values: np.ndarray
    drift_used: float
    replicate_id: int


def make_rng(seed: int, replicate_id: int) -> np.random.Generator:
    """Independent random stream for one replicate (or replicate block).

    The stream is a pure function of ``(seed, replicate_id)``: Philox is
    keyed directly with the pair, so distinct ids give statistically
    independent streams and reproduction does not depend on how many other
    streams exist or in which order they are consumed.
    """
    if replicate_id < 0:
        raise ValueError(f"replicate_id must be nonnegative, got {replicate_id}")
    key = np.array([seed & _MASK64, replicate_id & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def simulate_path(grid: Grid, drift: float, n_steps: int, rng: np.random.Generator) -> PathSample:
    """Simulate S on grid points 0..n_steps with N(drift*delta, delta) increments."""
    if not math.isfinite(drift):
        raise ValueError(f"drift must be finite, got {drift}")
    if n_steps < 0:
        raise ValueError(f"n_steps must be nonnegative, got {n_steps}")
    values = np.empty(n_steps + 1)
    values[0] = 0.0
    if n_steps:
        increments = drift * grid.delta + math.sqrt(grid.delta) * rng.standard_normal(n_steps)
        np.cumsum(increments, out=values[1:])
    return PathSample(steps=n_steps, values=values, drift_used=drift, replicate_id=-1)


def path_block(
    grid: Grid, drift: float, n_steps: int, n_paths: int, rng: np.random.Generator
) -> np.ndarray:
    """Matrix of ``n_paths`` paths, shape (n_paths, n_steps + 1), column 0 = 0.

    Rows are filled in C order, so row ``r`` is a pure function of the stream
    position ``r * n_steps`` — independent of how many rows the block holds.
    """
    if not math.isfinite(drift):
        raise ValueError(f"drift must be finite, got {drift}")
    paths = np.empty((n_paths, n_steps + 1))
    paths[:, 0] = 0.0
    if n_steps:
        z = rng.standard_normal((n_paths, n_steps))
        z *= math.sqrt(grid.delta)
        z += drift * grid.delta
        np.cumsum(z, axis=1, out=paths[:, 1:])
    return paths


def default_horizon(params: ModelParams, window_mult: float = 1.0) -> float:
    """Simulation horizon covering the time band where ruin concentrates.

    Ruin at capital u happens around time u/c with fluctuations of order
    sqrt(u)*log(u); the returned horizon is u/c plus ``window_mult`` such
    bands, floored at 10/c so that small-u runs still simulate something
    meaningful (the band formula degenerates for u <= 1, hence the max(u, e)
    guard).
    """
    if window_mult <= 0:
        raise ValueError(f"window_mult must be positive, got {window_mult}")
    ug = max(params.u, math.e)
    return max(params.u / params.c + window_mult * math.sqrt(ug) * math.log(ug), 10.0 / params.c)
