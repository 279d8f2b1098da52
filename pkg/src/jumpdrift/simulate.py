"""Simulation of jump diffusion paths.

The state follows an Euler scheme driven by Brownian increments plus a
compensated compound Poisson process: jump epochs are drawn exactly on
(0, T] and aggregated per observation step, so the scheme matches the
uniform grid on which paths are later observed.

Every path owns an RNG stream derived from ``(seed, path_index)`` through
a counter-based Philox generator, so bundles are bit-identical for a fixed
seed no matter how the per-path draws are scheduled.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .exceptions import DivergenceError, ParameterError

StateFunc = Callable[[np.ndarray], np.ndarray]
JumpLaw = Callable[[np.random.Generator, int], np.ndarray]


def normal_jump_law(rng: np.random.Generator, size: int) -> np.ndarray:
    """Standard normal jump sizes, the law used by the built-in models."""
    return rng.standard_normal(size)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform observation grid t_l = l * horizon / n_steps, l = 0..n_steps."""

    horizon: float
    n_steps: int

    def __post_init__(self):
        if not (self.horizon > 0 and np.isfinite(self.horizon)):
            raise ParameterError(f"horizon must be positive and finite, got {self.horizon}")
        if self.n_steps < 1:
            raise ParameterError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(0.0, self.horizon, self.n_steps + 1)


@dataclass(frozen=True)
class JumpTrain:
    """Jump epochs in (0, T] with their magnitudes."""

    times: np.ndarray
    sizes: np.ndarray

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        sizes = np.asarray(self.sizes, dtype=float)
        if times.shape != sizes.shape or times.ndim != 1:
            raise ParameterError("times and sizes must be 1-d arrays of equal length")
        if times.size and np.any(np.diff(times) <= 0):
            raise ParameterError("jump times must be strictly increasing")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "sizes", sizes)

    def __len__(self):
        return self.times.size


@dataclass(frozen=True)
class SdeModel:
    """Coefficients of the state equation plus the jump-law moments.

    ``drift``, ``diffusion`` and ``jump_coeff`` must accept numpy arrays and
    evaluate elementwise.  ``jump_mean`` and ``jump_mean_sq`` are the first
    two moments of the jump sizes; the compensator subtracted at each Euler
    step is ``jump_mean * jump_intensity * dt``.
    """

    drift: StateFunc
    diffusion: StateFunc
    jump_coeff: StateFunc
    x0: float
    jump_intensity: float
    jump_law: JumpLaw = normal_jump_law
    jump_mean: float = 0.0
    jump_mean_sq: float = 1.0
    diffusion_sup: float | None = None
    jump_coeff_sup: float | None = None
    model_id: int | None = None

    def __post_init__(self):
        if self.jump_intensity < 0:
            raise ParameterError(f"jump intensity must be >= 0, got {self.jump_intensity}")


@dataclass(frozen=True, eq=False)
class PathBundle:
    """N independent paths observed on a shared uniform grid.

    ``values`` has shape (n_paths, n_steps + 1); row i is path i at the grid
    nodes.  Bundles are immutable after construction and safe to share.
    """

    values: np.ndarray
    grid: TimeGrid
    seed: int | None = None
    jump_counts: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 2 or values.shape[1] != self.grid.n_steps + 1:
            raise ParameterError(
                f"values must have shape (n_paths, {self.grid.n_steps + 1}), got {values.shape}"
            )
        object.__setattr__(self, "values", values)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def observation_time(self) -> float:
        """Total observed time N * T."""
        return self.n_paths * self.grid.horizon

    def left_values(self) -> np.ndarray:
        """States at the left endpoint of each step, shape (n_paths, n_steps)."""
        return self.values[:, :-1]

    def increments(self) -> np.ndarray:
        return self.values[:, 1:] - self.values[:, :-1]


def path_stream(seed: int, index: int) -> np.random.Generator:
    """Counter-based generator for path ``index`` of a bundle seeded by ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence((seed, index))))


def sample_compound_poisson(intensity, horizon, jump_law, rng) -> JumpTrain:
    """Draw one compound Poisson train on (0, horizon].

    The count is Poisson(intensity * horizon); given the count, epochs are
    sorted uniforms on (0, horizon] and sizes are i.i.d. from ``jump_law``.
    """
    if intensity < 0:
        raise ParameterError(f"intensity must be >= 0, got {intensity}")
    if not horizon > 0:
        raise ParameterError(f"horizon must be > 0, got {horizon}")
    count = int(rng.poisson(intensity * horizon))
    times = np.sort(horizon * (1.0 - rng.random(count)))
    sizes = np.asarray(jump_law(rng, count), dtype=float)
    return JumpTrain(times=times, sizes=sizes)


def _draw_path_randomness(model, grid, rng):
    """Per-path draws in a fixed order: jump train first, then Gaussians."""
    train = sample_compound_poisson(model.jump_intensity, grid.horizon, model.jump_law, rng)
    gaussians = rng.standard_normal(grid.n_steps)
    step_jumps = np.zeros(grid.n_steps)
    if len(train):
        # epoch in (t_l, t_{l+1}] lands in bucket l
        buckets = np.searchsorted(grid.nodes[1:], train.times, side="left")
        np.add.at(step_jumps, buckets, train.sizes)
    return gaussians, step_jumps, len(train)


def _euler_block(model, grid, x0, gaussians, step_jumps, path_offset=0):
    """Vectorized Euler recursion over a block of paths.

    ``gaussians`` and ``step_jumps`` have shape (block, n_steps).  The same
    elementwise operations run whether the block holds 1 or N paths.
    """
    dt = grid.dt
    sq_dt = np.sqrt(dt)
    compensator = model.jump_mean * model.jump_intensity * dt
    block = gaussians.shape[0]
    values = np.empty((block, grid.n_steps + 1))
    values[:, 0] = x0
    for step in range(grid.n_steps):
        x = values[:, step]
        nxt = (
            x
            + model.drift(x) * dt
            + model.diffusion(x) * (sq_dt * gaussians[:, step])
            + model.jump_coeff(x) * (step_jumps[:, step] - compensator)
        )
        bad = ~np.isfinite(nxt)
        if np.any(bad):
            raise DivergenceError(step + 1, path_offset + int(np.flatnonzero(bad)[0]))
        values[:, step + 1] = nxt
    return values


def simulate_path(model: SdeModel, grid: TimeGrid, rng: np.random.Generator) -> np.ndarray:
    """Simulate one path; returns the n_steps + 1 grid values."""
    gaussians, step_jumps, _ = _draw_path_randomness(model, grid, rng)
    return _euler_block(model, grid, model.x0, gaussians[None, :], step_jumps[None, :])[0]


def simulate_bundle(
    model: SdeModel,
    grid: TimeGrid,
    n_paths: int,
    seed: int,
    workers: int | None = None,
) -> PathBundle:
    """Simulate ``n_paths`` independent paths.

    Each path draws from its own stream keyed by ``(seed, path_index)``, so
    the result is bit-identical for a fixed seed regardless of ``workers``.
    """
    if n_paths < 1:
        raise ParameterError(f"n_paths must be >= 1, got {n_paths}")
    if seed < 0:
        raise ParameterError(f"seed must be >= 0, got {seed}")
    gaussians = np.empty((n_paths, grid.n_steps))
    step_jumps = np.empty((n_paths, grid.n_steps))
    counts = np.empty(n_paths, dtype=np.int64)

    def fill(index):
        g, z, k = _draw_path_randomness(model, grid, path_stream(seed, index))
        gaussians[index] = g
        step_jumps[index] = z
        counts[index] = k

    if workers is not None and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fill, range(n_paths)))
    else:
        for index in range(n_paths):
            fill(index)

    values = _euler_block(model, grid, model.x0, gaussians, step_jumps)
    return PathBundle(values=values, grid=grid, seed=seed, jump_counts=counts)


def builtin_model(model_id: int) -> SdeModel:
    """The three benchmark models; all share x0 = 0.5, intensity 0.5 and
    standard normal jumps with unit jump coefficient."""
    if model_id == 1:
        return SdeModel(
            drift=lambda x: -x,
            diffusion=lambda x: np.full(np.shape(x), 0.5),
            jump_coeff=lambda x: np.ones(np.shape(x)),
            x0=0.5,
            jump_intensity=0.5,
            diffusion_sup=0.5,
            jump_coeff_sup=1.0,
            model_id=1,
        )
    if model_id == 2:
        return SdeModel(
            drift=lambda x: 0.5 * np.sqrt(1.0 + x * x),
            diffusion=lambda x: np.full(np.shape(x), 0.5),
            jump_coeff=lambda x: np.ones(np.shape(x)),
            x0=0.5,
            jump_intensity=0.5,
            diffusion_sup=0.5,
            jump_coeff_sup=1.0,
            model_id=2,
        )
    if model_id == 3:
        return SdeModel(
            drift=lambda x: 0.5 * np.sqrt(1.0 + x * x),
            diffusion=lambda x: 0.5 * (1.0 + np.cos(x) ** 2),
            jump_coeff=lambda x: np.ones(np.shape(x)),
            x0=0.5,
            jump_intensity=0.5,
            diffusion_sup=1.0,
            jump_coeff_sup=1.0,
            model_id=3,
        )
    raise ParameterError(f"unknown built-in model id {model_id}, expected 1, 2 or 3")
