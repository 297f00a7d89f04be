"""Plant boundary for learning experiments.

Learning code talks to a plant through a deliberately narrow surface:
input dimension, output signature, and run().  A run returns the noisy
output signal and nothing else; states and system matrices stay hidden.
The simulated plant draws one fresh noise realization per run from a
counter-derived stream, so a fixed configuration replays bit for bit.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .lti import StateSpace, simulate
from .signals import GridMismatchError, Signal, TimeGrid, as_signature

START_PROBLEM = "problem_initial_state"
START_ORIGIN = "origin"

NOISE_KINDS = ("none", "gaussian_l2", "uniform_bounded")


@dataclass(frozen=True)
class NoiseModel:
    """Additive per-node measurement noise.

    gaussian_l2 draws i.i.d. N(0, sigma^2) samples; uniform_bounded draws
    i.i.d. Uniform(-bound, bound) samples.  Realizations are determined by
    (seed, stream, run_index), independent across runs and streams.
    """

    kind: str = "none"
    sigma: float = 0.0
    bound: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"kind must be one of {NOISE_KINDS}, got {self.kind!r}")
        if self.kind == "gaussian_l2" and not self.sigma > 0:
            raise ValueError("gaussian_l2 noise needs sigma > 0")
        if self.kind == "uniform_bounded" and not self.bound > 0:
            raise ValueError("uniform_bounded noise needs bound > 0")


def noise_sample_path(
    model: NoiseModel, grid: TimeGrid, run_index: int, channels: int, stream: int = 0
) -> Signal:
    """One noise realization on the grid; zeros for kind none."""
    if model.kind == "none":
        return Signal.zeros(grid, channels)
    rng = np.random.default_rng([model.seed, stream, run_index])
    shape = (grid.n_nodes, channels)
    if model.kind == "gaussian_l2":
        return Signal(grid, model.sigma * rng.standard_normal(shape))
    return Signal(grid, rng.uniform(-model.bound, model.bound, shape))


def derive_seed(master: int, index: int) -> int:
    """Deterministic well-mixed child seed for trial `index`."""
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


class PlantInterface(abc.ABC):
    """What a learning algorithm may know about the plant."""

    @property
    @abc.abstractmethod
    def m(self) -> int:
        """Number of input (= output) channels."""

    @property
    @abc.abstractmethod
    def sigma_e(self) -> np.ndarray:
        """External signature of the plant's transfer matrix."""

    @abc.abstractmethod
    def run(self, start: str, u: Signal) -> Signal:
        """Apply u from the selected initial state; return the measured output.

        start is START_PROBLEM (the problem's x0) or START_ORIGIN (zero state).
        """


class SimulatedPlant(PlantInterface):
    """In-silico plant wrapping a state-space model behind PlantInterface."""

    def __init__(
        self,
        sys: StateSpace,
        x0,
        grid: TimeGrid,
        sigma_e=None,
        noise: NoiseModel = NoiseModel(),
    ):
        self._sys = sys
        self._x0 = np.asarray(x0, dtype=float).reshape(-1)
        if self._x0.shape[0] != sys.n:
            raise ValueError(f"x0 has length {self._x0.shape[0]}, system has {sys.n} states")
        self._grid = grid
        se = np.eye(sys.m) if sigma_e is None else sigma_e
        self._sigma_e = as_signature(se, sys.m, "sigma_e")
        self.noise = noise
        self._run_count = 0

    @property
    def m(self) -> int:
        return self._sys.m

    @property
    def sigma_e(self) -> np.ndarray:
        return self._sigma_e

    @property
    def grid(self) -> TimeGrid:
        return self._grid

    @property
    def run_count(self) -> int:
        return self._run_count

    def _initial_state(self, start: str) -> np.ndarray:
        if start == START_PROBLEM:
            return self._x0
        if start == START_ORIGIN:
            return np.zeros(self._sys.n)
        raise ValueError(f"start must be {START_PROBLEM!r} or {START_ORIGIN!r}, got {start!r}")

    def _check_input(self, u: Signal) -> None:
        if u.grid != self._grid:
            raise GridMismatchError(f"input grid {u.grid} differs from plant grid {self._grid}")
        if u.m != self._sys.m:
            raise ValueError(f"input has {u.m} channels, plant has {self._sys.m}")

    def run(self, start: str, u: Signal) -> Signal:
        x0 = self._initial_state(start)
        self._check_input(u)
        _, y = simulate(self._sys, x0, u)
        idx = self._run_count
        self._run_count += 1
        if self.noise.kind == "none":
            return y
        return y + noise_sample_path(self.noise, self._grid, idx, self._sys.m)

    def run_with_state_samples(
        self,
        start: str,
        u: Signal,
        sample_indices,
        state_noise: NoiseModel | None = None,
    ) -> np.ndarray:
        """Apply u and return noisy state samples, one column per requested node.

        This is the only route to state information, used for gain recovery;
        state noise draws come from a separate stream of the run counter.
        """
        x0 = self._initial_state(start)
        self._check_input(u)
        sample_indices = np.asarray(sample_indices, dtype=int)
        if np.any(sample_indices < 0) or np.any(sample_indices >= self._grid.n_nodes):
            raise ValueError("sample indices outside the grid")
        x, _ = simulate(self._sys, x0, u)
        idx = self._run_count
        self._run_count += 1
        samples = x.values[sample_indices].T.copy()
        if state_noise is not None and state_noise.kind != "none":
            path = noise_sample_path(state_noise, self._grid, idx, self._sys.n, stream=1)
            samples += path.values[sample_indices].T
        return samples
