"""Reproducible random-number streams for stochastic integration.

Every trajectory draws from counter-based Philox generators keyed by
``SeedSequence(seed, spawn_key=(stream_index, kind))``, where ``kind``
separates the independent purposes:

* ``0`` -- Wiener increments driving the diffusion terms,
* ``1`` -- uniforms selecting Kraus branches,
* ``2`` -- initial-state draws (e.g. a uniformly random starting angle).

Gaussians are produced by the Box-Muller transform from consecutive uniform
pairs (``r = sqrt(-2 log1p(-u1))``, angle ``2 pi u2``), never by rejection
sampling, so the number of uniforms consumed per Gaussian is fixed and the
stream can be generated in chunks of any size with bit-identical results.
An odd request leaves the unused half of the final pair as a carry for the
next request.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "STREAM_WIENER",
    "STREAM_KRAUS",
    "STREAM_INIT",
    "GaussianStream",
    "UniformStream",
    "NoisePath",
    "wiener_path",
    "initial_state_rng",
]

STREAM_WIENER = 0
STREAM_KRAUS = 1
STREAM_INIT = 2


def _generator(seed, stream_index, kind) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream_index), int(kind)))
    return np.random.Generator(np.random.Philox(ss))


class GaussianStream:
    """Standard-normal stream; chunked draws match a single draw bitwise."""

    def __init__(self, seed, stream_index=0):
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        self._gen = _generator(seed, stream_index, STREAM_WIENER)
        self._carry = None

    def normals(self, n: int) -> np.ndarray:
        """Next ``n`` independent standard normals."""
        n = int(n)
        out = np.empty(n)
        start = 0
        if self._carry is not None and n > 0:
            out[0] = self._carry
            self._carry = None
            start = 1
        need = n - start
        if need <= 0:
            return out
        pairs = (need + 1) // 2
        u = self._gen.random(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[0::2]))
        theta = (2.0 * np.pi) * u[1::2]
        z = np.empty(2 * pairs)
        z[0::2] = r * np.cos(theta)
        z[1::2] = r * np.sin(theta)
        out[start:] = z[:need]
        if need < 2 * pairs:
            self._carry = z[need]
        return out


class UniformStream:
    """Uniform [0, 1) stream used for Kraus branch selection."""

    def __init__(self, seed, stream_index=0):
        self.seed = int(seed)
        self.stream_index = int(stream_index)
        self._gen = _generator(seed, stream_index, STREAM_KRAUS)

    def uniforms(self, n: int) -> np.ndarray:
        return self._gen.random(int(n))


@dataclass(frozen=True)
class NoisePath:
    """Wiener increments ``dW`` of one trajectory.

    ``increments`` has shape ``(n_steps, n_channels)`` and each entry has
    variance ``dt``.
    """

    increments: np.ndarray
    dt: float
    seed: int
    stream_index: int

    @property
    def n_steps(self) -> int:
        return self.increments.shape[0]

    @property
    def n_channels(self) -> int:
        return self.increments.shape[1]


def wiener_path(seed, stream_index, n_steps, n_channels, dt) -> NoisePath:
    """Materialize the full Wiener path of a trajectory.

    The flat Gaussian stream is laid out step-major (all channels of step 0,
    then step 1, ...), matching the consumption order of the incremental
    drivers.
    """
    n_steps, n_channels = int(n_steps), int(n_channels)
    dt = float(dt)
    if n_steps < 1 or n_channels < 1:
        raise ValueError("need n_steps >= 1 and n_channels >= 1")
    if dt <= 0.0:
        raise ValueError("dt must be positive")
    z = GaussianStream(seed, stream_index).normals(n_steps * n_channels)
    dw = (z * np.sqrt(dt)).reshape(n_steps, n_channels)
    return NoisePath(increments=dw, dt=dt, seed=int(seed), stream_index=int(stream_index))


def initial_state_rng(seed, stream_index) -> np.random.Generator:
    """Generator reserved for randomized initial conditions."""
    return _generator(seed, stream_index, STREAM_INIT)
