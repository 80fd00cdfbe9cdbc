"""Bipartite pure states: the maximally entangled state plus random entangled
and random product ensembles."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NORM_TOL = 1e-12


@dataclass(frozen=True)
class PureState:
    """Normalized pure state of two d-level subsystems.

    `amplitudes` has length d**2 and uses the ``i_A * d + i_B`` ordering; the
    Euclidean norm must be 1 within 1e-12.
    """

    local_dim: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        object.__setattr__(self, "amplitudes", amps)
        d = self.local_dim
        if d < 2:
            raise ValueError(f"local dimension must be >= 2, got {d}")
        if amps.shape != (d * d,):
            raise ValueError(f"expected {d * d} amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValueError("amplitudes must be finite")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm!r} deviates from 1 beyond {NORM_TOL}")

    def matrix(self) -> np.ndarray:
        """Amplitudes reshaped to (d, d) with rows indexing subsystem A."""
        return self.amplitudes.reshape(self.local_dim, self.local_dim)


def bell_state(d: int) -> PureState:
    """Equal-weight entangled state: 1/sqrt(d) on the diagonal pairs |jj>."""
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    amps = (np.eye(d, dtype=complex) / np.sqrt(d)).reshape(d * d)
    return PureState(d, amps)


def _uniform_box_vector(n: int, rng: np.random.Generator) -> np.ndarray:
    """Complex vector with Re and Im of each entry uniform in [-10, 10],
    normalized.  Resamples on the measure-zero all-zero draw."""
    while True:
        re = rng.uniform(-10.0, 10.0, n)
        im = rng.uniform(-10.0, 10.0, n)
        z = re + 1j * im
        norm = np.linalg.norm(z)
        if norm > 0.0:
            return z / norm


def random_entangled_state(d: int, rng: np.random.Generator) -> PureState:
    """Random state with amplitudes drawn uniformly from a complex box.

    Almost surely entangled: the product states form a measure-zero subset.
    """
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    return PureState(d, _uniform_box_vector(d * d, rng))


def random_product_state(d: int, rng: np.random.Generator) -> PureState:
    """Tensor product of two independent random local states (box ensemble)."""
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    a = _uniform_box_vector(d, rng)
    b = _uniform_box_vector(d, rng)
    return PureState(d, np.kron(a, b))
