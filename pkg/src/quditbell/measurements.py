"""Measurement bases, joint outcome distributions and correlated probabilities.

A basis is stored as a d x d matrix whose columns are the outcome vectors, so
outcome k of observable A corresponds to column k.  All observables carry the
spectrum 0..d-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import UNITARY_TOL
from .states import PureState

PROB_TOL = 1e-10


@dataclass(frozen=True)
class MeasurementBasis:
    """Orthonormal basis of C^d; column k of `vectors` answers outcome k."""

    local_dim: int
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=complex)
        object.__setattr__(self, "vectors", v)
        d = self.local_dim
        if v.shape != (d, d):
            raise ValueError(f"expected ({d}, {d}) basis matrix, got {v.shape}")
        gram = v.conj().T @ v
        defect = np.linalg.norm(gram - np.eye(d))
        if defect > UNITARY_TOL:
            raise ValueError(f"basis not orthonormal: defect {defect:.3e}")


@dataclass(frozen=True)
class MeasurementSettings:
    """Two bases per party: (a1, a2) for Alice and (b1, b2) for Bob."""

    a1: MeasurementBasis
    a2: MeasurementBasis
    b1: MeasurementBasis
    b2: MeasurementBasis

    def __post_init__(self):
        dims = {b.local_dim for b in (self.a1, self.a2, self.b1, self.b2)}
        if len(dims) != 1:
            raise ValueError(f"bases disagree on local dimension: {sorted(dims)}")

    @property
    def local_dim(self) -> int:
        return self.a1.local_dim


@dataclass(frozen=True)
class OutcomeTable:
    """Joint outcome distribution; entry (k, l) = P(Alice=k, Bob=l)."""

    local_dim: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        object.__setattr__(self, "probs", p)
        d = self.local_dim
        if p.shape != (d, d):
            raise ValueError(f"expected ({d}, {d}) table, got {p.shape}")
        if np.any(p < -PROB_TOL) or np.any(p > 1.0 + PROB_TOL):
            raise ValueError("table entries outside [0, 1]")
        total = p.sum()
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"table sums to {total!r}, not 1")


# Phase offsets of the settings that maximize the violation for the
# maximally entangled state: Alice uses (0, 1/2), Bob uses (1/4, -1/4).
ALICE_OFFSETS = (0.0, 0.5)
BOB_OFFSETS = (0.25, -0.25)


def _fourier_basis(d: int, offset: float, flip: bool) -> np.ndarray:
    j = np.arange(d)[:, None]
    k = np.arange(d)[None, :]
    sign = -1.0 if flip else 1.0
    return np.exp(2j * np.pi / d * j * (sign * k + offset)) / np.sqrt(d)


def optimal_settings(d: int) -> MeasurementSettings:
    """Fourier-type settings giving the maximal violation for bell_state(d).

    Alice's outcome-k vector has components exp(i*2pi/d * j*(k + alpha_a)) /
    sqrt(d); Bob's uses (-l + beta_b).  Every vector is unbiased with respect
    to the computational basis.
    """
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    a1, a2 = (MeasurementBasis(d, _fourier_basis(d, off, flip=False)) for off in ALICE_OFFSETS)
    b1, b2 = (MeasurementBasis(d, _fourier_basis(d, off, flip=True)) for off in BOB_OFFSETS)
    return MeasurementSettings(a1, a2, b1, b2)


def overlap_matrix(state_matrix: np.ndarray, alice: np.ndarray, bob: np.ndarray) -> np.ndarray:
    """Amplitudes <k|<l|psi> for all outcome pairs.

    Broadcasts over leading axes, so either the state matrices or the basis
    matrices (or both) may be stacked.
    """
    alice_dag = np.conj(np.swapaxes(alice, -1, -2))
    return np.matmul(np.matmul(alice_dag, state_matrix), np.conj(bob))


def outcome_table(state: PureState, alice: MeasurementBasis, bob: MeasurementBasis) -> OutcomeTable:
    """Born-rule joint distribution of one setting pair on a pure state."""
    d = state.local_dim
    if alice.local_dim != d or bob.local_dim != d:
        raise ValueError(
            f"dimension mismatch: state {d}, alice {alice.local_dim}, bob {bob.local_dim}"
        )
    amps = overlap_matrix(state.matrix(), alice.vectors, bob.vectors)
    return OutcomeTable(d, np.abs(amps) ** 2)


def correlated_probability(table: OutcomeTable, shift: int) -> float:
    """Probability that Alice's outcome exceeds Bob's by `shift` modulo d."""
    d = table.local_dim
    ell = np.arange(d)
    return float(table.probs[(ell + shift) % d, ell].sum())
