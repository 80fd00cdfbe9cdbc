"""Random Hermitian generators and the unitary perturbations built from them.

A perturbation of strength epsilon rotates the state by exp(i*epsilon*H) with
H random, either independently on each subsystem (bilocal, entanglement
preserving) or on the joint space (global, entanglement degrading).  Rotating
the state with fixed ideal settings is equivalent to measuring the ideal
state with correspondingly misaligned settings, so a single state-side
rotation models imperfect measurement directions.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .linalg import derive_rng, expm_i_hermitian
from .states import PureState


class PerturbationKind(str, enum.Enum):
    BILOCAL = "bilocal"
    GLOBAL = "global"


# Entry distributions for the random generators.  The magnitude bound
# |H_ij| <= 1 pins the modulus, not the complex law, so the rectangular
# variant and a real-symmetric variant are kept for comparison runs.
HERMITIAN_MODES = ("polar", "rectangular", "real")


def random_hermitian(n: int, rng: np.random.Generator, mode: str = "polar") -> np.ndarray:
    """Random Hermitian matrix with every entry bounded by 1 in modulus.

    "polar" (default): off-diagonal magnitude uniform in [0, 1], phase uniform
    in [0, 2pi), so the modulus bound holds literally; "rectangular": Re and
    Im uniform in [-1, 1], the alternative reading where the bound applies to
    each part; "real": symmetric with uniform [-1, 1] entries.  Diagonals are
    uniform in [-1, 1] in all modes.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    if mode not in HERMITIAN_MODES:
        raise ValueError(f"unknown mode {mode!r}, expected one of {HERMITIAN_MODES}")
    h = np.zeros((n, n), dtype=complex)
    diag = rng.uniform(-1.0, 1.0, n)
    h[np.diag_indices(n)] = diag
    rows, cols = np.triu_indices(n, k=1)
    m = rows.size
    if m:
        if mode == "polar":
            mag = rng.uniform(0.0, 1.0, m)
            phase = rng.uniform(0.0, 2.0 * np.pi, m)
            upper = mag * np.exp(1j * phase)
        elif mode == "rectangular":
            re = rng.uniform(-1.0, 1.0, m)
            im = rng.uniform(-1.0, 1.0, m)
            upper = re + 1j * im
        else:
            upper = rng.uniform(-1.0, 1.0, m).astype(complex)
        h[rows, cols] = upper
        h[cols, rows] = np.conj(upper)
    return h


@dataclass(frozen=True)
class PerturbationConfig:
    """Strength, flavor and seed of one perturbation ensemble."""

    epsilon: float
    kind: PerturbationKind
    seed: int
    hermitian_mode: str = "polar"

    def __post_init__(self):
        if not np.isfinite(self.epsilon) or self.epsilon < 0.0:
            raise ValueError(f"epsilon must be finite and >= 0, got {self.epsilon}")
        if self.hermitian_mode not in HERMITIAN_MODES:
            raise ValueError(f"unknown hermitian_mode {self.hermitian_mode!r}")

    def apply(self, state: PureState, sample_index: int) -> PureState:
        """Perturb `state` with the stream derived from (seed, sample_index)."""
        rng = derive_rng(self.seed, sample_index)
        if self.kind is PerturbationKind.BILOCAL:
            return apply_bilocal(state, self.epsilon, rng, mode=self.hermitian_mode)
        return apply_global(state, self.epsilon, rng, mode=self.hermitian_mode)


def apply_bilocal(
    state: PureState, epsilon: float, rng: np.random.Generator, mode: str = "polar"
) -> PureState:
    """Rotate each subsystem by exp(i*epsilon*H) with independent random H.

    Draws the A-side generator first, then the B-side one.  Schmidt
    coefficients (hence entanglement) are unchanged.
    """
    d = state.local_dim
    ha = random_hermitian(d, rng, mode)
    hb = random_hermitian(d, rng, mode)
    ua = expm_i_hermitian(ha, epsilon)
    ub = expm_i_hermitian(hb, epsilon)
    rotated = ua @ state.matrix() @ ub.T
    return PureState(d, rotated.reshape(d * d))


def apply_global(
    state: PureState, epsilon: float, rng: np.random.Generator, mode: str = "polar"
) -> PureState:
    """Rotate the joint system by exp(i*epsilon*H) with one random d^2 generator.

    Applies the rotation in the eigenbasis of H (one matrix-vector product per
    side) rather than forming the full d^2 x d^2 unitary; the Monte Carlo
    engines reuse the same arithmetic, so both paths agree bit for bit.
    """
    d = state.local_dim
    h = random_hermitian(d * d, rng, mode)
    w, v = np.linalg.eigh(h)
    rotated = v @ (np.exp(1j * epsilon * w) * (v.conj().T @ state.amplitudes))
    return PureState(d, rotated)
