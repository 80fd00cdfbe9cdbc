"""Dense complex linear algebra kernel: Hermitian exponentials, Kronecker
products, and random sampling of unitaries and sphere-uniform state vectors.

All functions are pure given an explicit ``numpy.random.Generator``; results
are plain ndarrays and safe to share between workers.  Bipartite vectors use
the row-major index convention ``i_A * d_B + i_B`` throughout the package.
"""

from __future__ import annotations

import numpy as np

# Construction-time tolerance for unitarity / orthonormality checks.
UNITARY_TOL = 1e-10


def derive_rng(seed: int, index: int) -> np.random.Generator:
    """Independent random stream for sample `index` of a run seeded by `seed`.

    Streams for distinct indices never overlap, and the mapping is stable, so
    Monte Carlo runs are reproducible bit-for-bit no matter how samples are
    batched or distributed over workers.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def expm_i_hermitian(h: np.ndarray, theta: float) -> np.ndarray:
    """Unitary exp(i*theta*H) of a Hermitian matrix via eigendecomposition.

    Accepts a single (d, d) matrix or a stack (..., d, d).  The result is
    unitary to eigensolver accuracy, which beats any truncated series for the
    small dimensions used here.
    """
    h = np.asarray(h, dtype=complex)
    if not np.all(np.isfinite(theta)):
        raise ValueError("theta must be finite")
    if not np.all(np.isfinite(h)):
        raise ValueError("matrix entries must be finite")
    if h.shape[-1] != h.shape[-2]:
        raise ValueError(f"expected square matrix, got shape {h.shape}")
    herm_defect = np.max(np.abs(h - np.conj(np.swapaxes(h, -1, -2)))) if h.size else 0.0
    if herm_defect > 1e-12 * max(1.0, np.max(np.abs(h))):
        raise ValueError("matrix is not Hermitian")
    w, v = np.linalg.eigh(h)
    return unitary_from_eigh(w, v, theta)


def unitary_from_eigh(w: np.ndarray, v: np.ndarray, theta: float) -> np.ndarray:
    """exp(i*theta*H) from a precomputed eigendecomposition H = V diag(w) V†.

    Split out so rotation engines can diagonalize once and rebuild the
    unitary for many angles with identical arithmetic.
    """
    phases = np.exp(1j * theta * w)
    return np.matmul(v * phases[..., None, :], np.conj(np.swapaxes(v, -1, -2)))


def tensor_product(m: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Kronecker product with the ``i_A * d_B + i_B`` index convention."""
    return np.kron(np.asarray(m), np.asarray(n))


def ginibre(d: int, rng: np.random.Generator) -> np.ndarray:
    """d x d matrix of independent standard complex Gaussian entries."""
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def haar_from_ginibre(z: np.ndarray) -> np.ndarray:
    """Orthonormalize Gaussian matrices into Haar unitaries.

    QR alone is not Haar-distributed; rescaling each column by the phase of
    the corresponding diagonal entry of R removes the bias.  Accepts stacks.
    """
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[..., None, :]


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Sample a d x d unitary from the Haar measure."""
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    return haar_from_ginibre(ginibre(d, rng))


def uniform_sphere_state(n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform random point on the unit sphere of C^n.

    Normalized vector of independent standard complex Gaussians; the induced
    measure is invariant under every fixed unitary.
    """
    if n < 1:
        raise ValueError(f"dimension must be >= 1, got {n}")
    while True:
        z = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        norm = np.linalg.norm(z)
        if norm > 0.0:
            return z / norm
