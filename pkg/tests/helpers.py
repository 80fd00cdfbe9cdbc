"""Independent oracles shared by the test modules.

These deliberately avoid the library code paths they are used to check:
purity via an explicit partial trace, Schmidt spectra via SVD, the inverse
error function via bisection, and local-hidden-variable style checks via
direct probability sums.
"""

import numpy as np
from scipy.special import erf

from quditbell import MeasurementBasis, MeasurementSettings, haar_unitary


def reduced_purity(state) -> float:
    """Tr(rho_A^2) from the explicit reduced density matrix."""
    m = state.matrix()
    rho = m @ m.conj().T
    return float(np.trace(rho @ rho).real)


def schmidt_coefficients(state) -> np.ndarray:
    return np.linalg.svd(state.matrix(), compute_uv=False)


def entanglement_entropy(state) -> float:
    lam = schmidt_coefficients(state) ** 2
    lam = lam[lam > 1e-15]
    return float(-np.sum(lam * np.log(lam)))


def erfinv_bisect(y: float, tol: float = 1e-13) -> float:
    """Invert erf by bisection; independent of scipy's erfinv."""
    if not -1.0 < y < 1.0:
        raise ValueError("erfinv domain is (-1, 1)")
    lo, hi = -10.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if erf(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def haar_settings(d: int, rng) -> MeasurementSettings:
    bases = [MeasurementBasis(d, haar_unitary(d, rng)) for _ in range(4)]
    return MeasurementSettings(*bases)


def rotate_basis(basis: MeasurementBasis, u: np.ndarray) -> MeasurementBasis:
    return MeasurementBasis(basis.local_dim, u @ basis.vectors)
