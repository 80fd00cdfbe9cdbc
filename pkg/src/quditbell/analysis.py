"""Histograms, profile and power-law fits, and Gaussian summary statistics.

The violation-probability profile over the spin value is fitted with the
complementary-error-function model

    p(l) = 0.5 * (1 - erf((l - l_bar) / delta)),

whose parameters give the spin threshold below which the violation
probability stays above a target p*:

    l_star = l_bar + delta * erfinv(1 - 2 p*).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import erf, erfinv

from .optimizer import SimplexConfig, nelder_mead


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram; bins are right-open except the last."""

    bin_edges: np.ndarray
    counts: np.ndarray
    n_total: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        counts = np.asarray(self.counts, dtype=int)
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)
        if edges.ndim != 1 or counts.size != edges.size - 1:
            raise ValueError("need len(edges) == len(counts) + 1")
        if np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(counts < 0) or counts.sum() != self.n_total:
            raise ValueError("counts must be non-negative and sum to n_total")


@dataclass(frozen=True)
class ErfFit:
    l_bar: float
    delta: float
    residual: float

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError(f"delta must be positive, got {self.delta}")


@dataclass(frozen=True)
class PowerLawFit:
    """Parameters of y = a / x**b."""

    a: float
    b: float
    residual: float

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError(f"amplitude must be positive, got {self.a}")


@dataclass(frozen=True)
class GaussianFit:
    mu: float
    sigma: float
    skewness: float

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


DEFAULT_BINS = 200


def build_histogram(values, n_bins: int = DEFAULT_BINS) -> Histogram:
    """Histogram over [min, max] with equal-width bins.

    A degenerate (constant) sample gets its range widened by 1e-9 so a single
    bin can hold everything.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot histogram an empty sample")
    if n_bins < 1:
        raise ValueError(f"need at least one bin, got {n_bins}")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        hi = lo + 1e-9
    counts, edges = np.histogram(values, bins=n_bins, range=(lo, hi))
    return Histogram(edges, counts, int(values.size))


def erf_profile(l, l_bar: float, delta: float):
    """The fitted profile model evaluated at spin values `l`."""
    return 0.5 * (1.0 - erf((np.asarray(l, dtype=float) - l_bar) / delta))


class FitConvergenceError(RuntimeError):
    """Simplex search ran out of budget; carries the best fit found."""

    def __init__(self, best: ErfFit):
        super().__init__(f"profile fit did not converge; best iterate {best}")
        self.best = best


_FIT_CONFIG = SimplexConfig(max_evals=20_000, spread_tol=1e-15)
# parameter error scales like sqrt(spread_tol / curvature), so the polish
# pass needs a spread tolerance far below the residual scale
_POLISH_FLOOR = 1e-22


def fit_erf_profile(points) -> ErfFit:
    """Least-squares fit of the profile model to (l, p) pairs.

    A coarse simplex pass locates the optimum; two restarted passes with a
    residual-scaled tolerance then polish the parameters well below the data
    resolution.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise ValueError("need at least 3 (l, p) points")
    l, p = pts[:, 0], pts[:, 1]
    if np.any((p < 0) | (p > 1)):
        raise ValueError("probabilities must lie in [0, 1]")

    def objective(x):
        return float(np.sum((erf_profile(l, x[0], abs(x[1])) - p) ** 2))

    # crossing of p = 1/2 as the location guess; data span as the width guess
    above = p > 0.5
    if above.any() and (~above).any():
        l_bar0 = 0.5 * (l[above].max() + l[~above].min())
    else:
        l_bar0 = float(np.mean(l))
    x = np.array([l_bar0, max(np.ptp(l) / 2.0, 1e-3)])
    result = nelder_mead(objective, x, _FIT_CONFIG)
    converged = result.converged
    polish = SimplexConfig(
        max_evals=_FIT_CONFIG.max_evals,
        spread_tol=max(_POLISH_FLOOR, result.fun * 1e-12),
    )
    for step in (1e-3, 1e-6):
        result = nelder_mead(objective, result.x, polish, initial_step=step)
        converged = converged and result.converged
    fit = ErfFit(float(result.x[0]), float(abs(result.x[1])), float(result.fun))
    if not converged:
        raise FitConvergenceError(fit)
    return fit


def l_star(fit: ErfFit, p_star: float) -> float:
    """Spin value where the fitted profile drops to the target probability."""
    if not 0.0 < p_star < 1.0:
        raise ValueError(f"target probability must lie in (0, 1), got {p_star}")
    return fit.l_bar + fit.delta * float(erfinv(1.0 - 2.0 * p_star))


def fit_power_law(points) -> PowerLawFit:
    """Fit y = a / x**b by linear least squares in log-log coordinates."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
        raise ValueError("need at least 2 (x, y) points")
    if np.any(pts <= 0):
        raise ValueError("power-law fit needs strictly positive data")
    log_x, log_y = np.log(pts[:, 0]), np.log(pts[:, 1])
    slope, intercept = np.polyfit(log_x, log_y, 1)
    residual = float(np.sum((log_y - (slope * log_x + intercept)) ** 2))
    return PowerLawFit(float(np.exp(intercept)), float(-slope), residual)


def gaussian_summary(values) -> GaussianFit:
    """Sample mean, standard deviation (n-1 denominator) and skewness."""
    values = np.asarray(values, dtype=float)
    if values.size < 3:
        raise ValueError("need at least 3 values")
    mu = float(values.mean())
    sigma = float(values.std(ddof=1))
    if sigma == 0.0:
        raise ValueError("sample has zero variance")
    skew = float(np.mean(((values - mu) / values.std(ddof=0)) ** 3))
    return GaussianFit(mu, sigma, skew)
