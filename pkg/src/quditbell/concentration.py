"""Concentration bounds for the graded Bell expression over uniform random
states, plus their empirical verification.

Over states drawn uniformly from the unit sphere of the d^2-dimensional
bipartite space, the graded expression averages to zero and is Lipschitz,
so the probability of seeing a value of magnitude epsilon or more falls
exponentially in the dimension.  Two bounds are provided: a rigorous one
built from the Lipschitz constant, and a sharper median-form variant valid
when the value distribution is symmetric around zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bell import BellKind, bell_values_from_bases
from .experiments import _chunk_ranges, _chunk_size, _run_chunks, _setting_bases
from .linalg import derive_rng, uniform_sphere_state


def _check_args(d: int, epsilon: float):
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise ValueError(f"threshold must be positive and finite, got {epsilon}")


def bound_main(d: int, epsilon: float) -> float:
    """Rigorous tail bound: 2*exp(-d^2 eps^2 / (192*(6+d)*pi^3)).

    Vacuous (above 1) for small d; it starts to bite around d of a few tens.
    """
    _check_args(d, epsilon)
    return float(2.0 * np.exp(-(d**2) * epsilon**2 / (192.0 * (6.0 + d) * np.pi**3)))


def lipschitz_bound(d: int) -> float:
    """Bound 8*sqrt(2)*(1 + s/3)^(1/2), s = floor(d/2), on how fast the graded
    expression can vary along the state sphere."""
    if d < 2:
        raise ValueError(f"local dimension must be >= 2, got {d}")
    s = d // 2
    return float(8.0 * np.sqrt(2.0) * np.sqrt(1.0 + s / 3.0))


def bound_median(d: int, epsilon: float) -> float:
    """Sharper tail bound exp(-3 d^2 eps^2 / (128*(6+d))), assuming the value
    distribution is even (median zero).  That assumption is checked
    empirically, not proven."""
    _check_args(d, epsilon)
    return float(np.exp(-3.0 * d**2 * epsilon**2 / (128.0 * (6.0 + d))))


@dataclass(frozen=True)
class ConcentrationReport:
    """Empirical tail fraction of |value| >= epsilon next to both bounds.

    The sample mean and median are reported alongside so the median-zero
    assumption behind bound_median can be judged from the same run.
    """

    d: int
    epsilon: float
    bound_main: float
    bound_median: float
    empirical_fraction: float
    n_samples: int
    empirical_mean: float
    empirical_median: float

    def __post_init__(self):
        if not 0.0 <= self.empirical_fraction <= 1.0:
            raise ValueError("empirical fraction must lie in [0, 1]")
        if self.bound_main <= 0 or self.bound_median <= 0:
            raise ValueError("bounds must be positive")


def sample_uniform_values(d: int, n: int, seed: int, workers: int = 1) -> np.ndarray:
    """Graded-expression values of n sphere-uniform states under the ideal
    settings; sample i uses the stream derived from (seed, i)."""
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    bases = _setting_bases(d)

    def worker(start, stop):
        stack = np.empty((stop - start, d * d), dtype=complex)
        for i in range(stop - start):
            stack[i] = uniform_sphere_state(d * d, derive_rng(seed, start + i))
        return bell_values_from_bases(BellKind.ID, stack.reshape(-1, d, d), *bases)

    ranges = _chunk_ranges(n, _chunk_size(d))
    return np.concatenate(_run_chunks(ranges, worker, workers))


def empirical_concentration(
    d: int, epsilon: float, n: int, seed: int, workers: int = 1
) -> ConcentrationReport:
    """Measure the tail fraction P(|value| >= epsilon) over uniform states."""
    _check_args(d, epsilon)
    values = sample_uniform_values(d, n, seed, workers)
    fraction = float(np.count_nonzero(np.abs(values) >= epsilon)) / n
    return ConcentrationReport(
        d=d,
        epsilon=epsilon,
        bound_main=bound_main(d, epsilon),
        bound_median=bound_median(d, epsilon),
        empirical_fraction=fraction,
        n_samples=n,
        empirical_mean=float(values.mean()),
        empirical_median=float(np.median(values)),
    )
