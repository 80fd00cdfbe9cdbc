"""Derivative-free simplex search and the optimization of measurement settings.

Observables keep the fixed spectrum 0..d-1; only their eigenbases move.  Each
basis is the column frame of exp(iG) for a Hermitian generator G, which keeps
every iterate a valid orthonormal basis and turns the search into an
unconstrained problem over 4*d^2 real parameters.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .bell import BellKind, bell_values_from_bases
from .linalg import derive_rng, expm_i_hermitian
from .measurements import MeasurementBasis, MeasurementSettings
from .perturbations import random_hermitian
from .states import PureState


@dataclass(frozen=True)
class SimplexConfig:
    """Move coefficients and stopping rule of the simplex search."""

    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    max_evals: int = 100_000
    spread_tol: float = 1e-8

    def __post_init__(self):
        if self.reflection <= 0:
            raise ValueError("reflection coefficient must be positive")
        if self.expansion <= 1:
            raise ValueError("expansion coefficient must exceed 1")
        if not 0 < self.contraction < 1:
            raise ValueError("contraction coefficient must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink coefficient must lie in (0, 1)")


class NelderMeadResult(NamedTuple):
    x: np.ndarray
    fun: float
    n_evals: int
    converged: bool


class ObjectiveError(RuntimeError):
    """Objective returned a non-finite value; carries the offending point."""

    def __init__(self, point: np.ndarray, value: float):
        super().__init__(f"objective returned non-finite value {value!r}")
        self.point = np.asarray(point)
        self.value = value


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: np.ndarray,
    config: SimplexConfig = SimplexConfig(),
    initial_step: float = 0.1,
) -> NelderMeadResult:
    """Minimize `objective` from `x0` by reflect/expand/contract/shrink moves.

    A pass stops once the spread of vertex function values drops below
    config.spread_tol; the search then restarts from the best vertex with a
    ten times smaller simplex until a restart stops improving or
    config.max_evals evaluations are spent.  The restart guards against the
    vertex values agreeing while the simplex still straddles the minimum,
    which otherwise stalls low-dimensional searches.
    """
    x0 = np.asarray(x0, dtype=float)
    n_evals = 0

    def call(x):
        nonlocal n_evals
        value = float(objective(x))
        n_evals += 1
        if not np.isfinite(value):
            raise ObjectiveError(x, value)
        return value

    def single_pass(start, step_size, spread_tol):
        dim = start.size
        vertices = [start.copy()]
        for i in range(dim):
            vertex = start.copy()
            vertex[i] += step_size if start[i] == 0.0 else step_size * max(1.0, abs(start[i]))
            vertices.append(vertex)
        values = [call(v) for v in vertices]

        while True:
            order = np.argsort(values, kind="stable")
            vertices = [vertices[i] for i in order]
            values = [values[i] for i in order]
            if values[-1] - values[0] < spread_tol:
                return vertices[0], values[0], True
            if n_evals >= config.max_evals:
                return vertices[0], values[0], False

            centroid = np.mean(vertices[:-1], axis=0)
            worst = vertices[-1]
            reflected = centroid + config.reflection * (centroid - worst)
            f_reflected = call(reflected)

            if f_reflected < values[0]:
                expanded = centroid + config.expansion * (centroid - worst)
                f_expanded = call(expanded)
                if f_expanded < f_reflected:
                    vertices[-1], values[-1] = expanded, f_expanded
                else:
                    vertices[-1], values[-1] = reflected, f_reflected
            elif f_reflected < values[-2]:
                vertices[-1], values[-1] = reflected, f_reflected
            else:
                if f_reflected < values[-1]:
                    contracted = centroid + config.contraction * (reflected - centroid)
                else:
                    contracted = centroid + config.contraction * (worst - centroid)
                f_contracted = call(contracted)
                if f_contracted < min(f_reflected, values[-1]):
                    vertices[-1], values[-1] = contracted, f_contracted
                else:
                    best = vertices[0]
                    vertices = [best] + [best + config.shrink * (v - best) for v in vertices[1:]]
                    values = [values[0]] + [call(v) for v in vertices[1:]]

    x, fun, converged = single_pass(x0, initial_step, config.spread_tol)
    step = initial_step
    while n_evals < config.max_evals:
        # polish at machine resolution so a restart can leave a symmetric
        # straddle that the plain spread criterion cannot see
        step *= 0.1
        polish_tol = min(config.spread_tol, 1e-15 * (1.0 + abs(fun)))
        x_new, fun_new, converged = single_pass(x, step, polish_tol)
        improved = fun_new < fun - 1e-15 * (1.0 + abs(fun))
        if fun_new < fun:
            x, fun = x_new, fun_new
        if not improved:
            break
    return NelderMeadResult(x, fun, n_evals, converged)


@dataclass(frozen=True)
class ObservableParams:
    """Hermitian generators of the four measurement bases."""

    g_a1: np.ndarray
    g_a2: np.ndarray
    g_b1: np.ndarray
    g_b2: np.ndarray

    def __post_init__(self):
        for name, g in self.items():
            g = np.asarray(g, dtype=complex)
            object.__setattr__(self, name, g)
            if g.ndim != 2 or g.shape[0] != g.shape[1]:
                raise ValueError(f"{name} is not square: shape {g.shape}")
            if not np.allclose(g, g.conj().T, atol=1e-12):
                raise ValueError(f"{name} is not Hermitian")
        dims = {g.shape[0] for _, g in self.items()}
        if len(dims) != 1:
            raise ValueError(f"generators disagree on dimension: {sorted(dims)}")

    def items(self):
        return (
            ("g_a1", self.g_a1),
            ("g_a2", self.g_a2),
            ("g_b1", self.g_b1),
            ("g_b2", self.g_b2),
        )

    @property
    def local_dim(self) -> int:
        return self.g_a1.shape[0]


@dataclass(frozen=True)
class OptimizationResult:
    best_value: float
    best_params: ObservableParams
    n_evals: int
    converged: bool

    def __post_init__(self):
        if not -4.0 - 1e-9 <= self.best_value <= 4.0 + 1e-9:
            raise ValueError(f"best_value {self.best_value} outside the expression range")


def hermitian_to_vector(g: np.ndarray) -> np.ndarray:
    """Pack a Hermitian d x d matrix into d^2 reals (diagonal, Re upper, Im upper)."""
    d = g.shape[0]
    rows, cols = np.triu_indices(d, k=1)
    return np.concatenate([np.real(np.diagonal(g)), np.real(g[rows, cols]), np.imag(g[rows, cols])])


def vector_to_hermitian(x: np.ndarray, d: int) -> np.ndarray:
    """Inverse of hermitian_to_vector."""
    x = np.asarray(x, dtype=float)
    if x.size != d * d:
        raise ValueError(f"expected {d * d} parameters, got {x.size}")
    g = np.zeros((d, d), dtype=complex)
    g[np.diag_indices(d)] = x[:d]
    rows, cols = np.triu_indices(d, k=1)
    m = rows.size
    upper = x[d : d + m] + 1j * x[d + m :]
    g[rows, cols] = upper
    g[cols, rows] = np.conj(upper)
    return g


def params_to_settings(params: ObservableParams) -> MeasurementSettings:
    """Bases spanned by the columns of exp(iG) for each generator."""
    d = params.local_dim
    matrices = [expm_i_hermitian(g, 1.0) for _, g in params.items()]
    a1, a2, b1, b2 = (MeasurementBasis(d, u) for u in matrices)
    return MeasurementSettings(a1, a2, b1, b2)


def _params_from_flat(x: np.ndarray, d: int) -> ObservableParams:
    n = d * d
    return ObservableParams(*(vector_to_hermitian(x[i * n : (i + 1) * n], d) for i in range(4)))


def _flat_objective(kind: BellKind, state_matrix: np.ndarray, d: int):
    def objective(x):
        mats = [expm_i_hermitian(vector_to_hermitian(x[i * d * d : (i + 1) * d * d], d), 1.0) for i in range(4)]
        return -float(bell_values_from_bases(kind, state_matrix, *mats))
    return objective


def optimize_settings(
    state: PureState,
    kind: BellKind,
    restarts: int,
    seed: int,
    config: SimplexConfig = SimplexConfig(),
    workers: int = 1,
) -> OptimizationResult:
    """Maximize a Bell expression over measurement settings.

    Runs independent simplex searches from `restarts` random generator sets
    (restart r uses the stream derived from (seed, r)) and keeps the best.
    Failed restarts are tolerated unless every restart fails.
    """
    if restarts < 1:
        raise ValueError(f"need at least one restart, got {restarts}")
    kind = BellKind(kind)
    d = state.local_dim
    state_matrix = state.matrix()
    objective = _flat_objective(kind, state_matrix, d)

    def one_restart(r: int):
        rng = derive_rng(seed, r)
        x0 = np.concatenate([hermitian_to_vector(random_hermitian(d, rng)) for _ in range(4)])
        try:
            return nelder_mead(objective, x0, config)
        except ObjectiveError as err:
            return err

    if workers <= 1:
        outcomes = [one_restart(r) for r in range(restarts)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(one_restart, range(restarts)))
    results = [o for o in outcomes if isinstance(o, NelderMeadResult)]
    if not results:
        errors = [o for o in outcomes if isinstance(o, ObjectiveError)]
        raise RuntimeError(f"all {restarts} restarts failed; first error: {errors[0]}")

    best = min(results, key=lambda r: r.fun)
    n_evals = sum(r.n_evals for r in results)
    return OptimizationResult(-best.fun, _params_from_flat(best.x, d), n_evals, best.converged)
