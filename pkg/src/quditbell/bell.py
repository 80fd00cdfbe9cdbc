"""The two Bell expressions, their classical bounds, and a projector-form
cross-check for the dimension-graded expression.

Both expressions are sums of correlated probabilities Q_ij(m) = P(A_i - B_j =
m mod d) over the four setting pairs.  The four-term expression ("I") uses a
single shift per pair and stays below 3 for locally explainable statistics;
the graded expression ("Id") weights shift groups by c(k) = 1 - 2k/(d-1) and
subtracts a mirrored group, staying below 2 classically while reaching beyond
it quantumly for every dimension.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .measurements import MeasurementBasis, MeasurementSettings, correlated_probability, outcome_table, overlap_matrix
from .states import PureState


class BellKind(str, enum.Enum):
    I = "I"
    ID = "Id"


#: Largest value reachable by any quantum strategy, both expressions.
ALGEBRAIC_MAX = 4.0

_RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class BellResult:
    """One evaluated Bell expression value."""

    kind: BellKind
    local_dim: int
    value: float

    def __post_init__(self):
        lo = 0.0 if self.kind is BellKind.I else -ALGEBRAIC_MAX
        if not (lo - _RANGE_SLACK <= self.value <= ALGEBRAIC_MAX + _RANGE_SLACK):
            raise ValueError(f"{self.kind.value} value {self.value} outside [{lo}, {ALGEBRAIC_MAX}]")


def classical_bound(kind: BellKind) -> float:
    """Largest value any local hidden-variable model can reach."""
    return 3.0 if BellKind(kind) is BellKind.I else 2.0


def _check_dims(state: PureState, settings: MeasurementSettings):
    if settings.local_dim != state.local_dim:
        raise ValueError(
            f"dimension mismatch: state {state.local_dim}, settings {settings.local_dim}"
        )


def evaluate_I(state: PureState, settings: MeasurementSettings) -> BellResult:
    """Four-term expression: Q11(0) + Q21(-1) + Q22(0) + Q12(0).

    Classically at most 3 of the 4 coincidence conditions can hold at once,
    so values above 3 certify nonclassical correlations.
    """
    _check_dims(state, settings)
    t11 = outcome_table(state, settings.a1, settings.b1)
    t12 = outcome_table(state, settings.a1, settings.b2)
    t21 = outcome_table(state, settings.a2, settings.b1)
    t22 = outcome_table(state, settings.a2, settings.b2)
    value = (
        correlated_probability(t11, 0)
        + correlated_probability(t21, -1)
        + correlated_probability(t22, 0)
        + correlated_probability(t12, 0)
    )
    return BellResult(BellKind.I, state.local_dim, value)


def _graded_terms(d: int):
    """Per-pair shifts of the graded expression, as (weight, plus, minus) with
    plus/minus being the (q11, q12, q21, q22) shift quadruples."""
    for k in range(d // 2):
        weight = 1.0 - 2.0 * k / (d - 1)
        plus = (k, -k, -k - 1, k)
        minus = (-k - 1, k + 1, k, -k - 1)
        yield weight, plus, minus


def evaluate_Id(state: PureState, settings: MeasurementSettings) -> BellResult:
    """Dimension-graded expression with floor(d/2) weighted shift groups."""
    _check_dims(state, settings)
    d = state.local_dim
    tables = {
        "q11": outcome_table(state, settings.a1, settings.b1),
        "q12": outcome_table(state, settings.a1, settings.b2),
        "q21": outcome_table(state, settings.a2, settings.b1),
        "q22": outcome_table(state, settings.a2, settings.b2),
    }
    names = ("q11", "q12", "q21", "q22")
    value = 0.0
    for weight, plus, minus in _graded_terms(d):
        for name, shift in zip(names, plus):
            value += weight * correlated_probability(tables[name], shift)
        for name, shift in zip(names, minus):
            value -= weight * correlated_probability(tables[name], shift)
    return BellResult(BellKind.ID, d, value)


def evaluate(kind: BellKind, state: PureState, settings: MeasurementSettings) -> BellResult:
    """Evaluate either expression by tag."""
    if BellKind(kind) is BellKind.I:
        return evaluate_I(state, settings)
    return evaluate_Id(state, settings)


def projection_probability(
    state: PureState, alice: MeasurementBasis, bob: MeasurementBasis, residue: int
) -> float:
    """Squared norm of the projection onto span{|k>_A |l>_B : k - l = residue mod d}.

    Built directly from tensor products of the basis vectors, independently of
    the outcome-table machinery, so it can serve as a cross-check.
    """
    d = state.local_dim
    if alice.local_dim != d or bob.local_dim != d:
        raise ValueError("dimension mismatch between state and bases")
    total = 0.0
    for k in range(d):
        vec = np.kron(alice.vectors[:, k], bob.vectors[:, (k - residue) % d])
        total += abs(np.vdot(vec, state.amplitudes)) ** 2
    return total


def evaluate_Id_projector(state: PureState, settings: MeasurementSettings) -> BellResult:
    """Graded expression computed from explicit subspace projections.

    Uses the residue table n(1,1,m)=m, n(1,2,m)=-m, n(2,1,m)=-m-1,
    n(2,2,m)=m evaluated at m = k and m = -k-1 for each weighted group.
    Agrees with evaluate_Id to rounding error; kept as an independent route.
    """
    _check_dims(state, settings)
    d = state.local_dim
    pairs = (
        (settings.a1, settings.b1, lambda m: m),
        (settings.a1, settings.b2, lambda m: -m),
        (settings.a2, settings.b1, lambda m: -m - 1),
        (settings.a2, settings.b2, lambda m: m),
    )
    value = 0.0
    for k in range(d // 2):
        weight = 1.0 - 2.0 * k / (d - 1)
        for alice, bob, residue_of in pairs:
            value += weight * projection_probability(state, alice, bob, residue_of(k))
            value -= weight * projection_probability(state, alice, bob, residue_of(-k - 1))
    return BellResult(BellKind.ID, d, value)


# ---------------------------------------------------------------------------
# Vectorized kernel used by the Monte Carlo engines.


def shift_probabilities(state_matrix: np.ndarray, alice: np.ndarray, bob: np.ndarray) -> np.ndarray:
    """All correlated probabilities Q(m), m = 0..d-1, for stacked states.

    `state_matrix` is (..., d, d); returns (..., d).
    """
    probs = np.abs(overlap_matrix(state_matrix, alice, bob)) ** 2
    d = probs.shape[-1]
    ell = np.arange(d)
    rows = (ell[:, None] + ell[None, :]) % d  # rows[m, l] = (l + m) mod d
    return probs[..., rows, ell[None, :]].sum(axis=-1)


def bell_values_from_bases(
    kind: BellKind,
    state_matrix: np.ndarray,
    a1: np.ndarray,
    a2: np.ndarray,
    b1: np.ndarray,
    b2: np.ndarray,
) -> np.ndarray:
    """Bell values for a stack of state matrices and raw basis matrices.

    Fast path shared by the sampling engines and the settings optimizer; the
    scalar operations above are the readable reference implementation.
    """
    d = state_matrix.shape[-1]
    q11 = shift_probabilities(state_matrix, a1, b1)
    q12 = shift_probabilities(state_matrix, a1, b2)
    q21 = shift_probabilities(state_matrix, a2, b1)
    q22 = shift_probabilities(state_matrix, a2, b2)
    if BellKind(kind) is BellKind.I:
        return q11[..., 0] + q21[..., (-1) % d] + q22[..., 0] + q12[..., 0]
    out = np.zeros(q11.shape[:-1])
    for weight, plus, minus in _graded_terms(d):
        ps11, ps12, ps21, ps22 = (s % d for s in plus)
        ms11, ms12, ms21, ms22 = (s % d for s in minus)
        out += weight * (
            q11[..., ps11] - q11[..., ms11]
            + q12[..., ps12] - q12[..., ms12]
            + q21[..., ps21] - q21[..., ms21]
            + q22[..., ps22] - q22[..., ms22]
        )
    return out


def bell_values(kind: BellKind, amplitudes: np.ndarray, settings: MeasurementSettings) -> np.ndarray:
    """Vectorized Bell values for amplitude vectors of shape (..., d*d)."""
    d = settings.local_dim
    stack = np.asarray(amplitudes, dtype=complex).reshape(*amplitudes.shape[:-1], d, d)
    return bell_values_from_bases(
        kind, stack, settings.a1.vectors, settings.a2.vectors, settings.b1.vectors, settings.b2.vectors
    )
