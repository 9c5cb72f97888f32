"""Exact quantum primitives for one polarization qubit pair.

State conventions used throughout the package:

* Single-qubit amplitudes are ordered (H, V).
* Joint amplitudes are ordered (HH, HV, VH, VV) with the signal qubit as
  the major index, i.e. index = 2 * signal + meter.
* ``|D> = (|H> + |V>)/sqrt(2)`` and ``|A> = (|H> - |V>)/sqrt(2)``.
* The controlled-sign interaction flips the sign of the VV amplitude,
  with the signal photon in the control mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DegenerateConditioningError

# Tolerance for exact-math identities (normalization, hermiticity, trace).
TOL_EXACT = 1e-12
# Probabilities below this are treated as true zeros when conditioning.
MIN_CONDITION_PROB = 1e-15

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


class BasisOutcome(Enum):
    """Single-qubit analyzer outcome: H/V (Z basis) or D/A (X basis)."""

    H = "H"
    V = "V"
    D = "D"
    A = "A"

    @property
    def sign(self) -> int:
        """Assigned dichotomic value: +1 for H and D, -1 for V and A."""
        return +1 if self in (BasisOutcome.H, BasisOutcome.D) else -1

    def ket(self) -> np.ndarray:
        """Return the outcome's state vector in the (H, V) basis."""
        vectors = {
            BasisOutcome.H: (1.0, 0.0),
            BasisOutcome.V: (0.0, 1.0),
            BasisOutcome.D: (_INV_SQRT2, _INV_SQRT2),
            BasisOutcome.A: (_INV_SQRT2, -_INV_SQRT2),
        }
        return np.array(vectors[self], dtype=complex)


def _as_outcome(outcome: BasisOutcome | str) -> BasisOutcome:
    if isinstance(outcome, BasisOutcome):
        return outcome
    try:
        return BasisOutcome(str(outcome).upper())
    except ValueError:
        raise ValueError(f"unknown basis outcome {outcome!r}; expected one of H, V, D, A") from None


def _readonly_complex(values, size: int, what: str) -> np.ndarray:
    arr = np.asarray(values, dtype=complex)
    if arr.shape != (size,):
        raise ValueError(f"{what} must have shape ({size},), got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} must be finite")
    norm2 = float(np.real(np.vdot(arr, arr)))
    if abs(norm2 - 1.0) > TOL_EXACT:
        raise ValueError(f"{what} must be normalized; |amplitudes|^2 = {norm2!r}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PureState:
    """Normalized single-qubit state with amplitudes (a_H, a_V)."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "amplitudes", _readonly_complex(self.amplitudes, 2, "PureState"))


@dataclass(frozen=True)
class JointState:
    """Normalized two-qubit state over (HH, HV, VH, VV), signal-major."""

    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "amplitudes", _readonly_complex(self.amplitudes, 4, "JointState"))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive-semidefinite matrix of dimension 2 or 4."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape not in ((2, 2), (4, 4)):
            raise ValueError(f"DensityOperator must be 2x2 or 4x4, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("DensityOperator must be finite")
        if np.max(np.abs(mat - mat.conj().T)) > TOL_EXACT:
            raise ValueError("DensityOperator must be Hermitian within 1e-12")
        trace = float(np.real(np.trace(mat)))
        if abs(trace - 1.0) > TOL_EXACT:
            raise ValueError(f"DensityOperator must have unit trace, got {trace!r}")
        if float(np.min(np.linalg.eigvalsh(mat))) < -1e-10:
            raise ValueError("DensityOperator must be positive semidefinite")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class MeterSetting:
    """Meter preparation gamma|D> + gamma_bar|A> with knowledge K = 2 gamma^2 - 1."""

    gamma: float       # in [1/sqrt(2), 1]
    gamma_bar: float   # sqrt(1 - gamma^2)
    knowledge: float   # K in [0, 1]

    def __post_init__(self) -> None:
        g, gb, k = self.gamma, self.gamma_bar, self.knowledge
        for name, value in (("gamma", g), ("gamma_bar", gb), ("knowledge", k)):
            if not math.isfinite(value):
                raise ValueError(f"MeterSetting.{name} must be finite")
        if g < 0.0 or gb < 0.0:
            raise ValueError("MeterSetting amplitudes must be nonnegative")
        if not 0.0 <= k <= 1.0:
            raise ValueError(f"knowledge must lie in [0, 1], got {k!r}")
        if abs(g * g + gb * gb - 1.0) > TOL_EXACT:
            raise ValueError("MeterSetting requires gamma^2 + gamma_bar^2 = 1 within 1e-12")
        if abs(2.0 * g * g - 1.0 - k) > TOL_EXACT:
            raise ValueError("MeterSetting requires K = 2 gamma^2 - 1 within 1e-12")


@dataclass(frozen=True)
class Observable:
    """Dichotomic polarization observable: 2x2 Hermitian with eigenvalues {+1, -1}."""

    matrix: np.ndarray
    label: str  # "S1" or "S2"

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        if mat.shape != (2, 2):
            raise ValueError("Observable matrix must be 2x2")
        if np.max(np.abs(mat - mat.conj().T)) > TOL_EXACT:
            raise ValueError("Observable must be Hermitian")
        eigs = np.sort(np.linalg.eigvalsh(mat))
        if abs(eigs[0] + 1.0) > TOL_EXACT or abs(eigs[1] - 1.0) > TOL_EXACT:
            raise ValueError("Observable eigenvalues must be exactly {+1, -1}")
        if self.label not in ("S1", "S2"):
            raise ValueError(f"Observable label must be S1 or S2, got {self.label!r}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)


def s1_observable() -> Observable:
    """Degree of polarization in the H/V basis: |H><H| - |V><V|."""
    return Observable(np.array([[1.0, 0.0], [0.0, -1.0]]), "S1")


def s2_observable() -> Observable:
    """Degree of polarization in the D/A basis: |D><D| - |A><A|."""
    return Observable(np.array([[0.0, 1.0], [1.0, 0.0]]), "S2")


def ket_signal(theta: float) -> PureState:
    """Signal preparation cos(theta/2)|H> + sin(theta/2)|V>.

    Parameters
    ----------
    theta : float
        Preparation angle in radians; any finite real value.
    """
    if not math.isfinite(theta):
        raise ValueError(f"theta must be finite, got {theta!r}")
    return PureState(np.array([math.cos(theta / 2.0), math.sin(theta / 2.0)]))


def from_knowledge(knowledge: float) -> MeterSetting:
    """Construct the meter setting realizing a given measurement strength K.

    Inverts K = 2 gamma^2 - 1: gamma = sqrt((1+K)/2), gamma_bar = sqrt((1-K)/2).
    K = 0 is constructible (the meter extracts nothing) but is rejected later
    by every estimator that divides by K.
    """
    if not math.isfinite(knowledge) or not 0.0 <= knowledge <= 1.0:
        raise ValueError(f"knowledge must lie in [0, 1], got {knowledge!r}")
    gamma = math.sqrt((1.0 + knowledge) / 2.0)
    gamma_bar = math.sqrt((1.0 - knowledge) / 2.0)
    return MeterSetting(gamma=gamma, gamma_bar=gamma_bar, knowledge=knowledge)


def meter_ket(setting: MeterSetting) -> PureState:
    """Meter preparation gamma|D> + gamma_bar|A>, expressed in the (H, V) basis."""
    g, gb = setting.gamma, setting.gamma_bar
    return PureState(np.array([(g + gb) * _INV_SQRT2, (g - gb) * _INV_SQRT2]))


def tensor(signal: PureState, meter: PureState) -> JointState:
    """Kronecker product with the signal qubit as the major index."""
    return JointState(np.kron(signal.amplitudes, meter.amplitudes))


def apply_cz(state: JointState) -> JointState:
    """Apply the controlled-sign gate: negate the VV amplitude."""
    amps = state.amplitudes.copy()
    amps[3] = -amps[3]
    return JointState(amps)


def _joint_projector(meter_outcome: BasisOutcome | str, signal_outcome: BasisOutcome | str) -> np.ndarray:
    m = _as_outcome(meter_outcome)
    s = _as_outcome(signal_outcome)
    if m not in (BasisOutcome.D, BasisOutcome.A) or s not in (BasisOutcome.D, BasisOutcome.A):
        raise ValueError("readout outcomes must be D or A")
    return np.kron(s.ket(), m.ket())


def measure_joint(
    state: JointState | DensityOperator,
    meter_outcome: BasisOutcome | str,
    signal_outcome: BasisOutcome | str,
) -> float:
    """Born-rule probability of a joint D/A meter and D/A signal outcome.

    Parameters
    ----------
    state : JointState or DensityOperator
        Two-qubit state, pure or mixed.
    meter_outcome, signal_outcome : BasisOutcome or str
        Analyzer outcomes, each D or A.
    """
    proj = _joint_projector(meter_outcome, signal_outcome)
    if isinstance(state, JointState):
        amp = np.vdot(proj, state.amplitudes)
        prob = float(np.real(amp * np.conj(amp)))
    elif isinstance(state, DensityOperator):
        if state.dim != 4:
            raise ValueError("measure_joint needs a two-qubit density operator")
        prob = float(np.real(np.vdot(proj, state.matrix @ proj)))
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    return min(max(prob, 0.0), 1.0)


def conditional_signal_state(
    state: JointState | DensityOperator,
    meter_outcome: BasisOutcome | str,
) -> tuple[PureState | DensityOperator, float]:
    """Project the meter onto a D/A outcome and renormalize the signal.

    Returns the conditional signal state together with the outcome
    probability. Raises :class:`DegenerateConditioningError` when that
    probability falls below 1e-15 (a true zero up to round-off).
    """
    m = _as_outcome(meter_outcome)
    if m not in (BasisOutcome.D, BasisOutcome.A):
        raise ValueError("meter readout outcome must be D or A")
    mk = m.ket()
    if isinstance(state, JointState):
        amps = state.amplitudes.reshape(2, 2)  # [signal, meter]
        signal = amps @ mk.conj()
        prob = float(np.real(np.vdot(signal, signal)))
        if prob <= MIN_CONDITION_PROB:
            raise DegenerateConditioningError(
                f"meter outcome {m.value} has probability {prob!r}; conditioning is degenerate"
            )
        return PureState(signal / math.sqrt(prob)), prob
    if isinstance(state, DensityOperator):
        if state.dim != 4:
            raise ValueError("conditional_signal_state needs a two-qubit density operator")
        rho = state.matrix.reshape(2, 2, 2, 2)  # [s, m, s', m']
        reduced = np.einsum("imjn,m,n->ij", rho, mk.conj(), mk)
        prob = float(np.real(np.trace(reduced)))
        if prob <= MIN_CONDITION_PROB:
            raise DegenerateConditioningError(
                f"meter outcome {m.value} has probability {prob!r}; conditioning is degenerate"
            )
        reduced = reduced / prob
        reduced = 0.5 * (reduced + reduced.conj().T)  # scrub round-off asymmetry
        return DensityOperator(reduced), prob
    raise TypeError(f"unsupported state type {type(state).__name__}")
