"""Leggett-Garg protocol engine.

One run prepares the signal at angle theta, couples it to the meter through
the controlled-sign interaction (ideal unitary or the PPBS gate model with a
photon-visibility parameter), reads the meter out in the D/A basis (the
variable-strength S1 measurement) and the signal in the D/A basis (the
projective S2 measurement). All estimators below are functions of the four
joint outcome probabilities.

Conventions: the three-time correlator is

    B = mb_sign * <S1> + mb_sign * <S1 S2> - <S2>

with the preparation assigned the deterministic value 1, and the weak value
is the K-calibrated meter asymmetry conditioned on post-selecting the signal
in D (post-selecting on A is available as a secondary output).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize

from . import optics, qcore
from .errors import DegenerateConditioningError, ZeroStrengthError

# Estimators divide by K; below this guard the calibration is undefined.
MIN_KNOWLEDGE = 1e-9
# Post-selection probabilities below this raise a degenerate-conditioning error.
MIN_POSTSELECTION = 1e-12

_TWO_PI = 2.0 * math.pi
_SEARCH_GRID = 1024          # coarse grid for b_max / violation_interval
_REFINE_XTOL = 1e-10         # golden-section / bisection angular resolution


@dataclass(frozen=True)
class GateModel:
    """Gate selection: exact controlled-sign unitary or the PPBS model."""

    kind: str = "ideal"            # "ideal" or "ppbs"
    visibility: float | None = None  # photon indistinguishability, ppbs only

    def __post_init__(self) -> None:
        if self.kind not in ("ideal", "ppbs"):
            raise ValueError(f"gate model kind must be 'ideal' or 'ppbs', got {self.kind!r}")
        if self.kind == "ideal":
            if self.visibility is not None:
                raise ValueError("visibility applies only to the ppbs gate model")
        else:
            vis = 1.0 if self.visibility is None else float(self.visibility)
            if not 0.0 <= vis <= 1.0:
                raise ValueError(f"visibility must lie in [0, 1], got {vis!r}")
            object.__setattr__(self, "visibility", vis)


IDEAL_GATE = GateModel()


@dataclass(frozen=True)
class ExperimentConfig:
    """One protocol setting: preparation angle, meter strength, conventions."""

    theta: float
    meter: qcore.MeterSetting
    mb_sign: int = +1                 # Mb = +S1 or -S1
    gate_model: GateModel = IDEAL_GATE
    correlator_norm: str = "k"        # "k": divide <S1 S2> by K; "raw": do not

    def __post_init__(self) -> None:
        if not math.isfinite(self.theta):
            raise ValueError(f"theta must be finite, got {self.theta!r}")
        if self.mb_sign not in (+1, -1):
            raise ValueError(f"mb_sign must be +1 or -1, got {self.mb_sign!r}")
        if self.correlator_norm not in ("k", "raw"):
            raise ValueError(f"correlator_norm must be 'k' or 'raw', got {self.correlator_norm!r}")


@dataclass(frozen=True)
class ProbabilityTable:
    """Joint outcome probabilities; first index meter D/A, second signal D/A."""

    p_dd: float
    p_da: float
    p_ad: float
    p_aa: float

    def __post_init__(self) -> None:
        values = self.as_array()
        if np.any(values < -1e-12) or np.any(values > 1.0 + 1e-12):
            raise ValueError(f"probabilities must lie in [0, 1], got {values!r}")
        if abs(float(values.sum()) - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {values.sum()!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_dd, self.p_da, self.p_ad, self.p_aa])

    @property
    def postselect_d(self) -> float:
        """Probability of finding the signal in D (the post-selection branch)."""
        return self.p_dd + self.p_ad

    @property
    def postselect_a(self) -> float:
        return self.p_da + self.p_aa


@dataclass(frozen=True)
class LGRecord:
    """The three correlator terms and the assembled B value."""

    s1_mean: float
    s2_mean: float
    s1s2_corr: float
    b: float
    mb_sign: int

    def __post_init__(self) -> None:
        expected = self.mb_sign * self.s1_mean + self.mb_sign * self.s1s2_corr - self.s2_mean
        if abs(self.b - expected) > 1e-12:
            raise ValueError("LGRecord fields violate b = mb*s1 + mb*s1s2 - s2")


@dataclass(frozen=True)
class WeakValueRecord:
    """Post-selected weak value and the probability of the selected branch.

    wv is NaN only for sweep rows whose post-selection probability fell
    below the degeneracy guard; the scalar entry point raises instead.
    """

    wv: float
    postselection_probability: float

    def __post_init__(self) -> None:
        if not -1e-12 <= self.postselection_probability <= 1.0 + 1e-12:
            raise ValueError("postselection probability must lie in [0, 1]")


@dataclass(frozen=True)
class ThetaGrid:
    """Uniform inclusive angle grid."""

    start: float
    stop: float
    steps: int

    def __post_init__(self) -> None:
        if not (math.isfinite(self.start) and math.isfinite(self.stop)):
            raise ValueError("grid endpoints must be finite")
        if self.steps < 2:
            raise ValueError(f"grid needs at least 2 steps, got {self.steps!r}")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.steps)


FULL_TURN = ThetaGrid(0.0, _TWO_PI, 256)


def _require_strength(knowledge: float) -> float:
    if knowledge < MIN_KNOWLEDGE:
        raise ZeroStrengthError(
            f"measurement strength K={knowledge!r} is below {MIN_KNOWLEDGE}; "
            "the 1/K calibration is undefined"
        )
    return knowledge


@lru_cache(maxsize=16)
def _gate_map(visibility: float) -> optics.EffectiveMap:
    return optics.effective_map(visibility)


def _projector_rows() -> np.ndarray:
    d = qcore.BasisOutcome.D.ket()
    a = qcore.BasisOutcome.A.ket()
    # rows ordered (dd, da, ad, aa) = (meter, signal); vectors are signal-major
    # and real, so the Born rule below needs no conjugation
    return np.stack([np.kron(s, m) for m, s in ((d, d), (d, a), (a, d), (a, a))]).real


_PROJ = _projector_rows()


def _probability_matrix(thetas: np.ndarray, meter: qcore.MeterSetting, gate_model: GateModel) -> np.ndarray:
    """Vectorized engine: rows of (p_dd, p_da, p_ad, p_aa) for an angle array.

    Must agree with :func:`run` pointwise; the scalar path goes through the
    qcore objects, this one through the same algebra in batched form.
    """
    thetas = np.asarray(thetas, dtype=float)
    c = np.cos(thetas / 2.0)
    s = np.sin(thetas / 2.0)
    mu = qcore.meter_ket(meter).amplitudes.real
    psi = np.stack([c * mu[0], c * mu[1], s * mu[0], s * mu[1]], axis=1)
    if gate_model.kind == "ideal":
        psi[:, 3] = -psi[:, 3]
        probs = (psi @ _PROJ.T) ** 2
    else:
        sup = _gate_map(gate_model.visibility).superoperator
        rho = psi[:, :, None] * psi[:, None, :]
        out = (rho.reshape(-1, 16) @ sup.T).reshape(-1, 4, 4)
        traces = np.real(np.einsum("nii->n", out))
        out = out / traces[:, None, None]
        probs = np.real(np.einsum("ki,nij,kj->nk", _PROJ, out, _PROJ))
    return np.clip(probs, 0.0, 1.0)


def run(config: ExperimentConfig) -> ProbabilityTable:
    """Exact joint outcome probabilities for one protocol setting."""
    joint = qcore.tensor(qcore.ket_signal(config.theta), qcore.meter_ket(config.meter))
    state: qcore.JointState | qcore.DensityOperator
    if config.gate_model.kind == "ideal":
        state = qcore.apply_cz(joint)
    else:
        emap = _gate_map(config.gate_model.visibility)
        rho_out = emap.apply(np.outer(joint.amplitudes, joint.amplitudes.conj()))
        success = float(np.real(np.trace(rho_out)))
        rho_out = rho_out / success
        state = qcore.DensityOperator(0.5 * (rho_out + rho_out.conj().T))
    return ProbabilityTable(
        p_dd=qcore.measure_joint(state, "D", "D"),
        p_da=qcore.measure_joint(state, "D", "A"),
        p_ad=qcore.measure_joint(state, "A", "D"),
        p_aa=qcore.measure_joint(state, "A", "A"),
    )


def s1_mean(table: ProbabilityTable, knowledge: float) -> float:
    """Calibrated weak S1 estimate (P(D) - P(A))/K from the meter marginal."""
    _require_strength(knowledge)
    return ((table.p_dd + table.p_da) - (table.p_ad + table.p_aa)) / knowledge


def s2_mean(table: ProbabilityTable) -> float:
    """Projective S2 expectation from the signal marginal."""
    return (table.p_dd + table.p_ad) - (table.p_da + table.p_aa)


def s1s2_correlator(table: ProbabilityTable, knowledge: float, normalize_by_k: bool = True) -> float:
    """Product correlator of the meter and signal readouts.

    With ``normalize_by_k`` the +-1 product is divided by K, matching the
    calibration of the weak S1 estimator; the raw variant is kept because
    the two differ under imperfect gates and finite counts (for the ideal
    gate both vanish identically).
    """
    raw = table.p_dd - table.p_da - table.p_ad + table.p_aa
    if not normalize_by_k:
        return raw
    _require_strength(knowledge)
    return raw / knowledge


def lg_b(config: ExperimentConfig) -> LGRecord:
    """Assemble the generalized Leggett-Garg correlator for one setting."""
    knowledge = _require_strength(config.meter.knowledge)
    table = run(config)
    s1 = s1_mean(table, knowledge)
    s2 = s2_mean(table)
    s1s2 = s1s2_correlator(table, knowledge, normalize_by_k=config.correlator_norm == "k")
    b = config.mb_sign * s1 + config.mb_sign * s1s2 - s2
    return LGRecord(s1_mean=s1, s2_mean=s2, s1s2_corr=s1s2, b=b, mb_sign=config.mb_sign)


def weak_value(config: ExperimentConfig, postselect: str = "D") -> WeakValueRecord:
    """K-calibrated weak value conditioned on the signal post-selection.

    ``postselect="D"`` is the protocol's branch; "A" is exposed for
    completeness. The configured mb_sign multiplies the weak value.
    """
    knowledge = _require_strength(config.meter.knowledge)
    table = run(config)
    if postselect == "D":
        numerator, probability = table.p_dd - table.p_ad, table.postselect_d
    elif postselect == "A":
        numerator, probability = table.p_da - table.p_aa, table.postselect_a
    else:
        raise ValueError(f"postselect must be 'D' or 'A', got {postselect!r}")
    if probability < MIN_POSTSELECTION:
        raise DegenerateConditioningError(
            f"post-selection probability {probability!r} below {MIN_POSTSELECTION}"
        )
    wv = config.mb_sign * numerator / (knowledge * probability)
    return WeakValueRecord(wv=wv, postselection_probability=probability)


def _records_from_rows(
    probs: np.ndarray, knowledge: float, mb_sign: int, correlator_norm: str
) -> list[tuple[LGRecord, WeakValueRecord]]:
    p_dd, p_da, p_ad, p_aa = (probs[:, i] for i in range(4))
    s1 = ((p_dd + p_da) - (p_ad + p_aa)) / knowledge
    s2 = (p_dd + p_ad) - (p_da + p_aa)
    raw = p_dd - p_da - p_ad + p_aa
    s1s2 = raw / knowledge if correlator_norm == "k" else raw
    b = mb_sign * s1 + mb_sign * s1s2 - s2
    psel = p_dd + p_ad
    # sweep rows report the weak value of S1 itself; the Mb sign enters b only
    with np.errstate(divide="ignore", invalid="ignore"):
        wv = np.where(psel >= MIN_POSTSELECTION, (p_dd - p_ad) / (knowledge * psel), np.nan)
    return [
        (
            LGRecord(s1_mean=float(s1[i]), s2_mean=float(s2[i]), s1s2_corr=float(s1s2[i]),
                     b=float(b[i]), mb_sign=mb_sign),
            WeakValueRecord(wv=float(wv[i]), postselection_probability=float(psel[i])),
        )
        for i in range(probs.shape[0])
    ]


def theta_sweep(
    knowledge: float,
    mb_sign: int = +1,
    gate_model: GateModel = IDEAL_GATE,
    grid: ThetaGrid = FULL_TURN,
    correlator_norm: str = "k",
) -> list[tuple[float, LGRecord, WeakValueRecord]]:
    """Evaluate the correlator and weak value on a uniform angle grid.

    mb_sign selects the correlator convention for the LG records; the
    weak-value records always report the S1 weak value itself, so a single
    column pairs with either sign (B(+S1) > 1 where wv > 1, B(-S1) > 1
    where wv < -1). Rows with degenerate post-selection carry wv = NaN.
    """
    _require_strength(knowledge)
    meter = qcore.from_knowledge(knowledge)
    thetas = grid.values()
    probs = _probability_matrix(thetas, meter, gate_model)
    records = _records_from_rows(probs, knowledge, mb_sign, correlator_norm)
    return [(float(t), lg, wv) for t, (lg, wv) in zip(thetas, records)]


def _b_of_theta(thetas: np.ndarray, meter: qcore.MeterSetting, gate_model: GateModel, mb_sign: int) -> np.ndarray:
    probs = _probability_matrix(np.atleast_1d(thetas), meter, gate_model)
    p_dd, p_da, p_ad, p_aa = (probs[:, i] for i in range(4))
    s1 = ((p_dd + p_da) - (p_ad + p_aa)) / meter.knowledge
    s2 = (p_dd + p_ad) - (p_da + p_aa)
    s1s2 = (p_dd - p_da - p_ad + p_aa) / meter.knowledge
    return mb_sign * (s1 + s1s2) - s2


def _golden_section_max(f, lo: float, hi: float, xtol: float) -> tuple[float, float]:
    # unimodal on [lo, hi] by construction (bracket around a coarse-grid peak)
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > xtol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = f(d)
    mid = 0.5 * (a + b)
    return mid, f(mid)


def b_max(knowledge: float, gate_model: GateModel = IDEAL_GATE, mb_sign: int = +1) -> tuple[float, float]:
    """Maximize B over theta: coarse 1024-point grid, then golden-section.

    Returns (theta_star, b_star) with theta_star in [0, 2 pi). For the ideal
    gate b_star equals sqrt(2 - K^2) up to the angular refinement tolerance.
    """
    _require_strength(knowledge)
    meter = qcore.from_knowledge(knowledge)
    thetas = np.linspace(0.0, _TWO_PI, _SEARCH_GRID, endpoint=False)
    values = _b_of_theta(thetas, meter, gate_model, mb_sign)
    peak = int(np.argmax(values))
    spacing = _TWO_PI / _SEARCH_GRID

    def scalar_b(theta: float) -> float:
        return float(_b_of_theta(np.array([theta]), meter, gate_model, mb_sign)[0])

    theta_star, b_star = _golden_section_max(
        scalar_b, thetas[peak] - spacing, thetas[peak] + spacing, _REFINE_XTOL
    )
    return theta_star % _TWO_PI, b_star


def violation_interval(
    knowledge: float, gate_model: GateModel = IDEAL_GATE, mb_sign: int = +1
) -> tuple[float, float] | None:
    """Maximal theta interval (mod 2 pi) with B > 1.

    Returns (theta_lo, theta_hi) with theta_lo in [0, 2 pi) and
    theta_hi - theta_lo the interval width (theta_hi may exceed 2 pi when
    the arc wraps through zero), or None when no violation exists. Endpoints
    are located by bisection to 1e-10.
    """
    _require_strength(knowledge)
    meter = qcore.from_knowledge(knowledge)
    thetas = np.linspace(0.0, _TWO_PI, _SEARCH_GRID, endpoint=False)
    values = _b_of_theta(thetas, meter, gate_model, mb_sign)
    peak = int(np.argmax(values))
    spacing = _TWO_PI / _SEARCH_GRID
    if _golden_section_max(
        lambda t: float(_b_of_theta(np.array([t]), meter, gate_model, mb_sign)[0]),
        thetas[peak] - spacing,
        thetas[peak] + spacing,
        _REFINE_XTOL,
    )[1] <= 1.0 + 1e-12:
        return None

    def excess(theta: float) -> float:
        return float(_b_of_theta(np.array([theta % _TWO_PI]), meter, gate_model, mb_sign)[0]) - 1.0

    def walk(direction: int) -> float:
        # march from the grid peak until B <= 1, then bisect the crossing
        for step in range(1, _SEARCH_GRID):
            inside = thetas[peak] + direction * (step - 1) * spacing
            outside = thetas[peak] + direction * step * spacing
            if values[(peak + direction * step) % _SEARCH_GRID] <= 1.0:
                f_out = excess(outside)
                if f_out == 0.0:
                    return outside
                lo, hi = sorted((inside, outside))
                return float(optimize.bisect(excess, lo, hi, xtol=_REFINE_XTOL))
        raise RuntimeError("no B = 1 crossing found; grid walk exhausted")

    theta_lo = walk(-1)
    theta_hi = walk(+1)
    width = theta_hi - theta_lo
    theta_lo %= _TWO_PI
    return theta_lo, theta_lo + width
