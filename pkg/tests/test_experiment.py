import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

import oracles
from lgi_weaksim import experiment, qcore
from lgi_weaksim.errors import DegenerateConditioningError, ZeroStrengthError

K_STRONG = 0.5445
K_WEAK = 0.1598
TWO_PI = 2.0 * math.pi

# frozen closed-form values
B_7PI4_STRONG = 1.3002002603279053
B_7PI4_WEAK = 1.4051268238787324
B_MAX_STRONG = 1.3051895456216311
B_MAX_WEAK = 1.4051562048398747
THETA_STAR_STRONG = 5.585252449226064
THETA_STAR_WEAK = 5.504253899432732
WV_5PI4_WEAK = -2.3415685845195924
INTERVAL_LO_STRONG = 4.887319591272542
INTERVAL_LO_WEAK = 4.725322491685878
WIDTH_STRONG = 1.3958657159070444
WIDTH_WEAK = 1.5578628154937082

INVARIANT_GRID = np.linspace(0.0, TWO_PI, 64)
INVARIANT_STRENGTHS = (0.05, 0.1598, 0.5445, 0.9, 1.0)

thetas = st.floats(0.0, TWO_PI)
# 1/k in the estimators amplifies float noise; k below ~1e-2 is covered by
# dedicated point tests with loosened tolerances instead.
strengths = st.floats(0.01, 1.0)
visibilities = st.floats(0.0, 1.0)


def config_for(theta, knowledge, mb_sign=+1, **kwargs):
    return experiment.ExperimentConfig(
        theta=theta, meter=qcore.from_knowledge(knowledge), mb_sign=mb_sign, **kwargs
    )


def test_run_at_zero_angle_splits_by_meter_weights():
    setting = qcore.from_knowledge(K_STRONG)
    table = experiment.run(config_for(0.0, K_STRONG))
    half_g2 = setting.gamma**2 / 2.0
    half_gb2 = setting.gamma_bar**2 / 2.0
    assert table.p_dd == pytest.approx(half_g2, abs=1e-12)
    assert table.p_da == pytest.approx(half_g2, abs=1e-12)
    assert table.p_ad == pytest.approx(half_gb2, abs=1e-12)
    assert table.p_aa == pytest.approx(half_gb2, abs=1e-12)


def test_run_strong_measurement_of_diagonal_is_uniform():
    table = experiment.run(config_for(math.pi / 2.0, 1.0))
    assert table.as_array() == pytest.approx([0.25] * 4, abs=1e-12)


def test_run_with_zero_strength_meter():
    # K=0 extracts nothing; run itself never divides by K
    table = experiment.run(config_for(math.pi / 2.0, 0.0))
    assert table.p_dd + table.p_da == pytest.approx(0.5, abs=1e-12)
    with pytest.raises(ZeroStrengthError):
        experiment.s1_mean(table, 0.0)


@given(thetas, strengths)
@settings(deadline=None)
def test_run_matches_brute_force_oracle(theta, knowledge):
    table = experiment.run(config_for(theta, knowledge))
    assert table.as_array() == pytest.approx(
        oracles.probability_table(theta, knowledge), abs=1e-13
    )


def test_estimator_identities_on_reference_grid():
    # s1 = cos, s2 = sin * sqrt(1-K^2), s1s2 = 0, each within 1e-10
    for knowledge in INVARIANT_STRENGTHS:
        for theta in INVARIANT_GRID:
            table = experiment.run(config_for(float(theta), knowledge))
            assert experiment.s1_mean(table, knowledge) == pytest.approx(
                oracles.s1_closed(theta), abs=1e-10
            )
            assert experiment.s2_mean(table) == pytest.approx(
                oracles.s2_closed(theta, knowledge), abs=1e-10
            )
            assert experiment.s1s2_correlator(table, knowledge) == pytest.approx(0.0, abs=1e-10)


def test_s1_mean_reference_points():
    for theta, expected in ((0.0, 1.0), (math.pi, -1.0), (math.pi / 3.0, 0.5)):
        table = experiment.run(config_for(theta, K_STRONG))
        assert experiment.s1_mean(table, K_STRONG) == pytest.approx(expected, abs=1e-12)


def test_s2_mean_visibility_factor():
    table = experiment.run(config_for(math.pi / 2.0, K_STRONG))
    assert experiment.s2_mean(table) == pytest.approx(0.8387608419567523, abs=1e-12)
    table = experiment.run(config_for(math.pi / 2.0, K_WEAK))
    assert experiment.s2_mean(table) == pytest.approx(0.987149411183535, abs=1e-12)


def test_s1s2_raw_variant_matches_k_variant_up_to_scaling():
    table = experiment.run(config_for(2.0, K_STRONG))
    raw = experiment.s1s2_correlator(table, K_STRONG, normalize_by_k=False)
    scaled = experiment.s1s2_correlator(table, K_STRONG, normalize_by_k=True)
    assert scaled == pytest.approx(raw / K_STRONG, abs=1e-15)


def test_lg_b_frozen_values():
    assert experiment.lg_b(config_for(7.0 * math.pi / 4.0, K_STRONG)).b == pytest.approx(
        B_7PI4_STRONG, abs=1e-12
    )
    assert experiment.lg_b(config_for(7.0 * math.pi / 4.0, K_WEAK)).b == pytest.approx(
        B_7PI4_WEAK, abs=1e-12
    )
    assert experiment.lg_b(config_for(math.pi / 4.0, K_STRONG, mb_sign=-1)).b == pytest.approx(
        -B_7PI4_STRONG, abs=1e-12
    )


def test_lg_b_boundary_and_weak_limit():
    assert experiment.lg_b(config_for(0.0, K_STRONG)).b == pytest.approx(1.0, abs=1e-12)
    nearly_free = experiment.lg_b(config_for(7.0 * math.pi / 4.0, 1e-6)).b
    assert nearly_free == pytest.approx(math.sqrt(2.0), abs=1e-9)


@given(thetas, strengths, st.sampled_from((+1, -1)))
@settings(deadline=None)
def test_lg_b_matches_closed_form(theta, knowledge, mb_sign):
    record = experiment.lg_b(config_for(theta, knowledge, mb_sign=mb_sign))
    assert record.b == pytest.approx(oracles.b_closed(theta, knowledge, mb_sign), abs=1e-12)
    assembled = mb_sign * record.s1_mean + mb_sign * record.s1s2_corr - record.s2_mean
    assert record.b == pytest.approx(assembled, abs=1e-12)


def test_weak_value_reference_points():
    assert experiment.weak_value(config_for(0.0, K_STRONG)).wv == pytest.approx(1.0, abs=1e-12)
    for knowledge in (K_WEAK, K_STRONG, 0.9):
        assert experiment.weak_value(config_for(math.pi / 2.0, knowledge)).wv == pytest.approx(
            0.0, abs=1e-12
        )
    assert experiment.weak_value(config_for(5.0 * math.pi / 4.0, K_WEAK)).wv == pytest.approx(
        WV_5PI4_WEAK, abs=1e-12
    )
    strange = experiment.weak_value(config_for(5.0 * math.pi / 4.0, 1e-6)).wv
    assert strange == pytest.approx(-(1.0 + math.sqrt(2.0)), abs=1e-8)


@given(thetas, strengths)
@settings(deadline=None)
def test_weak_value_closed_form_and_postselection(theta, knowledge):
    # keep away from the weak-limit pole where wv blows up
    assume(abs(theta - 3.0 * math.pi / 2.0) > 0.1)
    config = config_for(theta, knowledge)
    table = experiment.run(config)
    record = experiment.weak_value(config)
    assert record.postselection_probability == pytest.approx(
        table.p_dd + table.p_ad, abs=1e-12
    )
    assert record.wv == pytest.approx(oracles.wv_closed(theta, knowledge), abs=1e-9)


def test_weak_value_sign_convention_and_secondary_branch():
    config_plus = config_for(0.8, K_STRONG, mb_sign=+1)
    config_minus = config_for(0.8, K_STRONG, mb_sign=-1)
    assert experiment.weak_value(config_minus).wv == pytest.approx(
        -experiment.weak_value(config_plus).wv, abs=1e-12
    )
    table = experiment.run(config_plus)
    record_a = experiment.weak_value(config_plus, postselect="A")
    assert record_a.postselection_probability == pytest.approx(
        table.p_da + table.p_aa, abs=1e-12
    )
    with pytest.raises(ValueError):
        experiment.weak_value(config_plus, postselect="H")


def test_weak_value_degenerate_postselection_raises():
    # at K ~ 0 and theta = 3pi/2 the D branch carries ~K^2/4 of the weight
    with pytest.raises(DegenerateConditioningError):
        experiment.weak_value(config_for(3.0 * math.pi / 2.0, 1e-9))


def test_aav_limit_away_from_pole():
    for theta in np.linspace(0.0, TWO_PI, 113):
        if abs(theta - 3.0 * math.pi / 2.0) < 0.1:
            continue
        wv = experiment.weak_value(config_for(float(theta), 1e-6)).wv
        assert wv == pytest.approx(oracles.aav_limit(theta), abs=1e-4)


def test_one_to_one_violation_correspondence():
    grid = experiment.ThetaGrid(0.0, TWO_PI, 64)
    for knowledge in INVARIANT_STRENGTHS:
        plus = experiment.theta_sweep(knowledge, +1, grid=grid)
        minus = experiment.theta_sweep(knowledge, -1, grid=grid)
        for (_, lg_p, wv_p), (_, lg_m, wv_m) in zip(plus, minus):
            if abs(lg_p.b - 1.0) > 1e-9:
                assert (lg_p.b > 1.0) == (wv_p.wv > 1.0)
            if abs(lg_m.b - 1.0) > 1e-9:
                assert (lg_m.b > 1.0) == (wv_m.wv < -1.0)


@given(thetas, strengths)
@settings(deadline=None)
def test_sign_symmetry(theta, knowledge):
    flipped = experiment.lg_b(config_for(theta, knowledge, mb_sign=-1))
    assert flipped.b == pytest.approx(
        -math.cos(theta) - math.sin(theta) * oracles.visibility_factor(knowledge), abs=1e-12
    )


def test_theta_grid_arithmetic_and_validation():
    assert experiment.ThetaGrid(0.0, TWO_PI, 3).values() == pytest.approx(
        [0.0, math.pi, TWO_PI]
    )
    with pytest.raises(ValueError):
        experiment.ThetaGrid(0.0, TWO_PI, 1)
    with pytest.raises(ValueError):
        experiment.ThetaGrid(0.0, math.inf, 4)


def test_gate_model_validation():
    with pytest.raises(ValueError):
        experiment.GateModel(kind="lossy")
    with pytest.raises(ValueError):
        experiment.GateModel(kind="ideal", visibility=0.5)
    with pytest.raises(ValueError):
        experiment.GateModel(kind="ppbs", visibility=1.5)
    assert experiment.GateModel(kind="ppbs").visibility == 1.0


def test_experiment_config_validation():
    meter = qcore.from_knowledge(K_STRONG)
    with pytest.raises(ValueError):
        experiment.ExperimentConfig(theta=math.nan, meter=meter)
    with pytest.raises(ValueError):
        experiment.ExperimentConfig(theta=0.1, meter=meter, mb_sign=2)
    with pytest.raises(ValueError):
        experiment.ExperimentConfig(theta=0.1, meter=meter, correlator_norm="both")


def test_theta_sweep_rows_match_scalar_entry_points():
    grid = experiment.ThetaGrid(0.0, TWO_PI, 17)
    for gate in (experiment.IDEAL_GATE, experiment.GateModel(kind="ppbs", visibility=0.6)):
        for theta, lg, wv in experiment.theta_sweep(K_STRONG, -1, gate, grid):
            config = config_for(theta, K_STRONG, mb_sign=-1, gate_model=gate)
            assert lg.b == pytest.approx(experiment.lg_b(config).b, abs=1e-13)
            # sweep rows carry the S1 weak value regardless of mb_sign
            plus = config_for(theta, K_STRONG, mb_sign=+1, gate_model=gate)
            assert wv.wv == pytest.approx(experiment.weak_value(plus).wv, abs=1e-13)


def test_theta_sweep_contains_violation_at_moderate_strength():
    rows = experiment.theta_sweep(K_STRONG)
    assert max(lg.b for _, lg, _ in rows) > 1.0


def test_theta_sweep_violation_nearly_closes_at_full_strength():
    rows = experiment.theta_sweep(0.9999)
    peak = max(lg.b for _, lg, _ in rows)
    assert 1.0 < peak < 1.0002


def test_theta_sweep_marks_degenerate_postselection_with_nan():
    grid = experiment.ThetaGrid(3.0 * math.pi / 2.0, 3.0 * math.pi / 2.0 + 1.0, 2)
    rows = experiment.theta_sweep(1e-9, grid=grid)
    assert math.isnan(rows[0][2].wv)
    assert not math.isnan(rows[1][2].wv)


def test_b_max_frozen_and_closed_form():
    theta_star, b_star = experiment.b_max(K_STRONG)
    assert b_star == pytest.approx(B_MAX_STRONG, abs=1e-9)
    assert theta_star == pytest.approx(THETA_STAR_STRONG, abs=1e-7)
    theta_star, b_star = experiment.b_max(K_WEAK)
    assert b_star == pytest.approx(B_MAX_WEAK, abs=1e-9)
    assert theta_star == pytest.approx(THETA_STAR_WEAK, abs=1e-7)
    assert experiment.b_max(1.0)[1] == pytest.approx(1.0, abs=1e-9)


@given(st.floats(0.05, 1.0))
@settings(deadline=None, max_examples=25)
def test_b_max_matches_ceiling_everywhere(knowledge):
    _, b_star = experiment.b_max(knowledge)
    assert b_star == pytest.approx(oracles.b_ceiling(knowledge), abs=1e-9)


def test_b_max_exceeds_classical_bound_below_full_strength():
    for knowledge in (0.05, 0.3, 0.7, 0.99):
        assert experiment.b_max(knowledge)[1] > 1.0


def test_b_max_strictly_decreasing_in_strength():
    peaks = [experiment.b_max(k)[1] for k in (0.05, 0.16, 0.3, 0.54, 0.8, 1.0)]
    assert all(b > a for a, b in zip(peaks[1:], peaks))


def test_violation_interval_frozen_endpoints():
    lo, hi = experiment.violation_interval(K_STRONG)
    assert lo == pytest.approx(INTERVAL_LO_STRONG, abs=1e-8)
    assert hi == pytest.approx(TWO_PI, abs=1e-8)
    assert hi - lo == pytest.approx(WIDTH_STRONG, abs=1e-8)
    lo, hi = experiment.violation_interval(K_WEAK)
    assert lo == pytest.approx(INTERVAL_LO_WEAK, abs=1e-8)
    assert hi - lo == pytest.approx(WIDTH_WEAK, abs=1e-8)


def test_violation_interval_limits():
    assert experiment.violation_interval(1.0) is None
    lo, hi = experiment.violation_interval(1e-6)
    assert hi - lo == pytest.approx(math.pi / 2.0, abs=1e-6)
    # widths follow 2*arctan(sqrt(1-K^2)), so they shrink with strength
    assert (
        experiment.violation_interval(K_WEAK)[1] - experiment.violation_interval(K_WEAK)[0]
        > experiment.violation_interval(K_STRONG)[1] - experiment.violation_interval(K_STRONG)[0]
    )


def test_violation_interval_closed_under_fully_mixed_gate():
    gate = experiment.GateModel(kind="ppbs", visibility=0.0)
    assert experiment.violation_interval(K_STRONG, gate) is None


@given(thetas, strengths, visibilities, st.sampled_from((+1, -1)))
@settings(deadline=None)
def test_ppbs_gate_matches_dense_channel_oracle(theta, knowledge, xi, mb_sign):
    gate = experiment.GateModel(kind="ppbs", visibility=xi)
    config = config_for(theta, knowledge, mb_sign=mb_sign, gate_model=gate)
    table = experiment.run(config)
    assert table.as_array() == pytest.approx(
        oracles.ppbs_probability_table(theta, knowledge, xi), abs=1e-12
    )
    assert experiment.lg_b(config).b == pytest.approx(
        oracles.ppbs_b_closed(theta, knowledge, xi, mb_sign), abs=1e-10
    )


def test_correlator_norms_diverge_under_imperfect_gate():
    gate = experiment.GateModel(kind="ppbs", visibility=0.5)
    with_k = experiment.lg_b(config_for(2.0, K_STRONG, gate_model=gate))
    raw = experiment.lg_b(config_for(2.0, K_STRONG, gate_model=gate, correlator_norm="raw"))
    assert abs(with_k.b - raw.b) > 1e-3
    assert raw.b == pytest.approx(raw.s1_mean + raw.s1s2_corr - raw.s2_mean, abs=1e-12)


def test_lg_record_rejects_inconsistent_fields():
    with pytest.raises(ValueError):
        experiment.LGRecord(s1_mean=1.0, s2_mean=0.0, s1s2_corr=0.0, b=0.5, mb_sign=+1)
