from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest

from timebin_qkd.analysis import (
    AnalyticChannel,
    ProbabilityMatrix,
    binary_entropy,
    conditional_probabilities,
    decoy_bounds,
    fidelities,
    golden_section_max,
    optimize_decoy_intensity,
    qber,
    secret_key_rate,
    secret_key_rate_from_values,
)
from timebin_qkd.detection import SessionCounts
from timebin_qkd.errors import InvalidInputError, NoDataError
from timebin_qkd.qubit import Basis
from timebin_qkd.source import IntensityClass, SourceConfig


def _counts_with_rows(rows, pulses=1000):
    """Counts tensor with the four signal-class rows set to 4-vectors."""
    c = SessionCounts.zeros()
    c.pulses_sent[0] = pulses
    for r, row in enumerate(rows):
        alpha, i = divmod(r, 2)
        c.counts[0, alpha, i] = np.asarray(row, dtype=np.int64).reshape(2, 2)
    return c


def test_binary_entropy_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    # frozen reference points
    assert binary_entropy(0.008) == pytest.approx(0.06722154475830686, abs=1e-14)
    assert binary_entropy(0.012) == pytest.approx(0.09377790984777166, abs=1e-14)
    rng = np.random.default_rng(55)
    for x in rng.uniform(0.0, 1.0, size=200):
        assert binary_entropy(float(x)) == pytest.approx(
            binary_entropy(float(1.0 - x)), abs=1e-12
        )
    with pytest.raises(InvalidInputError):
        binary_entropy(-0.01)
    with pytest.raises(InvalidInputError):
        binary_entropy(1.01)


def test_probability_matrix_rows_are_exact_rationals():
    counts = _counts_with_rows(
        [
            [30, 2, 6, 2],
            [1, 39, 5, 5],
            [4, 4, 70, 2],
            [3, 3, 1, 69],
        ]
    )
    m = ProbabilityMatrix.from_counts(counts)
    assert m.prob(Basis.PHASE, 0, Basis.PHASE, 0) == Fraction(30, 40)
    assert m.prob(Basis.TIME, 0, Basis.TIME, 0) == Fraction(70, 80)
    for row in m.values:
        assert sum(row) == 1  # exact
    arr = m.as_array()
    assert arr.shape == (4, 4)
    assert np.allclose(arr.sum(axis=1), 1.0)


def test_probability_matrix_names_the_empty_row():
    counts = _counts_with_rows(
        [
            [10, 0, 0, 0],
            [0, 0, 0, 0],  # phase bit 1 starved
            [0, 0, 10, 0],
            [0, 0, 0, 10],
        ]
    )
    with pytest.raises(NoDataError, match="phase:1"):
        ProbabilityMatrix.from_counts(counts)


def test_fidelities_and_qber_on_known_counts():
    counts = _counts_with_rows(
        [
            [96, 4, 10, 10],
            [2, 98, 10, 10],
            [10, 10, 99, 1],
            [10, 10, 3, 97],
        ]
    )
    f = fidelities(counts)
    assert f[(Basis.PHASE, 0)] == pytest.approx(0.96)
    assert f[(Basis.PHASE, 1)] == pytest.approx(0.98)
    assert f[(Basis.TIME, 0)] == pytest.approx(0.99)
    assert f[(Basis.TIME, 1)] == pytest.approx(0.97)
    # errors 4+2+1+3 over matched 100*4
    assert qber(counts) == pytest.approx(10.0 / 400.0)
    p = conditional_probabilities(counts, IntensityClass.SIGNAL, Basis.PHASE, 0, Basis.TIME)
    assert p == (0.5, 0.5)
    with pytest.raises(NoDataError):
        qber(counts, IntensityClass.DECOY)


def test_decoy_bounds_hand_computed_case():
    """Fully worked numerical example, done with plain floats here and
    frozen; guards the algebra against sign and normalization slips."""
    mu, nu, y0 = 0.8, 0.1, 1e-5
    ch = AnalyticChannel(eta=0.0347, y0=y0, e_detector=0.008)
    q_mu, e_mu = ch.gain(mu), ch.error_rate(mu)
    q_nu, e_nu = ch.gain(nu), ch.error_rate(nu)
    est = decoy_bounds(q_mu, e_mu, q_nu, e_nu, mu, nu, y0)

    coeff = mu / (mu * nu - nu * nu)
    y1_by_hand = coeff * (
        q_nu * math.exp(nu)
        - q_mu * math.exp(mu) * nu * nu / (mu * mu)
        - (mu * mu - nu * nu) / (mu * mu) * y0
    )
    assert est.y1_lower == pytest.approx(y1_by_hand, rel=1e-12)
    e1_by_hand = (e_nu * q_nu * math.exp(nu) - 0.5 * y0) / (y1_by_hand * nu)
    assert est.e1_upper == pytest.approx(e1_by_hand, rel=1e-12)
    assert est.q1_lower == pytest.approx(y1_by_hand * mu * math.exp(-mu), rel=1e-12)
    assert est.flags == ()


def test_decoy_bounds_are_sound_across_channels():
    rng = np.random.default_rng(1234)
    for _ in range(300):
        eta = float(10.0 ** rng.uniform(-3.0, -0.4))
        y0 = float(rng.uniform(0.0, 1e-4))
        ed = float(rng.uniform(0.0, 0.05))
        mu = float(rng.uniform(0.3, 1.0))
        nu = float(rng.uniform(0.02, 0.6 * mu))
        ch = AnalyticChannel(eta=eta, y0=y0, e_detector=ed)
        est = decoy_bounds(
            ch.gain(mu), ch.error_rate(mu), ch.gain(nu), ch.error_rate(nu), mu, nu, y0
        )
        y1_true = ch.yield_n(1)
        e1_true = ch.error_yield_n(1) / y1_true
        assert est.y1_lower <= y1_true + 1e-9
        assert est.e1_upper >= e1_true - 1e-9


def test_decoy_bound_tightness_at_operating_loss():
    y0 = 1.6e-7
    ch = AnalyticChannel(eta=0.03507518739525679, y0=y0, e_detector=0.008)
    est = decoy_bounds(
        ch.gain(0.8), ch.error_rate(0.8), ch.gain(0.1), ch.error_rate(0.1), 0.8, 0.1, y0
    )
    assert est.y1_lower / ch.yield_n(1) > 0.9


def test_decoy_bounds_validation_and_flags():
    with pytest.raises(InvalidInputError):
        decoy_bounds(0.03, 0.01, 0.004, 0.01, 0.8, 0.0, 0.0)  # vacuum decoy
    with pytest.raises(InvalidInputError):
        decoy_bounds(0.03, 0.01, 0.004, 0.01, 0.1, 0.8, 0.0)  # nu > mu
    with pytest.raises(InvalidInputError):
        decoy_bounds(1.5, 0.01, 0.004, 0.01, 0.8, 0.1, 0.0)

    # decoy gain consistent with zero single-photon yield
    est = decoy_bounds(0.5, 0.01, 1e-6, 0.5, 0.8, 0.1, 0.0)
    assert est.y1_lower == 0.0
    assert "no-single-photon-signal" in est.flags
    assert est.e1_upper == 1.0

    # tiny yield with a large decoy error rate pushes e1 past 1
    est = decoy_bounds(0.011, 0.01, 0.0015, 0.5, 0.8, 0.1, 0.0)
    if est.y1_lower > 0.0:
        assert "e1-clamped-one" in est.flags or est.e1_upper <= 1.0


def test_key_rate_reproduces_hand_formula():
    mu, nu, y0 = 0.8, 0.1, 1.6e-7
    ch = AnalyticChannel(eta=0.03507518739525679, y0=y0, e_detector=0.008)
    report = ch.rate(mu, nu, 80e6)
    est = decoy_bounds(
        ch.gain(mu), ch.error_rate(mu), ch.gain(nu), ch.error_rate(nu), mu, nu, y0
    )
    by_hand = 0.5 * (
        -ch.gain(mu) * 1.22 * binary_entropy(ch.error_rate(mu))
        + est.q1_lower * (1.0 - binary_entropy(est.e1_upper))
    )
    assert report.r_per_pulse == pytest.approx(by_hand, rel=1e-12)
    assert report.r_bps == pytest.approx(by_hand * 80e6, rel=1e-12)
    # operating-point rate lands in the expected band
    assert 0.272e6 <= report.r_bps <= 0.408e6


def test_key_rate_clamps_to_zero_when_noisy():
    report = secret_key_rate_from_values(
        0.03, 0.11, 0.004, 0.11, 1e-5, 0.8, 0.1, 80e6
    )
    assert report.r_per_pulse == 0.0
    assert "rate-clamped-zero" in report.flags


def test_report_dict_keys_are_stable():
    ch = AnalyticChannel(eta=0.03, y0=1e-6, e_detector=0.008)
    d = ch.rate(0.8, 0.1, 80e6).to_dict()
    assert set(d) == {
        "Q_mu", "E_mu", "H2_E_mu", "Q_nu", "E_nu", "Y_0", "Y_1", "e_1", "Q_1",
        "mu", "nu", "f_rep_Hz", "f_EC", "sifting_factor", "R_per_pulse",
        "R_bps", "flags",
    }
    assert d["f_rep_Hz"] == 80e6


def test_secret_key_rate_from_counts_requires_vacuum_data():
    counts = _counts_with_rows(
        [[96, 4, 10, 10], [2, 98, 10, 10], [10, 10, 99, 1], [10, 10, 3, 97]]
    )
    # some decoy-class events so the decoy gain is defined
    counts.pulses_sent[1] = 1000
    counts.counts[1, 0, 0, 0, 0] = 12
    counts.counts[1, 1, 0, 1, 0] = 14
    with pytest.raises(NoDataError):
        secret_key_rate(counts, SourceConfig())
    counts.pulses_sent[2] = 1000
    report = secret_key_rate(counts, SourceConfig())
    assert report.y0 == 0.0
    assert report.q_mu == pytest.approx(counts.gain(IntensityClass.SIGNAL))


def test_analytic_channel_limits():
    ch = AnalyticChannel(eta=0.05, y0=1e-5, e_detector=0.01)
    assert ch.gain(0.0) == pytest.approx(1e-5, rel=1e-9)
    assert ch.yield_n(0) == pytest.approx(1e-5, rel=1e-12)
    # with no photons the errors are dark-driven coin flips
    assert ch.error_rate(1e-9) == pytest.approx(0.5, abs=1e-3)
    # strong pulse saturates
    assert ch.gain(500.0) == pytest.approx(1.0, abs=1e-9)
    assert ch.error_rate(500.0) == pytest.approx(0.01, abs=1e-9)
    mus = np.linspace(0.01, 2.0, 50)
    gains = [ch.gain(float(m)) for m in mus]
    assert np.all(np.diff(gains) > 0)


def test_golden_section_max_finds_unimodal_peaks():
    x, f = golden_section_max(lambda x: -((x - 0.3) ** 2), 0.0, 1.0)
    assert abs(x - 0.3) < 1e-4
    assert f <= 0.0
    x, f = golden_section_max(math.sin, 0.0, math.pi, tol=1e-6)
    assert abs(x - math.pi / 2) < 1e-5
    assert abs(f - 1.0) < 1e-9
    # maximum on the boundary is returned at the boundary
    x, _ = golden_section_max(lambda x: -x, 2.0, 5.0, tol=1e-6)
    assert abs(x - 2.0) < 1e-3
    with pytest.raises(InvalidInputError):
        golden_section_max(math.sin, 1.0, 1.0)
    with pytest.raises(InvalidInputError):
        golden_section_max(math.sin, 0.0, 1.0, tol=0.0)


def test_optimize_decoy_intensity_tightens_toward_weak_decoy():
    # with exact gains the vacuum+weak bound improves monotonically as the
    # decoy weakens, so the optimum pins to the lower end of the interval
    ch = AnalyticChannel(eta=0.03507518739525679, y0=1.6e-7, e_detector=0.008)
    nu_opt, r_opt = optimize_decoy_intensity(ch, 0.8)
    assert 0.0 < nu_opt < 0.8
    assert nu_opt <= 0.8 * 1e-3 + 5e-4
    # the optimum dominates a coarse probe grid spanning the interval
    for nu in (0.02, 0.05, 0.1, 0.2, 0.4, 0.7):
        assert r_opt >= ch.rate(0.8, nu, 80e6).r_bps - 1e-6
    # a floor on the usable decoy strength moves the optimum onto it
    nu_f, r_f = optimize_decoy_intensity(ch, 0.8, nu_lo=0.05)
    assert abs(nu_f - 0.05) < 1e-3
    assert r_f <= r_opt
    with pytest.raises(InvalidInputError):
        optimize_decoy_intensity(ch, 0.8, nu_lo=0.5, nu_hi=0.2)
    with pytest.raises(InvalidInputError):
        optimize_decoy_intensity(ch, -1.0)
