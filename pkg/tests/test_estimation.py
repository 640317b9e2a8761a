import logging
import math

import numpy as np
import pytest

from seq_thermometry import correlations, estimation, sequential
from seq_thermometry.bath import effective_coupling_g2, landau_product, ThermalBath
from seq_thermometry.errors import DependencyError, DomainError, UnidentifiableError
from seq_thermometry.sequential import MeasurementProtocol

HOT_T = 0.05
WEAK_T = 0.05


def _corr(bath, protocol):
    return correlations.compute_correlations(bath, protocol.grid, include_quantum=False)


def _sample(bath, protocol, m, seed):
    cov = sequential.build_aux_covariance(_corr(bath, protocol), protocol)
    return sequential.sample_records(cov, protocol, m, seed)


@pytest.mark.acceptance(criterion=7, reason='analytic score against a central difference')
@pytest.mark.parametrize('theta', [math.pi / 3, math.pi / 2])
def test_score_matches_finite_difference(hot_bath, theta):
    protocol = MeasurementProtocol(20, HOT_T, theta=theta)
    corr = _corr(hot_bath, protocol)
    records = 1 - 2 * np.random.default_rng(11).integers(0, 2, size=(100, 20))
    analytic = estimation.score_batch(protocol, corr, records)
    numeric = np.array([estimation.numerical_score(protocol, hot_bath, r) for r in records])
    scale = np.max(np.abs(numeric))
    assert analytic == pytest.approx(numeric, rel=1e-3, abs=1e-3 * scale)
    assert estimation.score_function(protocol, corr, records[0]) == pytest.approx(analytic[0])


def test_leading_score_close_to_full(hot_bath):
    protocol = MeasurementProtocol(10, HOT_T, theta=math.pi / 3)
    corr = _corr(hot_bath, protocol)
    records = sequential.all_records(10)[::37]
    full = estimation.score_batch(protocol, corr, records)
    leading = estimation.score_batch(protocol, corr, records, mode='leading')
    assert leading == pytest.approx(full, rel=0.2, abs=0.05 * np.max(np.abs(full)))


def test_score_validation(hot_bath):
    protocol = MeasurementProtocol(3, HOT_T)
    corr = _corr(hot_bath, protocol)
    with pytest.raises(DomainError):
        estimation.score_batch(protocol, corr, [[1, 1, 1]], mode='exact')
    with pytest.raises(DomainError):
        estimation.score_batch(protocol, corr, [[1, 1]])
    with pytest.raises(DomainError):
        estimation.score_batch(protocol, corr, [[1, 0, 1]])


def test_fisher_independent(hot_bath):
    bound = estimation.fisher_independent(hot_bath, HOT_T, n_shots=3)
    c0 = correlations.classical_lags(hot_bath, HOT_T, 1)[0]
    d0 = correlations.independent_d0(hot_bath, HOT_T)
    assert bound.gamma == pytest.approx(HOT_T / 0.1 + 2.0 * c0)
    assert bound.d0 == pytest.approx(d0)
    assert bound.value == pytest.approx(3 * 4.0 * d0 ** 2 / math.expm1(2.0 * bound.gamma))
    g2 = effective_coupling_g2(hot_bath)
    assert bound.small_window == pytest.approx(g2 ** 2 * 0.1 ** 4 * 3 / math.expm1(2.0))
    assert bound.landau_product == pytest.approx(landau_product(hot_bath), rel=1e-12)
    spectral = estimation.fisher_independent(hot_bath, HOT_T, gamma='spectral')
    assert spectral.gamma == pytest.approx(correlations.decoherence_gamma(hot_bath, HOT_T))
    with pytest.raises(DomainError):
        estimation.fisher_independent(hot_bath, HOT_T, gamma='other')
    with pytest.raises(DomainError):
        estimation.fisher_independent(hot_bath, 0.0)


def test_fisher_sequential_closed_form(hot_bath):
    protocol = MeasurementProtocol(5, HOT_T)
    corr = _corr(hot_bath, protocol)
    contrast = math.exp(-corr.window_decoherence())
    d = corr.d_lags
    pairs = sum((5 - lag) * d[lag] ** 2 for lag in range(1, 5))
    result = estimation.fisher_sequential(corr, protocol)
    assert result.method == 'closed'
    assert result.value == pytest.approx(16.0 * contrast ** 4 * pairs)


def test_fisher_sequential_validation(hot_bath):
    protocol = MeasurementProtocol(5, HOT_T, theta=1.0)
    corr = _corr(hot_bath, protocol)
    with pytest.raises(DomainError):
        estimation.fisher_sequential(corr, protocol)
    with pytest.raises(DependencyError):
        estimation.fisher_sequential(corr, protocol, mode='mc')
    with pytest.raises(DomainError):
        estimation.fisher_sequential(corr, protocol, mode='exact')


def test_sequential_information_matches_closed_form(reference_bath):
    protocol = MeasurementProtocol(50, 0.1)
    corr = _corr(reference_bath, protocol)
    cov = sequential.build_aux_covariance(corr, protocol)
    closed = estimation.fisher_sequential(corr, protocol)
    sampled = estimation.fisher_sequential(corr, protocol, mode='mc', cov=cov, n_records=20000, seed=5)
    assert sampled.method == 'mc'
    assert 0 < sampled.se <= 0.05 * sampled.value
    assert abs(sampled.value - closed.value) <= 3.0 * sampled.se
    assert abs(sampled.mean_score) <= 4.0 * sampled.mean_score_se


@pytest.mark.parametrize('theta', [0.0, math.pi / 4, math.pi / 2])
def test_score_has_zero_mean(weak_bath, theta):
    protocol = MeasurementProtocol(20, WEAK_T, theta=theta)
    corr = _corr(weak_bath, protocol)
    cov = sequential.build_aux_covariance(corr, protocol)
    sampled = estimation.fisher_sequential(corr, protocol, mode='mc', cov=cov, n_records=100000, seed=13)
    assert sampled.mean_score_se > 0
    assert abs(sampled.mean_score) <= 4.0 * sampled.mean_score_se


def test_information_identity(reference_bath):
    # E[L²] = E[dL/dβ], the derivative taken by central difference over β
    beta = reference_bath.beta
    protocol = MeasurementProtocol(20, 0.1, theta=math.pi / 4)
    corr = _corr(reference_bath, protocol)
    records = sequential.sample_records(sequential.build_aux_covariance(corr, protocol), protocol, 100000, 8)
    scores = estimation.score_batch(protocol, corr, records)
    h = 1e-4 * beta
    above = estimation.score_batch(protocol, _corr(reference_bath.at_beta(beta + h), protocol), records)
    below = estimation.score_batch(protocol, _corr(reference_bath.at_beta(beta - h), protocol), records)
    difference = scores ** 2 - (above - below) / (2.0 * h)
    se = difference.std(ddof=1) / math.sqrt(len(difference))
    assert se <= 0.02 * np.mean(scores ** 2)
    assert abs(difference.mean()) <= 3.0 * se


def test_qsnr_formulas():
    assert estimation.qsnr_independent(2.0, 0.5, 10) == pytest.approx(16.0 * 0.0625 * 10 / (math.e ** 2 - 1))
    assert estimation.qsnr_sequential(2.0, 0.5, 10, 3.0) == pytest.approx(2 * math.exp(-4) * 16 * 0.0625 * 30)


@pytest.mark.acceptance(criterion=3, reason='enhancement factor identity')
def test_enhancement_identity():
    for n, n_cor in ((1, 0.0), (10, 8.5), (10000, 638.5)):
        ratio = estimation.qsnr_sequential(1e-4, 0.1, n, n_cor) / estimation.qsnr_independent(1e-4, 0.1, n)
        assert ratio == pytest.approx(estimation.enhancement_slope() * n_cor, rel=1e-12, abs=1e-300)
    assert estimation.enhancement_slope() == pytest.approx(0.23404, abs=1e-5)


@pytest.mark.parametrize('factor', [0.5, 2.0])
def test_enhancement_invariant_under_coupling_scale(hot_bath, factor):
    protocol = MeasurementProtocol(50, HOT_T)
    scaled = ThermalBath(beta=hot_bath.beta, t2=hot_bath.t2, spectral=hot_bath.spectral.scaled(factor))
    assert estimation.enhancement_factor(scaled, protocol) == pytest.approx(
        estimation.enhancement_factor(hot_bath, protocol), rel=1e-9)


def test_regime_label():
    assert estimation.regime_label(10, 364.0) == 'heisenberg'
    assert estimation.regime_label(100, 364.0) == 'crossover'
    assert estimation.regime_label(5000, 364.0) == 'saturated'


def test_qsnr_bounds_reference_bath(reference_bath):
    protocol = MeasurementProtocol(100, 0.1)
    report = estimation.qsnr_bounds(reference_bath, protocol)
    assert report.regime == 'crossover'
    assert 361.0 <= report.n_c <= 399.0
    assert report.enhancement_r == pytest.approx(estimation.enhancement_slope() * report.n_cor, rel=1e-12)
    assert report.enhancement_r == pytest.approx(estimation.enhancement_factor(reference_bath, protocol), rel=1e-12)
    assert report.n_cor == pytest.approx(99.0, rel=0.03)
    assert report.fisher_sequential > 0
    assert report.flags == {'weak_correlation': True, 'landau_reached': False, 'window_equals_t2': True}
    assert report.diagnostics['hbar_beta_over_t2'] == pytest.approx(1000.0)
    assert report.diagnostics['g2_t2_squared'] == pytest.approx(report.diagnostics['g2'] * 0.01)
    document = report.to_dict()
    assert document['n_measurements'] == 100
    assert set(document['diagnostics']) >= {'gamma_window', 'gamma_spectral', 'landau_product'}


@pytest.mark.acceptance(criterion=4, reason='Heisenberg and saturated scaling of the sequential QSNR')
def test_qsnr_scaling(reference_bath):
    d_lags = correlations.derivative_lags(reference_bath, 0.1, correlations.decay_horizon(reference_bath, 0.1))
    g2 = effective_coupling_g2(reference_bath)
    n_c = correlations.correlation_length(d_lags).n_c

    def slope(ns):
        q = [estimation.qsnr_sequential(g2, 0.1, n, c) for n, c in zip(ns, correlations.n_cor_curve(d_lags, ns))]
        return np.polyfit(np.log(ns), np.log(q), 1)[0]

    assert slope(np.arange(16, 65)) == pytest.approx(2.0, abs=0.05)
    large = np.unique(np.geomspace(10 * n_c, 100 * n_c, 50).astype(int))
    assert slope(large) == pytest.approx(1.0, abs=0.05)


def test_pair_statistics():
    stats = estimation.PairStatistics.from_records([[1, 1, -1], [-1, -1, -1]])
    assert (stats.n_records, stats.n_measurements, stats.n_plus, stats.n_minus) == (2, 3, 2, 4)
    assert stats.pp[1:].tolist() == [1, 0]
    assert stats.mm[1:].tolist() == [2, 1]
    assert stats.mixed[1:].tolist() == [1, 1]


def test_pair_statistics_likelihood(hot_bath):
    protocol = MeasurementProtocol(5, HOT_T, theta=math.pi / 3)
    corr = _corr(hot_bath, protocol)
    records = _sample(hot_bath, protocol, 50, 1)
    total = sum(sequential.log_joint_prob_approx(protocol, corr, r).log_probability for r in records)
    value, clamped = estimation.PairStatistics.from_records(records).log_likelihood(protocol, corr)
    assert value == pytest.approx(total, rel=1e-10)
    assert not clamped


def test_mle_recovers_temperature(hot_bath):
    protocol = MeasurementProtocol(50, HOT_T)
    records = _sample(hot_bath, protocol, 4000, 21)
    estimate = estimation.mle_estimate(records, protocol, hot_bath, (0.25, 4.0))
    assert not estimate.at_boundary
    assert not estimate.clamped
    assert estimate.ci_low < estimate.beta_hat < estimate.ci_high
    assert abs(estimate.beta_hat - 1.0) <= 2.0 * estimate.half_width
    assert estimate.observed_information > 0
    assert len(estimate.curve_beta) == estimation.MLE_GRID_POINTS
    document = estimate.to_dict()
    assert document['flags'] == {'at_boundary': False, 'clamped': False}


def test_mle_flat_likelihood(hot_bath):
    protocol = MeasurementProtocol(1, HOT_T)
    with pytest.raises(UnidentifiableError):
        estimation.mle_estimate([[1], [-1], [1]], protocol, hot_bath, (0.5, 2.0))


def test_mle_boundary(hot_bath, caplog):
    protocol = MeasurementProtocol(20, HOT_T)
    records = _sample(hot_bath, protocol, 2000, 4)
    with caplog.at_level(logging.WARNING):
        estimate = estimation.mle_estimate(records, protocol, hot_bath, (10.0, 40.0))
    assert estimate.at_boundary
    assert estimate.beta_hat == pytest.approx(10.0)
    assert 'boundary' in caplog.text


def test_mle_bounds_validation(hot_bath):
    with pytest.raises(DomainError):
        estimation.mle_estimate([[1, 1]], MeasurementProtocol(2, HOT_T), hot_bath, (2.0, 1.0))


@pytest.mark.acceptance(criterion=8, reason='Cramér-Rao bound saturation by the estimator')
def test_crb_validation(weak_bath):
    protocol = MeasurementProtocol(100, WEAK_T)
    result = estimation.crb_validation(weak_bath, protocol, n_batches=400, records_per_batch=20000, seed=3)
    assert result.n_boundary == 0
    assert len(result.estimates) == 400
    assert 0.9 <= result.ratio <= 1.3


def test_crb_needs_batches(hot_bath):
    with pytest.raises(DomainError):
        estimation.crb_validation(hot_bath, MeasurementProtocol(5, HOT_T), n_batches=1, records_per_batch=10)
