""" Precision bounds and temperature estimation

Information quantities are reported as β²F, the bound on the squared
relative precision (β/Δβ)² (the QSNR). The score is L = -∂_β ln P, so
the Fisher information is E[L²] = E[∂_β L].
"""
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.optimize

from seq_thermometry import correlations, sequential
from seq_thermometry.bath import effective_coupling_g2, landau_product, ThermalBath
from seq_thermometry.correlations import compute_correlations, CorrelationSet
from seq_thermometry.errors import (
    DependencyError,
    DivergenceError,
    DomainError,
    UnidentifiableError,
)
from seq_thermometry.sequential import MeasurementProtocol

log = logging.getLogger(__name__)

SCORE_MODES = ('full', 'leading')
# reporting conventions for the scaling regimes, in units of N_c
HEISENBERG_FRACTION = 0.1
SATURATION_MULTIPLE = 10.0
SCORE_CHUNK = 256
MLE_GRID_POINTS = 64
CI_Z = 1.96


def _sequential_prefactor() -> float:
    """ 2e^-4, the pair-information weight at t = t2 and θ = π/2
    """
    return 2.0 * math.exp(-4.0)


def enhancement_slope() -> float:
    """ 2(e^-2 - e^-4), the enhancement factor per correlated pair
    """
    return 2.0 * (math.exp(-2.0) - math.exp(-4.0))


def _outcome_array(records, n: int) -> np.ndarray:
    records = np.atleast_2d(np.asarray(records))
    if records.shape[1] != n:
        raise DomainError('Records have {} outcomes, protocol has {} measurements'.format(records.shape[1], n))
    if not np.all((records == 1) | (records == -1)):
        raise DomainError('Outcomes must be +1 or -1')
    return records.astype(float)


def score_batch(protocol: MeasurementProtocol, corr: CorrelationSet, records, mode: str='full') -> np.ndarray:
    """ Analytic score -∂_β ln P_S of the first-order model for every record

    ``full`` differentiates the model exactly, including the temperature
    dependence of the single-window contrast e^(-t/t2 - 2C⁺⁺₀).
    ``leading`` keeps only the leading terms with the contrast replaced by
    e^(-t/t2).
    """
    if mode not in SCORE_MODES:
        raise DomainError('Unknown score mode {!r}, expected one of {}'.format(mode, SCORE_MODES))
    n = protocol.n_measurements
    s_all = _outcome_array(records, n)
    cos_t, sin2 = math.cos(protocol.theta), math.sin(protocol.theta) ** 2
    white = math.exp(-protocol.window / corr.bath.t2)
    coherence = math.exp(-corr.window_decoherence())
    c = corr.c_pp_lags[:n]
    d = corr.d_lags[:n]
    d0 = d[0]
    lag = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    c_mat, d_mat = c[lag], d[lag]
    scores = np.empty(len(s_all))
    for start in range(0, len(s_all), SCORE_CHUNK):
        s = s_all[start:start + SCORE_CHUNK]
        p = 0.5 * (1.0 + s * cos_t * coherence)
        a = s / p
        outer = a[:, :, None] * a[:, None, :]
        if mode == 'leading':
            single = -np.sum(s * cos_t * d0 * white / p, axis=1)
            pair = sin2 * white * white * outer * d_mat
            scores[start:start + len(s)] = single + np.sum(pair * upper, axis=(1, 2))
            continue
        rel = s * cos_t * d0 * coherence / p
        excess = sin2 * coherence ** 2 * outer * c_mat
        d_excess = sin2 * coherence ** 2 * outer * (
            -d_mat + 4.0 * d0 * c_mat - c_mat * (rel[:, :, None] + rel[:, None, :]))
        pair = np.where(upper, d_excess / np.where(upper, 1.0 + excess, 1.0), 0.0)
        scores[start:start + len(s)] = -np.sum(rel, axis=1) - np.sum(pair, axis=(1, 2))
    return scores


def score_function(protocol: MeasurementProtocol, corr: CorrelationSet, record, mode: str='full') -> float:
    return float(score_batch(protocol, corr, [sequential.as_outcomes(record, protocol.n_measurements)], mode)[0])


def numerical_score(protocol: MeasurementProtocol, bath: ThermalBath, record, rel_step: float=1e-4,
                    kernel: str='exact') -> float:
    """ -∂_β ln P_S by central difference of the first-order model
    """
    h = rel_step * bath.beta
    values = []
    for beta in (bath.beta + h, bath.beta - h):
        corr = compute_correlations(bath.at_beta(beta), protocol.grid, kernel=kernel, include_quantum=False)
        values.append(sequential.log_joint_prob_approx(protocol, corr, record).log_probability)
    return -(values[0] - values[1]) / (2.0 * h)


class IndependentBound(NamedTuple):
    """ Independent-measurement bound

    :param value: β²F for ``n_shots`` shots, 4β²D₀²N/(e^(2Γ) - 1)
    :param small_window: g⁴t2⁴N/(e² - 1), the t = t2 small-window form
    :param gamma: decoherence used in the denominator
    :param d0: D₀(t)
    :param landau_product: g·t2
    """
    value: float
    small_window: float
    gamma: float
    d0: float
    landau_product: float


def fisher_independent(bath: ThermalBath, t: float, n_shots: int=1, gamma: str='window') -> IndependentBound:
    """ Cramér-Rao bound of N independent Ramsey shots of duration t

    :param gamma: ``window`` uses the decoherence t/t2 + 2C⁺⁺₀ of the
        sequential model, ``spectral`` the full Γ(t) of the bath
    """
    if not t > 0:
        raise DomainError('Window duration must be positive, got {}'.format(t))
    if gamma == 'window':
        decoherence = t / bath.t2 + 2.0 * correlations.classical_lags(bath, t, 1)[0]
    elif gamma == 'spectral':
        decoherence = correlations.decoherence_gamma(bath, t)
    else:
        raise DomainError('Unknown decoherence source {!r}'.format(gamma))
    if decoherence <= 0:
        raise DivergenceError('Γ(t) = 0: without decoherence the bound denominator e^(2Γ) - 1 vanishes')
    d0 = correlations.independent_d0(bath, t)
    g2 = effective_coupling_g2(bath)
    value = n_shots * 4.0 * (bath.beta * d0) ** 2 / math.expm1(2.0 * decoherence)
    small_window = g2 ** 2 * bath.t2 ** 4 * n_shots / math.expm1(2.0)
    return IndependentBound(value, small_window, decoherence, d0, landau_product(bath))


def _pair_sum(d_lags: np.ndarray, n: int) -> float:
    """ Σ_{i<j} D²_{j-i} over N windows; lags past the end count as zero
    """
    top = min(n, len(d_lags))
    lags = np.arange(1, top)
    return float(np.sum((n - lags) * d_lags[1:top] ** 2))


class SequentialFisher(NamedTuple):
    """ β²F of one record of N sequential measurements

    ``se``, ``mean_score`` and ``mean_score_se`` are zero for the closed form.
    """
    value: float
    se: float
    mean_score: float
    mean_score_se: float
    method: str


def _closed_form(corr: CorrelationSet, protocol: MeasurementProtocol) -> float:
    coherence = math.exp(-corr.window_decoherence())
    return 16.0 * coherence ** 4 * corr.bath.beta ** 2 * _pair_sum(corr.d_lags, protocol.n_measurements)


def fisher_sequential(corr: CorrelationSet, protocol: MeasurementProtocol, mode: str='closed',
                      cov: Optional[sequential.AuxiliaryCovariance]=None, n_records: int=10000,
                      seed=0, score_mode: str='full') -> SequentialFisher:
    """ Information of the sequential scheme

    ``closed`` evaluates 16E⁴β²Σ_{i<j}D²_{j-i} (θ = π/2 only, E the window
    contrast). ``mc`` averages the squared score over sampled records and
    checks that the score has zero mean.
    """
    if mode == 'closed':
        if not math.isclose(protocol.theta, math.pi / 2):
            raise DomainError('Closed-form sequential information needs theta = pi/2; use mode="mc"')
        return SequentialFisher(_closed_form(corr, protocol), 0.0, 0.0, 0.0, 'closed')
    if mode != 'mc':
        raise DomainError('Unknown Fisher mode {!r}'.format(mode))
    if cov is None:
        raise DependencyError('Monte Carlo Fisher information needs an auxiliary covariance')
    records = sequential.sample_records(cov, protocol, n_records, seed)
    scores = score_batch(protocol, corr, records, score_mode)
    squares = (corr.bath.beta * scores) ** 2
    root_m = math.sqrt(n_records)
    mean_score, mean_score_se = float(scores.mean()), float(scores.std(ddof=1) / root_m)
    if abs(mean_score) > 4.0 * mean_score_se:
        log.warning('Mean score {:.3g} is {:.1f} standard errors from zero'.format(
            mean_score, abs(mean_score) / mean_score_se))
    return SequentialFisher(float(squares.mean()), float(squares.std(ddof=1) / root_m),
                            mean_score, mean_score_se, 'mc')


def qsnr_independent(g2: float, t2: float, n: int) -> float:
    """ g⁴t2⁴N/(e² - 1)
    """
    return g2 ** 2 * t2 ** 4 * n / math.expm1(2.0)


def qsnr_sequential(g2: float, t2: float, n: int, n_cor: float) -> float:
    """ 2e^-4 g⁴t2⁴ N N_cor
    """
    return _sequential_prefactor() * g2 ** 2 * t2 ** 4 * n * n_cor


def regime_label(n: int, n_c: float) -> str:
    """ Reporting convention: Heisenberg below N_c/10, saturated above 10N_c
    """
    if n <= HEISENBERG_FRACTION * n_c:
        return 'heisenberg'
    if n >= SATURATION_MULTIPLE * n_c:
        return 'saturated'
    return 'crossover'


@dataclass
class PrecisionReport:
    n_measurements: int
    fisher_independent: float
    qsnr_independent: float
    fisher_sequential: float
    qsnr_sequential: float
    n_cor: float
    n_c: float
    n_c_floor: int
    n_s: float
    enhancement_r: float
    regime: str
    diagnostics: dict = field(default_factory=dict)
    flags: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _lag_profile(bath: ThermalBath, t: float, kernel: str) -> np.ndarray:
    """ D_l out to the decay horizon; longer lags count as zero
    """
    return correlations.derivative_lags(bath, t, correlations.decay_horizon(bath, t, kernel), kernel)


def qsnr_bounds(bath: ThermalBath, protocol: MeasurementProtocol, kernel: str='exact') -> PrecisionReport:
    """ Assembles both bounds, the correlation scales and the regime

    The sequential bounds are evaluated for the θ = π/2 readout at window t;
    the published closed forms take t = t2.
    """
    n, t = protocol.n_measurements, protocol.window
    d_lags = _lag_profile(bath, t, kernel)
    g2 = effective_coupling_g2(bath)
    length = correlations.correlation_length(d_lags)
    n_s = correlations.n_saturation(d_lags)
    n_cor = float(correlations.n_cor_curve(d_lags, [n])[0])
    independent = fisher_independent(bath, t, 1)
    c0 = correlations.classical_lags(bath, t, 1, kernel)[0]
    coherence = math.exp(-(t / bath.t2 + 2.0 * c0))
    fisher_seq = 16.0 * coherence ** 4 * bath.beta ** 2 * _pair_sum(d_lags, n)
    q_ind = qsnr_independent(g2, bath.t2, n)
    q_seq = qsnr_sequential(g2, bath.t2, n, n_cor)
    if q_ind <= 0:
        raise DivergenceError('Independent scheme carries no information')
    c_lags = correlations.classical_lags(bath, t, min(n, 2), kernel)
    c_lag1 = float(abs(c_lags[1])) if n > 1 else 0.0
    report = PrecisionReport(
        n_measurements=n,
        fisher_independent=independent.value,
        qsnr_independent=q_ind,
        fisher_sequential=fisher_seq,
        qsnr_sequential=q_seq,
        n_cor=n_cor,
        n_c=length.n_c,
        n_c_floor=length.n_c_floor,
        n_s=n_s,
        enhancement_r=q_seq / q_ind,
        regime=regime_label(n, length.n_c),
        diagnostics={
            'g2': g2,
            'beta_d0': bath.beta * independent.d0,
            'gamma_window': independent.gamma,
            'gamma_spectral': correlations.decoherence_gamma(bath, t),
            'landau_product': independent.landau_product,
            'g2_t2_squared': g2 * bath.t2 ** 2,
            'hbar_beta_over_t2': bath.hbar_beta_over_t2,
            'c_pp_lag1': c_lag1,
            'lags_evaluated': len(d_lags),
            'heisenberg_limit_n': HEISENBERG_FRACTION * length.n_c,
            'saturation_onset_n': SATURATION_MULTIPLE * length.n_c},
        flags={
            'weak_correlation': c_lag1 <= sequential.WEAK_CORRELATION_LIMIT,
            'landau_reached': independent.landau_product >= 1.0,
            'window_equals_t2': math.isclose(t, bath.t2)})
    log.info('N = {}: R = {:.4g}, N_cor = {:.4g}, regime {}'.format(n, report.enhancement_r, n_cor, report.regime))
    return report


def enhancement_factor(bath: ThermalBath, protocol: MeasurementProtocol, kernel: str='exact') -> float:
    """ R = (Δβ)²_ind/(Δβ)²_seq = qsnr_sequential/qsnr_independent
    """
    n = protocol.n_measurements
    g2 = effective_coupling_g2(bath)
    q_ind = qsnr_independent(g2, bath.t2, n)
    if q_ind <= 0:
        raise DivergenceError('Independent scheme carries no information')
    d_lags = _lag_profile(bath, protocol.window, kernel)
    n_cor = float(correlations.n_cor_curve(d_lags, [n])[0])
    return qsnr_sequential(g2, bath.t2, n, n_cor) / q_ind


@dataclass(frozen=True, eq=False)
class PairStatistics:
    """ Sufficient statistics of a record batch under the first-order model

    :param n_plus: number of +1 outcomes over all records and windows
    :param pp: per-lag count of (+1, +1) pairs; index 0 unused
    :param mm: per-lag count of (-1, -1) pairs
    :param mixed: per-lag count of mixed pairs
    """
    n_records: int
    n_measurements: int
    n_plus: int
    n_minus: int
    pp: np.ndarray
    mm: np.ndarray
    mixed: np.ndarray

    @classmethod
    def from_records(cls, records) -> 'PairStatistics':
        records = np.atleast_2d(np.asarray(records))
        m, n = records.shape
        plus = records == 1
        minus = ~plus
        pp, mm, mixed = (np.zeros(n, dtype=np.int64) for _ in range(3))
        for lag in range(1, n):
            pp[lag] = np.count_nonzero(plus[:, :-lag] & plus[:, lag:])
            mm[lag] = np.count_nonzero(minus[:, :-lag] & minus[:, lag:])
            mixed[lag] = m * (n - lag) - pp[lag] - mm[lag]
        n_plus = int(np.count_nonzero(plus))
        return cls(m, n, n_plus, m * n - n_plus, pp, mm, mixed)

    def log_likelihood(self, protocol: MeasurementProtocol, corr: CorrelationSet) -> Tuple[float, bool]:
        """ Σ_records ln P_S of the first-order model, and whether any factor was clamped
        """
        n = self.n_measurements
        coherence = math.exp(-corr.window_decoherence())
        cos_t = math.cos(protocol.theta)
        p_plus, p_minus = 0.5 * (1.0 + cos_t * coherence), 0.5 * (1.0 - cos_t * coherence)
        tiny = np.finfo(float).tiny
        clamped = p_plus <= 0 or p_minus <= 0
        total = self.n_plus * math.log(max(p_plus, tiny)) + self.n_minus * math.log(max(p_minus, tiny))
        if n > 1:
            weight = math.sin(protocol.theta) ** 2 * coherence ** 2 * corr.c_pp_lags[1:n]
            p_plus, p_minus = max(p_plus, tiny), max(p_minus, tiny)
            terms = []
            for counts, excess in ((self.pp, weight / p_plus ** 2),
                                   (self.mm, weight / p_minus ** 2),
                                   (self.mixed, -weight / (p_plus * p_minus))):
                clamped = clamped or bool(np.any((counts[1:] > 0) & (excess <= -1.0)))
                terms.append(np.dot(counts[1:], np.log1p(np.maximum(excess, sequential.PAIR_FLOOR))))
            total += float(sum(terms))
        return total, bool(clamped)


@dataclass
class MleEstimate:
    beta_hat: float
    ci_low: float
    ci_high: float
    observed_information: float
    at_boundary: bool
    clamped: bool
    n_records: int
    curve_beta: np.ndarray = field(repr=False)
    curve_log_likelihood: np.ndarray = field(repr=False)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.ci_high - self.ci_low)

    def to_dict(self) -> dict:
        return {
            'beta_hat': self.beta_hat,
            'confidence_interval': [self.ci_low, self.ci_high],
            'observed_information': self.observed_information,
            'n_records': self.n_records,
            'flags': {'at_boundary': self.at_boundary, 'clamped': self.clamped},
            'curve': {'beta': self.curve_beta, 'log_likelihood': self.curve_log_likelihood}}


def mle_estimate(records, protocol: MeasurementProtocol, bath_template: ThermalBath,
                 beta_bounds: Tuple[float, float], kernel: str='exact', grid_points: int=MLE_GRID_POINTS,
                 z: float=CI_Z) -> MleEstimate:
    """ Maximum-likelihood β from a batch of records

    Scans ``grid_points`` log-spaced candidates in ``beta_bounds``, then
    refines the best one with a bounded scalar search between its
    neighbours. Every parameter of ``bath_template`` except β is held fixed.
    The confidence interval is β̂ ± z/√I with I the observed information.

    :raises UnidentifiableError: when the likelihood is flat over the bounds
    """
    lo, hi = beta_bounds
    if not 0 < lo < hi:
        raise DomainError('Invalid beta bounds {}'.format(beta_bounds))
    stats = PairStatistics.from_records(_outcome_array(records, protocol.n_measurements).astype(np.int8))

    def log_likelihood(beta: float) -> Tuple[float, bool]:
        corr = compute_correlations(bath_template.at_beta(beta), protocol.grid, kernel=kernel, include_quantum=False)
        return stats.log_likelihood(protocol, corr)

    betas = np.geomspace(lo, hi, grid_points)
    curve = np.array([log_likelihood(b)[0] for b in betas])
    if np.ptp(curve) <= 1e-12 * max(1.0, float(np.max(np.abs(curve)))):
        raise UnidentifiableError('Log-likelihood is flat over [{}, {}]; the records carry no information on beta'
                                  .format(lo, hi))
    best = int(np.argmax(curve))
    at_boundary = best in (0, grid_points - 1)
    if at_boundary:
        beta_hat = float(betas[best])
        log.warning('Likelihood maximum at the boundary beta = {:.6g}'.format(beta_hat))
    else:
        result = scipy.optimize.minimize_scalar(
            lambda b: -log_likelihood(b)[0], bounds=(betas[best - 1], betas[best + 1]), method='bounded',
            options={'xatol': 1e-9 * betas[best]})
        beta_hat = float(result.x) if -result.fun >= curve[best] else float(betas[best])
    h = 1e-3 * beta_hat
    centre, clamped = log_likelihood(beta_hat)
    information = -(log_likelihood(beta_hat + h)[0] - 2.0 * centre + log_likelihood(beta_hat - h)[0]) / h ** 2
    if information > 0:
        half = z / math.sqrt(information)
        ci = (beta_hat - half, beta_hat + half)
    elif at_boundary:
        ci = (math.nan, math.nan)
    else:
        raise UnidentifiableError('Log-likelihood has no curvature at beta = {:.6g}'.format(beta_hat))
    if clamped:
        log.warning('Model probabilities were clamped at the estimate; records leave the weak-correlation regime')
    return MleEstimate(beta_hat, ci[0], ci[1], information, at_boundary, clamped, stats.n_records, betas, curve)


class CrbValidation(NamedTuple):
    """ var(β̂)·M·F, with F the per-record Fisher information
    """
    ratio: float
    estimates: np.ndarray
    fisher_per_record: float
    n_boundary: int


def crb_validation(bath: ThermalBath, protocol: MeasurementProtocol, n_batches: int, records_per_batch: int,
                   seed=0, beta_bounds: Optional[Tuple[float, float]]=None, kernel: str='exact',
                   mc_records: int=20000) -> CrbValidation:
    """ Empirical check of the Cramér-Rao bound

    Simulates ``n_batches`` independent batches, estimates β from each and
    compares the spread of the estimates with the Fisher information.
    """
    if n_batches < 2:
        raise DomainError('Need at least two batches for a variance')
    corr = compute_correlations(bath, protocol.grid, kernel=kernel, include_quantum=False)
    cov = sequential.build_aux_covariance(corr, protocol)
    if math.isclose(protocol.theta, math.pi / 2):
        information = fisher_sequential(corr, protocol).value
    else:
        information = fisher_sequential(corr, protocol, mode='mc', cov=cov, n_records=mc_records,
                                        seed=(seed, n_batches)).value
    fisher = information / bath.beta ** 2
    bounds = beta_bounds or (bath.beta / 4.0, bath.beta * 4.0)
    estimates, n_boundary = [], 0
    for batch in range(n_batches):
        records = sequential.sample_records(cov, protocol, records_per_batch, (seed, batch))
        estimate = mle_estimate(records, protocol, bath, bounds, kernel=kernel)
        estimates.append(estimate.beta_hat)
        n_boundary += int(estimate.at_boundary)
    estimates = np.array(estimates)
    ratio = float(np.var(estimates, ddof=1) * records_per_batch * fisher)
    log.info('CRB ratio {:.3f} over {} batches ({} at the boundary)'.format(ratio, n_batches, n_boundary))
    return CrbValidation(ratio, estimates, fisher, n_boundary)
