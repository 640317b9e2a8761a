""" Joint outcome statistics of sequential Ramsey measurements

The thermometer is reset to |+⟩ before each of N windows of duration t,
accumulates a noise phase, and is read out along
e_θ = cos θ x + sin θ y. Three descriptions of the joint distribution of
the outcome string S = (s_1, ..., s_N) live here:

* :func:`joint_prob_exact` sums the 4^N forward/backward paths and is the
  ground truth for small N
* :func:`joint_prob_approx` keeps the product of single-outcome
  probabilities and first-order pair factors
* :func:`sample_records` and :func:`joint_prob_mc` use the Gaussian
  auxiliary-field representation, exact when the commutator term is off
"""
import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np
import scipy.linalg

from seq_thermometry import helpers
from seq_thermometry.bath import ThermalBath
from seq_thermometry.correlations import compute_correlations, CorrelationSet, WindowGrid
from seq_thermometry.errors import (
    CapacityError,
    DependencyError,
    DomainError,
    ModelViolationError,
    NumericalError,
)

log = logging.getLogger(__name__)

DEFAULT_N_MAX = 10
# path configurations evaluated per vectorized chunk
PATH_CHUNK = 4 ** 8
# off-diagonal C⁺⁺ above which the first-order model is unreliable
WEAK_CORRELATION_LIMIT = 0.1
PSD_TOLERANCE = 1e-10

# per-window path states (η, η̄) = (0,0), (1,1), (1,0), (0,1) as (η⁻, η⁺)
_ETA_MINUS = np.array([0, 0, 1, -1], dtype=np.int8)
_ETA_PLUS = np.array([-1, 1, 0, 0], dtype=np.int8)
PAIR_FLOOR = np.nextafter(-1.0, 0.0)


@dataclass(frozen=True)
class MeasurementProtocol:
    """ Sequence of ``n_measurements`` windows of duration ``window`` read
    out at angle ``theta`` in the equatorial plane
    """
    n_measurements: int
    window: float
    theta: float = math.pi / 2

    def __post_init__(self):
        if int(self.n_measurements) != self.n_measurements or self.n_measurements < 1:
            raise DomainError('Need at least one measurement, got {}'.format(self.n_measurements))
        if not self.window > 0:
            raise DomainError('Window duration must be positive, got {}'.format(self.window))
        if not 0.0 <= self.theta <= math.pi:
            raise DomainError('theta must lie in [0, pi], got {}'.format(self.theta))

    @property
    def grid(self) -> WindowGrid:
        return WindowGrid(t=self.window, n_windows=self.n_measurements)

    def with_n(self, n_measurements: int) -> 'MeasurementProtocol':
        return MeasurementProtocol(n_measurements, self.window, self.theta)


@dataclass(frozen=True)
class OutcomeRecord:
    outcomes: Tuple[int, ...]

    def __post_init__(self):
        if not all(s in (1, -1) for s in self.outcomes):
            raise DomainError('Outcomes must be +1 or -1: {}'.format(self.outcomes))

    def __len__(self):
        return len(self.outcomes)

    def as_array(self) -> np.ndarray:
        return np.array(self.outcomes, dtype=np.int8)


def all_records(n: int) -> np.ndarray:
    """ Every outcome string of length n as rows of ±1, s_1 varying slowest
    """
    bits = (np.arange(2 ** n)[:, None] >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def as_outcomes(record, n: int) -> np.ndarray:
    if isinstance(record, OutcomeRecord):
        record = record.outcomes
    s = np.asarray(record)
    if s.shape[-1:] != (n,):
        raise DomainError('Record length {} does not match {} measurements'.format(s.shape[-1:], n))
    if not np.all((s == 1) | (s == -1)):
        raise DomainError('Outcomes must be +1 or -1')
    return s.astype(float)


def _check_cover(protocol: MeasurementProtocol, corr: CorrelationSet):
    if corr.n_windows < protocol.n_measurements:
        raise DomainError('Correlations cover {} windows, protocol needs {}'.format(
            corr.n_windows, protocol.n_measurements))
    if not math.isclose(corr.grid.t, protocol.window):
        raise DomainError('Correlations were computed for t = {}, protocol uses {}'.format(
            corr.grid.t, protocol.window))


def _coherence(protocol: MeasurementProtocol, corr: CorrelationSet) -> float:
    """ e^(-t/t2 - 2C⁺⁺₀), the surviving Ramsey contrast of one window
    """
    return math.exp(-corr.window_decoherence())


def single_outcome_prob(protocol: MeasurementProtocol, corr: CorrelationSet, index: int, s: int) -> float:
    """ P_s = ½(1 + s cos θ e^(-t/t2 - 2C⁺⁺₀)), identical for every window
    """
    _check_cover(protocol, corr)
    if not 0 <= index < protocol.n_measurements:
        raise DomainError('Window index {} outside [0, {})'.format(index, protocol.n_measurements))
    if s not in (1, -1):
        raise DomainError('Outcome must be +1 or -1, got {}'.format(s))
    return 0.5 * (1.0 + s * math.cos(protocol.theta) * _coherence(protocol, corr))


class ApproxProbability(NamedTuple):
    probability: float
    clamped: bool


class ApproxLogProbability(NamedTuple):
    log_probability: float
    clamped: bool


def _first_order_terms(protocol: MeasurementProtocol, corr: CorrelationSet, s: np.ndarray):
    """ Single probabilities P (…, N) and pair excesses Q - 1 (…, N, N) of
    the first-order model; only the strict upper triangle is meaningful
    """
    n = protocol.n_measurements
    coherence = _coherence(protocol, corr)
    p = 0.5 * (1.0 + s * math.cos(protocol.theta) * coherence)
    if n == 1:
        return p, None
    a = s / np.maximum(p, np.finfo(float).tiny)
    weight = math.sin(protocol.theta) ** 2 * coherence ** 2
    c = scipy.linalg.toeplitz(corr.c_pp_lags[:n])
    return p, weight * a[..., :, None] * a[..., None, :] * c


# configurations already reported by _warn_weak_regime
_WEAK_REGIME_WARNED = set()


def _warn_weak_regime(corr: CorrelationSet):
    largest = corr.max_offdiag_c_pp()
    if largest <= WEAK_CORRELATION_LIMIT:
        return
    key = (corr.bath, corr.grid, corr.kernel)
    if key in _WEAK_REGIME_WARNED:
        return
    _WEAK_REGIME_WARNED.add(key)
    log.warning('Off-diagonal correlation {:.3g} exceeds {}; first-order model is unreliable'.format(
        largest, WEAK_CORRELATION_LIMIT))


def log_joint_prob_approx(protocol: MeasurementProtocol, corr: CorrelationSet, record) -> ApproxLogProbability:
    """ ln P_S of the first-order model

    ln P_S = Σ ln P_{s_i} + Σ_{i<j} ln[1 + s_i s_j sin²θ C⁺⁺_{j-i} E²/(P_{s_i}P_{s_j})]
    with E = e^(-t/t2 - 2C⁺⁺₀). Nonpositive factors are clamped just above
    zero and flagged.
    """
    _check_cover(protocol, corr)
    _warn_weak_regime(corr)
    s = as_outcomes(record, protocol.n_measurements)
    p, pairs = _first_order_terms(protocol, corr, s)
    clamped = bool(np.any(p <= 0))
    total = float(np.sum(np.log(np.maximum(p, np.finfo(float).tiny))))
    if pairs is not None:
        excess = pairs[np.triu_indices(protocol.n_measurements, k=1)]
        clamped = clamped or bool(np.any(excess <= -1.0))
        total += float(np.sum(np.log1p(np.maximum(excess, PAIR_FLOOR))))
    if clamped:
        log.warning('Approximate probability left its validity range and was clamped')
    return ApproxLogProbability(total, clamped)


def joint_prob_approx(protocol: MeasurementProtocol, corr: CorrelationSet, record) -> ApproxProbability:
    log_p, clamped = log_joint_prob_approx(protocol, corr, record)
    value = math.exp(log_p)
    if value > 1.0:
        log.warning('Approximate probability {:.6g} exceeds 1 and was clamped'.format(value))
        return ApproxProbability(1.0, True)
    return ApproxProbability(value, clamped)


def path_sum_probability(protocol: MeasurementProtocol, c_pp: np.ndarray, c_pm: np.ndarray,
                         t_over_t2: float, records: np.ndarray) -> np.ndarray:
    """ Exact joint probabilities from explicit correlation matrices

    P_S = 4^(-N) Σ_paths exp(iΣ_j η⁻_j φ_j) G with φ_j = θ + (1 - s_j)π/2 and
    G = exp(-Σ_{l,j}[2C⁺⁺_{lj} η⁻_l η⁻_j + 2i C⁺⁻_{lj} η⁻_l η⁺_j] - Σ_j (η⁻_j)² t/t2).

    All 4^N path configurations are enumerated in chunks of PATH_CHUNK and each
    chunk is evaluated with one vectorized einsum, so the cost is O(4^N N²).

    :param records: (K, N) array of outcome strings
    :returns: K probabilities
    """
    n = protocol.n_measurements
    records = np.atleast_2d(records).astype(float)
    phases = protocol.theta + (1.0 - records) * (math.pi / 2)
    powers = 4 ** np.arange(n)
    total = np.zeros(len(records), dtype=complex)
    chunk = max(256, PATH_CHUNK // len(records))
    for start in range(0, 4 ** n, chunk):
        index = np.arange(start, min(start + chunk, 4 ** n))
        states = (index[:, None] // powers[None, :]) % 4
        em = _ETA_MINUS[states].astype(float)
        ep = _ETA_PLUS[states].astype(float)
        exponent = (-2.0 * np.einsum('ci,ij,cj->c', em, c_pp, em)
                    - 2j * np.einsum('ci,ij,cj->c', em, c_pm, ep)
                    - t_over_t2 * np.sum(em * em, axis=1))
        weights = np.exp(exponent)
        total += np.exp(1j * phases @ em.T) @ weights
    total /= 4.0 ** n
    residue = float(np.max(np.abs(total.imag)))
    if residue > 1e-12:
        raise NumericalError('Path sum is not real', imaginary_residue=residue)
    return total.real


def joint_prob_exact(protocol: MeasurementProtocol, bath: ThermalBath, record, n_max: int=DEFAULT_N_MAX,
                     include_quantum_term: bool=True, kernel: str='exact',
                     corr: Optional[CorrelationSet]=None):
    """ Exact joint probability of one record (or a (K, N) stack of records)

    :raises CapacityError: when N exceeds ``n_max``
    """
    n = protocol.n_measurements
    if n > n_max:
        raise CapacityError('Path sum over 4^{} paths exceeds the limit n_max = {}'.format(n, n_max))
    if corr is None:
        corr = compute_correlations(bath, protocol.grid, kernel=kernel, include_quantum=include_quantum_term)
    _check_cover(protocol, corr)
    c_pm = corr.c_pm()[:n, :n] if include_quantum_term else np.zeros((n, n))
    s = as_outcomes(record, n)
    result = path_sum_probability(protocol, corr.c_pp()[:n, :n], c_pm, protocol.window / bath.t2, s)
    return float(result[0]) if s.ndim == 1 else result


@dataclass(frozen=True, eq=False)
class AuxiliaryCovariance:
    """ Covariance of the auxiliary phase field

    :param d_matrix: D_{l,l'} = δ t/t2 + 2C⁺⁺_{l,l'} (+ 2Σ_j C⁺⁻_{l,j}C⁺⁻_{l',j})
    :param factor: symmetric square root of the field covariance D/2
    :param clipped: True when small negative eigenvalues were set to zero
    """
    d_matrix: np.ndarray
    factor: np.ndarray
    clipped: bool = False
    include_quantum_term: bool = False

    convention = 'field_cov = D/2'

    @property
    def field_covariance(self) -> np.ndarray:
        return 0.5 * self.d_matrix


def build_aux_covariance(corr: CorrelationSet, protocol: MeasurementProtocol,
                         include_quantum_term: bool=False) -> AuxiliaryCovariance:
    """ Assembles and factorizes the auxiliary-field covariance

    :raises ModelViolationError: on an eigenvalue below -1e-10·trace
    """
    _check_cover(protocol, corr)
    n = protocol.n_measurements
    d = np.eye(n) * (protocol.window / corr.bath.t2) + 2.0 * corr.c_pp()[:n, :n]
    if include_quantum_term:
        if corr.c_pm_lags is None:
            raise DependencyError('Quantum term requested but correlations carry no C⁺⁻ blocks')
        c_pm = corr.c_pm()[:n, :n]
        d = d + 2.0 * c_pm @ c_pm.T
    d = 0.5 * (d + d.T)
    eigenvalues, vectors = scipy.linalg.eigh(d)
    floor = -PSD_TOLERANCE * np.trace(d)
    if eigenvalues[0] < floor:
        raise ModelViolationError('Covariance eigenvalue {:.3g} below tolerance {:.3g}'.format(eigenvalues[0], floor))
    clipped = bool(eigenvalues[0] < 0)
    if clipped:
        log.warning('Clipping covariance eigenvalue {:.3g} to zero'.format(eigenvalues[0]))
    root = np.sqrt(0.5 * np.clip(eigenvalues, 0.0, None))
    factor = (vectors * root[None, :]) @ vectors.T
    return AuxiliaryCovariance(d_matrix=d, factor=factor, clipped=clipped, include_quantum_term=include_quantum_term)


def _field_blocks(cov: AuxiliaryCovariance, protocol: MeasurementProtocol, n_records: int, seed):
    """ Yields (start, stop, phases, uniforms) for consecutive blocks of records

    Each block always draws a full block of variates so records never depend
    on the requested total.
    """
    n = protocol.n_measurements
    if cov.factor.shape != (n, n):
        raise DomainError('Covariance is {}x{}, protocol has {} measurements'.format(
            cov.factor.shape[0], cov.factor.shape[1], n))
    for start, stop, rng in helpers.record_blocks(seed, n_records):
        z = rng.standard_normal((helpers.RECORD_BLOCK, n))
        u = rng.random((helpers.RECORD_BLOCK, n))
        rows = stop - start
        yield start, stop, (z[:rows] @ cov.factor.T), u[:rows]


def sample_records(cov: AuxiliaryCovariance, protocol: MeasurementProtocol, n_records: int, seed) -> np.ndarray:
    """ Draws M outcome strings from the auxiliary-field representation

    φ ~ N(0, D/2) per record, then s_j = +1 with probability ½(1 + cos(2φ_j + θ)).

    :returns: (M, N) int8 array of ±1
    """
    records = np.empty((n_records, protocol.n_measurements), dtype=np.int8)
    for start, stop, phi, u in _field_blocks(cov, protocol, n_records, seed):
        p_plus = 0.5 * (1.0 + np.cos(2.0 * phi + protocol.theta))
        records[start:stop] = np.where(u < p_plus, 1, -1)
    log.debug('Sampled {} records of {} measurements'.format(n_records, protocol.n_measurements))
    return records


def joint_prob_mc(cov: Optional[AuxiliaryCovariance], protocol: MeasurementProtocol, record, n_samples: int, seed):
    """ Monte Carlo estimate of P_S = ⟨∏_j ½(1 + s_j cos(2φ_j + θ))⟩_φ

    Several records (a (K, N) stack) share the same field samples.

    :returns: (estimate, standard error), arrays for a stack of records
    """
    if cov is None:
        raise DependencyError('Monte Carlo probabilities need an auxiliary covariance')
    s = as_outcomes(record, protocol.n_measurements)
    stack = np.atleast_2d(s)
    total = np.zeros(len(stack))
    total_sq = np.zeros(len(stack))
    for _, _, phi, _ in _field_blocks(cov, protocol, n_samples, seed):
        c = np.cos(2.0 * phi + protocol.theta)
        values = np.prod(0.5 * (1.0 + stack[None, :, :] * c[:, None, :]), axis=2)
        total += values.sum(axis=0)
        total_sq += (values * values).sum(axis=0)
    mean = total / n_samples
    variance = np.maximum(total_sq / n_samples - mean * mean, 0.0) * n_samples / max(n_samples - 1, 1)
    se = np.sqrt(variance / n_samples)
    if s.ndim == 1:
        return float(mean[0]), float(se[0])
    return mean, se


def outcome_means(records: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """ Per-window mean of s and its standard error
    """
    records = np.asarray(records, dtype=float)
    m = len(records)
    return records.mean(axis=0), records.std(axis=0, ddof=1) / math.sqrt(m)


def expected_outcome_means(cov: AuxiliaryCovariance, protocol: MeasurementProtocol) -> np.ndarray:
    """ ⟨s_j⟩ = cos θ e^(-D_jj)
    """
    return math.cos(protocol.theta) * np.exp(-np.diag(cov.d_matrix))
