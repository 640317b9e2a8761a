""" Noise spectroscopy from sequential records

At θ = π/2 the covariance of two outcomes is proportional to the
correlation block of their windows, S_{j,i} ≈ κ e^(-2t/t2) C⁺⁺_{j-i}.
Averaging S over equal lags and dividing out the prefactor recovers the
lag sequence; its cosine transform is the window-filtered thermal
spectrum. The frequency resolution 2π/(N t) is set by the length of the
record, not by the coherence time of the thermometer.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from seq_thermometry import sequential
from seq_thermometry.bath import bose_occupation, ThermalBath
from seq_thermometry.correlations import window_filter
from seq_thermometry.errors import DependencyError, DomainError, InsufficientDataError
from seq_thermometry.sequential import MeasurementProtocol

log = logging.getLogger(__name__)

CALIBRATION_COUPLING = 1e-6
WINDOWS = ('rectangular', 'hann')
MIN_SPECTRUM_LAGS = 8


@dataclass(frozen=True, eq=False)
class PairCorrelationMatrix:
    """ Empirical S_{j,i} = ⟨s_j s_i⟩ - ⟨s_j⟩⟨s_i⟩ with standard errors
    """
    s_matrix: np.ndarray = field(repr=False)
    se_matrix: np.ndarray = field(repr=False)
    n_records: int

    @property
    def n_measurements(self) -> int:
        return self.s_matrix.shape[0]


def pair_correlation_matrix(records) -> PairCorrelationMatrix:
    """ Unbiased covariance of outcome pairs across records

    The standard error of each entry is sqrt((mean((x_j x_i)²) - S²)/M)
    with x the centred outcomes.
    """
    records = np.atleast_2d(np.asarray(records, dtype=float))
    m = records.shape[0]
    if m < 2:
        raise InsufficientDataError('Need at least two records, got {}'.format(m))
    x = records - records.mean(axis=0)
    s = x.T @ x / (m - 1)
    x2 = x * x
    second = x2.T @ x2 / m
    se = np.sqrt(np.clip(second - s * s, 0.0, None) / m)
    return PairCorrelationMatrix(s_matrix=s, se_matrix=se, n_records=m)


def calibrate_prefactor(protocol: MeasurementProtocol, t2: float, c0: float=0.0,
                        coupling: float=CALIBRATION_COUPLING) -> float:
    """ κ in S_{2,1} = κ e^(-2t/t2) C⁺⁺₁, from the exact two-window path sum

    :param c0: same-window block C⁺⁺₀ of the bath, if known
    """
    pair = protocol.with_n(2)
    c_pp = np.array([[c0, coupling], [coupling, c0]])
    records = sequential.all_records(2)
    p = sequential.path_sum_probability(pair, c_pp, np.zeros((2, 2)), protocol.window / t2, records)
    mean_1 = np.dot(p, records[:, 0])
    mean_2 = np.dot(p, records[:, 1])
    covariance = np.dot(p, records[:, 0] * records[:, 1]) - mean_1 * mean_2
    kappa = covariance / (math.exp(-2.0 * protocol.window / t2) * coupling)
    if not abs(kappa) > 1e-12:
        raise DependencyError('Pair covariance does not respond to correlations at theta = {}'.format(protocol.theta))
    log.debug('Calibrated kappa = {:.12g}'.format(kappa))
    return float(kappa)


class LagSequence(NamedTuple):
    lags: np.ndarray
    c_hat: np.ndarray
    se: np.ndarray


def toeplitz_average(matrix: np.ndarray, se_matrix: np.ndarray):
    """ Mean of each superdiagonal m = 1..N-1 and its standard error
    """
    n = matrix.shape[0]
    means, errors = np.empty(n - 1), np.empty(n - 1)
    for m in range(1, n):
        values = np.diagonal(matrix, offset=m)
        means[m - 1] = values.mean()
        errors[m - 1] = math.sqrt(np.mean(np.diagonal(se_matrix, offset=m) ** 2) / len(values))
    return means, errors


def reconstruct_correlation(pcm: PairCorrelationMatrix, protocol: MeasurementProtocol, t2: float,
                            kappa: float=None, c0: float=0.0) -> LagSequence:
    """ Ĉ⁺⁺_m = S̄_m/(κ e^(-2t/t2)) for m = 0..N-1

    The same-window block is not observable from pair covariances; lag 0
    repeats lag 1.
    """
    if not math.isclose(protocol.theta, math.pi / 2):
        raise DomainError('Spectroscopy needs records taken at theta = pi/2')
    if pcm.n_measurements < 2:
        raise InsufficientDataError('Need at least two measurements per record')
    if kappa is None:
        kappa = calibrate_prefactor(protocol, t2, c0)
    scale = kappa * math.exp(-2.0 * protocol.window / t2)
    means, errors = toeplitz_average(pcm.s_matrix, pcm.se_matrix)
    c_hat = np.concatenate([means[:1], means]) / scale
    se = np.concatenate([errors[:1], errors]) / abs(scale)
    return LagSequence(np.arange(pcm.n_measurements), c_hat, se)


class Spectrum(NamedTuple):
    omega: np.ndarray
    power: np.ndarray
    se: np.ndarray

    @property
    def resolution(self) -> float:
        return float(self.omega[1] - self.omega[0])


def lag_window(n: int, window: str='rectangular') -> np.ndarray:
    if window == 'rectangular':
        return np.ones(n)
    if window == 'hann':
        return 0.5 * (1.0 + np.cos(np.pi * np.arange(n) / n))
    raise DomainError('Unknown window {!r}, expected one of {}'.format(window, WINDOWS))


def noise_spectrum(lag_sequence: LagSequence, protocol: MeasurementProtocol, window: str='rectangular') -> Spectrum:
    """ Even cosine transform of the lag sequence

    power(ω_k) = (t/π)[w₀Ĉ₀ + 2Σ_m w_m Ĉ_m cos(mω_k t)] on ω_k = 2πk/(N t),
    k = 0..N/2, an estimate of 2J(ω)n̄(ω)·4sin²(ωt/2)/ω².
    """
    c_hat = np.asarray(lag_sequence.c_hat, dtype=float)
    se = np.asarray(lag_sequence.se, dtype=float)
    n = len(c_hat)
    if n < MIN_SPECTRUM_LAGS:
        raise DomainError('Need at least {} lags for a spectrum, got {}'.format(MIN_SPECTRUM_LAGS, n))
    t = protocol.window
    weights = lag_window(n, window) * np.where(np.arange(n) == 0, 1.0, 2.0)
    omega = 2.0 * np.pi * np.arange(n // 2 + 1) / (n * t)
    basis = np.cos(np.outer(omega * t, np.arange(n)))
    power = (t / np.pi) * basis @ (weights * c_hat)
    power_se = (t / np.pi) * np.sqrt((basis ** 2) @ ((weights * se) ** 2))
    return Spectrum(omega, power, power_se)


def reference_spectrum(bath: ThermalBath, protocol: MeasurementProtocol, omega) -> np.ndarray:
    """ 2J(ω)n̄(ω)·4sin²(ωt/2)/ω², the quantity :func:`noise_spectrum` estimates
    """
    omega = np.asarray(omega, dtype=float)
    positive = np.where(omega > 0, omega, 1.0)
    filtered = (2.0 * bath.spectral.density(positive) * bose_occupation(bath.beta, positive)
                * window_filter(positive, protocol.window))
    # J·n̄ stays finite at the origin for s ≥ 1; take its value just above zero
    limit = 2.0 * bath.spectral.density(1e-12) * bose_occupation(bath.beta, 1e-12) * protocol.window ** 2
    return np.where(omega > 0, filtered, limit)
