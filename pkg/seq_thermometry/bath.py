""" Thermal sample model

The sample couples to the thermometer through a bosonic noise operator
characterized by its spectral density J(ω). Units are ħ = k_B = 1, so β
is measured in time and all frequencies are angular frequencies.
"""
import abc
import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from seq_thermometry import quadrature
from seq_thermometry.errors import DomainError

log = logging.getLogger(__name__)

# βω beyond which thermal integrands are dropped (e^-40 ~ 4e-18)
THERMAL_CUTOFF = 40.0
# ω_c multiples beyond which the exponential cutoff makes J negligible
SPECTRAL_CUTOFF = 50.0


def _as_frequencies(omega, allow_zero: bool=True) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if np.any(omega < 0) or (not allow_zero and np.any(omega == 0)):
        raise DomainError('Frequency must be {}: {}'.format(
            'nonnegative' if allow_zero else 'positive', omega))
    return omega


def _unwrap(value: np.ndarray):
    return float(value) if np.ndim(value) == 0 else value


class SpectralDensity(abc.ABC):
    """ Interface for bath spectral densities J(ω)

    Implementations must be immutable and hashable: correlation lag vectors
    are cached per bath.
    """

    @abc.abstractmethod
    def density(self, omega: np.ndarray) -> np.ndarray:
        """ J evaluated at nonnegative frequencies
        """

    @abc.abstractmethod
    def upper_frequency(self) -> float:
        """ Frequency above which J is negligible for quadrature purposes
        """

    def scaled(self, factor: float) -> 'SpectralDensity':
        raise NotImplementedError('{} does not support rescaling'.format(type(self).__name__))


@dataclass(frozen=True)
class OhmicSpectralDensity(SpectralDensity):
    """ J(ω) = α ω^s ω_c^(1-s) e^(-ω/ω_c)

    :param alpha: dimensionless coupling strength
    :param s_exponent: Ohmicity s (s = 1 is Ohmic)
    :param omega_c: cutoff frequency
    """
    alpha: float
    s_exponent: float = 1.0
    omega_c: float = 10.0

    family = 'ohmic-class'

    def __post_init__(self):
        for name in ('alpha', 's_exponent', 'omega_c'):
            if not getattr(self, name) > 0:
                raise DomainError('{} must be positive, got {}'.format(name, getattr(self, name)))

    def density(self, omega):
        omega = np.asarray(omega, dtype=float)
        return (self.alpha * np.power(omega, self.s_exponent) * self.omega_c ** (1.0 - self.s_exponent)
                * np.exp(-omega / self.omega_c))

    def upper_frequency(self) -> float:
        return SPECTRAL_CUTOFF * self.omega_c

    def scaled(self, factor: float) -> 'OhmicSpectralDensity':
        return replace(self, alpha=self.alpha * factor)


@dataclass(frozen=True)
class ThermalBath:
    """ Sample at inverse temperature ``beta`` plus the white-noise dephasing
    time ``t2`` that absorbs the vacuum part of the noise and any
    temperature-independent dephasing
    """
    beta: float
    spectral: SpectralDensity
    t2: float

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError('beta must be positive, got {}'.format(self.beta))
        if not self.t2 > 0:
            raise DomainError('t2 must be positive, got {}'.format(self.t2))

    @property
    def hbar_beta_over_t2(self) -> float:
        return self.beta / self.t2

    def at_beta(self, beta: float) -> 'ThermalBath':
        return replace(self, beta=beta)

    def thermal_upper(self) -> float:
        """ Upper quadrature limit for integrands carrying a Bose factor
        """
        return min(THERMAL_CUTOFF / self.beta, self.spectral.upper_frequency())


def spectral_density_at(sd: SpectralDensity, omega):
    omega = _as_frequencies(omega)
    return _unwrap(sd.density(omega))


def bose_occupation(beta: float, omega):
    """ n̄ = 1/(e^(βω) - 1), evaluated without overflow for large βω
    """
    if not beta > 0:
        raise DomainError('beta must be positive, got {}'.format(beta))
    omega = _as_frequencies(omega, allow_zero=False)
    x = beta * omega
    return _unwrap(np.exp(-x) / -np.expm1(-x))


def thermal_kernel(beta: float, omega):
    """ n̄(1 + n̄) = 1/(4 sinh²(βω/2))

    Diverges as 1/(βω)² at the origin; integrands always multiply it by a
    power of ω, so ω = 0 is rejected here.
    """
    if not beta > 0:
        raise DomainError('beta must be positive, got {}'.format(beta))
    omega = _as_frequencies(omega, allow_zero=False)
    x = beta * omega
    with np.errstate(over='ignore'):
        kernel = np.where(x < 700.0, 0.25 / np.sinh(0.5 * np.minimum(x, 700.0)) ** 2, np.exp(-x))
    return _unwrap(kernel)


def low_frequency_density(bath: ThermalBath, omega):
    """ Spectral weight of the slow, temperature-carrying noise component

    J_L = 2J/(e^(βω) + 1). Its symmetrized spectrum J_L·(2n̄ + 1) equals the
    thermal part 2J·n̄ of the full noise; the remainder J·tanh(βω/2) is the
    vacuum part carried by the white-noise rate 1/t2.
    """
    omega = _as_frequencies(omega)
    return _unwrap(bath.spectral.density(omega) * (1.0 - np.tanh(0.5 * bath.beta * omega)))


def effective_coupling_g2(bath: ThermalBath) -> float:
    """ g² = 4β ∫ ω J(ω) n̄(1 + n̄) dω
    """
    def integrand(omega):
        return omega * bath.spectral.density(omega) * thermal_kernel(bath.beta, omega)

    value = quadrature.integrate(integrand, bath.thermal_upper(), label='effective coupling g2')
    return 4.0 * bath.beta * value


def landau_product(bath: ThermalBath) -> float:
    """ g·t2; the independent scheme reaches the Landau bound near 1
    """
    return math.sqrt(effective_coupling_g2(bath)) * bath.t2
