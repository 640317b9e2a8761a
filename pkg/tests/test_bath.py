import math

import numpy as np
import pytest

from seq_thermometry import bath
from seq_thermometry.bath import OhmicSpectralDensity, SpectralDensity, ThermalBath
from seq_thermometry.errors import DomainError


def test_ohmic_density():
    sd = OhmicSpectralDensity(alpha=0.1, s_exponent=1.0, omega_c=10.0)
    assert bath.spectral_density_at(sd, 10.0) == pytest.approx(0.1 * 10.0 * math.exp(-1.0))
    assert bath.spectral_density_at(sd, 0.0) == 0.0


def test_super_ohmic_density():
    sd = OhmicSpectralDensity(alpha=0.5, s_exponent=3.0, omega_c=2.0)
    assert bath.spectral_density_at(sd, 1.0) == pytest.approx(0.5 * 2.0 ** -2 * math.exp(-0.5))


def test_density_rejects_negative_frequency():
    with pytest.raises(DomainError):
        bath.spectral_density_at(OhmicSpectralDensity(alpha=0.1), [-1.0, 1.0])


@pytest.mark.parametrize('field', ['alpha', 's_exponent', 'omega_c'])
def test_ohmic_validation(field):
    params = {'alpha': 0.1, 's_exponent': 1.0, 'omega_c': 10.0}
    params[field] = 0.0
    with pytest.raises(DomainError):
        OhmicSpectralDensity(**params)


def test_spectral_density_is_abstract():
    with pytest.raises(TypeError):
        SpectralDensity()


def test_scaled():
    assert OhmicSpectralDensity(alpha=0.1).scaled(2.0).alpha == pytest.approx(0.2)


def test_thermal_bath(reference_bath):
    assert reference_bath.hbar_beta_over_t2 == pytest.approx(1000.0)
    assert reference_bath.thermal_upper() == pytest.approx(0.4)
    assert reference_bath.at_beta(5.0).beta == 5.0
    assert reference_bath.at_beta(5.0).spectral == reference_bath.spectral
    with pytest.raises(DomainError):
        ThermalBath(beta=-1.0, t2=0.1, spectral=reference_bath.spectral)
    with pytest.raises(DomainError):
        ThermalBath(beta=1.0, t2=0.0, spectral=reference_bath.spectral)


def test_bose_occupation():
    assert bath.bose_occupation(1.0, 1.0) == pytest.approx(1.0 / (math.e - 1.0))
    assert bath.bose_occupation(2.0, [0.5, 1.0]) == pytest.approx(1.0 / np.expm1([1.0, 2.0]))


def test_bose_occupation_large_argument():
    value = bath.bose_occupation(1.0, 800.0)
    assert value >= 0.0
    assert math.isfinite(value)


def test_bose_occupation_domain():
    with pytest.raises(DomainError):
        bath.bose_occupation(1.0, 0.0)
    with pytest.raises(DomainError):
        bath.bose_occupation(1.0, -1.0)
    with pytest.raises(DomainError):
        bath.bose_occupation(0.0, 1.0)


def test_thermal_kernel_matches_occupation():
    omega = np.array([0.01, 0.7, 3.0, 40.0])
    n = bath.bose_occupation(2.0, omega)
    assert bath.thermal_kernel(2.0, omega) == pytest.approx(n * (1.0 + n), rel=1e-12)
    assert bath.thermal_kernel(1.0, 600.0) == pytest.approx(math.exp(-600.0))


def test_thermal_kernel_rejects_origin():
    with pytest.raises(DomainError):
        bath.thermal_kernel(1.0, 0.0)


def test_low_frequency_split(hot_bath):
    omega = np.linspace(0.0, 5.0, 11)
    density = hot_bath.spectral.density(omega)
    high = density * np.tanh(0.5 * hot_bath.beta * omega)
    assert bath.low_frequency_density(hot_bath, omega) + high == pytest.approx(density)
    # symmetrized spectrum of the slow part is the thermal part 2Jn̄
    positive = omega[1:]
    symmetrized = bath.low_frequency_density(hot_bath, positive) * (
        2.0 * bath.bose_occupation(hot_bath.beta, positive) + 1.0)
    assert symmetrized == pytest.approx(2.0 * density[1:] * bath.bose_occupation(hot_bath.beta, positive))


def test_effective_coupling_low_temperature(reference_bath):
    # βω_c = 1000: the cutoff is irrelevant and g² = 4απ²/(3β²)
    expected = 4.0 * 0.1 * math.pi ** 2 / (3.0 * 100.0 ** 2)
    assert bath.effective_coupling_g2(reference_bath) == pytest.approx(expected, rel=5e-3)


def test_landau_product(reference_bath):
    g2 = bath.effective_coupling_g2(reference_bath)
    assert bath.landau_product(reference_bath) == pytest.approx(math.sqrt(g2) * 0.1)


def test_thermal_kernel_sinh_form_over_decades():
    x = np.logspace(-6, math.log10(30.0), 400)
    n = bath.bose_occupation(1.0, x)
    assert bath.thermal_kernel(1.0, x) == pytest.approx(n * (1.0 + n), rel=1e-12)


def test_thermal_kernel_is_monotone():
    omega = np.geomspace(1e-3, 50.0, 200)
    assert np.all(np.diff(bath.thermal_kernel(1.0, omega)) < 0)
    betas = np.geomspace(0.1, 20.0, 50)
    assert np.all(np.diff([bath.thermal_kernel(b, 0.7) for b in betas]) < 0)


def test_effective_coupling_falls_with_beta(hot_bath):
    g2 = [bath.effective_coupling_g2(hot_bath.at_beta(b)) for b in (0.5, 1.0, 2.0, 4.0, 8.0)]
    assert np.all(np.diff(g2) < 0)
