""" Window-integrated noise correlations

For a sequence of N Ramsey windows of duration t the slow thermal noise
enters through its correlation integrated over pairs of windows. The
bath is stationary, so every block depends only on the lag m = l - j and
is stored as a lag vector; matrices are expanded on demand.

Kernels:

* ``exact``: the window filter 4 sin²(ωt/2)/ω²
* ``small_window``: its small-ωt limit t², valid while the thermal cutoff keeps
  ωt ≪ 1

Lag vectors are cached per (bath, t, length, kernel). The cache stores
read-only arrays.
"""
import functools
import logging
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import retrying
import scipy.linalg
import scipy.optimize

from seq_thermometry import quadrature
from seq_thermometry.bath import bose_occupation, low_frequency_density, thermal_kernel, ThermalBath
from seq_thermometry.errors import DomainError, NotFoundError, NumericalError

log = logging.getLogger(__name__)

KERNELS = ('exact', 'small_window')
LAG_CHUNK = 256
# D_n²/D_0² below which lags no longer matter for the saturation value
SATURATION_RATIO = 1e-6
SATURATION_TAIL_RTOL = 1e-3


@dataclass(frozen=True)
class WindowGrid:
    t: float
    n_windows: int

    def __post_init__(self):
        if not self.t > 0:
            raise DomainError('Window duration must be positive, got {}'.format(self.t))
        if int(self.n_windows) != self.n_windows or self.n_windows < 1:
            raise DomainError('Need at least one window, got {}'.format(self.n_windows))


def _check_kernel(kernel: str):
    if kernel not in KERNELS:
        raise DomainError('Unknown window kernel {!r}, expected one of {}'.format(kernel, KERNELS))


def window_filter(omega: np.ndarray, t: float, kernel: str='exact') -> np.ndarray:
    """ |∫_0^t e^(iωτ) dτ|² = 4 sin²(ωt/2)/ω², or t² in small_window mode
    """
    if kernel == 'small_window':
        return np.full_like(omega, t * t)
    return t * t * np.sinc(omega * t / (2.0 * np.pi)) ** 2


def _sine_remainder(x: np.ndarray) -> np.ndarray:
    """ x - sin(x) without cancellation at small x
    """
    x2 = x * x
    series = x * x2 * (1.0 / 6.0 - x2 * (1.0 / 120.0 - x2 / 5040.0))
    return np.where(x < 1e-2, series, x - np.sin(x))


def _lag_vector(base, t: float, n_lags: int, upper: float, label: str,
                phase=np.cos) -> np.ndarray:
    """ ∫ base(ω) phase(mωt) dω for m = 0..n_lags-1, chunked over lags
    """
    values = np.empty(n_lags)
    reference = 0.0
    for start in range(0, n_lags, LAG_CHUNK):
        lags = np.arange(start, min(start + LAG_CHUNK, n_lags), dtype=float)

        def integrand(omega, lags=lags):
            return base(omega)[None, :] * phase(np.outer(lags, omega * t))

        panels = quadrature.panels_for_phase((lags[-1] + 1.0) * upper * t)
        chunk = quadrature.integrate(integrand, upper, panels=panels, reference=reference,
                                     label='{} lags {}..{}'.format(label, int(lags[0]), int(lags[-1])))
        values[start:start + len(lags)] = chunk
        reference = max(reference, float(np.max(np.abs(chunk))))
    values.setflags(write=False)
    return values


@functools.lru_cache(maxsize=256)
def classical_lags(bath: ThermalBath, t: float, n_lags: int, kernel: str='exact') -> np.ndarray:
    """ C⁺⁺_m = ∫ J(ω)·2n̄(ω)·K(ω)·cos(mωt) dω for m = 0..n_lags-1
    """
    _check_kernel(kernel)

    def base(omega):
        return (2.0 * bath.spectral.density(omega) * bose_occupation(bath.beta, omega)
                * window_filter(omega, t, kernel))

    return _lag_vector(base, t, n_lags, bath.thermal_upper(), 'classical correlation')


@functools.lru_cache(maxsize=256)
def derivative_lags(bath: ThermalBath, t: float, n_lags: int, kernel: str='exact') -> np.ndarray:
    """ D_m = -dC⁺⁺_m/dβ = 2∫ ω J(ω) n̄(1 + n̄) K(ω) cos(mωt) dω
    """
    _check_kernel(kernel)

    def base(omega):
        return (2.0 * omega * bath.spectral.density(omega) * thermal_kernel(bath.beta, omega)
                * window_filter(omega, t, kernel))

    return _lag_vector(base, t, n_lags, bath.thermal_upper(), 'temperature derivative')


@functools.lru_cache(maxsize=256)
def quantum_lags(bath: ThermalBath, t: float, n_lags: int) -> np.ndarray:
    """ Commutator blocks C⁺⁻ for window l following window j by m = l - j ≥ 0

    The retarded kernel -2Θ(τ₁ - τ₂)∫ J_L(ω) sin(ω(τ₁ - τ₂)) dω integrated
    over the two windows; the m = 0 block only keeps the ordered half of the
    window.
    """
    upper = bath.thermal_upper()

    def same_window(omega):
        return -2.0 * low_frequency_density(bath, omega) * _sine_remainder(omega * t) / (omega * omega)

    values = np.empty(n_lags)
    values[0] = quadrature.integrate(same_window, upper, panels=quadrature.panels_for_phase(upper * t),
                                     label='quantum correlation lag 0')
    if n_lags > 1:
        def base(omega):
            return -2.0 * low_frequency_density(bath, omega) * window_filter(omega, t)

        values[1:] = _lag_vector(base, t, n_lags, upper, 'quantum correlation', phase=np.sin)[1:]
    values.setflags(write=False)
    return values


@functools.lru_cache(maxsize=1024)
def decoherence_gamma(bath: ThermalBath, t: float) -> float:
    """ Γ(t) = 4∫ J(ω)(2n̄ + 1)(1 - cos ωt)/ω² dω

    Includes the vacuum part, so the integral runs to the spectral cutoff
    rather than the thermal one.
    """
    if t < 0:
        raise DomainError('Window duration must be nonnegative, got {}'.format(t))
    if t == 0:
        return 0.0
    upper = bath.spectral.upper_frequency()

    def integrand(omega):
        coth = 1.0 / np.tanh(0.5 * bath.beta * omega)
        return 2.0 * bath.spectral.density(omega) * coth * window_filter(omega, t)

    return quadrature.integrate(integrand, upper, panels=quadrature.panels_for_phase(upper * t),
                                label='decoherence function')


@functools.lru_cache(maxsize=1024)
def independent_d0(bath: ThermalBath, t: float) -> float:
    """ D₀ = -½ dΓ/dβ = 4∫ (J/ω) n̄(1 + n̄)(1 - cos ωt) dω
    """
    if t < 0:
        raise DomainError('Window duration must be nonnegative, got {}'.format(t))
    if t == 0:
        return 0.0
    upper = bath.thermal_upper()

    def integrand(omega):
        return (2.0 * omega * bath.spectral.density(omega) * thermal_kernel(bath.beta, omega)
                * window_filter(omega, t))

    return quadrature.integrate(integrand, upper, panels=quadrature.panels_for_phase(upper * t),
                                label='independent D0')


def coherence_time_solve(bath: ThermalBath, gamma=None, tol: float=1e-8) -> float:
    """ Solves Γ(t*) = 1

    The bracket starts at 1/ω_c and is widened by doubling (or halving)
    within [1e-9/ω_c, 1e9/ω_c]; the root is then found by bisection.

    :param gamma: Γ as a function of t, defaults to :func:`decoherence_gamma`
    """
    if gamma is None:
        gamma = functools.partial(decoherence_gamma, bath)
    scale = 1.0 / getattr(bath.spectral, 'omega_c', 1.0)
    lowest, highest = 1e-9 * scale, 1e9 * scale
    state = {'lo': scale, 'hi': scale}
    grow = gamma(scale) < 1.0

    @retrying.retry(stop_max_attempt_number=70,
                    retry_on_result=lambda ret: ret is False,
                    retry_on_exception=lambda x: False)
    def _bracket():
        if grow:
            state['lo'], state['hi'] = state['hi'], min(2.0 * state['hi'], highest)
            return gamma(state['hi']) >= 1.0 or state['hi'] >= highest
        state['lo'], state['hi'] = max(0.5 * state['lo'], lowest), state['lo']
        return gamma(state['lo']) <= 1.0 or state['lo'] <= lowest

    try:
        _bracket()
    except retrying.RetryError as ex:
        raise NotFoundError('No bracket for Γ(t) = 1') from ex
    f_lo, f_hi = gamma(state['lo']) - 1.0, gamma(state['hi']) - 1.0
    if f_lo > 0 or f_hi < 0:
        raise NotFoundError('No bracket for Γ(t) = 1 within [{:.3g}, {:.3g}]'.format(lowest, highest))
    if f_lo == 0:
        return state['lo']
    if f_hi == 0:
        return state['hi']
    root = scipy.optimize.bisect(lambda t: gamma(t) - 1.0, state['lo'], state['hi'],
                                 xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)
    residual = abs(gamma(root) - 1.0)
    if residual >= tol:
        raise NumericalError('Bisection for Γ(t) = 1 stalled', t=root, residual=residual)
    log.debug('Coherence time {:.6g} (residual {:.1e})'.format(root, residual))
    return root


@dataclass(frozen=True, eq=False)
class CorrelationSet:
    """ Correlation blocks for one bath and one window grid

    :param c_pp_lags: C⁺⁺ lag vector, m = 0..N-1
    :param c_pm_lags: C⁺⁻ lag vector (window l after window j by m), or None
    :param d_lags: D_m = -dC⁺⁺_m/dβ
    """
    bath: ThermalBath
    grid: WindowGrid
    c_pp_lags: np.ndarray = field(repr=False)
    d_lags: np.ndarray = field(repr=False)
    c_pm_lags: Optional[np.ndarray] = field(default=None, repr=False)
    kernel: str = 'exact'

    @property
    def n_windows(self) -> int:
        return self.grid.n_windows

    @property
    def d0_independent(self) -> float:
        """ D₀ of a single independent window of duration t
        """
        return independent_d0(self.bath, self.grid.t)

    @property
    def gamma_of_t(self) -> float:
        """ Spectral decoherence function Γ(t), vacuum part included
        """
        return decoherence_gamma(self.bath, self.grid.t)

    def c_pp(self) -> np.ndarray:
        return scipy.linalg.toeplitz(self.c_pp_lags)

    def c_pm(self) -> np.ndarray:
        """ Lower-triangular C⁺⁻_{l,j}; zero whenever window l precedes window j
        """
        if self.c_pm_lags is None:
            return np.zeros((self.n_windows, self.n_windows))
        return scipy.linalg.toeplitz(self.c_pm_lags, np.zeros(self.n_windows))

    def max_offdiag_c_pp(self) -> float:
        if self.n_windows < 2:
            return 0.0
        return float(np.max(np.abs(self.c_pp_lags[1:])))

    def window_decoherence(self) -> float:
        """ Decoherence the sequential model assigns to one window: t/t2 + 2C⁺⁺₀
        """
        return self.grid.t / self.bath.t2 + 2.0 * self.c_pp_lags[0]


def compute_correlations(bath: ThermalBath, grid: WindowGrid, kernel: str='exact',
                         include_quantum: bool=True) -> CorrelationSet:
    n = grid.n_windows
    return CorrelationSet(
        bath=bath,
        grid=grid,
        c_pp_lags=classical_lags(bath, grid.t, n, kernel),
        d_lags=derivative_lags(bath, grid.t, n, kernel),
        c_pm_lags=quantum_lags(bath, grid.t, n) if include_quantum else None,
        kernel=kernel)


def _check_lag(grid: WindowGrid, lag: int):
    if int(lag) != lag or not 0 <= lag < grid.n_windows:
        raise DomainError('Lag must be in [0, {}], got {}'.format(grid.n_windows - 1, lag))


def block_classical_correlation(bath: ThermalBath, grid: WindowGrid, lag: int, kernel: str='exact') -> float:
    _check_lag(grid, lag)
    return float(classical_lags(bath, grid.t, int(lag) + 1, kernel)[lag])


def block_quantum_correlation(bath: ThermalBath, grid: WindowGrid, lag: int) -> float:
    _check_lag(grid, lag)
    return float(quantum_lags(bath, grid.t, int(lag) + 1)[lag])


def temp_derivative_blocks(bath: ThermalBath, grid: WindowGrid, kernel: str='exact') -> np.ndarray:
    return derivative_lags(bath, grid.t, grid.n_windows, kernel)


def lag_ratios(d_lags) -> np.ndarray:
    """ D_n²/D_0²
    """
    d_lags = np.asarray(d_lags, dtype=float)
    if not d_lags.size or not d_lags[0] > 0:
        raise DomainError('D_0 must be positive')
    return (d_lags / d_lags[0]) ** 2


class CorrelationLength(NamedTuple):
    n_c: float
    n_c_floor: int


def correlation_length(d_lags) -> CorrelationLength:
    """ First lag n with D_n²/D_0² ≤ 1/e

    The interpolated value is refined on the logarithm of the ratio, which
    is exact for geometric decay.
    """
    ratios = lag_ratios(d_lags)
    crossed = np.nonzero(ratios <= math.exp(-1.0))[0]
    if not crossed.size:
        raise NotFoundError('Lag ratio stays above 1/e up to lag {}; use more windows'.format(len(ratios) - 1))
    n = int(crossed[0])
    upper, lower = math.log(ratios[n - 1]), math.log(ratios[n]) if ratios[n] > 0 else -np.inf
    n_c = (n - 1) + (upper + 1.0) / (upper - lower)
    return CorrelationLength(n_c=n_c, n_c_floor=n)


def n_cor_curve(d_lags, ns) -> np.ndarray:
    """ N_cor(N) = (2/N)Σ_{l=1}^{N-1}(N - l)·D_l²/D_0² for every N in ``ns``

    Lags beyond the end of ``d_lags`` are taken as zero; callers pass lags
    out to the decay horizon (see :func:`decay_horizon`).
    """
    ratios = lag_ratios(d_lags)
    ns = np.asarray(ns, dtype=int)
    if np.any(ns < 1):
        raise DomainError('N must be at least 1')
    lags = np.arange(len(ratios))
    first = np.concatenate([[0.0], np.cumsum(ratios[1:])])
    second = np.concatenate([[0.0], np.cumsum(lags[1:] * ratios[1:])])
    top = np.minimum(ns - 1, len(ratios) - 1)
    return 2.0 * (ns * first[top] - second[top]) / ns


def n_cor(d_lags, n: int) -> float:
    if len(d_lags) < n:
        raise DomainError('n_cor({}) needs {} lags, got {}'.format(n, n, len(d_lags)))
    return float(n_cor_curve(d_lags, [n])[0])


def n_saturation(d_lags) -> float:
    """ N_s = 2Σ_{l≥1} D_l²/D_0², the large-N limit of N_cor

    The tail beyond the last available lag is estimated from the local
    geometric decay rate and must be below 1e-3 of the sum.
    """
    ratios = lag_ratios(d_lags)
    if len(ratios) < 3 or ratios[-1] >= SATURATION_RATIO:
        raise NotFoundError('Lag ratio has not decayed below {} by lag {}; use more lags'.format(
            SATURATION_RATIO, len(ratios) - 1))
    rho = ratios[-1] / ratios[-2] if ratios[-2] > 0 else 0.0
    if rho >= 1.0:
        raise NotFoundError('Lag ratio is not decaying at lag {}'.format(len(ratios) - 1))
    partial = float(np.sum(ratios[1:]))
    tail = ratios[-1] * rho / (1.0 - rho)
    if tail > SATURATION_TAIL_RTOL * partial:
        raise NotFoundError('Tail bound {:.3g} exceeds {} of the lag sum'.format(tail, SATURATION_TAIL_RTOL))
    return 2.0 * (partial + tail)


def decay_horizon(bath: ThermalBath, t: float, kernel: str='exact', start: int=256, limit: int=1 << 17) -> int:
    """ Number of lags after which D_n²/D_0² has dropped below the saturation threshold

    Doubles the lag count until the last ratio is small enough.
    """
    state = {'n': start // 2}

    @retrying.retry(stop_max_attempt_number=int(math.log2(limit / start)) + 1,
                    retry_on_result=lambda ret: ret is False,
                    retry_on_exception=lambda x: False)
    def _grow():
        state['n'] *= 2
        ratios = lag_ratios(derivative_lags(bath, t, state['n'], kernel))
        return bool(ratios[-1] < SATURATION_RATIO)

    try:
        _grow()
    except retrying.RetryError as ex:
        raise NotFoundError('Lag ratio did not decay below {} within {} lags'.format(
            SATURATION_RATIO, state['n'])) from ex
    return state['n']
