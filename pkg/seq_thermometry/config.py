""" Run configuration

Configuration files are INI files with three sections:

.. code-block:: ini

   [bath]
   alpha = 0.1
   s_exponent = 1.0
   omega_c = 10.0
   beta = 100.0
   t2 = 0.1

   [protocol]
   n_measurements = 100
   window = 0.1
   theta = 1.5707963267948966

   [run]
   seed = 0
   trials = 2000
   out = out
   kernel = exact
   quantum_term = false
   n_max = 10000
   beta_lo =
   beta_hi =
   spectrum_window = rectangular

Missing keys take the defaults above; unknown sections or keys are errors.
"""
import configparser
import dataclasses
import logging
import math
from dataclasses import dataclass
from typing import Optional

from seq_thermometry.bath import OhmicSpectralDensity, ThermalBath
from seq_thermometry.correlations import KERNELS
from seq_thermometry.errors import ConfigError, DomainError
from seq_thermometry.sequential import MeasurementProtocol
from seq_thermometry.spectroscopy import WINDOWS

log = logging.getLogger(__name__)


def _positive(section: str, name: str, value):
    if value is None or not value > 0:
        raise ConfigError('[{}] {} must be positive, got {}'.format(section, name, value))


@dataclass(frozen=True)
class BathConfig:
    alpha: float = 0.1
    s_exponent: float = 1.0
    omega_c: float = 10.0
    beta: float = 100.0
    t2: float = 0.1

    def __post_init__(self):
        for f in dataclasses.fields(self):
            _positive('bath', f.name, getattr(self, f.name))

    def build(self) -> ThermalBath:
        return ThermalBath(beta=self.beta, t2=self.t2, spectral=OhmicSpectralDensity(
            alpha=self.alpha, s_exponent=self.s_exponent, omega_c=self.omega_c))


@dataclass(frozen=True)
class ProtocolConfig:
    n_measurements: int = 100
    window: float = 0.1
    theta: float = math.pi / 2

    def __post_init__(self):
        _positive('protocol', 'n_measurements', self.n_measurements)
        _positive('protocol', 'window', self.window)
        if not 0.0 <= self.theta <= math.pi:
            raise ConfigError('[protocol] theta must lie in [0, pi], got {}'.format(self.theta))

    def build(self) -> MeasurementProtocol:
        return MeasurementProtocol(n_measurements=self.n_measurements, window=self.window, theta=self.theta)


@dataclass(frozen=True)
class RunSettings:
    seed: int = 0
    trials: int = 2000
    out: str = 'out'
    kernel: str = 'exact'
    quantum_term: bool = False
    n_max: int = 10000
    beta_lo: Optional[float] = None
    beta_hi: Optional[float] = None
    spectrum_window: str = 'rectangular'

    def __post_init__(self):
        if self.seed < 0:
            raise ConfigError('[run] seed must be nonnegative, got {}'.format(self.seed))
        if self.trials < 0:
            raise ConfigError('[run] trials must be nonnegative, got {}'.format(self.trials))
        _positive('run', 'n_max', self.n_max)
        if self.kernel not in KERNELS:
            raise ConfigError('[run] kernel must be one of {}, got {!r}'.format(KERNELS, self.kernel))
        if self.spectrum_window not in WINDOWS:
            raise ConfigError('[run] spectrum_window must be one of {}, got {!r}'.format(
                WINDOWS, self.spectrum_window))
        for name in ('beta_lo', 'beta_hi'):
            if getattr(self, name) is not None:
                _positive('run', name, getattr(self, name))
        if self.beta_lo is not None and self.beta_hi is not None and not self.beta_lo < self.beta_hi:
            raise ConfigError('[run] beta_lo must be below beta_hi')


SECTIONS = {'bath': BathConfig, 'protocol': ProtocolConfig, 'run': RunSettings}


def _convert(section: str, f: dataclasses.Field, raw: str):
    kind = f.type
    try:
        if kind is bool:
            return configparser.ConfigParser.BOOLEAN_STATES[raw.strip().lower()]
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind == Optional[float]:
            return float(raw) if raw.strip() else None
        return raw.strip()
    except (KeyError, ValueError):
        raise ConfigError('[{}] {}: cannot parse {!r}'.format(section, f.name, raw))


def _format(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    bath: BathConfig = BathConfig()
    protocol: ProtocolConfig = ProtocolConfig()
    run: RunSettings = RunSettings()

    @classmethod
    def default(cls) -> 'RunConfig':
        return cls()

    @classmethod
    def from_string(cls, text: str, source: str='<string>') -> 'RunConfig':
        parser = configparser.ConfigParser(interpolation=None)
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as ex:
            raise ConfigError('Cannot parse {}: {}'.format(source, ex)) from ex
        unknown = set(parser.sections()) - set(SECTIONS)
        if unknown:
            raise ConfigError('{}: unknown sections {}'.format(source, sorted(unknown)))
        parts = {}
        for section, kind in SECTIONS.items():
            fields = {f.name: f for f in dataclasses.fields(kind)}
            values = {}
            if parser.has_section(section):
                for key, raw in parser.items(section):
                    if key not in fields:
                        raise ConfigError('{}: unknown key {!r} in [{}]'.format(source, key, section))
                    values[key] = _convert(section, fields[key], raw)
            try:
                parts[section] = kind(**values)
            except DomainError as ex:
                raise ConfigError(str(ex)) from ex
        return cls(**parts)

    @classmethod
    def from_file(cls, path: str) -> 'RunConfig':
        try:
            with open(path) as f:
                text = f.read()
        except OSError as ex:
            raise ConfigError('Cannot read config {}: {}'.format(path, ex)) from ex
        log.debug('Loaded config from {}'.format(path))
        return cls.from_string(text, source=path)

    def to_ini(self) -> str:
        lines = []
        for section in SECTIONS:
            part = getattr(self, section)
            lines.append('[{}]'.format(section))
            for f in dataclasses.fields(part):
                lines.append('{} = {}'.format(f.name, _format(getattr(part, f.name))))
            lines.append('')
        return '\n'.join(lines)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **run_overrides) -> 'RunConfig':
        """ Copy with [run] values overridden; ``None`` overrides are ignored
        """
        overrides = {k: v for k, v in run_overrides.items() if v is not None}
        return dataclasses.replace(self, run=dataclasses.replace(self.run, **overrides))
