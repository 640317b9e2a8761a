import math
import os

import pytest

from seq_thermometry.config import BathConfig, RunConfig
from seq_thermometry.errors import ConfigError

HOT_INI = """
[bath]
alpha = 1.0
beta = 1.0
t2 = 0.1

[protocol]
n_measurements = 20
window = 0.05

[run]
seed = 12
quantum_term = yes
beta_lo = 0.5
"""


def test_default_mirrors_reference_bath():
    config = RunConfig.default()
    assert config.bath == BathConfig(alpha=0.1, s_exponent=1.0, omega_c=10.0, beta=100.0, t2=0.1)
    assert config.protocol.window == 0.1
    assert config.protocol.theta == math.pi / 2
    assert config.run.kernel == 'exact'
    assert not config.run.quantum_term


def test_from_string_fills_defaults():
    config = RunConfig.from_string(HOT_INI)
    assert config.bath.alpha == 1.0
    assert config.bath.omega_c == 10.0
    assert config.protocol.n_measurements == 20
    assert config.run.seed == 12
    assert config.run.quantum_term
    assert config.run.beta_lo == 0.5
    assert config.run.beta_hi is None
    bath = config.bath.build()
    assert bath.beta == 1.0 and bath.spectral.alpha == 1.0
    assert config.protocol.build().n_measurements == 20


def test_ini_round_trip():
    config = RunConfig.from_string(HOT_INI)
    assert RunConfig.from_string(config.to_ini()) == config
    assert RunConfig.from_string(RunConfig.default().to_ini()) == RunConfig.default()


@pytest.mark.parametrize('text,message', [
    ('[bath]\nalhpa = 0.1\n', "unknown key 'alhpa'"),
    ('[sample]\nbeta = 1\n', 'unknown sections'),
    ('[bath]\nbeta = warm\n', 'cannot parse'),
    ('[bath]\nbeta = -1\n', 'beta must be positive'),
    ('[protocol]\ntheta = 4\n', 'theta must lie in [0, pi]'),
    ('[protocol]\nn_measurements = 2.5\n', 'cannot parse'),
    ('[run]\nkernel = boxcar\n', 'kernel must be one of'),
    ('[run]\nquantum_term = maybe\n', 'cannot parse'),
    ('[run]\nbeta_lo = 5\nbeta_hi = 1\n', 'beta_lo must be below beta_hi'),
    ('not an ini file', 'Cannot parse'),
])
def test_invalid_config(text, message):
    with pytest.raises(ConfigError) as ex:
        RunConfig.from_string(text)
    assert message in str(ex.value)


def test_replace_ignores_missing_overrides():
    config = RunConfig.default().replace(seed=5, trials=None, out='elsewhere')
    assert config.run.seed == 5
    assert config.run.trials == RunConfig.default().run.trials
    assert config.run.out == 'elsewhere'
    with pytest.raises(ConfigError):
        RunConfig.default().replace(trials=-1)


def test_from_file(tmp_path):
    path = tmp_path / 'hot.ini'
    path.write_text(HOT_INI)
    assert RunConfig.from_file(str(path)) == RunConfig.from_string(HOT_INI)
    with pytest.raises(ConfigError):
        RunConfig.from_file(str(tmp_path / 'missing.ini'))


def test_shipped_configs():
    configs = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), 'configs')
    assert RunConfig.from_file(os.path.join(configs, 'reference.ini')) == RunConfig.default()
    hot = RunConfig.from_file(os.path.join(configs, 'hot.ini'))
    assert hot.bath.build().beta == 1.0
    assert (hot.run.beta_lo, hot.run.beta_hi) == (0.25, 4.0)
