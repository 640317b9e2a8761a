import json
import os

import pytest

from seq_thermometry import logger
from seq_thermometry.bath import OhmicSpectralDensity, ThermalBath
from seq_thermometry.config import RunConfig
from seq_thermometry.correlations import WindowGrid

logger.setup(os.getenv('LOG_LEVEL', 'DEBUG'))

# enough windows to contain the 1/e crossing of the reference bath
REFERENCE_WINDOWS = 1024


@pytest.fixture(scope='session')
def reference_config():
    return RunConfig.default()


@pytest.fixture(scope='session')
def reference_bath(reference_config):
    return reference_config.bath.build()


@pytest.fixture(scope='session')
def reference_grid(reference_config):
    return WindowGrid(t=reference_config.protocol.window, n_windows=REFERENCE_WINDOWS)


@pytest.fixture(scope='session')
def hot_bath():
    """ Strongly coupled, hot bath whose window correlations are large
    enough to be resolved from a few thousand records
    """
    return ThermalBath(beta=1.0, t2=0.1, spectral=OhmicSpectralDensity(alpha=1.0, s_exponent=1.0, omega_c=10.0))


@pytest.fixture(scope='session')
def weak_bath():
    """ The hot bath at a fifth of its coupling; the first-order model holds
    over a hundred windows
    """
    return ThermalBath(beta=1.0, t2=0.1, spectral=OhmicSpectralDensity(alpha=0.2, s_exponent=1.0, omega_c=10.0))


def _iter_acceptance_markers(item):
    for marker in item.iter_markers(name='acceptance'):
        assert 'criterion' in marker.kwargs, 'acceptance marker needs a criterion'
        assert 'reason' in marker.kwargs, 'acceptance marker needs a reason'
        assert isinstance(marker.kwargs['criterion'], int) and marker.kwargs['criterion'] > 0
        yield marker


def _write_acceptance_report(tests):
    """
    Writes a report of all acceptance tagged tests to the current directory.
    """
    report = []

    for test in tests:
        for marker in _iter_acceptance_markers(test):
            report.append({
                "name": test.name,
                "module": test.module.__name__,
                "path": test.module.__file__,
                "acceptance": marker.kwargs
            })

    with open('acceptance.json', 'w') as f:
        json.dump(report, f)


def pytest_addoption(parser):
    parser.addoption("--acceptance-report", action="store_true",
                     help="Write a report of all tests marked with the acceptance marker to acceptance.json.")


def pytest_configure(config):
    config.addinivalue_line(
        'markers', 'acceptance(criterion, reason): test checks a numbered acceptance criterion')


def pytest_collection_modifyitems(session, config, items):
    if not config.getoption("--acceptance-report"):
        return

    _write_acceptance_report(items)


def pytest_runtest_setup(item):
    for _ in _iter_acceptance_markers(item):
        pass
