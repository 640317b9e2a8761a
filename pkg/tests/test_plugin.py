import json
import os

import pytest

PLUGIN_CONFTEST = 'pytest_plugins = ["pytest_thermometry.plugin"]'

acceptance_test = """
    import pytest

    @pytest.mark.acceptance(
        criterion=7,
        reason='A reason'
    )
    def test_acceptance():
        assert True
"""

missing_reason_test = """
    import pytest

    @pytest.mark.acceptance(criterion=7)
    def test_acceptance():
        assert True
"""


@pytest.fixture
def plugin_dir(pytester):
    pytester.makeconftest(PLUGIN_CONFTEST)
    return pytester


def test_fixtures_imported(reference_config, reference_bath, reference_grid, hot_bath, weak_bath):
    assert reference_bath.beta == reference_config.bath.beta == 100.0
    assert reference_grid.n_windows == 1024
    assert hot_bath.beta == weak_bath.beta == 1.0
    assert weak_bath.spectral == hot_bath.spectral.scaled(0.2)


def test_acceptance_no_report(plugin_dir):
    plugin_dir.makepyfile(acceptance_test)

    result = plugin_dir.runpytest()
    result.assert_outcomes(passed=1)

    assert not os.path.exists('acceptance.json')


def test_acceptance_write_report(plugin_dir):
    plugin_dir.makepyfile(acceptance_test)

    result = plugin_dir.runpytest('--acceptance-report')
    result.assert_outcomes(passed=1)

    assert os.path.exists('acceptance.json')

    with open('acceptance.json') as f:
        report = json.load(f)
    assert report == [
        {
            'module': 'test_acceptance_write_report',
            'name': 'test_acceptance',
            'path': os.path.join(str(plugin_dir.path), 'test_acceptance_write_report.py'),
            'acceptance': {
                'criterion': 7,
                'reason': 'A reason'
            }
        }
    ]


def test_acceptance_marker_needs_reason(plugin_dir):
    plugin_dir.makepyfile(missing_reason_test)

    result = plugin_dir.runpytest()
    result.assert_outcomes(errors=1)
    result.stdout.fnmatch_lines(['*acceptance marker needs a reason*'])


def test_acceptance_marker_registered(plugin_dir):
    result = plugin_dir.runpytest('--markers')
    result.stdout.fnmatch_lines(['*acceptance(criterion, reason)*'])
