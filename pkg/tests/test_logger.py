import logging

import pytest

from seq_thermometry import logger


def test_setup_rejects_unknown_level():
    with pytest.raises(ValueError):
        logger.setup('LOUD')


def test_setup_dampens_noisy_modules():
    logger.setup('INFO', noisy_modules=['thermometry.noisy'])
    assert logging.getLogger('thermometry.noisy').level == logging.WARNING
    assert logging.getLogger('numba').level == logging.WARNING
    assert logger.MODULE_BROWN_LIST == ['matplotlib', 'numba']


def test_trace_leaves_modules_alone():
    logging.getLogger('thermometry.quiet').setLevel(logging.NOTSET)
    logger.setup('TRACE', noisy_modules=['thermometry.quiet'])
    assert logging.getLogger('thermometry.quiet').level == logging.NOTSET
