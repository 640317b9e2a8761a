""" Logging configuration for the thermometry tools

Some numerical libraries are chatty on the debug level (python logging
does not natively have a trace level). Invoking this module lowers the
level of the messages from those modules by one level.
"""
import logging

LOGGING_FORMAT = '[%(asctime)s|%(name)s|%(levelname)s]: %(message)s'

MODULE_BROWN_LIST = [
    'matplotlib',
    'numba']

LOG_LEVELS = {
    'CRITICAL': logging.CRITICAL,
    'ERROR': logging.ERROR,
    'WARNING': logging.WARNING,
    'INFO': logging.INFO,
    'DEBUG': logging.DEBUG,
    'TRACE': logging.DEBUG}


def setup(log_level_str: str, noisy_modules: list=None):
    """ Configures the root logger; TRACE is DEBUG without dampening

    Args:
        log_level_str: one of the keys of LOG_LEVELS
        noisy_modules: modules dampened in addition to MODULE_BROWN_LIST

    Raises:
        ValueError: for an unknown level name
    """
    try:
        log_level = LOG_LEVELS[log_level_str]
    except KeyError:
        raise ValueError('{} is not a valid log level'.format(log_level_str))
    logging.basicConfig(format=LOGGING_FORMAT, level=log_level)
    if log_level_str in ('TRACE', 'CRITICAL'):
        return
    module_list = list(MODULE_BROWN_LIST)
    if noisy_modules is not None:
        module_list.extend(noisy_modules)
    for module in module_list:
        logging.getLogger(module).setLevel(log_level + 10)
