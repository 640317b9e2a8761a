""" Composite Gauss-Legendre quadrature on [0, upper]

Every spectral integral in this package has the shape
``∫_0^upper f(ω) dω`` with an integrand that is smooth but may oscillate
(lag cosines) and is cut off exponentially by the thermal kernel. The
substitution ω = upper·x² clusters nodes near ω = 0 and keeps the
integration node ω = 0 out of reach, so integrands with removable
singularities at the origin never have to be evaluated there.

The panel count is doubled until two successive estimates agree to the
requested relative tolerance. The refinement loop is bounded with
:mod:`retrying` in the same way the other polling loops are.
"""
import logging
import math
from typing import Callable

import numpy as np
import retrying

from seq_thermometry.errors import NumericalError

log = logging.getLogger(__name__)

NODES_PER_PANEL = 16
DEFAULT_RTOL = 1e-9
MAX_DOUBLINGS = 14

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(NODES_PER_PANEL)


def squared_nodes(upper: float, panels: int):
    """ Nodes and weights on [0, upper] for the substitution ω = upper·x²

    :param upper: upper integration limit
    :param panels: number of equal panels on x ∈ [0, 1]
    :returns: (omega, weights) arrays of length panels * NODES_PER_PANEL
    """
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wx = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    return upper * x * x, 2.0 * upper * x * wx


def panels_for_phase(phase: float, minimum: int=8) -> int:
    """ Initial panel count for an integrand oscillating with total phase
    ``phase`` (radians) across the integration range
    """
    # the x² substitution doubles the largest local frequency
    return minimum + int(math.ceil(4.0 * phase / math.pi))


def integrate(integrand: Callable[[np.ndarray], np.ndarray], upper: float, panels: int=8,
              rtol: float=DEFAULT_RTOL, reference: float=0.0, label: str='integral',
              max_doublings: int=MAX_DOUBLINGS):
    """ Integrates ``integrand`` over [0, upper]

    The integrand receives the node array and returns either an array of
    the same length or a stack of shape (k, n_nodes) for k integrals that
    share nodes (lag vectors). Convergence is declared when the largest
    change between successive refinements is below
    ``rtol * max(|estimate|, reference)``.

    :param reference: absolute scale for the convergence test, used when
        the integrals themselves may be tiny compared to related values
    :raises NumericalError: when ``max_doublings`` refinements are not enough
    """
    if upper <= 0:
        return 0.0
    state = {'panels': panels, 'previous': None, 'change': None}

    @retrying.retry(stop_max_attempt_number=max_doublings + 1,
                    retry_on_result=lambda ret: ret is None,
                    retry_on_exception=lambda x: False)
    def _refine():
        omega, weights = squared_nodes(upper, state['panels'])
        current = np.asarray(integrand(omega), dtype=float) @ weights
        previous = state['previous']
        state['previous'] = current
        state['panels'] *= 2
        if previous is None:
            return None
        scale = max(float(np.max(np.abs(current))), reference)
        change = float(np.max(np.abs(current - previous)))
        state['change'] = change / scale if scale > 0 else 0.0
        if change <= rtol * scale:
            return current
        log.debug('{}: relative change {:.3e} at {} panels'.format(label, state['change'], state['panels'] // 2))
        return None

    try:
        result = _refine()
    except retrying.RetryError as ex:
        raise NumericalError('{} did not converge'.format(label),
                             panels=state['panels'] // 2,
                             relative_change=state['change']) from ex
    if result.ndim == 0:
        return float(result)
    return result
