"""Composite adaptive quadrature over pre-split smooth pieces.

Each piece is handed to QUADPACK separately, so jump discontinuities of the
integrand must sit on the piece edges. The absolute tolerance is shared
evenly between the pieces.
"""

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from app.utils.errors import NumericalFailure

logger = logging.getLogger(__name__)

MACHINE_EPS = float(np.finfo(float).eps)


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    error: float
    roundoff: float
    pieces: int

    @property
    def floor(self):
        return self.roundoff


def _roundoff_bound(func, start, end, samples=33):
    """Rounding level of a piece: 100 eps times length times the sampled peak of |f|."""
    ts = np.linspace(start, end, samples)[1:-1]
    if ts.size == 0:
        return 0.0
    peak = max(abs(float(func(t))) for t in ts)
    return 100.0 * MACHINE_EPS * (end - start) * peak


def integrate_pieces(pieces, tol, limit=200, noise=0.0):
    """Integrate a list of (start, end, func) and sum the results.

    ``noise`` is an extra absolute error level accepted per unit length, for
    integrands that carry their own evaluation error (finite differences).
    Raises NumericalFailure, carrying the best estimate, when the summed error
    estimate exceeds both ``tol`` and the rounding floor of the integrand.
    """
    pieces = [(float(a), float(b), f) for a, b, f in pieces if b > a]
    if not pieces:
        return QuadratureResult(0.0, 0.0, 0.0, 0)

    share = tol / len(pieces)
    values, errors = [], []
    roundoff = 0.0
    for start, end, func in pieces:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IntegrationWarning)
            value, error = quad(func, start, end, epsabs=share, epsrel=0.0, limit=limit)[:2]
        values.append(value)
        errors.append(error)
        roundoff += _roundoff_bound(func, start, end) + noise * (end - start)

    total = math.fsum(values)
    achieved = math.fsum(errors)
    if not math.isfinite(total) or achieved > max(tol, roundoff):
        raise NumericalFailure(
            f"quadrature reached error {achieved:.3e} above tolerance {tol:.1e}",
            estimate=total,
            error=achieved,
        )
    logger.debug("quadrature over %d pieces: %.17g (error %.2e)", len(pieces), total, achieved)
    return QuadratureResult(total, achieved, roundoff, len(pieces))
