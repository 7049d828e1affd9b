"""Safety filter for undisturbed plants.

Minimally modifies a nominal controller so the barrier constraint
``hdot(x, u) >= -alpha(h(x))`` holds pointwise.  The projection onto that
half-space has a closed form, so no QP solver is involved; for single-input
plants an equivalent min/max switching form is provided.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import BarrierEvaluation, ClassKappaE, DimensionError

__all__ = ["ADMISSIBLE_SLACK", "LG_ZERO_TOL", "CbfFilter"]

# ||lg_h|| at or below this is treated as exactly zero.  The filter is
# continuous across the singularity, so the threshold only guards the
# floating-point division; it is far below any reachable magnitude here.
LG_ZERO_TOL = 1e-12

# Filtered inputs land on the constraint boundary up to rounding, so
# admissibility checks carry a small slack, scaled with the magnitude of the
# quantities compared.
ADMISSIBLE_SLACK = 1e-9


def _gain(be: BarrierEvaluation, u_nom: np.ndarray, alpha: ClassKappaE) -> float:
    s = float(be.lg_h @ be.lg_h)
    if s <= LG_ZERO_TOL * LG_ZERO_TOL:
        return 0.0
    residual = be.lf_h + float(be.lg_h @ u_nom) + alpha(be.h)
    return -residual / s


@dataclass(frozen=True)
class CbfFilter:
    """Closed-form safety filter around a nominal controller.

    ``barrier`` maps a state to a :class:`BarrierEvaluation`; ``nominal`` maps
    a state to an input vector.  Both are fixed for the filter's lifetime and
    must be pure, which makes the filter safe to evaluate concurrently.
    """

    barrier: Callable[[np.ndarray], BarrierEvaluation]
    alpha: ClassKappaE
    nominal: Callable[[np.ndarray], np.ndarray]

    def in_admissible_set(self, x, u, tol: float = ADMISSIBLE_SLACK) -> bool:
        """Whether input u satisfies the barrier constraint at state x."""
        be = self.barrier(x)
        rate = be.hdot(u)
        floor = -self.alpha(be.h)
        return rate >= floor - tol * max(1.0, abs(rate), abs(floor))

    def correction_gain(self, x) -> float:
        """Unclipped gain of the correction along lg_h.

        Positive exactly when the nominal input violates the constraint;
        zero on the lg_h = 0 set.
        """
        be = self.barrier(x)
        u_nom = np.atleast_1d(np.asarray(self.nominal(x), dtype=float))
        return _gain(be, u_nom, self.alpha)

    def filter(self, x) -> np.ndarray:
        """Admissible input closest to the nominal one (2-norm)."""
        be = self.barrier(x)
        u_nom = np.atleast_1d(np.asarray(self.nominal(x), dtype=float))
        gain = _gain(be, u_nom, self.alpha)
        if gain <= 0.0:
            return u_nom
        return u_nom + gain * be.lg_h

    def filter_switching(self, x) -> float:
        """Single-input min/max form; agrees with filter() to well under 1e-10.

        For lg_h > 0 the safe input is a lower bound (max), for lg_h < 0 an
        upper bound (min); on lg_h = 0 the nominal input passes through.
        """
        be = self.barrier(x)
        if be.lg_h.shape[0] != 1:
            raise DimensionError(
                f"switching form needs a single-input plant, got m={be.lg_h.shape[0]}"
            )
        u_nom = float(np.atleast_1d(np.asarray(self.nominal(x), dtype=float))[0])
        lg = float(be.lg_h[0])
        if abs(lg) <= LG_ZERO_TOL:
            return u_nom
        u_safe = -(be.lf_h + self.alpha(be.h)) / lg
        return max(u_nom, u_safe) if lg > 0.0 else min(u_nom, u_safe)
