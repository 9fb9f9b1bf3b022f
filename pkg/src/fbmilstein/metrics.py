"""Pathwise error functionals between coarse approximations and fine references.

A coarse trajectory is compared against a reference living on a finer grid
whose nodes contain the coarse ones. The comparison grid is the coarse grid:
the reference is restricted to it and both paths are understood as extended
piecewise-linearly, matching how second-order schemes are defined between
nodes. Vector norms are Euclidean throughout.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .increments import GridFunction1, holder_norm_c1
from .schemes import Trajectory

__all__ = [
    "AlignedPair",
    "sup_error_on_grid",
    "holder_error",
    "fit_loglog_rate",
]

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AlignedPair:
    """A fine reference trajectory and a coarse approximation of it.

    Every coarse node must coincide with a fine node. Hoelder exponents
    outside (1/3, 1) are allowed but noted, since the pathwise error theory
    only covers that band.
    """

    reference: Trajectory
    approx: Trajectory
    gamma: float

    def __post_init__(self) -> None:
        ref, app = self.reference, self.approx
        if ref.n_steps % app.n_steps != 0:
            raise ParameterError(
                f"coarse steps {app.n_steps} do not divide fine steps {ref.n_steps}"
            )
        ratio = ref.n_steps // app.n_steps
        if not np.array_equal(ref.times[::ratio], app.times):
            raise ParameterError("coarse nodes are not a subset of fine nodes")
        if ref.states.shape[1] != app.states.shape[1]:
            raise ParameterError("state dimensions differ")
        if not (1.0 / 3.0 < self.gamma < 1.0):
            logger.info(
                "gamma=%g outside (1/3, 1); error bounds are not guaranteed there",
                self.gamma,
            )

    @property
    def ratio(self) -> int:
        return self.reference.n_steps // self.approx.n_steps

    def node_difference(self) -> np.ndarray:
        """Reference minus approximation at the shared (coarse) nodes."""
        return self.reference.states[:: self.ratio] - self.approx.states


def sup_error_on_grid(pair: AlignedPair) -> float:
    """Maximum Euclidean state difference over the shared grid nodes."""
    diff = pair.node_difference()
    return float(np.sqrt((diff**2).sum(axis=1)).max())


def holder_error(pair: AlignedPair, stride: int | None = None) -> float:
    """Discrete gamma-Hoelder distance on the coarse comparison grid.

    Sup of the node difference plus the maximal Hoelder quotient over strided
    node pairs.
    """
    diff = pair.node_difference()
    f = GridFunction1(pair.approx.times, diff)
    return holder_norm_c1(f, pair.gamma, stride=stride)


def fit_loglog_rate(resolutions, errors) -> tuple[float, float, float]:
    """Least-squares line through (log n, log e); slope is the empirical -rate.

    Zero errors are dropped with a logged count. Returns (slope, intercept,
    r_squared); raises ParameterError with fewer than 3 usable points.
    """
    n = np.asarray(resolutions, dtype=float)
    e = np.asarray(errors, dtype=float)
    if n.shape != e.shape:
        raise ParameterError("resolutions and errors lengths differ")
    usable = e > 0.0
    dropped = int((~usable).sum())
    if dropped:
        logger.info("fit_loglog_rate: dropped %d zero/negative errors", dropped)
    n, e = n[usable], e[usable]
    if len(n) < 3:
        raise ParameterError(
            f"need at least 3 positive (n, error) pairs, have {len(n)}"
        )
    x = np.log(n)
    y = np.log(e)
    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2
