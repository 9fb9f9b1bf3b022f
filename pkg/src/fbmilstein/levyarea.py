"""Levy-area representations for the second-order schemes and experiments.

Three per-cell area sources share one container:

* ``area_product``          -- half the outer product of the cell increments,
                               the implementable stand-in for iterated
                               integrals;
* ``area_linear_interpolant`` -- the exact areas of the piecewise-linear
                               interpolant built on a coarse subgrid (per
                               interpolation cell these coincide with the
                               product areas);
* ``area_fine_reference``   -- areas of a much finer interpolant restricted to
                               coarse cells, the ground-truth proxy for the
                               true iterated integrals.

Areas over unions of cells are composed with the Chen relation

    A_{st} = A_{su} + A_{ut} + dB_{su} (x) dB_{ut},

which is exact for genuine interpolant areas. Product areas extend to a pair
(s, t) as half the outer product of the full increment instead, which is what
makes their Chen defect nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .fbm import FbmPath, subsample

__all__ = [
    "LevyAreaGrid",
    "area_product",
    "area_linear_interpolant",
    "area_fine_reference",
    "area_over",
    "chen_defect",
    "area_cross_covariance_quadrature",
    "area_cross_covariance_converged",
    "write_areas_csv",
]


@dataclass(frozen=True)
class LevyAreaGrid:
    """Per-cell m x m area matrices over consecutive cells of a uniform grid.

    ``areas[k]`` approximates the iterated integral over (t_k, t_{k+1}) with
    the (i, j) entry integrating component i against component j (i inner).
    ``node_values`` stores the driving path at the grid nodes, which the Chen
    composition over cell unions needs for its cross terms.
    """

    times: np.ndarray
    areas: np.ndarray        # (n_cells, m, m)
    node_values: np.ndarray  # (n_cells + 1, m)
    method: str              # product | linear_interp | fine_reference

    def __post_init__(self) -> None:
        if self.areas.shape[0] != len(self.times) - 1:
            raise ParameterError("areas count does not match grid cells")
        if self.node_values.shape != (len(self.times), self.areas.shape[1]):
            raise ParameterError("node_values shape does not match grid")
        if not np.all(np.isfinite(self.areas)):
            raise ParameterError("non-finite area entries")

    @property
    def n_cells(self) -> int:
        return self.areas.shape[0]

    @property
    def dims(self) -> int:
        return self.areas.shape[1]


def _product_cells(values: np.ndarray) -> np.ndarray:
    db = np.diff(values, axis=0)
    return 0.5 * np.einsum("ki,kj->kij", db, db)


def area_product(path: FbmPath) -> LevyAreaGrid:
    """Half products of increments per cell: A_k = 0.5 dB_k (x) dB_k."""
    return LevyAreaGrid(times=path.times, areas=_product_cells(path.values),
                        node_values=path.values.copy(), method="product")


def area_linear_interpolant(fine: FbmPath, coarse_factor: int) -> LevyAreaGrid:
    """Exact per-cell areas of the interpolant built on the coarse subgrid.

    Over a single interpolation cell the iterated integral of a linear path
    is half the product of its increments, so the per-cell matrices agree
    with ``area_product`` of the subsampled path; composing them over unions
    of cells via the Chen relation yields the trapezoidal sums that the
    product extension does not satisfy.
    """
    coarse = subsample(fine, coarse_factor)
    return LevyAreaGrid(times=coarse.times, areas=_product_cells(coarse.values),
                        node_values=coarse.values.copy(), method="linear_interp")


def area_fine_reference(fine: FbmPath, coarse_factor: int) -> LevyAreaGrid:
    """Areas of the fine-grid interpolant restricted to each coarse cell.

    Serves as the ground-truth proxy for the true iterated integrals in the
    rate experiments; a refinement of at least 64 fine cells per coarse cell
    keeps the proxy error an order below the measured effects.
    """
    if coarse_factor < 1 or fine.n_steps % coarse_factor != 0:
        raise ParameterError(
            f"coarse_factor {coarse_factor} does not divide n_steps {fine.n_steps}"
        )
    n_cells = fine.n_steps // coarse_factor
    db = np.diff(fine.values, axis=0).reshape(n_cells, coarse_factor, fine.dims)
    starts = fine.values[:-1].reshape(n_cells, coarse_factor, fine.dims)
    rel = starts - starts[:, :1, :]  # B_{t_k} - B_{cell start}
    areas = 0.5 * np.einsum("cti,ctj->cij", db, db) \
        + np.einsum("cti,ctj->cij", rel, db)
    coarse_times = fine.times[::coarse_factor]
    coarse_values = fine.values[::coarse_factor].copy()
    return LevyAreaGrid(times=coarse_times, areas=areas,
                        node_values=coarse_values, method="fine_reference")


def area_over(grid: LevyAreaGrid, i: int, j: int) -> np.ndarray:
    """Area over the grid pair (t_i, t_j), honouring the grid's method.

    Genuine interpolant areas compose via the Chen relation; product areas
    extend as half the outer product of the full increment.
    """
    if not 0 <= i <= j <= grid.n_cells:
        raise DomainError(f"need 0 <= i <= j <= n_cells, got ({i}, {j})")
    m = grid.dims
    if i == j:
        return np.zeros((m, m))
    if grid.method == "product":
        db = grid.node_values[j] - grid.node_values[i]
        return 0.5 * np.outer(db, db)
    rel = grid.node_values[i:j] - grid.node_values[i]
    db = np.diff(grid.node_values[i : j + 1], axis=0)
    return grid.areas[i:j].sum(axis=0) + np.einsum("ka,kb->ab", rel, db)


def chen_defect(grid: LevyAreaGrid, path: FbmPath, i: int, u: int, j: int) -> np.ndarray:
    """(delta A)_{iuj} - dB_{iu} (x) dB_{uj} on grid indices.

    Zero (to rounding) for genuine interpolant areas; for product areas it
    equals the purely antisymmetric residual
    0.5 * (dB^(j)_{iu} dB^(i)_{uj} - dB^(i)_{iu} dB^(j)_{uj}).
    """
    if not 0 <= i <= u <= j <= grid.n_cells:
        raise DomainError(f"need 0 <= i <= u <= j <= n_cells, got ({i}, {u}, {j})")
    if len(path.times) != len(grid.times) or path.dims != grid.dims:
        raise ParameterError("path grid does not match area grid")
    delta_a = area_over(grid, i, j) - area_over(grid, i, u) - area_over(grid, u, j)
    db_iu = path.values[u] - path.values[i]
    db_uj = path.values[j] - path.values[u]
    return delta_a - np.outer(db_iu, db_uj)


# ---------------------------------------------------------------------------
# Covariance of areas over disjoint intervals (H > 1/2)
# ---------------------------------------------------------------------------

def area_cross_covariance_quadrature(s1: float, t1: float, s2: float, t2: float,
                                     hurst: float, order: int = 32) -> float:
    """Covariance of areas of one off-diagonal component pair over disjoint
    ordered intervals, by tensorised Gauss-Legendre quadrature.

    Evaluates H^2 (2H-1)^2 times the integral of
    |u1 - u2|^{2H-2} |v1 - v2|^{2H-2} over u1 in (s1, t1), u2 in (s2, t2),
    v1 in (s1, u1), v2 in (s2, u2) with ``order`` points per axis. Requires
    H > 1/2 (kernel integrability) and t1 <= s2 (kernel stays nonsingular).
    """
    if hurst <= 0.5:
        raise ParameterError(f"unsupported hurst {hurst!r}: kernel needs H > 1/2")
    if not (0.0 <= s1 <= t1 <= s2 <= t2):
        raise DomainError(
            f"need 0 <= s1 <= t1 <= s2 <= t2, got ({s1}, {t1}, {s2}, {t2})"
        )
    if order < 2:
        raise ParameterError(f"order must be >= 2, got {order}")

    kappa = 2.0 * hurst - 2.0
    nodes, weights = np.polynomial.legendre.leggauss(order)
    x01 = 0.5 * (nodes + 1.0)   # nodes mapped to (0, 1)
    w01 = 0.5 * weights

    u1 = s1 + (t1 - s1) * x01
    u2 = s2 + (t2 - s2) * x01
    wu1 = (t1 - s1) * w01
    wu2 = (t2 - s2) * w01

    # Inner variables scale with the outer ones: v1 = s1 + x*(u1-s1).
    v1 = s1 + np.outer(u1 - s1, x01)       # (order, order): [a, c]
    v2 = s2 + np.outer(u2 - s2, x01)       # (order, order): [b, d]
    wv1 = np.outer(u1 - s1, w01)
    wv2 = np.outer(u2 - s2, w01)

    outer_kernel = np.abs(u1[:, None] - u2[None, :]) ** kappa  # [a, b]

    block = max(1, int(2**22) // (order * order))
    total = 0.0
    for a in range(order):
        inner = np.empty(order)
        for b0 in range(0, order, block):
            b1 = min(b0 + block, order)
            # inner[b] = sum_{c,d} wv1[a,c] wv2[b,d] |v1[a,c] - v2[b,d]|^kappa
            diff = np.abs(v1[a][:, None, None] - v2[None, b0:b1, :]) ** kappa
            inner[b0:b1] = np.einsum("c,cbd,bd->b", wv1[a], diff, wv2[b0:b1])
        total += wu1[a] * float(np.dot(outer_kernel[a] * inner, wu2))
    return (hurst * (2.0 * hurst - 1.0)) ** 2 * total


def area_cross_covariance_converged(s1: float, t1: float, s2: float, t2: float,
                                    hurst: float, start_order: int = 32,
                                    rtol: float = 1e-8,
                                    max_order: int = 512) -> tuple[float, int]:
    """Double the quadrature order until successive values agree to ``rtol``.

    Returns (value, order at which convergence was declared).
    """
    order = start_order
    value = area_cross_covariance_quadrature(s1, t1, s2, t2, hurst, order)
    while order < max_order:
        order *= 2
        refined = area_cross_covariance_quadrature(s1, t1, s2, t2, hurst, order)
        scale = max(abs(refined), abs(value), 1e-300)
        if abs(refined - value) <= rtol * scale:
            return refined, order
        value = refined
    raise RuntimeError(
        f"quadrature did not self-converge to rtol={rtol} by order {max_order}"
    )


def write_areas_csv(grid: LevyAreaGrid, target) -> None:
    """CSV export of per-cell areas with columns k, i, j, value."""
    close = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        fh = open(target, "w", encoding="utf-8")
        close = True
    else:
        fh = target
    try:
        fh.write("k,i,j,value\n")
        for k in range(grid.n_cells):
            for i in range(grid.dims):
                for j in range(grid.dims):
                    fh.write(f"{k},{i},{j},{grid.areas[k, i, j]:.17g}\n")
    finally:
        if close:
            fh.close()
