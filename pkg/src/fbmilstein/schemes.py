"""Solvers for driftless SDEs dY = sigma(Y) dB on uniform grids.

Four discretisations of increasing structure:

* ``euler``               -- increments only (divergent for rough drivers);
* ``simplified_milstein`` -- second-order scheme whose area terms are half
                             products of increments, directly implementable;
* ``davie_milstein``      -- second-order scheme with a pluggable Levy-area
                             source;
* ``wong_zakai_solve``    -- ODE driven by the piecewise-linear interpolant,
                             integrated per cell with a second-order one-step
                             method (Taylor or Heun) on refined substeps.

With product areas, respectively one Taylor substep, the last three collapse
to the same arithmetic; the tests pin that reduction chain.

The solvers never abort on numeric blow-up: trajectories carry the index of
the first invalid state so a harness can discard exploded paths explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, ParameterError
from .fbm import FbmPath
from .levyarea import LevyAreaGrid

__all__ = [
    "VectorField",
    "Trajectory",
    "d_operator",
    "euler",
    "simplified_milstein",
    "davie_milstein",
    "wong_zakai_solve",
    "make_field",
    "BUILTIN_FIELDS",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class VectorField:
    """Diffusion coefficient sigma: R^d -> R^{d x m} with Jacobian access.

    ``sigma(y)`` returns a (d, m) matrix whose column i is the coefficient of
    noise component i. ``jacobian(y)``, when supplied, returns the (d, m, d)
    array of partials d sigma[p, i] / d y[l]; otherwise central finite
    differences with step h = cbrt(eps) * max(1, |y_l|) are used.
    """

    dim_state: int
    dim_noise: int
    sigma: Callable[[np.ndarray], np.ndarray]
    jacobian: Callable[[np.ndarray], np.ndarray] | None = None
    name: str = "custom"

    def sigma_at(self, y: np.ndarray) -> np.ndarray:
        out = np.asarray(self.sigma(np.asarray(y, dtype=float)), dtype=float)
        if out.shape != (self.dim_state, self.dim_noise):
            raise ParameterError(
                f"sigma returned shape {out.shape}, expected "
                f"({self.dim_state}, {self.dim_noise})"
            )
        return out

    def jacobian_at(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if self.jacobian is not None:
            out = np.asarray(self.jacobian(y), dtype=float)
            if out.shape != (self.dim_state, self.dim_noise, self.dim_state):
                raise ParameterError(
                    f"jacobian returned shape {out.shape}, expected "
                    f"({self.dim_state}, {self.dim_noise}, {self.dim_state})"
                )
            return out
        return self._fd_jacobian(y)

    def _fd_jacobian(self, y: np.ndarray) -> np.ndarray:
        d = self.dim_state
        out = np.empty((d, self.dim_noise, d))
        cbrt_eps = float(np.finfo(float).eps) ** (1.0 / 3.0)
        for l in range(d):
            h = cbrt_eps * max(1.0, abs(float(y[l])))
            yp = y.copy()
            ym = y.copy()
            yp[l] += h
            ym[l] -= h
            out[:, :, l] = (self.sigma_at(yp) - self.sigma_at(ym)) / (2.0 * h)
        return out


def d_operator(field: VectorField, y: np.ndarray, i: int, j: int) -> np.ndarray:
    """Derived coefficient sum_l sigma[l, i] * d sigma[:, j] / d y[l].

    Component indices are zero-based: 0 <= i, j < dim_noise.
    """
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("state contains non-finite entries")
    if not (0 <= i < field.dim_noise and 0 <= j < field.dim_noise):
        raise ParameterError(
            f"component indices ({i}, {j}) outside [0, {field.dim_noise})"
        )
    sig = field.sigma_at(y)
    jac = field.jacobian_at(y)
    return np.einsum("l,pl->p", sig[:, i], jac[:, j, :])


@dataclass(frozen=True)
class Trajectory:
    """Discrete solution path aligned to a grid, with provenance."""

    times: np.ndarray
    states: np.ndarray  # (n + 1, d)
    scheme: str
    field_name: str
    seed: int
    stream_id: int
    first_invalid: int | None = None

    @property
    def n_steps(self) -> int:
        return len(self.times) - 1

    @property
    def dim_state(self) -> int:
        return self.states.shape[1]

    def at(self, t: float) -> np.ndarray:
        """Piecewise-linear evaluation between grid nodes."""
        t0, t1 = self.times[0], self.times[-1]
        if not t0 <= t <= t1:
            raise DomainError(f"t={t!r} outside [{t0}, {t1}]")
        dt = (t1 - t0) / self.n_steps
        k = min(int((t - t0) / dt), self.n_steps - 1)
        if t == t0 + k * dt:
            return self.states[k].copy()
        if t == t0 + (k + 1) * dt:
            return self.states[k + 1].copy()
        theta = (t - (t0 + k * dt)) / dt
        return self.states[k] + theta * (self.states[k + 1] - self.states[k])


def _check_dims(field: VectorField, path: FbmPath, a: np.ndarray) -> np.ndarray:
    a = np.atleast_1d(np.asarray(a, dtype=float))
    if a.shape != (field.dim_state,):
        raise ParameterError(
            f"initial state has shape {a.shape}, expected ({field.dim_state},)"
        )
    if path.dims != field.dim_noise:
        raise ParameterError(
            f"path has {path.dims} components, field expects {field.dim_noise}"
        )
    return a


def _run_steps(path: FbmPath, a: np.ndarray, step_fn, scheme: str,
               field_name: str) -> Trajectory:
    n = path.n_steps
    states = np.empty((n + 1, len(a)))
    states[0] = a
    first_invalid = None
    y = a.copy()
    for k in range(n):
        y = step_fn(k, y)
        if not np.all(np.isfinite(y)):
            first_invalid = k + 1
            states[k + 1 :] = np.nan
            break
        states[k + 1] = y
    return Trajectory(times=path.times, states=states, scheme=scheme,
                      field_name=field_name, seed=path.seed,
                      stream_id=path.stream_id, first_invalid=first_invalid)


def euler(field: VectorField, path: FbmPath, a) -> Trajectory:
    """First-order scheme: Y_{k+1} = Y_k + sigma(Y_k) dB_k."""
    a = _check_dims(field, path, a)
    db = path.increments()

    def step(k: int, y: np.ndarray) -> np.ndarray:
        return y + field.sigma_at(y) @ db[k]

    return _run_steps(path, a, step, "euler", field.name)


def _second_order_step(field: VectorField, y: np.ndarray, db: np.ndarray) -> np.ndarray:
    """Shared Taylor step: y + sigma db + 0.5 * sum_ij Dsigma_ij db_i db_j."""
    sig = field.sigma_at(y)
    jac = field.jacobian_at(y)
    sdb = sig @ db                                   # (d,)
    jdb = np.einsum("pjl,j->pl", jac, db)            # (d, d)
    return y + sdb + 0.5 * (jdb @ sdb)


def simplified_milstein(field: VectorField, path: FbmPath, a) -> Trajectory:
    """Second-order scheme with area terms replaced by half increment products.

    Z_{k+1} = Z_k + sum_i sigma_i dB^i
            + 0.5 * sum_{ij} Dsigma_ij dB^i dB^j.

    The continuous-time extension is piecewise linear between the nodes and
    is exposed through ``Trajectory.at``.
    """
    a = _check_dims(field, path, a)
    db = path.increments()

    def step(k: int, y: np.ndarray) -> np.ndarray:
        return _second_order_step(field, y, db[k])

    return _run_steps(path, a, step, "milstein", field.name)


def davie_milstein(field: VectorField, path: FbmPath, areas: LevyAreaGrid, a) -> Trajectory:
    """Second-order scheme with a supplied per-cell Levy-area source.

    Y_{k+1} = Y_k + sum_i sigma_i dB^i + sum_{ij} Dsigma_ij A_k(i, j).

    With product areas this reproduces ``simplified_milstein`` bit-for-bit up
    to association order.
    """
    a = _check_dims(field, path, a)
    if len(areas.times) != len(path.times) or not np.array_equal(areas.times, path.times):
        raise ParameterError("area grid does not match path grid")
    if areas.dims != path.dims:
        raise ParameterError("area dims do not match path dims")
    db = path.increments()

    def step(k: int, y: np.ndarray) -> np.ndarray:
        sig = field.sigma_at(y)
        jac = field.jacobian_at(y)
        second = np.einsum("li,pjl,ij->p", sig, jac, areas.areas[k])
        return y + sig @ db[k] + second

    return _run_steps(path, a, step, "davie", field.name)


def _heun_step(field: VectorField, y: np.ndarray, db: np.ndarray) -> np.ndarray:
    k1 = field.sigma_at(y) @ db
    k2 = field.sigma_at(y + k1) @ db
    return y + 0.5 * (k1 + k2)


def wong_zakai_solve(field: VectorField, path: FbmPath, a, substeps: int = 1,
                     integrator: str = "taylor2") -> Trajectory:
    """Integrate the ODE driven by the piecewise-linear interpolant of the path.

    Each grid cell is subdivided into ``substeps`` equal parts over which the
    interpolant contributes the increment dB / substeps, and the chosen
    one-step method (second-order Taylor or Heun) is applied per part. States
    are returned at the original grid nodes. With substeps = 1 and the Taylor
    integrator this is exactly the simplified Milstein scheme.
    """
    if substeps < 1:
        raise ParameterError(f"substeps must be >= 1, got {substeps}")
    if integrator not in ("taylor2", "heun"):
        raise ParameterError(f"unknown integrator {integrator!r}")
    a = _check_dims(field, path, a)
    db = path.increments()
    one_step = _second_order_step if integrator == "taylor2" else _heun_step

    def step(k: int, y: np.ndarray) -> np.ndarray:
        if substeps == 1:
            return one_step(field, y, db[k])
        sub_db = db[k] / substeps
        for _ in range(substeps):
            y = one_step(field, y, sub_db)
            if not np.all(np.isfinite(y)):
                break
        return y

    return _run_steps(path, a, step, f"wongzakai-{integrator}", field.name)


# ---------------------------------------------------------------------------
# Built-in test fields
# ---------------------------------------------------------------------------

def _trig2d() -> VectorField:
    def sigma(y):
        return np.array([[np.cos(y[0]), np.sin(y[0])]])

    def jacobian(y):
        return np.array([[[-np.sin(y[0])], [np.cos(y[0])]]])

    return VectorField(1, 2, sigma, jacobian, name="trig2d")


def _linear2x2() -> VectorField:
    def sigma(y):
        return np.array([[y[1], 0.0], [0.0, y[0]]])

    def jacobian(y):
        jac = np.zeros((2, 2, 2))
        jac[0, 0, 1] = 1.0  # d sigma[0, 0] / d y2
        jac[1, 1, 0] = 1.0  # d sigma[1, 1] / d y1
        return jac

    return VectorField(2, 2, sigma, jacobian, name="linear2x2")


def _geometric1d() -> VectorField:
    def sigma(y):
        return np.array([[y[0]]])

    def jacobian(y):
        return np.ones((1, 1, 1))

    return VectorField(1, 1, sigma, jacobian, name="geometric1d")


def _purenoise(dim: int) -> VectorField:
    eye = np.eye(dim)
    zeros = np.zeros((dim, dim, dim))

    def sigma(y):
        return eye

    def jacobian(y):
        return zeros

    return VectorField(dim, dim, sigma, jacobian, name="purenoise")


BUILTIN_FIELDS = ("trig2d", "linear2x2", "geometric1d", "purenoise")


def make_field(name: str, dim: int = 1) -> VectorField:
    """Instantiate a built-in field by name; ``dim`` sizes purenoise."""
    if name == "trig2d":
        return _trig2d()
    if name == "linear2x2":
        return _linear2x2()
    if name == "geometric1d":
        return _geometric1d()
    if name == "purenoise":
        return _purenoise(dim)
    raise ParameterError(f"unknown field {name!r}; choose from {BUILTIN_FIELDS}")


def write_trajectory_csv(traj: Trajectory, target, n_steps: int | None = None) -> None:
    """Trajectory CSV with provenance header comments and columns t, y1..yd."""
    close = False
    if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
        fh = open(target, "w", encoding="utf-8")
        close = True
    else:
        fh = target
    try:
        fh.write(f"# scheme={traj.scheme}\n")
        fh.write(f"# field={traj.field_name}\n")
        fh.write(f"# seed={traj.seed}\n")
        fh.write(f"# stream_id={traj.stream_id}\n")
        fh.write(f"# n={traj.n_steps}\n")
        if traj.first_invalid is not None:
            fh.write(f"# first_invalid={traj.first_invalid}\n")
        cols = ",".join(f"y{i + 1}" for i in range(traj.dim_state))
        fh.write(f"t,{cols}\n")
        for k in range(traj.n_steps + 1):
            row = ",".join(f"{v:.17g}" for v in traj.states[k])
            fh.write(f"{traj.times[k]:.17g},{row}\n")
    finally:
        if close:
            fh.close()
