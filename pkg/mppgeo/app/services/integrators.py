"""
Fixed-step explicit ODE integration
Euler and classical Runge-Kutta with chart-exit detection
"""

import logging
from typing import Callable, Optional

import numpy as np

from ..errors import ChartDomainError, ChartExitError
from ..models import IntegratorConfig, Trajectory

logger = logging.getLogger(__name__)

RHS = Callable[[float, np.ndarray], np.ndarray]


def _euler_step(rhs: RHS, t: float, z: np.ndarray, h: float) -> np.ndarray:
    return z + h * rhs(t, z)


def _rk4_step(rhs: RHS, t: float, z: np.ndarray, h: float) -> np.ndarray:
    k1 = rhs(t, z)
    k2 = rhs(t + 0.5 * h, z + 0.5 * h * k1)
    k3 = rhs(t + 0.5 * h, z + 0.5 * h * k2)
    k4 = rhs(t + h, z + h * k3)
    return z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


STEPPERS = {"euler": _euler_step, "rk4": _rk4_step}


def time_grid(cfg: IntegratorConfig, t0: float = 0.0) -> np.ndarray:
    return t0 + np.linspace(0.0, cfg.t_end, cfg.steps + 1)


def integrate(
    rhs: RHS,
    z0: np.ndarray,
    cfg: IntegratorConfig,
    valid: Optional[Callable[[np.ndarray], bool]] = None,
    observer: Optional[Callable[[np.ndarray], float]] = None,
    **trajectory_fields
) -> Trajectory:
    """Integrate z' = rhs(t, z) on a uniform grid of ``cfg.steps`` steps.

    ``valid`` is checked on every accepted state; the first failure raises
    ``ChartExitError`` carrying the partial trajectory. ``observer`` (e.g.
    the Hamiltonian) is recorded per step into ``Trajectory.hamiltonian``.
    """
    step = STEPPERS[cfg.scheme]
    ts = time_grid(cfg)
    h = cfg.t_end / cfg.steps
    z = np.array(z0, dtype=float)
    states = np.empty((cfg.steps + 1, z.shape[0]))
    states[0] = z
    observed = np.empty(cfg.steps + 1) if observer is not None else None
    if observed is not None:
        observed[0] = observer(z)

    for n in range(cfg.steps):
        try:
            z = step(rhs, ts[n], z, h)
            inside = bool(np.all(np.isfinite(z))) and (valid is None or valid(z))
        except ChartDomainError:
            inside = False
        if not inside:
            partial = Trajectory(
                ts=ts[:n + 1], states=states[:n + 1],
                hamiltonian=None if observed is None else observed[:n + 1],
                diagnostics={"exit_time": float(ts[n + 1])},
                **trajectory_fields
            )
            logger.debug(f"Integration left the chart domain at t={ts[n + 1]:.4f}")
            raise ChartExitError(
                f"trajectory left the chart domain at t={ts[n + 1]:.6g}",
                exit_time=float(ts[n + 1]), trajectory=partial
            )
        states[n + 1] = z
        if observed is not None:
            observed[n + 1] = observer(z)

    return Trajectory(ts=ts, states=states, hamiltonian=observed, **trajectory_fields)


def integrate_segments(
    rhs: Callable[[int, float, np.ndarray], np.ndarray],
    z0: np.ndarray,
    knots: np.ndarray,
    substeps: int = 1,
    scheme: str = "rk4",
):
    """Integrate along a piecewise-defined driver.

    ``rhs(n, t, z)`` is evaluated with the index n of the knot interval that
    contains the current step, so stage evaluations never straddle a kink.
    Returns the dense time grid and the states at every substep.
    """
    step = STEPPERS[scheme]
    knots = np.asarray(knots, dtype=float)
    n_seg = knots.shape[0] - 1
    z = np.array(z0, dtype=float)
    ts = np.empty(n_seg * substeps + 1)
    states = np.empty((n_seg * substeps + 1, z.shape[0]))
    ts[0], states[0] = knots[0], z
    i = 0
    for n in range(n_seg):
        h = (knots[n + 1] - knots[n]) / substeps
        seg_rhs = lambda t, y, n=n: rhs(n, t, y)
        for j in range(substeps):
            t = knots[n] + j * h
            try:
                z = step(seg_rhs, t, z, h)
            except ChartDomainError as e:
                partial = Trajectory(ts=ts[:i + 1], states=states[:i + 1],
                                     diagnostics={"exit_time": float(t)})
                raise ChartExitError(f"path left the chart domain near t={t:.6g}: {e}",
                                     exit_time=float(t), trajectory=partial) from e
            i += 1
            ts[i], states[i] = knots[n] + (j + 1) * h, z
    return ts, states
