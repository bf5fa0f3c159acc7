"""
Boundary value and estimation solvers
Levenberg-Marquardt shooting for minimizing MPPs, Fréchet mean and mean/covariance MLE on the frame bundle
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np
from joblib import Parallel, delayed
from scipy.optimize import minimize
from sklearn.decomposition import PCA

from ..config import FRAME_TOL, N_JOBS
from ..errors import (
    ChartExitError,
    CovarianceCollapseError,
    EstimationError,
    IntegrationError,
    ShootingError,
)
from ..models import ChartManifold, CotangentState, FramePoint, IntegratorConfig, ShootingConfig, Trajectory
from .frame_bundle import frame_cometric, integrate_mpp, sub_riemannian_energy
from .geometry import geometry_jet, log_det_frame, riemannian_geodesic

logger = logging.getLogger(__name__)

# energies closer than this (relative) count as a tie between shooting solutions
ENERGY_TIE_RTOL = 1e-9
# frames with a smaller singular value abort the covariance estimate
COLLAPSE_TOL = 1e-6


@dataclass
class LMResult:
    x: np.ndarray
    residual: np.ndarray
    residual_norm: float
    iterations: int
    converged: bool


def forward_jacobian(fun: Callable[[np.ndarray], np.ndarray], x: np.ndarray, r0: np.ndarray,
                     fd_step: float) -> np.ndarray:
    """Forward differences with relative step ``fd_step·max(1, |x_j|)``.

    A forward probe that leaves the chart falls back to a backward difference.
    """
    J = np.empty((r0.shape[0], x.shape[0]))
    for j in range(x.shape[0]):
        h = fd_step * max(1.0, abs(x[j]))
        probe = x.copy()
        probe[j] += h
        try:
            J[:, j] = (fun(probe) - r0) / h
        except ChartExitError:
            probe[j] = x[j] - h
            J[:, j] = (r0 - fun(probe)) / h
    return J


def levenberg_marquardt(
    fun: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float = 1e-8,
    max_iter: int = 60,
    fd_step: float = 1e-6,
    damping: float = 1e-3,
) -> LMResult:
    """Minimize ‖fun(x)‖ by damped Gauss-Newton steps.

    Each step solves [J; √μ I] δ = [−r; 0] in the least squares sense. Accepted
    steps divide μ by 10, rejected ones (including trials that leave the
    chart) multiply it by 10. Converged once ‖r‖ ≤ tol.
    """
    x = np.array(x0, dtype=float)
    r = fun(x)
    norm = float(np.linalg.norm(r))
    mu = damping
    n = x.shape[0]
    it = 0
    for it in range(1, max_iter + 1):
        if norm <= tol:
            return LMResult(x, r, norm, it - 1, True)
        J = forward_jacobian(fun, x, r, fd_step)
        A = np.vstack([J, np.sqrt(mu) * np.eye(n)])
        b = np.concatenate([-r, np.zeros(n)])
        delta = np.linalg.lstsq(A, b, rcond=None)[0]
        try:
            r_new = fun(x + delta)
            new_norm = float(np.linalg.norm(r_new))
        except ChartExitError:
            new_norm = np.inf
        if new_norm < norm:
            x, r, norm = x + delta, r_new, new_norm
            mu = max(mu / 10.0, 1e-15)
        else:
            mu *= 10.0
            if mu > 1e10:
                logger.debug(f"LM damping exploded after {it} iterations (residual {norm:.3e})")
                break
    return LMResult(x, r, norm, it, norm <= tol)


def riemannian_log(M: ChartManifold, x: np.ndarray, y: np.ndarray, cfg: IntegratorConfig,
                   shooting: Optional[ShootingConfig] = None) -> np.ndarray:
    """Initial velocity v of the geodesic from x reaching y at cfg.t_end.

    Shooting on the geodesic endpoint, initialized with the chart difference y − x.
    """
    shooting = shooting or ShootingConfig()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.allclose(x, y, rtol=0.0, atol=shooting.tol):
        return np.zeros_like(x)

    def residual(v):
        return riemannian_geodesic(M, x, v, cfg).endpoint - y

    fit = levenberg_marquardt(residual, (y - x) / cfg.t_end, shooting.tol, shooting.max_iter,
                              shooting.fd_step, shooting.damping)
    if not fit.converged:
        raise ShootingError(f"geodesic shooting from {x.tolist()} to {y.tolist()} did not converge",
                            residual=fit.residual_norm)
    return fit.x


@dataclass
class ShootingProblem:
    """Minimizing MPP from the frame u0 to the fiber over ``target``"""

    manifold: ChartManifold
    u0: FramePoint
    target: np.ndarray
    restarts: Optional[int] = None
    xi_init: Optional[np.ndarray] = None

    def __post_init__(self):
        self.target = np.asarray(self.target, dtype=float)
        self.u0.validate()
        if not self.manifold.contains(self.target):
            raise ShootingError(f"target {self.target.tolist()} is outside the chart domain")

    @property
    def n_unknowns(self) -> int:
        return self.u0.d * (1 + self.u0.k)

    def state(self, xi: np.ndarray) -> CotangentState:
        d = self.u0.d
        return CotangentState(self.u0, xi[:d], xi[d:])


@dataclass
class ShootingResult:
    xi0: np.ndarray
    trajectory: Optional[Trajectory]
    energy: float
    residual: float
    converged: bool
    starts: List[Dict] = field(default_factory=list)

    @property
    def n_converged(self) -> int:
        return sum(1 for s in self.starts if s["converged"])


def _initial_momentum(problem: ShootingProblem, cfg: IntegratorConfig, shooting: ShootingConfig) -> np.ndarray:
    """ξ_x = W⁻¹ log_x(y), ξ_u = 0"""
    if problem.xi_init is not None:
        return np.asarray(problem.xi_init, dtype=float)
    M, s = problem.manifold, problem.u0
    try:
        v = riemannian_log(M, s.x, problem.target, cfg, shooting)
    except (ShootingError, IntegrationError) as e:
        logger.warning(f"Riemannian log failed ({e}); initializing with the chart difference")
        v = (problem.target - s.x) / cfg.t_end
    W = frame_cometric(s.u, s.lam, geometry_jet(M, s.x).g_inv)
    return np.concatenate([np.linalg.solve(W, v), np.zeros(s.d * s.k)])


def shoot_mpp(problem: ShootingProblem, cfg: IntegratorConfig,
              shooting: Optional[ShootingConfig] = None) -> ShootingResult:
    """Multi-start Levenberg-Marquardt shooting on the initial momentum ξ_0.

    The residual is π(z_T) − y (plus ξ_u(T) with transversality). Start 0 is
    the Riemannian-log initialization, the others are seeded Gaussian
    perturbations of it. Among converged starts the least sub-Riemannian
    energy wins, ties broken by the smallest ‖ξ_0‖. Without a converged start
    the best residual is returned with ``converged=False``.
    """
    shooting = shooting or ShootingConfig()
    M, s, y = problem.manifold, problem.u0, problem.target
    restarts = shooting.restarts if problem.restarts is None else problem.restarts
    d = s.d

    def residual(xi):
        traj = integrate_mpp(M, problem.state(xi), cfg, record=False)
        r = traj.endpoint - y
        if shooting.transversality:
            r = np.concatenate([r, traj.states[-1][2 * d + d * s.k:]])
        return r

    xi_base = _initial_momentum(problem, cfg, shooting)
    rng = np.random.default_rng(shooting.seed)
    scale = shooting.perturbation * max(1.0, float(np.linalg.norm(xi_base)))
    inits = [xi_base] + [xi_base + scale * rng.standard_normal(xi_base.shape) for _ in range(restarts)]

    starts, solutions = [], []
    for i, xi in enumerate(inits):
        try:
            fit = levenberg_marquardt(residual, xi, shooting.tol, shooting.max_iter,
                                      shooting.fd_step, shooting.damping)
        except ChartExitError as e:
            logger.warning(f"Shooting start {i} left the chart at t={e.exit_time:.4g}")
            starts.append({"start": i, "converged": False, "residual": None, "energy": None})
            continue
        entry = {"start": i, "converged": fit.converged, "residual": fit.residual_norm,
                 "iterations": fit.iterations, "energy": None}
        if fit.converged:
            traj = integrate_mpp(M, problem.state(fit.x), cfg)
            entry["energy"] = sub_riemannian_energy(M, traj)
            solutions.append((entry["energy"], float(np.linalg.norm(fit.x)), fit, traj))
        else:
            logger.warning(f"Shooting start {i} stopped at residual {fit.residual_norm:.3e}")
            solutions.append((np.inf, float(np.linalg.norm(fit.x)), fit, None))
        starts.append(entry)

    if not solutions:
        raise ShootingError(f"every shooting start toward {y.tolist()} left the chart")

    converged = [sol for sol in solutions if sol[3] is not None]
    if converged:
        least = min(e for e, *_ in converged)
        ties = [sol for sol in converged if sol[0] - least <= ENERGY_TIE_RTOL * max(1.0, abs(least))]
        energy, _, fit, traj = min(ties, key=lambda sol: sol[1])
        logger.info(f"Shooting converged from {len(converged)}/{len(inits)} starts, energy {energy:.6g}")
        return ShootingResult(fit.x, traj, energy, fit.residual_norm, True, starts)

    _, _, fit, _ = min(solutions, key=lambda sol: sol[2].residual_norm)
    try:
        traj = integrate_mpp(M, problem.state(fit.x), cfg)
        energy = sub_riemannian_energy(M, traj)
    except ChartExitError as e:
        traj, energy = e.trajectory, float("nan")
    logger.warning(f"Shooting did not converge; best residual {fit.residual_norm:.3e}")
    return ShootingResult(fit.x, traj, energy, fit.residual_norm, False, starts)


@dataclass
class FrechetResult:
    x: np.ndarray
    distances: np.ndarray
    objective: float
    iterations: int
    history: List[float] = field(default_factory=list)


@dataclass
class MLEResult:
    x: np.ndarray
    u: np.ndarray
    covariance: np.ndarray
    objective: float
    iterations: int
    lam: float = 0.0
    history: List[float] = field(default_factory=list)

    @property
    def frame(self) -> FramePoint:
        return FramePoint(self.x, self.u, self.lam)


def canonical_frame(u: np.ndarray) -> np.ndarray:
    """V·diag(√eigenvalues) of u uᵀ, columns by decreasing eigenvalue, largest entry positive"""
    u = np.asarray(u, dtype=float)
    k = u.shape[1]
    vals, vecs = np.linalg.eigh(u @ u.T)
    order = np.argsort(vals)[::-1][:k]
    vals, vecs = np.clip(vals[order], 0.0, None), vecs[:, order]
    lead = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(k)]
    vecs = vecs * np.where(lead < 0, -1.0, 1.0)
    return vecs * np.sqrt(vals)


class EstimationService:
    """Estimators built on squared sub-Riemannian distances to fibers.

    One instance per estimation run; it owns the objective cache and the
    per-iteration log.
    """

    def __init__(self, cfg: IntegratorConfig, shooting: Optional[ShootingConfig] = None,
                 n_jobs: int = N_JOBS):
        self.cfg = cfg
        self.shooting = shooting or ShootingConfig(restarts=0)
        self.n_jobs = n_jobs
        self.history: List[float] = []
        self._cache: Dict[bytes, float] = {}

    def squared_distance(self, M: ChartManifold, frame: FramePoint, y: np.ndarray, index: int) -> float:
        """d_FM(frame, π⁻¹(y))² by shooting"""
        try:
            result = shoot_mpp(ShootingProblem(M, frame, y), self.cfg, self.shooting)
        except (ShootingError, IntegrationError) as e:
            raise EstimationError(f"shooting to data point {index} failed: {e}", index=index)
        if not result.converged:
            raise EstimationError(
                f"shooting to data point {index} did not converge (residual {result.residual:.3e})",
                index=index
            )
        return result.energy

    def squared_distances(self, M: ChartManifold, frame: FramePoint, data: np.ndarray) -> np.ndarray:
        values = Parallel(n_jobs=self.n_jobs, prefer="threads")(
            delayed(self.squared_distance)(M, frame, y, i) for i, y in enumerate(data)
        )
        return np.asarray(values)

    def _memo(self, objective: Callable[[np.ndarray], float]) -> Callable[[np.ndarray], float]:
        def wrapped(theta):
            key = np.asarray(theta, dtype=float).tobytes()
            if key not in self._cache:
                self._cache[key] = objective(theta)
            return self._cache[key]
        return wrapped

    def _record(self, theta):
        value = self._cache.get(np.asarray(theta, dtype=float).tobytes())
        if value is not None:
            self.history.append(float(value))
            logger.debug(f"Iteration {len(self.history)}: objective {value:.10g}")

    def frechet_mean_fm(self, M: ChartManifold, data: Sequence, section: Callable[[np.ndarray], FramePoint],
                        x0: Optional[np.ndarray] = None, maxiter: int = 400) -> FrechetResult:
        """argmin over x of Σ_i d_FM(section(x), π⁻¹(x_i))² by Nelder-Mead in the chart"""
        data = _as_data(M, data)
        if data.shape[0] == 1:
            return FrechetResult(data[0].copy(), np.zeros(1), 0.0, 0, [0.0])
        x0 = data.mean(axis=0) if x0 is None else np.asarray(x0, dtype=float)

        def objective(x):
            if not M.contains(x):
                return np.inf
            return float(np.sum(self.squared_distances(M, section(x), data)))

        fun = self._memo(objective)
        opt = minimize(fun, x0, method="Nelder-Mead", callback=self._record,
                       options={"xatol": 1e-9, "fatol": 1e-13, "maxiter": maxiter})
        distances = np.sqrt(self.squared_distances(M, section(opt.x), data))
        logger.info(f"Frechet mean after {opt.nit} iterations, objective {opt.fun:.6g}")
        return FrechetResult(opt.x, distances, float(opt.fun), int(opt.nit), self.history)

    def mle_mean_covariance(self, M: ChartManifold, data: Sequence, k: int, lam: float = 0.0,
                            x0: Optional[np.ndarray] = None, u0: Optional[np.ndarray] = None,
                            maxiter: int = 400) -> MLEResult:
        """Joint Nelder-Mead over (x, u) of Σ_i d_FM(u, π⁻¹(x_i))² + N log det_g u.

        In a flat chart the optimum has u uᵀ = 2Σ̂ (Σ̂ the 1/N sample
        covariance). The reported covariance is the fitted cometric
        halved, (u uᵀ + λ g⁻¹)/2 at x̂, which is u uᵀ/2 for λ = 0.
        """
        data = _as_data(M, data)
        N, d = data.shape
        if N < 2:
            raise EstimationError("maximum likelihood needs at least two data points")
        if not 1 <= k <= d:
            raise EstimationError(f"frame rank {k} must lie between 1 and {d}")
        if k < d and lam <= 0:
            raise EstimationError(f"rank {k} < {d} estimates need a positive isotropic weight")

        spread = np.linalg.svd(data - data.mean(axis=0), compute_uv=False)
        if spread[k - 1] <= COLLAPSE_TOL * max(1.0, float(np.abs(data).max())):
            raise CovarianceCollapseError("sample has no spread along the requested frame rank")

        if x0 is None or u0 is None:
            pca = PCA(n_components=k).fit(data)
            x_init = pca.mean_
            u_init = pca.components_.T * np.sqrt(2.0 * pca.explained_variance_ * (N - 1) / N)
        x0 = x_init if x0 is None else np.asarray(x0, dtype=float)
        u0 = u_init if u0 is None else np.asarray(u0, dtype=float).reshape((d, k))
        theta0 = np.concatenate([x0, u0.ravel(order="F")])

        def unpack(theta):
            return theta[:d], theta[d:].reshape((d, k), order="F")

        def objective(theta):
            x, u = unpack(theta)
            if not M.contains(x):
                return np.inf
            if np.linalg.svd(u, compute_uv=False)[-1] <= max(COLLAPSE_TOL, FRAME_TOL):
                raise CovarianceCollapseError("frame estimate collapsed to lower rank")
            frame = FramePoint(x, u, lam)
            return float(np.sum(self.squared_distances(M, frame, data)) + N * log_det_frame(M, x, u))

        fun = self._memo(objective)
        opt = minimize(fun, theta0, method="Nelder-Mead", callback=self._record,
                       options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": maxiter,
                                "adaptive": theta0.shape[0] > 3})
        x, u = unpack(opt.x)
        u = canonical_frame(u)
        logger.info(f"MLE after {opt.nit} iterations, objective {opt.fun:.6g}")
        covariance = 0.5 * frame_cometric(u, lam, geometry_jet(M, x).g_inv)
        return MLEResult(x, u, covariance, float(opt.fun), int(opt.nit), lam, self.history)


def _as_data(M: ChartManifold, data: Sequence) -> np.ndarray:
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[0] == 0:
        raise EstimationError("no data points")
    for i, y in enumerate(data):
        if not M.contains(y):
            raise EstimationError(f"data point {i} lies outside the chart domain", index=i)
    return data


def frechet_mean_fm(M: ChartManifold, data: Sequence, section: Callable[[np.ndarray], FramePoint],
                    cfg: IntegratorConfig, shooting: Optional[ShootingConfig] = None,
                    n_jobs: int = N_JOBS, **kwargs) -> FrechetResult:
    return EstimationService(cfg, shooting, n_jobs).frechet_mean_fm(M, data, section, **kwargs)


def mle_mean_covariance(M: ChartManifold, data: Sequence, k: int, cfg: IntegratorConfig,
                        shooting: Optional[ShootingConfig] = None, lam: float = 0.0,
                        n_jobs: int = N_JOBS, **kwargs) -> MLEResult:
    return EstimationService(cfg, shooting, n_jobs).mle_mean_covariance(M, data, k, lam=lam, **kwargs)
