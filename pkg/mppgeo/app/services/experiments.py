"""
Experiment runner
Validated JSON experiment configs and the commands that turn them into CSV, JSON and SVG artifacts
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from scipy.integrate import trapezoid

from ..config import N_JOBS
from ..errors import ChartExitError, ConfigError, FrameDegeneracyError, IntegrationError, MPPGeoError, ShootingError
from ..models import (
    ChartManifold,
    CotangentState,
    EuclideanSpec,
    FramePoint,
    IntegratorConfig,
    LandmarkSpec,
    ShootingConfig,
    SurfaceSpec,
    Trajectory,
)
from . import plotting
from .frame_bundle import antidevelop, hamiltonian_drift, horizontality_residual, integrate_mpp, mpp_rhs
from .geometry import orthonormal_frame, riemannian_geodesic
from .landmarks import advect_grid, dump_landmarks, load_landmarks, make_landmark_manifold
from .solvers import ShootingProblem, frechet_mean_fm, mle_mean_covariance, riemannian_log, shoot_mpp
from .surfaces import make_euclidean, make_surface

logger = logging.getLogger(__name__)

Matrix = List[List[float]]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class FrameSection(_Section):
    """Initial frame: explicit ``u`` (rows index coordinates), or an orthonormal
    frame rotated by ``rotation`` and scaled column-wise by ``scales``"""

    x: Optional[List[float]] = None
    u: Optional[Matrix] = None
    scales: Optional[List[float]] = None
    rotation: float = 0.0
    rank: Optional[int] = Field(None, ge=1)
    lam: float = Field(0.0, ge=0)


class MomentumSection(_Section):
    xi_x: List[float]
    xi_u: Optional[Matrix] = None


class SweepSection(_Section):
    kind: str = Field(..., pattern="^(rotation|vertical)$")
    n: int = Field(5, ge=1)
    max_angle: float = Field(np.pi / 2, description="Rotation sweep covers [0, max_angle]")
    amplitude: float = Field(1.0, ge=0, description="Vertical sweep covers c in [-amplitude, amplitude]")
    direction: Optional[Matrix] = None


class GridSection(_Section):
    n: int = Field(21, ge=2)
    margin: float = Field(0.5, ge=0)


class LandmarkSection(_Section):
    source: Union[str, Matrix]
    target: Union[str, Matrix]
    grid: GridSection = GridSection()
    compare_isotropic: bool = True


class SampleSection(_Section):
    n: int = Field(20, ge=1)
    mean: List[float]
    cov: Matrix


class EstimateSection(_Section):
    method: str = Field("frechet", pattern="^(frechet|mle)$")
    data: Optional[Matrix] = None
    samples: Optional[SampleSection] = None
    k: Optional[int] = Field(None, ge=1)
    lam: float = Field(0.0, ge=0)
    maxiter: int = Field(400, ge=1)

    @model_validator(mode="after")
    def one_data_source(self):
        if (self.data is None) == (self.samples is None):
            raise ValueError("exactly one of data and samples must be given")
        return self


class ExperimentConfig(_Section):
    """A single experiment; unknown keys are rejected"""

    manifold: Union[SurfaceSpec, LandmarkSpec, EuclideanSpec] = Field(..., discriminator="kind")
    frame: Optional[FrameSection] = None
    integrator: IntegratorConfig = IntegratorConfig()
    seed: int = 0
    momentum: Optional[MomentumSection] = None
    sweep: Optional[SweepSection] = None
    target: Optional[List[float]] = None
    shooting: ShootingConfig = ShootingConfig()
    landmarks: Optional[LandmarkSection] = None
    estimate: Optional[EstimateSection] = None
    output_dir: Optional[str] = None
    description: str = ""


def load_config(path: Union[str, Path], seed: Optional[int] = None, steps: Optional[int] = None,
                scheme: Optional[str] = None) -> ExperimentConfig:
    """Parse and validate a config file, applying command-line overrides"""
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found")
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}")
    try:
        config = ExperimentConfig.model_validate(raw)
        integrator = {k: v for k, v in (("steps", steps), ("scheme", scheme)) if v is not None}
        if integrator:
            config.integrator = IntegratorConfig.model_validate(
                {**config.integrator.model_dump(), **integrator})
    except ValidationError as e:
        raise ConfigError(f"invalid config {path}: {e.errors(include_url=False)}")
    if seed is not None:
        config.seed = seed
        config.shooting = config.shooting.model_copy(update={"seed": seed})
    return config


def build_manifold(config: ExperimentConfig) -> ChartManifold:
    spec = config.manifold
    if isinstance(spec, LandmarkSpec):
        return make_landmark_manifold(spec)
    if isinstance(spec, EuclideanSpec):
        return make_euclidean(spec.dim)
    return make_surface(spec)


def _rotation(d: int, angle: float) -> np.ndarray:
    """Rotation by ``angle`` in every consecutive coordinate pair"""
    if d % 2:
        raise ConfigError(f"frame rotation needs an even dimension, got {d}")
    c, s = np.cos(angle), np.sin(angle)
    return np.kron(np.eye(d // 2), np.array([[c, -s], [s, c]]))


def build_frame(M: ChartManifold, config: ExperimentConfig, x: Optional[np.ndarray] = None,
                rotation: float = 0.0) -> FramePoint:
    section = config.frame or FrameSection()
    if x is None:
        if section.x is not None:
            x = np.asarray(section.x, dtype=float)
        elif config.landmarks is not None:
            x = load_landmarks(config.landmarks.source).ravel()
        else:
            raise ConfigError("frame.x is required")
    d = M.dim
    if x.shape != (d,):
        raise ConfigError(f"frame.x must have {d} coordinates, got {x.shape[0]}")
    try:
        if section.u is not None:
            u = np.asarray(section.u, dtype=float)
        else:
            u = orthonormal_frame(M, x)
            angle = section.rotation + rotation
            if angle:
                u = u @ _rotation(d, angle)
            if section.scales is not None:
                scales = np.asarray(section.scales, dtype=float)
                spec = config.manifold
                if isinstance(spec, LandmarkSpec) and scales.shape[0] == spec.amb:
                    scales = np.tile(scales, spec.n_landmarks)
                if scales.shape[0] != d:
                    raise ConfigError(f"frame.scales must have {d} entries")
                u = u * scales
            if section.rank is not None:
                u = u[:, :section.rank]
        return FramePoint(x, u, section.lam).validate()
    except FrameDegeneracyError as e:
        raise ConfigError(f"invalid frame: {e.message}")


def initial_state(frame: FramePoint, momentum: Optional[MomentumSection]) -> CotangentState:
    if momentum is None:
        raise ConfigError("this command needs an initial momentum")
    xi_u = np.zeros_like(frame.u) if momentum.xi_u is None else np.asarray(momentum.xi_u, dtype=float)
    try:
        return CotangentState(frame, momentum.xi_x, xi_u)
    except ValueError as e:
        raise ConfigError(str(e))


def trajectory_table(traj: Trajectory) -> pd.DataFrame:
    """Trajectory rows with fixed column order: t, x, u (column-major), ξ_x, ξ_u, H"""
    d, k = traj.d, traj.k
    columns = ["t"] + [f"x_{i}" for i in range(d)]
    if traj.kind in ("mpp", "frame"):
        columns += [f"u_{i}_{a}" for a in range(k) for i in range(d)]
    if traj.kind == "mpp":
        columns += [f"xi_x_{i}" for i in range(d)] + [f"xi_u_{i}_{a}" for a in range(k) for i in range(d)]
    if traj.kind == "geodesic":
        columns += [f"v_{i}" for i in range(d)]
    data = np.column_stack([traj.ts, traj.states])
    table = pd.DataFrame(data, columns=columns)
    if traj.hamiltonian is not None:
        table["H"] = traj.hamiltonian
    return table


def write_csv(table: pd.DataFrame, path: Path):
    table.to_csv(path, index=False, float_format="%.12e")


def write_json(payload: Dict, path: Path):
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _embedding(config: ExperimentConfig, M: ChartManifold):
    return M.embedding if isinstance(config.manifold, SurfaceSpec) else None


def _sup_distance(a: np.ndarray, b: np.ndarray) -> float:
    n = min(len(a), len(b))
    return float(np.max(np.linalg.norm(a[:n] - b[:n], axis=-1)))


def _landmark_paths(L: LandmarkSpec, traj: Trajectory) -> np.ndarray:
    return traj.xs.reshape((len(traj), L.n_landmarks, L.amb))


def _regular_grid(points: np.ndarray, section: GridSection) -> Tuple[np.ndarray, Tuple[int, int]]:
    lo = points.min(axis=0) - section.margin
    hi = points.max(axis=0) + section.margin
    gx, gy = np.meshgrid(np.linspace(lo[0], hi[0], section.n), np.linspace(lo[1], hi[1], section.n))
    return np.stack([gx.ravel(), gy.ravel()], axis=-1), (section.n, section.n)


def _run_mpp(M: ChartManifold, z0: CotangentState, cfg: IntegratorConfig) -> Tuple[Trajectory, Optional[np.ndarray]]:
    traj = integrate_mpp(M, z0, cfg)
    s = None
    if z0.point.k == z0.point.d:
        s = antidevelop(M, z0.point, traj.ts, traj.xs)
    return traj, s


def cmd_mpp(config: ExperimentConfig, out: Path) -> Dict:
    """Forward integration of the MPP flow from the configured initial state"""
    M = build_manifold(config)
    z0 = initial_state(build_frame(M, config), config.momentum)
    out.mkdir(parents=True, exist_ok=True)
    meta = {"command": "mpp", "config": config.model_dump(mode="json")}
    try:
        traj, s = _run_mpp(M, z0, config.integrator)
    except ChartExitError as e:
        if e.trajectory is not None:
            write_csv(trajectory_table(e.trajectory), out / "trajectory.csv")
        write_json({**meta, "error": e.to_dict()}, out / "meta.json")
        raise

    write_csv(trajectory_table(traj), out / "trajectory.csv")
    meta.update({
        "hamiltonian_initial": float(traj.hamiltonian[0]),
        "hamiltonian_drift": hamiltonian_drift(traj),
        "horizontality_residual": horizontality_residual(M, traj),
        "endpoint": traj.endpoint.tolist(),
        "min_frame_singular_value": traj.diagnostics["min_frame_singular_value"],
    })

    # Riemannian geodesic with the same initial velocity, for reference
    v0 = mpp_rhs(M, z0)[:M.dim]
    try:
        geodesic = riemannian_geodesic(M, z0.point.x, v0, config.integrator)
        meta["sup_distance_to_geodesic"] = _sup_distance(traj.xs, geodesic.xs)
    except ChartExitError as e:
        logger.warning(f"Reference geodesic left the chart at t={e.exit_time:.4g}")
        geodesic = None

    if isinstance(config.manifold, LandmarkSpec):
        L = config.manifold
        paths = _landmark_paths(L, traj)
        grid, shape = _regular_grid(paths.reshape((-1, L.amb)), config.landmarks.grid
                                    if config.landmarks else GridSection())
        plotting.plot_landmarks(out / "plot.svg", paths[0], paths[-1], paths,
                                advect_grid(L, traj, grid)[-1], shape)
    elif M.dim >= 2:
        reference_s = None
        if geodesic is not None and s is not None:
            reference_s = antidevelop(M, z0.point, geodesic.ts, geodesic.xs)
            meta["antidevelopment_deviation"] = _deviation_from_chord(s)
        if s is None:
            s = np.zeros((len(traj), 2))
        plotting.plot_mpp(out / "plot.svg", traj.xs, s, _embedding(config, M),
                          None if geodesic is None else geodesic.xs, reference_s, z0.point.u)
    write_json(meta, out / "meta.json")
    logger.info(f"MPP written to {out} (H drift {meta['hamiltonian_drift']:.2e})")
    return meta


def _deviation_from_chord(s: np.ndarray) -> float:
    """Sup distance of an anti-development from the straight segment 0 → s_T"""
    end = s[-1]
    length = float(np.linalg.norm(end))
    if length == 0.0:
        return float(np.max(np.linalg.norm(s, axis=-1)))
    direction = end / length
    along = np.clip(s @ direction, 0.0, length)
    return float(np.max(np.linalg.norm(s - along[:, None] * direction, axis=-1)))


def sweep_values(sweep: SweepSection) -> np.ndarray:
    if sweep.kind == "rotation":
        return np.linspace(0.0, sweep.max_angle, sweep.n)
    if sweep.n == 1:
        return np.zeros(1)
    return np.linspace(-sweep.amplitude, sweep.amplitude, sweep.n)


def _minimizing_member(M: ChartManifold, config: ExperimentConfig, frame: FramePoint):
    """Shoot from the rotated frame to the fixed target"""
    problem = ShootingProblem(M, frame, np.asarray(config.target, dtype=float))
    result = shoot_mpp(problem, config.integrator, config.shooting)
    if not result.converged:
        raise ShootingError(f"member did not reach the target (residual {result.residual:.3e})",
                            residual=result.residual)
    traj = result.trajectory
    s = antidevelop(M, frame, traj.ts, traj.xs) if frame.k == frame.d else None
    return traj, s, {"energy": result.energy, "residual": result.residual, "xi0": result.xi0.tolist()}


def _sweep_member(M: ChartManifold, config: ExperimentConfig, value: float):
    sweep = config.sweep
    try:
        if sweep.kind == "rotation":
            frame = build_frame(M, config, rotation=value)
            if config.target is not None:
                return _minimizing_member(M, config, frame), None
            z0 = initial_state(frame, config.momentum)
        else:
            base = initial_state(build_frame(M, config), config.momentum)
            direction = (np.eye(base.point.d, base.point.k) if sweep.direction is None
                         else np.asarray(sweep.direction, dtype=float))
            if direction.shape != base.xi_u.shape:
                raise ConfigError(f"sweep.direction must have shape {base.xi_u.shape}")
            z0 = CotangentState(base.point, base.xi_x, base.xi_u + value * direction)
        traj, s = _run_mpp(M, z0, config.integrator)
        return (traj, s, {}), None
    except ConfigError:
        raise
    except MPPGeoError as e:
        logger.warning(f"Sweep member {value:.4g} failed: {e.message}")
        return None, e


def cmd_sweep(config: ExperimentConfig, out: Path, n_jobs: int = N_JOBS) -> Dict:
    """Family of MPPs over frame rotations or vertical momenta.

    A rotation sweep with a ``target`` re-shoots every member to that target,
    giving a family of minimizing MPPs; otherwise each member is integrated
    forward from the configured momentum.
    """
    if config.sweep is None:
        raise ConfigError("the sweep command needs a sweep section")
    if config.target is not None and config.sweep.kind != "rotation":
        raise ConfigError("a sweep target is only used by rotation sweeps")
    M = build_manifold(config)
    values = sweep_values(config.sweep)
    results = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_sweep_member)(M, config, float(v)) for v in values
    )
    out.mkdir(parents=True, exist_ok=True)
    members, trajs, antidevs = [], [], []
    for i, (value, (result, error)) in enumerate(zip(values, results)):
        entry = {"index": i, "value": float(value)}
        if result is None:
            entry["error"] = error.to_dict()
            if isinstance(error, ChartExitError) and error.trajectory is not None:
                write_csv(trajectory_table(error.trajectory), out / f"member_{i:02d}.csv")
            trajs.append(None)
            antidevs.append(None)
        else:
            traj, s, info = result
            write_csv(trajectory_table(traj), out / f"member_{i:02d}.csv")
            entry.update({"hamiltonian_drift": hamiltonian_drift(traj), "endpoint": traj.endpoint.tolist(), **info})
            trajs.append(traj)
            antidevs.append(s)
        members.append(entry)

    done = [t.xs for t in trajs if t is not None]
    if not done:
        raise IntegrationError("every sweep member failed")
    distinct = max((_sup_distance(a, b) for i, a in enumerate(done) for b in done[i + 1:]), default=0.0)
    meta = {"command": "sweep", "config": config.model_dump(mode="json"), "members": members,
            "max_pairwise_distance": distinct, "minimizing": config.target is not None}

    labels = [f"{v:.3g}" for v in values]
    if isinstance(config.manifold, LandmarkSpec):
        L = config.manifold
        section = config.landmarks.grid if config.landmarks else GridSection()
        grid, shape = _regular_grid(np.concatenate([xs.reshape((-1, L.amb)) for xs in done]), section)
        families = [None if t is None else _landmark_paths(L, t) for t in trajs]
        deformed = [None if t is None else advect_grid(L, t, grid)[-1] for t in trajs]
        plotting.plot_landmark_family(out / "family.svg", families, deformed, shape, labels)
    else:
        target = None if config.target is None else np.asarray(config.target, dtype=float)
        paths = [None if t is None else t.xs for t in trajs]
        plotting.plot_family(out / "family.svg", paths, labels, antidevs, _embedding(config, M), target)
    write_json(meta, out / "sweep.json")
    logger.info(f"Sweep of {len(values)} members written to {out}")
    return meta


def _geodesic_between(M: ChartManifold, x: np.ndarray, y: np.ndarray, config: ExperimentConfig):
    try:
        v = riemannian_log(M, x, y, config.integrator, config.shooting)
        return riemannian_geodesic(M, x, v, config.integrator)
    except (ShootingError, IntegrationError) as e:
        logger.warning(f"Comparison geodesic unavailable: {e}")
        return None


def _shoot_payload(result, problem: ShootingProblem, landmarks: Optional[LandmarkSpec] = None) -> Dict:
    target = problem.target.tolist()
    if landmarks is not None:
        target = dump_landmarks(problem.target.reshape((landmarks.n_landmarks, landmarks.amb)))
    return {
        "xi0": result.xi0.tolist(),
        "energy": result.energy,
        "residual": result.residual,
        "converged": result.converged,
        "starts": result.starts,
        "target": target,
    }


def cmd_shoot(config: ExperimentConfig, out: Path) -> Dict:
    """Minimizing MPP from the configured frame to the target, with the geodesic for comparison"""
    if config.target is None:
        raise ConfigError("the shoot command needs a target")
    M = build_manifold(config)
    frame = build_frame(M, config)
    problem = ShootingProblem(M, frame, np.asarray(config.target, dtype=float))
    result = shoot_mpp(problem, config.integrator, config.shooting)
    geodesic = _geodesic_between(M, frame.x, problem.target, config)

    out.mkdir(parents=True, exist_ok=True)
    landmarks = config.manifold if isinstance(config.manifold, LandmarkSpec) else None
    payload = {"command": "shoot", "config": config.model_dump(mode="json"),
               **_shoot_payload(result, problem, landmarks)}
    if result.trajectory is not None:
        write_csv(trajectory_table(result.trajectory), out / "trajectory.csv")
    if geodesic is not None:
        write_csv(trajectory_table(geodesic), out / "geodesic.csv")
        # squared speed is recorded per step
        payload["geodesic_energy"] = float(trapezoid(geodesic.hamiltonian, geodesic.ts))
        if result.trajectory is not None:
            payload["sup_distance_to_geodesic"] = _sup_distance(result.trajectory.xs, geodesic.xs)
    if result.trajectory is not None:
        plotting.plot_shoot(out / "plot.svg", result.trajectory.xs, None if geodesic is None else geodesic.xs,
                            problem.target, _embedding(config, M), frame.u)
    write_json(payload, out / "result.json")
    if not result.converged:
        raise ShootingError(f"shooting did not reach the target (residual {result.residual:.3e})",
                            residual=result.residual)
    logger.info(f"Shooting written to {out} (energy {result.energy:.6g})")
    return payload


def cmd_landmarks(config: ExperimentConfig, out: Path) -> Dict:
    """Landmark matching by MPP shooting, with the deformation of a regular grid"""
    if config.landmarks is None or not isinstance(config.manifold, LandmarkSpec):
        raise ConfigError("the landmarks command needs a landmark manifold and a landmarks section")
    section = config.landmarks
    source, target = load_landmarks(section.source), load_landmarks(section.target)
    L = config.manifold
    if source.shape != (L.n_landmarks, L.amb) or target.shape != source.shape:
        raise ConfigError(f"source and target must both be {L.n_landmarks} landmarks in R^{L.amb}")
    M = make_landmark_manifold(L)
    frame = build_frame(M, config, x=source.ravel())
    problem = ShootingProblem(M, frame, target.ravel())
    result = shoot_mpp(problem, config.integrator, config.shooting)

    out.mkdir(parents=True, exist_ok=True)
    payload = {"command": "landmarks", "config": config.model_dump(mode="json"), **_shoot_payload(result, problem, L)}
    reference = None
    if section.compare_isotropic and config.frame is not None and config.frame.scales is not None:
        iso = FramePoint(frame.x, orthonormal_frame(M, frame.x)[:, :frame.k], frame.lam)
        iso_result = shoot_mpp(ShootingProblem(M, iso, target.ravel()), config.integrator, config.shooting)
        if iso_result.trajectory is not None:
            reference = _landmark_paths(L, iso_result.trajectory)
            payload["isotropic_energy"] = iso_result.energy

    if result.trajectory is not None:
        traj = result.trajectory
        write_csv(trajectory_table(traj), out / "trajectory.csv")
        paths = _landmark_paths(L, traj)
        grid, shape = _regular_grid(np.concatenate([source, target]), section.grid)
        deformed = advect_grid(L, traj, grid)[-1]
        write_csv(pd.DataFrame(np.column_stack([grid, deformed]), columns=["y0_0", "y0_1", "y1_0", "y1_1"]),
                  out / "grid.csv")
        if reference is not None:
            payload["sup_distance_to_isotropic"] = _sup_distance(paths.reshape((len(traj), -1)),
                                                                 reference.reshape((len(reference), -1)))
        plotting.plot_landmarks(out / "plot.svg", source, target, paths, deformed, shape, reference)
    write_json(payload, out / "landmarks.json")
    if not result.converged:
        raise ShootingError(f"landmark matching did not converge (residual {result.residual:.3e})",
                            residual=result.residual)
    logger.info(f"Landmark match written to {out} (energy {result.energy:.6g})")
    return payload


def estimation_data(M: ChartManifold, config: ExperimentConfig) -> np.ndarray:
    section = config.estimate
    if section.data is not None:
        data = np.asarray(section.data, dtype=float)
    else:
        rng = np.random.default_rng(config.seed)
        data = rng.multivariate_normal(section.samples.mean, section.samples.cov, size=section.samples.n)
    if data.ndim != 2 or data.shape[1] != M.dim:
        raise ConfigError(f"estimation data must be points of dimension {M.dim}")
    return data


def cmd_estimate(config: ExperimentConfig, out: Path, n_jobs: int = N_JOBS) -> Dict:
    """Fréchet mean or mean/covariance MLE of the configured sample"""
    if config.estimate is None:
        raise ConfigError("the estimate command needs an estimate section")
    section = config.estimate
    M = build_manifold(config)
    data = estimation_data(M, config)
    out.mkdir(parents=True, exist_ok=True)
    write_csv(pd.DataFrame(data, columns=[f"x_{i}" for i in range(M.dim)]), out / "data.csv")

    payload = {"command": "estimate", "config": config.model_dump(mode="json"), "method": section.method}
    covariance = None
    if section.method == "frechet":
        result = frechet_mean_fm(M, data, lambda x: build_frame(M, config, x=np.asarray(x, dtype=float)),
                                 config.integrator, config.shooting, n_jobs=n_jobs, maxiter=section.maxiter)
        payload["distances"] = result.distances.tolist()
    else:
        k = section.k or M.dim
        result = mle_mean_covariance(M, data, k, config.integrator, config.shooting, lam=section.lam,
                                     n_jobs=n_jobs, maxiter=section.maxiter)
        covariance = result.covariance
        payload.update({"u": result.u.tolist(), "covariance": covariance.tolist(), "k": k})
    payload.update({"x": result.x.tolist(), "objective": result.objective, "iterations": result.iterations})

    write_csv(pd.DataFrame({"iteration": np.arange(1, len(result.history) + 1), "objective": result.history}),
              out / "history.csv")
    if M.dim <= 2:
        plotting.plot_estimate(out / "plot.svg", data, result.x, covariance)
    write_json(payload, out / "estimate.json")
    logger.info(f"Estimate written to {out} after {result.iterations} iterations")
    return payload


COMMANDS = {
    "mpp": cmd_mpp,
    "sweep": cmd_sweep,
    "shoot": cmd_shoot,
    "landmarks": cmd_landmarks,
    "estimate": cmd_estimate,
}
