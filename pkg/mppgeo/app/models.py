"""
Domain models for mppgeo
Immutable numerical value types and validated configuration models
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

try:
    from .config import FD_STEP, FRAME_TOL, LM_DAMPING, SHOOTING_RESTARTS, SHOOTING_TOL
    from .errors import FrameDegeneracyError
    from .services.jets import Jet
except ImportError:
    from config import FD_STEP, FRAME_TOL, LM_DAMPING, SHOOTING_RESTARTS, SHOOTING_TOL
    from errors import FrameDegeneracyError
    from services.jets import Jet


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ChartManifold:
    """A manifold represented in a single chart.

    Exactly one of ``metric`` / ``cometric`` is the primary source. Both map a
    chart point to a second-order ``Jet`` of the (co)metric tensor with respect
    to the chart coordinates.
    """

    dim: int
    name: str
    metric: Optional[Callable[[np.ndarray], Jet]] = None
    cometric: Optional[Callable[[np.ndarray], Jet]] = None
    embedding: Optional[Callable[[np.ndarray], np.ndarray]] = None
    chart_domain: Callable[[np.ndarray], bool] = lambda x: True
    params: Dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be positive")
        if (self.metric is None) == (self.cometric is None):
            raise ValueError("exactly one of metric and cometric must be the primary source")

    @property
    def cometric_primary(self) -> bool:
        return self.cometric is not None

    def contains(self, x: np.ndarray) -> bool:
        x = np.asarray(x, dtype=float)
        return x.shape == (self.dim,) and bool(np.all(np.isfinite(x))) and bool(self.chart_domain(x))


@dataclass(frozen=True)
class GeometryJet:
    """Metric, cometric, Christoffel symbols and first derivatives at a point.

    Index layout: ``gamma[k, i, j] = Γ^k_{ij}``, ``gamma_deriv[k, i, j, l] = Γ^k_{ij,l}``,
    ``cometric_deriv[i, j, l] = g^{ij}_{,l}``.
    """

    x: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray
    gamma_deriv: np.ndarray
    cometric_deriv: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class FramePoint:
    """Base point x with a rank-k frame u (columns are frame vectors) and isotropic weight λ"""

    x: np.ndarray
    u: np.ndarray
    lam: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x))
        u = np.array(self.u, dtype=float)
        if u.ndim == 1:
            u = u[:, None]
        object.__setattr__(self, "u", _frozen(u))
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def d(self) -> int:
        return self.x.shape[0]

    @property
    def k(self) -> int:
        return self.u.shape[1]

    def validate(self, tol: float = FRAME_TOL) -> "FramePoint":
        """Check shape, rank and the λ/k admissibility rule"""
        if self.u.shape[0] != self.d or not 1 <= self.k <= self.d:
            raise FrameDegeneracyError(
                f"frame of shape {self.u.shape} does not fit a point of dimension {self.d}"
            )
        if self.lam < 0:
            raise FrameDegeneracyError(f"isotropic weight must be non-negative, got {self.lam}")
        if self.lam == 0 and self.k < self.d:
            raise FrameDegeneracyError(
                f"rank {self.k} < {self.d} frames need a positive isotropic weight"
            )
        smallest = float(np.linalg.svd(self.u, compute_uv=False)[-1])
        if smallest <= tol:
            raise FrameDegeneracyError(
                f"frame is rank deficient (smallest singular value {smallest:.3e})",
                smallest_singular_value=smallest
            )
        return self


@dataclass(frozen=True)
class CotangentState:
    """Phase-space state (x, u, ξ_x, ξ_u) on T*F^kM.

    Flat layout: ``[x (d) | u column-major (dk) | ξ_x (d) | ξ_u column-major (dk)]``.
    """

    point: FramePoint
    xi_x: np.ndarray
    xi_u: np.ndarray

    def __post_init__(self):
        xi_x = _frozen(self.xi_x)
        xi_u = np.array(self.xi_u, dtype=float)
        if xi_u.ndim == 1:
            xi_u = xi_u.reshape((self.point.d, self.point.k), order="F")
        if xi_x.shape != (self.point.d,) or xi_u.shape != self.point.u.shape:
            raise ValueError(
                f"momentum shapes {xi_x.shape}, {xi_u.shape} do not match frame {self.point.u.shape}"
            )
        object.__setattr__(self, "xi_x", xi_x)
        object.__setattr__(self, "xi_u", _frozen(xi_u))

    @property
    def size(self) -> int:
        d, k = self.point.d, self.point.k
        return 2 * (d + d * k)

    def to_vector(self) -> np.ndarray:
        p = self.point
        return np.concatenate([
            p.x, p.u.ravel(order="F"), self.xi_x, self.xi_u.ravel(order="F")
        ])

    @classmethod
    def from_vector(cls, z: np.ndarray, d: int, k: int, lam: float = 0.0) -> "CotangentState":
        z = np.asarray(z, dtype=float)
        dk = d * k
        x = z[:d]
        u = z[d:d + dk].reshape((d, k), order="F")
        xi_x = z[d + dk:2 * d + dk]
        xi_u = z[2 * d + dk:].reshape((d, k), order="F")
        return cls(FramePoint(x, u, lam), xi_x, xi_u)

    @property
    def momentum(self) -> np.ndarray:
        return np.concatenate([self.xi_x, self.xi_u.ravel(order="F")])


@dataclass(frozen=True)
class CometricBlocks:
    """Blocks of the frame bundle cometric in (x, u) coordinates.

    ``gamma_frame[h, g, j] = Γ^{h_γ}_j``; ``gamma_matrix`` is the same array
    as a (dk × d) matrix whose row index is the column-major flat index of
    (h, γ).
    """

    W: np.ndarray
    Gxx: np.ndarray
    Gxu: np.ndarray
    Gux: np.ndarray
    Guu: np.ndarray
    gamma_frame: np.ndarray
    gamma_matrix: np.ndarray

    def assembled(self) -> np.ndarray:
        """Full (d + dk) × (d + dk) cometric matrix"""
        return np.block([[self.Gxx, self.Gxu], [self.Gux, self.Guu]])


@dataclass(frozen=True)
class Trajectory:
    """Time grid and state samples, with optional per-step Hamiltonian.

    ``kind`` names the state layout: ``"mpp"`` ([x|u|ξ_x|ξ_u]), ``"frame"``
    ([x|u]), ``"geodesic"`` ([x|ẋ]) or ``"generic"``.
    """

    ts: np.ndarray
    states: np.ndarray
    kind: str = "generic"
    chart: str = ""
    d: int = 0
    k: int = 0
    lam: float = 0.0
    hamiltonian: Optional[np.ndarray] = None
    diagnostics: Dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.ts.shape[0]

    @property
    def xs(self) -> np.ndarray:
        return self.states[:, :self.d]

    @property
    def us(self) -> np.ndarray:
        """Frames as an (n, d, k) array"""
        if self.kind not in ("mpp", "frame"):
            raise ValueError(f"trajectory of kind {self.kind!r} carries no frame")
        d, k = self.d, self.k
        n = len(self)
        return self.states[:, d:d + d * k].reshape((n, k, d)).transpose(0, 2, 1)

    @property
    def velocities(self) -> np.ndarray:
        if self.kind != "geodesic":
            raise ValueError("only geodesic trajectories carry velocities")
        return self.states[:, self.d:2 * self.d]

    def state(self, i: int) -> CotangentState:
        if self.kind != "mpp":
            raise ValueError("only mpp trajectories carry momenta")
        return CotangentState.from_vector(self.states[i], self.d, self.k, self.lam)

    @property
    def endpoint(self) -> np.ndarray:
        return self.xs[-1]


class IntegratorConfig(BaseModel):
    """Fixed-step explicit integration settings"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    scheme: Literal["euler", "rk4"] = "rk4"
    steps: int = Field(1000, ge=1, description="Number of uniform steps")
    t_end: float = Field(1.0, gt=0, description="Final time")


class SurfaceSpec(BaseModel):
    """Embedded surface with its designated chart"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["plane", "sphere", "ellipsoid", "hyperbolic"]
    radius: float = Field(1.0, gt=0, description="Sphere radius")
    axes: Tuple[float, float, float] = Field((1.0, 0.8, 0.6), description="Ellipsoid semi-axes")

    @field_validator("axes")
    @classmethod
    def positive_axes(cls, v):
        if any(a <= 0 for a in v):
            raise ValueError("ellipsoid semi-axes must be positive")
        return v


class EuclideanSpec(BaseModel):
    """Flat R^dim in Cartesian coordinates"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["euclidean"] = "euclidean"
    dim: int = Field(2, ge=1)


class LandmarkSpec(BaseModel):
    """LDDMM landmark manifold parameters"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["landmarks"] = "landmarks"
    n_landmarks: int = Field(..., ge=1)
    amb: int = Field(2, ge=1, description="Ambient dimension")
    sigma: float = Field(0.5, gt=0, description="Gaussian kernel width")


class ShootingConfig(BaseModel):
    """Levenberg-Marquardt shooting settings"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    restarts: int = Field(SHOOTING_RESTARTS, ge=0)
    seed: int = 0
    tol: float = Field(SHOOTING_TOL, gt=0)
    max_iter: int = Field(60, ge=1)
    fd_step: float = Field(FD_STEP, gt=0)
    damping: float = Field(LM_DAMPING, gt=0)
    perturbation: float = Field(0.1, ge=0, description="Relative scale of restart perturbations")
    transversality: bool = False

    @model_validator(mode="after")
    def sane_tolerances(self):
        if self.fd_step >= 1e-2:
            raise ValueError("finite difference step too large")
        return self

