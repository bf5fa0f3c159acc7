"""
Frame bundle geometry
Anisotropic cometric, the normal MPP Hamiltonian flow, development and path diagnostics
"""

import logging
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
from scipy.integrate import trapezoid

from ..config import FRAME_TOL
from ..errors import FrameDegeneracyError, NonHorizontalPathError
from ..models import (
    ChartManifold,
    CometricBlocks,
    CotangentState,
    FramePoint,
    GeometryJet,
    IntegratorConfig,
    Trajectory,
)
from .geometry import curvature, geometry_jet, _sampled_path
from .integrators import integrate, integrate_segments

logger = logging.getLogger(__name__)

HORIZONTALITY_TOL = 1e-4


def _use_low_rank(k: int, d: int, lam: float, low_rank: Optional[bool]) -> bool:
    if low_rank is None:
        return not (k == d and lam == 0)
    return low_rank


def frame_cometric(u: np.ndarray, lam: float = 0.0, g_inv: Optional[np.ndarray] = None,
                   low_rank: Optional[bool] = None) -> np.ndarray:
    """W^{ij} = u^i_α u^j_α, plus λ g^{ij} on the low-rank path"""
    d, k = u.shape
    W = u @ u.T
    if _use_low_rank(k, d, lam, low_rank):
        if g_inv is None:
            raise ValueError("low-rank frame cometric needs the Riemannian cometric")
        W = W + lam * g_inv
    return W


def gamma_frame(gamma: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Γ^{h_γ}_j = Γ^h_{ji} u^i_γ as an array indexed [h, γ, j]"""
    return np.einsum("hji,ig->hgj", gamma, u)


def _horizontal_covector(gamma: np.ndarray, u: np.ndarray, xi_x: np.ndarray, xi_u: np.ndarray) -> np.ndarray:
    """η_h = ξ_h − Γ^j_{hi} u^i_β ξ_{jβ}, the covector paired with horizontal lifts"""
    return xi_x - np.einsum("jhi,ib,jb->h", gamma, u, xi_u)


def cometric_blocks(M: ChartManifold, s: FramePoint, low_rank: Optional[bool] = None) -> CometricBlocks:
    """Blocks of the sub-Riemannian cometric on F^kM at s.

    With B = [I; −Γ_frame] the assembled matrix is B W Bᵀ, so it is symmetric,
    positive semidefinite and of rank at most d.
    """
    s.validate()
    jet = geometry_jet(M, s.x)
    d, k = s.d, s.k
    W = frame_cometric(s.u, s.lam, jet.g_inv, low_rank)
    gf = gamma_frame(jet.gamma, s.u)
    # rows follow the column-major flattening of (h, γ)
    gm = gf.transpose(1, 0, 2).reshape((k * d, d))
    return CometricBlocks(
        W=W,
        Gxx=W,
        Gxu=-W @ gm.T,
        Gux=-gm @ W,
        Guu=gm @ W @ gm.T,
        gamma_frame=gf,
        gamma_matrix=gm,
    )


def hamiltonian(M: ChartManifold, z: CotangentState, low_rank: Optional[bool] = None) -> float:
    """H = ½ ηᵀ W η, equal to ½ Σ_α ξ(H_α(u))² plus the λ-weighted isotropic part"""
    p = z.point
    jet = geometry_jet(M, p.x)
    eta = _horizontal_covector(jet.gamma, p.u, z.xi_x, z.xi_u)
    W = frame_cometric(p.u, p.lam, jet.g_inv, low_rank)
    return 0.5 * float(eta @ W @ eta)


def _flow(jet: GeometryJet, u: np.ndarray, xi_x: np.ndarray, xi_u: np.ndarray, lam: float,
          low_rank: bool) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    gam, dgam = jet.gamma, jet.gamma_deriv
    eta = _horizontal_covector(gam, u, xi_x, xi_u)
    W = u @ u.T
    if low_rank:
        W = W + lam * jet.g_inv
    xdot = W @ eta
    udot = -np.einsum("ihk,h,ka->ia", gam, xdot, u)
    xi_x_dot = np.einsum("h,jhil,ib,jb->l", xdot, dgam, u, xi_u)
    if low_rank:
        xi_x_dot = xi_x_dot - 0.5 * lam * np.einsum("i,ijl,j->l", eta, jet.cometric_deriv, eta)
    xi_u_dot = -np.outer(eta, u.T @ eta) + np.einsum("h,jhl,jz->lz", xdot, gam, xi_u)
    return xdot, udot, xi_x_dot, xi_u_dot


def _pack(xdot, udot, xi_x_dot, xi_u_dot) -> np.ndarray:
    return np.concatenate([xdot, udot.ravel(order="F"), xi_x_dot, xi_u_dot.ravel(order="F")])


def mpp_rhs(M: ChartManifold, z: CotangentState, low_rank: Optional[bool] = None) -> np.ndarray:
    """Hamiltonian vector field of the normal MPP flow, in the flat state layout.

    Written as explicit index contractions:

        ẋ^i = W^{ij} η_j
        u̇^i_α = −Γ^i_{hk} ẋ^h u^k_α
        ξ̇_l = ẋ^h Γ^j_{hi,l} u^i_β ξ_{jβ} − ½ λ η_i g^{ij}_{,l} η_j
        ξ̇_{lζ} = −η_l (uᵀη)_ζ + ẋ^h Γ^j_{hl} ξ_{jζ}

    The λ term is present on the low-rank path only.
    """
    p = z.point
    jet = geometry_jet(M, p.x)
    low = _use_low_rank(p.k, p.d, p.lam, low_rank)
    return _pack(*_flow(jet, p.u, z.xi_x, z.xi_u, p.lam, low))


def mpp_vector_field(M: ChartManifold, d: int, k: int, lam: float = 0.0,
                     low_rank: Optional[bool] = None):
    """``mpp_rhs`` as a function of flat state vectors, for the integrators"""
    low = _use_low_rank(k, d, lam, low_rank)
    dk = d * k

    def rhs(t, z):
        x = z[:d]
        u = z[d:d + dk].reshape((d, k), order="F")
        xi_x = z[d + dk:2 * d + dk]
        xi_u = z[2 * d + dk:].reshape((d, k), order="F")
        return _pack(*_flow(geometry_jet(M, x), u, xi_x, xi_u, lam, low))

    return rhs


def integrate_mpp(M: ChartManifold, z0: CotangentState, cfg: IntegratorConfig,
                  low_rank: Optional[bool] = None, record: bool = True) -> Trajectory:
    """Integrate the normal MPP flow from z0 on [0, cfg.t_end].

    With ``record`` the Hamiltonian and the smallest frame singular value are
    tracked per step.
    """
    p = z0.point.validate()
    d, k, lam = p.d, p.k, p.lam
    low = _use_low_rank(k, d, lam, low_rank)
    smallest = [np.inf]

    def observe(z):
        state = CotangentState.from_vector(z, d, k, lam)
        sv = float(np.linalg.svd(state.point.u, compute_uv=False)[-1])
        if sv <= FRAME_TOL and smallest[0] > FRAME_TOL:
            logger.warning(f"Frame degenerated along the flow (smallest singular value {sv:.3e})")
        smallest[0] = min(smallest[0], sv)
        return hamiltonian(M, state, low)

    traj = integrate(
        mpp_vector_field(M, d, k, lam, low), z0.to_vector(), cfg,
        valid=lambda z: M.contains(z[:d]), observer=observe if record else None,
        kind="mpp", chart=M.name, d=d, k=k, lam=lam,
    )
    if record:
        traj.diagnostics["min_frame_singular_value"] = smallest[0]
    traj.diagnostics["low_rank"] = low
    return traj


def hamiltonian_drift(traj: Trajectory) -> float:
    """max_t |H(z_t) − H(z_0)| / H(z_0) (absolute drift when H(z_0) = 0)"""
    H = traj.hamiltonian
    scale = abs(H[0]) if H[0] != 0 else 1.0
    return float(np.max(np.abs(H - H[0])) / scale)


def frame_coordinates(M: ChartManifold, z: CotangentState) -> np.ndarray:
    """(ξ(H_α(u)))_α = uᵀη, the momentum in frame coordinates"""
    p = z.point
    gam = geometry_jet(M, p.x).gamma
    return p.u.T @ _horizontal_covector(gam, p.u, z.xi_x, z.xi_u)


def _square_frame(u0: Union[FramePoint, np.ndarray], x0: Optional[np.ndarray] = None) -> FramePoint:
    if not isinstance(u0, FramePoint):
        u0 = FramePoint(x0, u0)
    if u0.k != u0.d:
        raise FrameDegeneracyError(f"development needs a full frame, got rank {u0.k} in dimension {u0.d}")
    return u0.validate()


def develop(M: ChartManifold, u0: FramePoint, ts: np.ndarray, s: np.ndarray,
            substeps: int = 100) -> Trajectory:
    """Develop the piecewise-linear driver through (ts, s) onto M.

    ẋ^i = u^i_α ṡ^α, u̇^i_α = −Γ^i_{jk} ẋ^j u^k_α, started at u0. The result is a
    ``"frame"`` trajectory ([x | u column-major]) sampled at every substep.
    """
    u0 = _square_frame(u0)
    d = u0.d
    ts = np.asarray(ts, dtype=float)
    s = np.asarray(s, dtype=float)
    if not np.allclose(s[0], 0.0):
        raise ValueError("driving path must start at the origin")
    s_dot = np.diff(s, axis=0) / np.diff(ts)[:, None]

    def rhs(n, t, z):
        x = z[:d]
        u = z[d:].reshape((d, d), order="F")
        gam = geometry_jet(M, x).gamma
        xdot = u @ s_dot[n]
        udot = -np.einsum("ijk,j,ka->ia", gam, xdot, u)
        return np.concatenate([xdot, udot.ravel(order="F")])

    z0 = np.concatenate([u0.x, u0.u.ravel(order="F")])
    dense_ts, states = integrate_segments(rhs, z0, ts, substeps=substeps)
    return Trajectory(ts=dense_ts, states=states, kind="frame", chart=M.name, d=d, k=d)


def antidevelop(M: ChartManifold, u0: Union[FramePoint, np.ndarray], ts: np.ndarray,
                xs: np.ndarray, substeps: int = 1) -> np.ndarray:
    """Anti-development of the piecewise-linear path through (ts, xs).

    The frame is parallel transported along the path while ṡ = u⁻¹ẋ is
    accumulated; returns s at the path samples, s_0 = 0.
    """
    ts, xs, velocities, position = _sampled_path(ts, xs)
    u0 = _square_frame(u0, xs[0])
    if not np.allclose(u0.x, xs[0], atol=1e-9):
        raise ValueError("path must start at the base point of the frame")
    d = u0.d

    def rhs(n, t, z):
        u = z[:d * d].reshape((d, d), order="F")
        v = velocities[n]
        gam = geometry_jet(M, position(n, t)).gamma
        udot = -np.einsum("ijk,j,ka->ia", gam, v, u)
        try:
            sdot = np.linalg.solve(u, v)
        except np.linalg.LinAlgError:
            raise FrameDegeneracyError(f"transported frame became singular near t={t:.6g}")
        return np.concatenate([udot.ravel(order="F"), sdot])

    z0 = np.concatenate([u0.u.ravel(order="F"), np.zeros(d)])
    _, states = integrate_segments(rhs, z0, ts, substeps=substeps)
    return states[::substeps, d * d:]


def horizontality_residual(M: ChartManifold, traj: Trajectory) -> float:
    """max_t ‖u̇^i_α + Γ^i_{jk} ẋ^j u^k_α‖_F with time derivatives from the samples"""
    xs, us = traj.xs, traj.us
    if len(traj) < 2:
        return 0.0
    order = 2 if len(traj) > 2 else 1
    xdot = np.gradient(xs, traj.ts, axis=0, edge_order=order)
    udot = np.gradient(us, traj.ts, axis=0, edge_order=order)
    worst = 0.0
    for n in range(len(traj)):
        gam = geometry_jet(M, xs[n]).gamma
        defect = udot[n] + np.einsum("ijk,j,ka->ia", gam, xdot[n], us[n])
        worst = max(worst, float(np.linalg.norm(defect)))
    return worst


def sub_riemannian_energy(M: ChartManifold, traj: Trajectory,
                          horizontality_tol: float = HORIZONTALITY_TOL) -> float:
    """∫ W_{ij} ẋ^i ẋ^j dt by the trapezoidal rule.

    MPP trajectories are horizontal by construction and use the momenta (the
    integrand is ηᵀWη = 2H). Frame paths are checked for horizontality, then
    the samples are differentiated and W inverted.
    """
    integrand = np.empty(len(traj))
    if traj.kind == "mpp":
        for n in range(len(traj)):
            z = traj.state(n)
            integrand[n] = 2.0 * hamiltonian(M, z)
    else:
        residual = horizontality_residual(M, traj)
        if residual > horizontality_tol:
            raise NonHorizontalPathError(
                f"path is not horizontal (residual {residual:.3e} > {horizontality_tol:.1e})",
                residual=residual
            )
        order = 2 if len(traj) > 2 else 1
        xdot = np.gradient(traj.xs, traj.ts, axis=0, edge_order=order)
        for n, (x, u) in enumerate(zip(traj.xs, traj.us)):
            jet = geometry_jet(M, x)
            W = frame_cometric(u, traj.lam, jet.g_inv)
            integrand[n] = xdot[n] @ np.linalg.solve(W, xdot[n])
    return float(trapezoid(integrand, traj.ts))


class CovariantAcceleration(NamedTuple):
    """Frame-coordinate covariant acceleration evaluated two ways"""

    from_momentum: np.ndarray
    from_curvature: np.ndarray

    def discrepancy(self) -> float:
        return float(np.max(np.abs(self.from_momentum - self.from_curvature)))


def covariant_acceleration(M: ChartManifold, traj: Trajectory) -> CovariantAcceleration:
    """u⁻¹∇_ẋẋ along an MPP, shape (n, k) for both routes.

    ``from_momentum`` differentiates the frame coordinates of the momentum in
    time. ``from_curvature`` contracts the vertical momentum with the curvature
    tensor, b_α = ξ_{hβ} (R(u_α, ẋ)u_β)^h. Both need a full frame with λ = 0.
    """
    if traj.kind != "mpp":
        raise ValueError("covariant acceleration needs an mpp trajectory with momenta")
    if traj.k < traj.d or traj.lam > 0:
        raise ValueError(f"covariant acceleration needs a full frame with lam = 0, got k={traj.k}, lam={traj.lam}")
    n, k = len(traj), traj.k
    coords = np.empty((n, k))
    contracted = np.empty((n, k))
    for i in range(n):
        z = traj.state(i)
        p = z.point
        jet = geometry_jet(M, p.x)
        eta = _horizontal_covector(jet.gamma, p.u, z.xi_x, z.xi_u)
        coords[i] = p.u.T @ eta
        xdot = frame_cometric(p.u, p.lam, jet.g_inv) @ eta
        R = curvature(M, p.x, jet)
        contracted[i] = np.einsum("hb,mb,ja,c,cjmh->a", z.xi_u, p.u, p.u, xdot, R)
    order = 2 if n > 2 else 1
    return CovariantAcceleration(
        from_momentum=np.gradient(coords, traj.ts, axis=0, edge_order=order),
        from_curvature=contracted,
    )
