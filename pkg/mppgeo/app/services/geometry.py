"""
Chart-based Riemannian geometry
Metric/cometric jets, Christoffel symbols and derivatives, curvature, geodesics and parallel transport
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..errors import ChartDomainError, FrameDegeneracyError, NonPositiveMetricError
from ..models import ChartManifold, GeometryJet, IntegratorConfig, Trajectory
from .integrators import integrate, integrate_segments

logger = logging.getLogger(__name__)

SYMMETRY_TOL = 1e-10


def _check_spd(mat: np.ndarray, what: str, x: np.ndarray):
    if not np.allclose(mat, mat.T, rtol=0.0, atol=SYMMETRY_TOL * max(1.0, np.abs(mat).max())):
        raise NonPositiveMetricError(f"{what} is not symmetric at x={x.tolist()}")
    try:
        np.linalg.cholesky(mat)
    except np.linalg.LinAlgError:
        raise NonPositiveMetricError(f"{what} is not positive definite at x={x.tolist()}")


def christoffel_from_metric(
    g_inv: np.ndarray, dg: np.ndarray, d2g: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Γ^k_{ij} = ½ g^{kl}(g_{lj,i} + g_{li,j} − g_{ij,l}) and, given d2g, its derivative.

    ``dg[i, j, l] = g_{ij,l}``, ``d2g[i, j, l, m] = g_{ij,lm}``.
    """
    # a[l, i, j] = g_{lj,i} + g_{li,j} - g_{ij,l}
    a = np.einsum("lji->lij", dg) + dg - np.einsum("ijl->lij", dg)
    gamma = 0.5 * np.einsum("kl,lij->kij", g_inv, a)
    if d2g is None:
        return gamma, None
    dg_inv = -np.einsum("ka,abm,bl->klm", g_inv, dg, g_inv)
    da = np.einsum("ljim->lijm", d2g) + d2g - np.einsum("ijlm->lijm", d2g)
    gamma_deriv = 0.5 * (np.einsum("klm,lij->kijm", dg_inv, a)
                         + np.einsum("kl,lijm->kijm", g_inv, da))
    return gamma, gamma_deriv


def christoffel_from_cometric(
    g: np.ndarray, g_inv: np.ndarray, dg_inv: np.ndarray, d2g_inv: Optional[np.ndarray] = None
) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """Christoffel symbols written through cometric derivatives only.

    Γ^k_{ij} = ½ g_{ir}(g^{kl}g^{rs}_{,l} − g^{sl}g^{rk}_{,l} − g^{rl}g^{ks}_{,l}) g_{sj}
    with ``dg_inv[r, s, l] = g^{rs}_{,l}``; the derivative uses
    g_{ir,m} = −g_{ia} g^{ab}_{,m} g_{br}.
    """
    t = (np.einsum("kl,rsl->krs", g_inv, dg_inv)
         - np.einsum("sl,rkl->krs", g_inv, dg_inv)
         - np.einsum("rl,ksl->krs", g_inv, dg_inv))
    gamma = 0.5 * np.einsum("ir,krs,sj->kij", g, t, g)
    if d2g_inv is None:
        return gamma, None
    dt = (np.einsum("klm,rsl->krsm", dg_inv, dg_inv)
          + np.einsum("kl,rslm->krsm", g_inv, d2g_inv)
          - np.einsum("slm,rkl->krsm", dg_inv, dg_inv)
          - np.einsum("sl,rklm->krsm", g_inv, d2g_inv)
          - np.einsum("rlm,ksl->krsm", dg_inv, dg_inv)
          - np.einsum("rl,kslm->krsm", g_inv, d2g_inv))
    dg = -np.einsum("ia,abm,br->irm", g, dg_inv, g)
    gamma_deriv = 0.5 * (np.einsum("irm,krs,sj->kijm", dg, t, g)
                         + np.einsum("ir,krsm,sj->kijm", g, dt, g)
                         + np.einsum("ir,krs,sjm->kijm", g, t, dg))
    return gamma, gamma_deriv


def geometry_jet(M: ChartManifold, x: np.ndarray) -> GeometryJet:
    """Metric data and Christoffel symbols (with first derivatives) at x"""
    x = np.asarray(x, dtype=float)
    if not M.contains(x):
        raise ChartDomainError(f"point {x.tolist()} is outside the chart domain of {M.name}")

    if M.cometric_primary:
        jet = M.cometric(x)
        g_inv, dg_inv, d2g_inv = jet.val, jet.grad, jet.hess
        _check_spd(g_inv, "cometric", x)
        g = np.linalg.inv(g_inv)
        gamma, gamma_deriv = christoffel_from_cometric(g, g_inv, dg_inv, d2g_inv)
    else:
        jet = M.metric(x)
        g, dg, d2g = jet.val, jet.grad, jet.hess
        _check_spd(g, "metric", x)
        g_inv = np.linalg.inv(g)
        gamma, gamma_deriv = christoffel_from_metric(g_inv, dg, d2g)
        dg_inv = -np.einsum("ia,abl,bj->ijl", g_inv, dg, g_inv)

    return GeometryJet(x=x, g=g, g_inv=g_inv, gamma=gamma,
                       gamma_deriv=gamma_deriv, cometric_deriv=dg_inv)


def curvature(M: ChartManifold, x: np.ndarray, jet: Optional[GeometryJet] = None) -> np.ndarray:
    """Coordinate curvature tensor ``R[i, j, k, s] = R_{ijk}^s``.

    R_{ijk}^s = Γ^l_{ik}Γ^s_{jl} − Γ^l_{jk}Γ^s_{il} + Γ^s_{ik,j} − Γ^s_{jk,i}.
    With this sign convention R(X, Y)Z in the usual ∇_X∇_Y − ∇_Y∇_X − ∇_[X,Y]
    sense has components R_{jik}^s X^i Y^j Z^k.
    """
    jet = jet or geometry_jet(M, x)
    gam, dgam = jet.gamma, jet.gamma_deriv
    return (np.einsum("lik,sjl->ijks", gam, gam)
            - np.einsum("ljk,sil->ijks", gam, gam)
            + np.einsum("sikj->ijks", dgam)
            - np.einsum("sjki->ijks", dgam))


def curvature_operator(R: np.ndarray, X: np.ndarray, Y: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """R(X, Y)Z from the coordinate tensor (columns of Z are transformed independently)"""
    return np.einsum("jiks,i,j,k...->s...", R, X, Y, Z)


def sectional_curvature(M: ChartManifold, x: np.ndarray, v: np.ndarray, w: np.ndarray) -> float:
    jet = geometry_jet(M, x)
    R = curvature(M, x, jet)
    g = jet.g
    num = v @ g @ curvature_operator(R, v, w, w)
    den = (v @ g @ v) * (w @ g @ w) - (v @ g @ w) ** 2
    return float(num / den)


def orthonormal_frame(M: ChartManifold, x: np.ndarray) -> np.ndarray:
    """A g-orthonormal frame u with u uᵀ = g⁻¹ (lower Cholesky factor of the cometric)"""
    return np.linalg.cholesky(geometry_jet(M, x).g_inv)


def riemannian_geodesic(
    M: ChartManifold, x0: np.ndarray, v0: np.ndarray, cfg: IntegratorConfig
) -> Trajectory:
    """Integrate ẍ^k = −Γ^k_{ij} ẋ^i ẋ^j on [0, cfg.t_end].

    States are [x | ẋ]; the recorded observable is the squared speed ‖ẋ‖²_g.
    """
    d = M.dim

    def rhs(t, z):
        x, v = z[:d], z[d:]
        gam = geometry_jet(M, x).gamma
        return np.concatenate([v, -np.einsum("kij,i,j->k", gam, v, v)])

    def speed2(z):
        return float(z[d:] @ geometry_jet(M, z[:d]).g @ z[d:])

    z0 = np.concatenate([np.asarray(x0, dtype=float), np.asarray(v0, dtype=float)])
    return integrate(rhs, z0, cfg, valid=lambda z: M.contains(z[:d]), observer=speed2,
                     kind="geodesic", chart=M.name, d=d)


def _sampled_path(ts: np.ndarray, xs: np.ndarray):
    ts = np.asarray(ts, dtype=float)
    xs = np.asarray(xs, dtype=float)
    velocities = np.diff(xs, axis=0) / np.diff(ts)[:, None]
    position = lambda n, t: xs[n] + (t - ts[n]) * velocities[n]
    return ts, xs, velocities, position


def parallel_transport(
    M: ChartManifold, ts: np.ndarray, xs: np.ndarray, u0: np.ndarray, substeps: int = 1
) -> np.ndarray:
    """Transport the columns of u0 along the piecewise-linear path through (ts, xs).

    Solves u̇^i_α = −Γ^i_{jk} ẋ^j u^k_α; returns frames at the path samples as an
    (n, d, k) array (intermediate substeps are dropped).
    """
    ts, xs, velocities, position = _sampled_path(ts, xs)
    u0 = np.asarray(u0, dtype=float)
    if u0.ndim == 1:
        u0 = u0[:, None]
    d, k = u0.shape

    def rhs(n, t, z):
        u = z.reshape((d, k))
        gam = geometry_jet(M, position(n, t)).gamma
        return -np.einsum("ijk,j,ka->ia", gam, velocities[n], u).ravel()

    _, states = integrate_segments(rhs, u0.ravel(), ts, substeps=substeps)
    return states[::substeps].reshape((-1, d, k))


def log_det_frame(M: ChartManifold, x: np.ndarray, u: np.ndarray) -> float:
    """½ log det of the Gram matrix [g(u_α, u_β)]; the log of det_g u"""
    u = np.asarray(u, dtype=float)
    if u.ndim == 1:
        u = u[:, None]
    gram = u.T @ geometry_jet(M, x).g @ u
    sign, logdet = np.linalg.slogdet(gram)
    if sign <= 0 or not np.isfinite(logdet):
        raise FrameDegeneracyError("frame is rank deficient: Gram determinant is not positive")
    return 0.5 * float(logdet)
