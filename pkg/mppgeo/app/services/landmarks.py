"""
LDDMM landmark manifold
Gaussian-kernel cometric, its analytic derivatives and the cometric-route Christoffel symbols
"""

import json
import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from ..config import LANDMARK_SEPARATION_TOL
from ..errors import CoincidentLandmarksError
from ..models import ChartManifold, LandmarkSpec, Trajectory
from .geometry import christoffel_from_cometric, christoffel_from_metric
from .jets import Jet

logger = logging.getLogger(__name__)


def _points(L: LandmarkSpec, p: np.ndarray) -> np.ndarray:
    return np.asarray(p, dtype=float).reshape((L.n_landmarks, L.amb))


def closest_pair(L: LandmarkSpec, p: np.ndarray) -> Tuple[Tuple[int, int], float]:
    pts = _points(L, p)
    if L.n_landmarks < 2:
        return (0, 0), np.inf
    dist = np.linalg.norm(pts[:, None, :] - pts[None, :, :], axis=-1)
    dist[np.diag_indices(L.n_landmarks)] = np.inf
    i, j = np.unravel_index(np.argmin(dist), dist.shape)
    return (int(min(i, j)), int(max(i, j))), float(dist[i, j])


def _guard(L: LandmarkSpec, p: np.ndarray):
    pair, sep = closest_pair(L, p)
    if sep <= LANDMARK_SEPARATION_TOL:
        raise CoincidentLandmarksError(
            f"landmarks {pair[0]} and {pair[1]} coincide (separation {sep:.3e})", pair=pair
        )


def kernel(L: LandmarkSpec, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """K(a_i, b_j) = exp(−|a_i − b_j|² / 2σ²) for point sets a (n, amb) and b (m, amb)"""
    diff = a[:, None, :] - b[None, :, :]
    return np.exp(-np.sum(diff ** 2, axis=-1) / (2.0 * L.sigma ** 2))


def _kernel_derivatives(L: LandmarkSpec, p: np.ndarray):
    """K_ij with derivatives with respect to p_r^q (and p_s^t)"""
    pts = _points(L, p)
    n = L.n_landmarks
    s2 = L.sigma ** 2
    K = kernel(L, pts, pts)
    diff = pts[:, None, :] - pts[None, :, :]
    eye = np.eye(n)
    # sel[i, j, r] = δ_ri − δ_rj
    sel = eye[:, None, :] - eye[None, :, :]
    dK = np.einsum("ijr,ijq->ijrq", sel, -diff / s2 * K[..., None])
    H = (np.einsum("ijq,ijt->ijqt", diff, diff) / s2 ** 2
         - np.eye(L.amb)[None, None] / s2) * K[..., None, None]
    d2K = np.einsum("ijr,ijs,ijqt->ijrqst", sel, sel, H)
    return K, dK, d2K


def landmark_cometric(L: LandmarkSpec, p: np.ndarray) -> np.ndarray:
    """g^{i^k j^l} = K(p_i, p_j) δ_kl as a (d × d) matrix, flat index i·amb + k"""
    _guard(L, p)
    pts = _points(L, p)
    return np.kron(kernel(L, pts, pts), np.eye(L.amb))


def _expand(L: LandmarkSpec, K, dK, d2K):
    d = L.n_landmarks * L.amb
    I = np.eye(L.amb)
    g_inv = np.kron(K, I)
    dg_inv = np.einsum("ijrq,kl->ikjlrq", dK, I).reshape((d, d, d))
    d2g_inv = np.einsum("ijrqst,kl->ikjlrqst", d2K, I).reshape((d, d, d, d))
    return g_inv, dg_inv, d2g_inv


def landmark_cometric_deriv(L: LandmarkSpec, p: np.ndarray, second: bool = False):
    """g^{i^k j^l}_{,r^q} = (δ_r^i − δ_r^j) ∂K/∂p_r^q δ_kl; optionally also second derivatives"""
    _guard(L, p)
    _, dg_inv, d2g_inv = _expand(L, *_kernel_derivatives(L, p))
    return (dg_inv, d2g_inv) if second else dg_inv


def landmark_cometric_jet(L: LandmarkSpec, p: np.ndarray) -> Jet:
    _guard(L, p)
    return Jet(*_expand(L, *_kernel_derivatives(L, p)))


def landmark_christoffel(L: LandmarkSpec, p: np.ndarray, route: str = "cometric"):
    """Christoffel symbols and their derivatives.

    ``route="cometric"`` evaluates the formula written in cometric derivatives;
    ``route="metric"`` inverts the kernel matrix and applies the standard
    formula (Γ only, the derivative slot is None).
    """
    _guard(L, p)
    g_inv, dg_inv, d2g_inv = _expand(L, *_kernel_derivatives(L, p))
    g = np.linalg.inv(g_inv)
    if route == "cometric":
        return christoffel_from_cometric(g, g_inv, dg_inv, d2g_inv)
    if route == "metric":
        dg = -np.einsum("ia,abl,bj->ijl", g, dg_inv, g)
        return christoffel_from_metric(g_inv, dg)
    raise ValueError(f"unknown Christoffel route {route!r}")


def make_landmark_manifold(L: LandmarkSpec) -> ChartManifold:
    """Cometric-primary chart manifold of N labelled landmarks in R^amb"""
    return ChartManifold(
        dim=L.n_landmarks * L.amb,
        name=f"landmarks{L.n_landmarks}",
        cometric=lambda p: landmark_cometric_jet(L, p),
        chart_domain=lambda p: closest_pair(L, p)[1] > LANDMARK_SEPARATION_TOL,
        params=L.model_dump(),
    )


def advect_grid(L: LandmarkSpec, traj: Trajectory, grid: np.ndarray) -> np.ndarray:
    """Carry grid points along the flow interpolating the landmark velocities.

    At each sample the landmark velocities v are spread by v(y) = Σ_j K(y, p_j) α_j
    with K(p, p) α = v, and the grid moves one explicit step. Returns the grid
    at every sample time, shape (n, m, amb).
    """
    grid = np.asarray(grid, dtype=float)
    if len(traj) < 2:
        return grid[None].copy()
    xs = traj.xs
    velocities = np.gradient(xs, traj.ts, axis=0, edge_order=2 if len(traj) > 2 else 1)
    out = np.empty((len(traj),) + grid.shape)
    out[0] = grid
    y = grid.copy()
    for n in range(len(traj) - 1):
        pts = _points(L, xs[n])
        v = _points(L, velocities[n])
        alpha = np.linalg.solve(kernel(L, pts, pts), v)
        h = traj.ts[n + 1] - traj.ts[n]
        y = y + h * kernel(L, y, pts) @ alpha
        out[n + 1] = y
    return out


def load_landmarks(source: Union[str, Path, List]) -> np.ndarray:
    """Landmarks from a JSON array of [x, y] pairs (inline list or file path)"""
    if isinstance(source, (str, Path)):
        source = json.loads(Path(source).read_text())
    pts = np.asarray(source, dtype=float)
    if pts.ndim != 2:
        raise ValueError("landmarks must be an array of coordinate pairs")
    return pts


def dump_landmarks(points: np.ndarray) -> List[List[float]]:
    return np.asarray(points, dtype=float).tolist()
