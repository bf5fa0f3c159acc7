"""
Embedded test surfaces
Plane, sphere, ellipsoid and saddle, each in a single chart F: R² → R³
"""

import logging
from typing import Tuple

import numpy as np

from ..models import ChartManifold, SurfaceSpec
from .jets import Jet, stack

logger = logging.getLogger(__name__)


def _axes(spec: SurfaceSpec) -> Tuple[float, float, float]:
    if spec.kind == "sphere":
        return (spec.radius,) * 3
    return tuple(spec.axes)


def _stereographic_jacobian(q: Jet, a: float, b: float, c: float) -> Jet:
    """DF for F(q) = (2a q₁, 2b q₂, c(1 − |q|²)) / (1 + |q|²)"""
    q1, q2 = q[0], q[1]
    inv_s = 1.0 / (1.0 + q1 * q1 + q2 * q2)
    inv_s2 = inv_s * inv_s
    cross = -4.0 * q1 * q2 * inv_s2
    return stack([
        a * (2.0 * inv_s - 4.0 * q1 * q1 * inv_s2), a * cross,
        b * cross, b * (2.0 * inv_s - 4.0 * q2 * q2 * inv_s2),
        -4.0 * c * q1 * inv_s2, -4.0 * c * q2 * inv_s2,
    ], shape=(3, 2))


def _saddle_jacobian(q: Jet) -> Jet:
    """DF for F(x, y) = (x, y, x² − y²)"""
    return stack([1.0, 0.0, 0.0, 1.0, 2.0 * q[0], -2.0 * q[1]], shape=(3, 2))


def induced_metric(spec: SurfaceSpec, x: np.ndarray) -> Jet:
    """Second-order jet of g = (DF)ᵀ DF at chart point x"""
    q = Jet.variables(x)
    if spec.kind == "plane":
        return Jet.constant(np.eye(2), 2)
    if spec.kind == "hyperbolic":
        jac = _saddle_jacobian(q)
    else:
        jac = _stereographic_jacobian(q, *_axes(spec))
    return jac.T @ jac


def _embedding(spec: SurfaceSpec):
    if spec.kind == "plane":
        return lambda p: np.concatenate([p, np.zeros(p.shape[:-1] + (1,))], axis=-1)
    if spec.kind == "hyperbolic":
        return lambda p: np.stack([p[..., 0], p[..., 1], p[..., 0] ** 2 - p[..., 1] ** 2], axis=-1)
    a, b, c = _axes(spec)

    def stereographic(p):
        r2 = np.sum(p ** 2, axis=-1)
        s = 1.0 + r2
        return np.stack([2.0 * a * p[..., 0] / s, 2.0 * b * p[..., 1] / s, c * (1.0 - r2) / s], axis=-1)

    return stereographic


def make_surface(spec: SurfaceSpec) -> ChartManifold:
    """Chart manifold for a surface spec.

    Sphere and ellipsoid use stereographic projection from the south pole (the
    chart origin maps to the north pole (0, 0, c)); the chart covers all of R².
    The hyperbolic surface is the saddle z = x² − y² in its graph chart.
    """
    logger.debug(f"Building surface {spec.kind}")
    return ChartManifold(
        dim=2,
        name=spec.kind,
        metric=lambda x: induced_metric(spec, x),
        embedding=_embedding(spec),
        params=spec.model_dump(),
    )


def embed(spec: SurfaceSpec, path: np.ndarray) -> np.ndarray:
    """Map chart points (…, 2) to ambient points (…, 3)"""
    return _embedding(spec)(np.asarray(path, dtype=float))


def chart_coordinates(spec: SurfaceSpec, points: np.ndarray) -> np.ndarray:
    """Inverse of ``embed`` on the chart image"""
    p = np.asarray(points, dtype=float)
    if spec.kind in ("plane", "hyperbolic"):
        return p[..., :2].copy()
    a, b, c = _axes(spec)
    denom = 1.0 + p[..., 2] / c
    if np.any(denom <= 0):
        raise ValueError("the south pole is not covered by the stereographic chart")
    return np.stack([p[..., 0] / a, p[..., 1] / b], axis=-1) / denom[..., None]


def surface_residual(spec: SurfaceSpec, points: np.ndarray) -> np.ndarray:
    """Implicit equation of the surface evaluated at ambient points (zero on the surface)"""
    p = np.asarray(points, dtype=float)
    if spec.kind == "plane":
        return p[..., 2]
    if spec.kind == "hyperbolic":
        return p[..., 2] - (p[..., 0] ** 2 - p[..., 1] ** 2)
    a, b, c = _axes(spec)
    return (p[..., 0] / a) ** 2 + (p[..., 1] / b) ** 2 + (p[..., 2] / c) ** 2 - 1.0


def make_euclidean(dim: int) -> ChartManifold:
    """Flat R^dim in Cartesian coordinates (the estimator reference geometry)"""
    return ChartManifold(
        dim=dim,
        name=f"euclidean{dim}",
        metric=lambda x: Jet.constant(np.eye(dim), dim),
        params={"kind": "euclidean", "dim": dim},
    )
