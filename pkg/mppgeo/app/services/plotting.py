"""
SVG figure emitter
Chart, orthographic embedded and anti-development views of MPPs, sweeps, shootings and landmark matches
"""

import logging
from pathlib import Path
from typing import Callable, List, Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

logger = logging.getLogger(__name__)

# byte-identical SVGs across runs
matplotlib.rcParams["svg.hashsalt"] = "mppgeo"

ELEVATION = np.deg2rad(25.0)
AZIMUTH = np.deg2rad(-55.0)

Embedding = Optional[Callable[[np.ndarray], np.ndarray]]


def orthographic(points: np.ndarray) -> np.ndarray:
    """Fixed orthographic projection of ambient points (…, 3) to the view plane (…, 2)"""
    ca, sa = np.cos(AZIMUTH), np.sin(AZIMUTH)
    ce, se = np.cos(ELEVATION), np.sin(ELEVATION)
    x, y, z = points[..., 0], points[..., 1], points[..., 2]
    horizontal = ca * x - sa * y
    depth = sa * x + ca * y
    return np.stack([horizontal, ce * z - se * depth], axis=-1)


def save_svg(fig, path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.debug(f"Wrote {path}")


def _panels(n: int):
    fig, axes = plt.subplots(1, n, figsize=(4.2 * n, 4.2), squeeze=False)
    return fig, list(axes[0])


def _surface_wireframe(ax, embed: Callable, extent: float = 2.0, lines: int = 13):
    grid = np.linspace(-extent, extent, 121)
    for c in np.linspace(-extent, extent, lines):
        for path in (np.stack([grid, np.full_like(grid, c)], axis=-1),
                     np.stack([np.full_like(grid, c), grid], axis=-1)):
            view = orthographic(embed(path))
            ax.plot(view[:, 0], view[:, 1], color="0.85", linewidth=0.4, zorder=0)


def _chart_ax(ax, title: str):
    ax.set_title(title)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x⁰")
    ax.set_ylabel("x¹")


def _embedded_ax(ax, embed: Callable, paths: Sequence[np.ndarray], colors: Sequence, extent: float):
    _surface_wireframe(ax, embed, extent)
    for xs, color in zip(paths, colors):
        view = orthographic(embed(xs))
        ax.plot(view[:, 0], view[:, 1], color=color, linewidth=1.4)
    ax.set_title("embedded (orthographic)")
    ax.set_aspect("equal", adjustable="datalim")
    ax.axis("off")


def _extent(paths: Sequence[np.ndarray]) -> float:
    return max(1.0, 1.2 * max(float(np.abs(p).max()) for p in paths))


def _frame_arrows(ax, x: np.ndarray, u: np.ndarray, color: str = "k"):
    for a in range(u.shape[1]):
        ax.annotate("", xy=x + u[:, a] * 0.25, xytext=x,
                    arrowprops={"arrowstyle": "->", "color": color, "linewidth": 1.0})


def plot_mpp(path: Path, xs: np.ndarray, s: np.ndarray, embed: Embedding = None,
             reference: Optional[np.ndarray] = None, reference_s: Optional[np.ndarray] = None,
             frame: Optional[np.ndarray] = None):
    """MPP in the chart, on the embedded surface and its anti-development.

    The optional reference (a Riemannian geodesic) is drawn dotted blue.
    """
    n = 3 if embed is not None and xs.shape[1] == 2 else 2
    fig, axes = _panels(n)
    ax = axes[0]
    ax.plot(xs[:, 0], xs[:, 1], color="tab:red", label="MPP")
    if reference is not None:
        ax.plot(reference[:, 0], reference[:, 1], ":", color="tab:blue", label="geodesic")
    if frame is not None:
        _frame_arrows(ax, xs[0], frame)
    ax.plot(*xs[0], "ko", markersize=3)
    _chart_ax(ax, "chart")
    ax.legend(loc="best", fontsize="small")

    if n == 3:
        paths = [xs] if reference is None else [xs, reference]
        _embedded_ax(axes[1], embed, paths, ["tab:red", "tab:blue"], _extent(paths))

    ax = axes[-1]
    ax.plot(s[:, 0], s[:, 1], color="tab:red", label="anti-development")
    if reference_s is not None:
        ax.plot(reference_s[:, 0], reference_s[:, 1], ":", color="tab:blue", label="geodesic")
    ax.plot(0.0, 0.0, "ko", markersize=3)
    ax.set_title("anti-development in R²")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    save_svg(fig, path)


def plot_family(path: Path, paths: List[Optional[np.ndarray]], labels: List[str],
                antidevelopments: Optional[List[Optional[np.ndarray]]] = None, embed: Embedding = None,
                target: Optional[np.ndarray] = None):
    """One curve per sweep member; failed members (None) are skipped"""
    colors = plt.cm.viridis(np.linspace(0.0, 1.0, max(len(paths), 2)))
    members = [(p, lbl, color) for p, lbl, color in zip(paths, labels, colors) if p is not None]
    antidevelopments = antidevelopments or []
    has_antidev = any(s is not None for s in antidevelopments)
    n = 1 + (embed is not None) + has_antidev
    fig, axes = _panels(n)
    for xs, lbl, color in members:
        axes[0].plot(xs[:, 0], xs[:, 1], color=color, label=lbl, linewidth=1.0)
    if target is not None:
        axes[0].plot(*target, "kx", markersize=5)
    _chart_ax(axes[0], "chart")
    axes[0].legend(loc="best", fontsize="x-small")
    i = 1
    if embed is not None and members:
        xs_list = [m[0] for m in members]
        _embedded_ax(axes[i], embed, xs_list, [m[2] for m in members], _extent(xs_list))
        i += 1
    if has_antidev:
        for s, color in zip(antidevelopments, colors):
            if s is not None:
                axes[i].plot(s[:, 0], s[:, 1], color=color, linewidth=1.0)
                axes[i].plot(*s[-1], "o", color=color, markersize=3)
        axes[i].plot(0.0, 0.0, "ko", markersize=3)
        axes[i].set_title("anti-developments")
        axes[i].set_aspect("equal", adjustable="datalim")
    fig.tight_layout()
    save_svg(fig, path)


def plot_shoot(path: Path, mpp: np.ndarray, geodesic: Optional[np.ndarray], target: np.ndarray,
               embed: Embedding = None, frame: Optional[np.ndarray] = None):
    """Minimizing MPP against the Riemannian geodesic between the same endpoints"""
    n = 2 if embed is not None else 1
    fig, axes = _panels(n)
    ax = axes[0]
    ax.plot(mpp[:, 0], mpp[:, 1], color="tab:red", label="MPP")
    if geodesic is not None:
        ax.plot(geodesic[:, 0], geodesic[:, 1], ":", color="tab:blue", label="geodesic")
    if frame is not None:
        _frame_arrows(ax, mpp[0], frame)
    ax.plot(*mpp[0], "ko", markersize=3)
    ax.plot(*target, "kx", markersize=5)
    _chart_ax(ax, "chart")
    ax.legend(loc="best", fontsize="small")
    if embed is not None:
        paths = [mpp] if geodesic is None else [mpp, geodesic]
        _embedded_ax(axes[1], embed, paths, ["tab:red", "tab:blue"], _extent(paths))
    fig.tight_layout()
    save_svg(fig, path)


def _grid_ax(ax, grid: np.ndarray, grid_shape: tuple):
    rows, cols = grid_shape
    mesh = grid.reshape((rows, cols, 2))
    for r in range(rows):
        ax.plot(mesh[r, :, 0], mesh[r, :, 1], color="0.7", linewidth=0.5)
    for c in range(cols):
        ax.plot(mesh[:, c, 0], mesh[:, c, 1], color="0.7", linewidth=0.5)


def plot_landmarks(path: Path, source: np.ndarray, target: np.ndarray, paths: np.ndarray,
                   grid: np.ndarray, grid_shape: tuple, reference: Optional[np.ndarray] = None):
    """Landmark trajectories (n, N, 2) over the advected grid (m, 2) at the final time"""
    fig, axes = _panels(1)
    ax = axes[0]
    _grid_ax(ax, grid, grid_shape)
    for i in range(paths.shape[1]):
        ax.plot(paths[:, i, 0], paths[:, i, 1], color="tab:red", linewidth=1.2)
        if reference is not None:
            ax.plot(reference[:, i, 0], reference[:, i, 1], ":", color="tab:blue", linewidth=1.0)
    ax.plot(source[:, 0], source[:, 1], "o", color="tab:green", markersize=5, label="source")
    ax.plot(target[:, 0], target[:, 1], "o", color="tab:red", markersize=5, label="target")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title("landmark matching")
    ax.legend(loc="best", fontsize="small")
    fig.tight_layout()
    save_svg(fig, path)


def plot_landmark_family(path: Path, families: List[Optional[np.ndarray]], grids: List[Optional[np.ndarray]],
                         grid_shape: tuple, labels: List[str]):
    """One panel per sweep member: its landmark trajectories (n, N, 2) over its advected grid"""
    members = [(p, g, lbl) for p, g, lbl in zip(families, grids, labels) if p is not None]
    fig, axes = _panels(max(len(members), 1))
    for ax, (paths, grid, lbl) in zip(axes, members):
        _grid_ax(ax, grid, grid_shape)
        for i in range(paths.shape[1]):
            ax.plot(paths[:, i, 0], paths[:, i, 1], color="tab:red", linewidth=1.2)
        ax.plot(paths[0, :, 0], paths[0, :, 1], "o", color="tab:green", markersize=4)
        ax.plot(paths[-1, :, 0], paths[-1, :, 1], "o", color="tab:red", markersize=4)
        ax.set_aspect("equal", adjustable="datalim")
        ax.set_title(lbl)
    fig.tight_layout()
    save_svg(fig, path)


def plot_estimate(path: Path, data: np.ndarray, x_hat: np.ndarray, covariance: Optional[np.ndarray] = None):
    """Data in the chart with the estimated mean and, if given, its 1σ ellipse"""
    fig, axes = _panels(1)
    ax = axes[0]
    ax.plot(data[:, 0], data[:, 1] if data.shape[1] > 1 else np.zeros(len(data)), ".", color="0.4")
    ax.plot(x_hat[0], x_hat[1] if x_hat.shape[0] > 1 else 0.0, "o", color="tab:red")
    if covariance is not None and covariance.shape == (2, 2):
        vals, vecs = np.linalg.eigh(covariance)
        angle = np.linspace(0.0, 2.0 * np.pi, 200)
        ellipse = x_hat[:, None] + (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ np.stack([np.cos(angle), np.sin(angle)])
        ax.plot(ellipse[0], ellipse[1], color="tab:red", linewidth=1.0)
    _chart_ax(ax, "estimate")
    fig.tight_layout()
    save_svg(fig, path)
