"""
Static SVG figures for planar sails and domains and for projective slices of 3-dimensional cone complexes.

Output is deterministic: the Agg backend, a fixed SVG hash salt and no date metadata.
"""

from __future__ import annotations

import io
import logging
import math

import matplotlib

matplotlib.use('Agg')

from matplotlib.figure import Figure  # noqa: E402

from fractions import Fraction  # noqa: E402
from typing import List, Optional, Sequence, Tuple  # noqa: E402

from conekit.cones import ConeSpec, MembershipTier  # noqa: E402
from conekit.errors import DimensionMismatch, NotInClosure  # noqa: E402
from conekit.exact import Lattice, QVector, dot, nullspace  # noqa: E402
from conekit.hulls import box_points  # noqa: E402
from conekit.polyhedra import Polyhedron  # noqa: E402

logger = logging.getLogger(__name__)

matplotlib.rcParams['svg.hashsalt'] = 'conekit'
matplotlib.rcParams['svg.fonttype'] = 'none'


def _render(fig: Figure) -> str:
    buf = io.StringIO()
    fig.savefig(buf, format='svg', metadata={'Date': None})
    return buf.getvalue()


def _xy(points: Sequence[Sequence[Fraction]]) -> Tuple[List[float], List[float]]:
    return [float(p[0]) for p in points], [float(p[1]) for p in points]


def _ray_segment(r: Sequence[Fraction], length: float) -> Tuple[List[float], List[float]]:
    norm = math.hypot(float(r[0]), float(r[1]))
    return [0.0, float(r[0]) * length / norm], [0.0, float(r[1]) * length / norm]


def plot_sail(c: ConeSpec, lattice: Optional[Lattice], chain: Sequence[QVector], radius: int = 6, title: str = '') -> str:
    """Lattice points of the closed cone in a box and the sail through them"""

    if c.dim != 2:
        raise DimensionMismatch('Sails are drawn for planar cones only', related_op='plot_sail')

    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot(1, 1, 1)

    points = box_points(c, lattice or Lattice.standard(2), radius, MembershipTier.CLOSURE)
    ax.scatter(*_xy(points), s=8, color='0.6', zorder=1)

    if chain:
        ax.plot(*_xy(chain), marker='o', color='tab:blue', linewidth=1.5, zorder=2)

    ax.axhline(0, color='0.85', linewidth=0.5)
    ax.axvline(0, color='0.85', linewidth=0.5)
    ax.set_aspect('equal')
    ax.set_title(title or 'sail')
    return _render(fig)


def plot_cones_2d(cones: Sequence[Polyhedron], labels: Sequence[str] = (), title: str = '') -> str:
    """Planar cones drawn as shaded sectors; the first one is highlighted"""

    if any(p.dim != 2 for p in cones):
        raise DimensionMismatch('Planar plot needs 2-dimensional cones', related_op='plot_cones_2d')

    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot(1, 1, 1)

    for i, cone in enumerate(cones):
        rays = cone.vrep.rays
        color = 'tab:orange' if i == 0 else 'tab:blue'
        tips = []
        for r in rays:
            xs, ys = _ray_segment(r, 1.0)
            ax.plot(xs, ys, color=color, linewidth=1.5 if i == 0 else 0.6)
            tips.append((xs[1], ys[1]))
        if len(tips) == 2:
            ax.fill([0.0, tips[0][0], tips[1][0]], [0.0, tips[0][1], tips[1][1]], color=color, alpha=0.35 if i == 0 else 0.1, linewidth=0)
        if i < len(labels) and rays:
            mid = [sum(float(r[k]) / math.hypot(float(r[0]), float(r[1])) for r in rays) / len(rays) for k in range(2)]
            ax.annotate(labels[i], (mid[0] * 0.8, mid[1] * 0.8), fontsize=7, ha='center')

    ax.set_xlim(-1.1, 1.1)
    ax.set_ylim(-1.1, 1.1)
    ax.set_aspect('equal')
    ax.set_title(title or 'cones')
    return _render(fig)


def _slice_coordinates(xi: Sequence[Fraction], r: Sequence[Fraction], chart: Sequence[QVector]) -> Tuple[float, float]:
    value = dot(xi, r)
    if value <= 0:
        raise NotInClosure('Ray does not meet the slice', related_op='plot_projective_slice')
    return float(dot(chart[0], r) / value), float(dot(chart[1], r) / value)


def plot_projective_slice(cones: Sequence[Polyhedron], xi: Sequence[Fraction], labels: Sequence[str] = (), title: str = '') -> str:
    """Wireframe of 3-dimensional cones cut by the affine plane ``ξ = 1``"""

    if any(p.dim != 3 for p in cones):
        raise DimensionMismatch('Projective slices are drawn for 3-dimensional cones', related_op='plot_projective_slice')

    chart = nullspace([tuple(xi)], 3)

    fig = Figure(figsize=(5, 5))
    ax = fig.add_subplot(1, 1, 1)

    for i, cone in enumerate(cones):
        pts = [_slice_coordinates(xi, r, chart) for r in cone.vrep.rays]
        if not pts:
            continue
        cx, cy = sum(p[0] for p in pts) / len(pts), sum(p[1] for p in pts) / len(pts)
        pts.sort(key=lambda p: math.atan2(p[1] - cy, p[0] - cx))
        xs, ys = [p[0] for p in pts] + [pts[0][0]], [p[1] for p in pts] + [pts[0][1]]
        ax.plot(xs, ys, color='tab:orange' if i == 0 else 'tab:blue', linewidth=1.2 if i == 0 else 0.5)
        if i < len(labels):
            ax.annotate(labels[i], (cx, cy), fontsize=6, ha='center')

    ax.set_aspect('equal')
    ax.set_title(title or 'projective slice')
    logger.debug(f'Projective slice of {len(cones)} cones')
    return _render(fig)
