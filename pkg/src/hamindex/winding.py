"""Certified winding numbers of planar fields along closed polylines.

The argument of the field is tracked along the curve; any consecutive
sample pair whose phase increment reaches pi/2 is bisected until every
increment is certified below pi/2, at which point the total phase change
is an unambiguous integer multiple of 2pi.  Curves that graze a zero of
the field (minimum modulus under a scale-free threshold) are rejected
instead of guessed at.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateCurveError, RefinementExhaustedError

PHASE_STEP_LIMIT = 0.5 * np.pi
DEGENERACY_REL_TOL = 1e-8

# field: (B, 2) points -> (B,) complex values
PlanarFieldFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class WindingResult:
    winding: int
    min_abs: float
    max_abs: float
    depth: int
    certified: bool
    n_samples: int
    samples: tuple | None = None  # (t, x, y, value, unwrapped phase) rows


def close_polyline(points) -> np.ndarray:
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("curve must be a list of planar points")
    if not np.array_equal(pts[0], pts[-1]):
        pts = np.vstack([pts, pts[0]])
    if pts.shape[0] < 3:
        raise ValueError("closed curve needs at least two distinct vertices")
    return pts


def rectangle_curve(x_range, y_range) -> np.ndarray:
    """Positively oriented boundary of [x0,x1] x [y0,y1]."""
    (x0, x1), (y0, y1) = x_range, y_range
    return np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]])


def circle_curve(radius: float = 1.0, center=(0.0, 0.0), vertices: int = 64) -> np.ndarray:
    """Positively oriented polygonal approximation of a circle."""
    th = np.linspace(0.0, 2.0 * np.pi, vertices + 1)
    return np.column_stack(
        [center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)]
    )


class _Polyline:
    """Arc-length parameterisation of a closed polyline over [0, 1]."""

    def __init__(self, pts: np.ndarray):
        self.pts = pts
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        if np.any(seg == 0.0):
            raise ValueError("degenerate polyline edge")
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.knots = cum / cum[-1]

    def at(self, params: np.ndarray) -> np.ndarray:
        x = np.interp(params, self.knots, self.pts[:, 0])
        y = np.interp(params, self.knots, self.pts[:, 1])
        return np.column_stack([x, y])

    def initial_params(self, per_edge: int) -> np.ndarray:
        pieces = [
            np.linspace(self.knots[i], self.knots[i + 1], per_edge, endpoint=False)
            for i in range(len(self.knots) - 1)
        ]
        return np.concatenate(pieces + [[1.0]])


def winding_number(
    field: PlanarFieldFn,
    curve,
    *,
    samples_per_edge: int = 8,
    max_depth: int = 32,
    degeneracy_rel_tol: float = DEGENERACY_REL_TOL,
    keep_samples: bool = False,
) -> WindingResult:
    """Winding of ``field`` along a closed positively oriented polyline.

    Raises :class:`DegenerateCurveError` when the curve passes too close to
    a zero of the field and :class:`RefinementExhaustedError` when phase
    certification fails within ``max_depth`` bisection rounds.
    """
    line = _Polyline(close_polyline(curve))
    params = line.initial_params(max(1, samples_per_edge))
    values = np.asarray(field(line.at(params)), dtype=complex)
    depth = 0
    while True:
        mags = np.abs(values)
        vmax = float(mags.max())
        threshold = degeneracy_rel_tol * (1.0 + vmax)
        if float(mags.min()) < threshold:
            raise DegenerateCurveError(
                f"curve grazes a zero of the field: min |value| {float(mags.min()):.3e} "
                f"below threshold {threshold:.3e}"
            )
        increments = np.angle(values[1:] / values[:-1])
        bad = np.abs(increments) >= PHASE_STEP_LIMIT
        if not np.any(bad):
            break
        if depth >= max_depth:
            raise RefinementExhaustedError(
                f"phase certification failed after {max_depth} refinement rounds"
            )
        mids = 0.5 * (params[:-1][bad] + params[1:][bad])
        mid_values = np.asarray(field(line.at(mids)), dtype=complex)
        params = np.concatenate([params, mids])
        values = np.concatenate([values, mid_values])
        order = np.argsort(params, kind="stable")
        params, values = params[order], values[order]
        depth += 1
    total = float(np.sum(increments))
    w = int(np.rint(total / (2.0 * np.pi)))
    if abs(total - 2.0 * np.pi * w) > 1e-6:
        raise RefinementExhaustedError(
            f"phase total {total!r} is not an integer multiple of 2pi"
        )
    samples = None
    if keep_samples:
        phases = np.concatenate([[np.angle(values[0])], np.angle(values[0]) + np.cumsum(increments)])
        pts = line.at(params)
        samples = tuple(
            (float(params[i]), float(pts[i, 0]), float(pts[i, 1]), complex(values[i]), float(phases[i]))
            for i in range(len(params))
        )
    return WindingResult(
        winding=w,
        min_abs=float(mags.min()),
        max_abs=vmax,
        depth=depth,
        certified=True,
        n_samples=int(len(params)),
        samples=samples,
    )
