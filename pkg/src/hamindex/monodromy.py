"""The planar determinant field of the monodromy family and its winding.

For z = (lambda, s) the matrix Lambda(z) = (I - Psi_z(2pi))^T is singular
exactly when the linear system has a nontrivial periodic solution, which
forces s = 0.  The determinant rho(z) = det Lambda(z) is therefore a
planar field whose zeros sit on the real parameter axis, and the winding
of rho around a rectangle [a, b] x [-margin, margin] is an integer
invariant of the family over [a, b] that does not depend on the margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EndpointDegenerateError, EverywhereDegenerateError, NumericalError
from .integrator import DEFAULT_STEPS, DEFAULT_TOL, FundamentalSolution, fundamental_solutions
from .model import FamilyLike, Interval, _as_param_array
from .refine import golden_section_min_batch
from .winding import WindingResult, rectangle_curve, winding_number

ENDPOINT_RHO_TOL = 1e-6
DEFAULT_MARGIN = 1.0


class MonodromyField:
    """Cached evaluation of Psi, Lambda and rho over the spectral plane.

    Evaluation is pure, so the cache is keyed by the exact (lambda, s)
    floats; batch queries integrate only the missing points.
    """

    def __init__(self, family: FamilyLike, *, steps: int = DEFAULT_STEPS, tol: float = DEFAULT_TOL):
        self.family = family
        self.steps = steps
        self.tol = tol
        self._cache: dict[tuple, FundamentalSolution] = {}

    @property
    def arity(self) -> int:
        return self.family.arity

    def solutions(self, lams, ss) -> list[FundamentalSolution]:
        lam_arr = _as_param_array(self.family.arity, lams)
        s_arr = np.asarray(ss, dtype=float).reshape(-1)
        keys = [tuple(lam_arr[i]) + (float(s_arr[i]),) for i in range(len(s_arr))]
        missing = [i for i, k in enumerate(keys) if k not in self._cache]
        if missing:
            sols = fundamental_solutions(
                self.family,
                lam_arr[missing],
                s_arr[missing],
                steps=self.steps,
                tol=self.tol,
            )
            for i, sol in zip(missing, sols):
                self._cache[keys[i]] = sol
        return [self._cache[k] for k in keys]

    def solution(self, lam, s: float = 0.0) -> FundamentalSolution:
        return self.solutions([lam], [s])[0]

    def lambda_matrix(self, lam, s: float = 0.0) -> np.ndarray:
        psi = self.solution(lam, s).psi
        return (np.eye(psi.shape[0]) - psi).T

    def rho(self, lam, s: float = 0.0) -> complex:
        return complex(np.linalg.det(self.lambda_matrix(lam, s)))

    def rho_many(self, lams, ss) -> np.ndarray:
        sols = self.solutions(lams, ss)
        d = self.family.dim
        eye = np.eye(d)
        return np.array([np.linalg.det((eye - sol.psi).T) for sol in sols], dtype=complex)

    def max_symplectic_defect(self) -> float:
        if not self._cache:
            return 0.0
        return max(sol.symplectic_defect for sol in self._cache.values())


def _as_field(family_or_field) -> MonodromyField:
    if isinstance(family_or_field, MonodromyField):
        return family_or_field
    return MonodromyField(family_or_field)


def lambda_matrix(family_or_field, lam, s: float = 0.0) -> np.ndarray:
    """Transpose of I - Psi_z(2pi); singular exactly at periodic degeneracies."""
    return _as_field(family_or_field).lambda_matrix(lam, s)


def rho(family_or_field, lam, s: float = 0.0) -> complex:
    """Determinant of the boundary matrix field at z = (lambda, s)."""
    return _as_field(family_or_field).rho(lam, s)


def _interval_field_fn(field: MonodromyField):
    """Adapt a one-parameter monodromy field to the (lambda, s) plane."""

    def fn(points: np.ndarray) -> np.ndarray:
        return field.rho_many(points[:, 0], points[:, 1])

    return fn


def rho_winding(
    field: MonodromyField,
    curve,
    *,
    samples_per_edge: int = 8,
    max_depth: int = 32,
    keep_samples: bool = False,
) -> WindingResult:
    """Certified winding of rho along a closed curve in the (lambda, s) plane."""
    return winding_number(
        _interval_field_fn(field),
        curve,
        samples_per_edge=samples_per_edge,
        max_depth=max_depth,
        keep_samples=keep_samples,
    )


def check_endpoint_admissibility(
    field: MonodromyField, a: float, b: float, *, tol: float = ENDPOINT_RHO_TOL
) -> tuple[float, float]:
    ra, rb = abs(field.rho(a, 0.0)), abs(field.rho(b, 0.0))
    if ra <= tol or rb <= tol:
        raise EndpointDegenerateError(
            f"endpoint degenerate: |rho(a,0)|={ra:.3e}, |rho(b,0)|={rb:.3e} "
            f"(threshold {tol:.1e})"
        )
    return ra, rb


def monodromy_index(
    family_or_field,
    interval: tuple[float, float],
    margin: float = DEFAULT_MARGIN,
    *,
    endpoint_tol: float = ENDPOINT_RHO_TOL,
    samples_per_edge: int = 8,
    max_depth: int = 32,
) -> int:
    """Winding of rho around [a, b] x [-margin, margin].

    Since zeros of rho lie on s = 0, any positive margin encloses the same
    zeros; the result is certified by recomputing at half the margin and
    demanding agreement.
    """
    field = _as_field(family_or_field)
    a, b = float(interval[0]), float(interval[1])
    check_endpoint_admissibility(field, a, b, tol=endpoint_tol)
    results = []
    for m in (margin, 0.5 * margin):
        res = rho_winding(
            field,
            rectangle_curve((a, b), (-m, m)),
            samples_per_edge=samples_per_edge,
            max_depth=max_depth,
        )
        results.append(res.winding)
    if results[0] != results[1]:
        raise NumericalError(
            f"margin certification failed: winding {results[0]} at margin {margin} "
            f"but {results[1]} at margin {0.5 * margin}"
        )
    return results[0]


@dataclass(frozen=True)
class DegeneracyPoint:
    """Parameter value where rho(., 0) vanishes, with its refinement bracket."""

    lam: float
    bracket: tuple[float, float]
    rho_abs: float


def kernel_scan(
    family_or_field,
    interval: tuple[float, float] | Interval,
    *,
    resolution: int = 256,
    threshold: float = 1e-6,
    refine_width: float = 1e-9,
) -> list[DegeneracyPoint]:
    """Locate zeros of rho(., 0) on an interval by scan plus local minimisation.

    The scan refines every interior local minimum of |rho| on the grid with
    golden-section search and keeps those whose refined minimum falls under
    ``threshold``.  More than half the grid under threshold raises
    :class:`EverywhereDegenerateError`.
    """
    field = _as_field(family_or_field)
    if isinstance(interval, Interval):
        a, b, resolution = interval.lo, interval.hi, interval.resolution
    else:
        a, b = float(interval[0]), float(interval[1])
    grid = np.linspace(a, b, resolution + 1)
    vals = np.abs(field.rho_many(grid, np.zeros_like(grid)))
    scale = 1.0 + float(vals.max())
    if np.count_nonzero(vals < threshold * scale) > 0.5 * len(grid):
        raise EverywhereDegenerateError(
            "more than half the scan grid is degenerate; the family has no "
            "isolated kernel parameters on this interval"
        )
    interior = (vals[1:-1] <= vals[:-2]) & (vals[1:-1] <= vals[2:])
    idxs = np.flatnonzero(interior) + 1
    if len(idxs) == 0:
        return []
    brackets = np.column_stack([grid[idxs - 1], grid[idxs + 1]])

    def f_batch(xs: np.ndarray) -> np.ndarray:
        return np.abs(field.rho_many(xs, np.zeros_like(xs)))

    mins, fmins = golden_section_min_batch(f_batch, brackets, refine_width)
    points = [
        DegeneracyPoint(float(x), (float(lo), float(hi)), float(v))
        for x, v, (lo, hi) in zip(mins, fmins, brackets)
        if v < threshold
    ]
    points.sort(key=lambda p: p.lam)
    merged: list[DegeneracyPoint] = []
    for p in points:
        if merged and abs(p.lam - merged[-1].lam) < 1e-7:
            if p.rho_abs < merged[-1].rho_abs:
                merged[-1] = p
            continue
        merged.append(p)
    return merged
