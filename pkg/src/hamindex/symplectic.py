"""Conley-Zehnder index of the real monodromy path via crossing forms.

A crossing is a parameter where the monodromy matrix has 1 as a Floquet
multiplier, detected through local minima of the smallest singular value
of I - M (sign tests on det(I - M) provably miss even-dimensional
crossings, e.g. planar rotations where the determinant touches zero from
above).  At a regular crossing the quadratic form q(v) = <J v, M' v> on
the fixed space of M carries the local contribution through its
signature; the orientation is calibrated so the index of the planar
rotation family matches its spectral flow (+2 per positively crossed
integer level).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateCrossingError,
    DegeneratePathError,
    EndpointDegenerateError,
)
from .integrator import fundamental_solutions, standard_symplectic_matrix
from .monodromy import MonodromyField, _as_field
from .refine import golden_section_min

CROSSING_SV_TOL = 1e-6
REFINE_WIDTH = 1e-8
FD_STEP = 1e-5
FORM_TOL = 1e-4
STENCIL_TOL = 1e-12

SYMPLECTICITY_TOL = 1e-7
DETERMINANT_TOL = 1e-7


@dataclass(frozen=True)
class SymplecticPath:
    """Real monodromy matrices sampled along a parameter interval."""

    lams: np.ndarray
    mats: np.ndarray  # (K, 2n, 2n)
    field: MonodromyField

    @property
    def direction(self) -> float:
        return 1.0 if self.lams[-1] >= self.lams[0] else -1.0

    @property
    def n(self) -> int:
        return self.mats.shape[-1] // 2


def symplectic_path(family_or_field, interval: tuple[float, float], *, nodes: int = 257) -> SymplecticPath:
    """Sample the monodromy path on a grid, checking the group invariants."""
    field = _as_field(family_or_field)
    a, b = float(interval[0]), float(interval[1])
    lams = np.linspace(a, b, nodes)
    sols = field.solutions(lams, np.zeros_like(lams))
    mats = np.stack([np.real(s.psi) for s in sols])
    J = standard_symplectic_matrix(mats.shape[-1] // 2)
    sympl = np.max(np.abs(np.swapaxes(mats, -1, -2) @ J @ mats - J))
    dets = np.abs(np.linalg.det(mats) - 1.0)
    if sympl > SYMPLECTICITY_TOL or np.max(dets) > DETERMINANT_TOL:
        raise DegeneratePathError(
            f"monodromy samples violate the symplectic-group invariants "
            f"(residual {float(sympl):.3e}, det defect {float(np.max(dets)):.3e})"
        )
    return SymplecticPath(lams=lams, mats=mats, field=field)


def _sigma_min(mat: np.ndarray) -> float:
    d = mat.shape[0]
    return float(np.linalg.svd(np.eye(d) - mat, compute_uv=False)[-1])


def _rho_real(path: SymplecticPath, lam: float) -> float:
    m = np.real(path.field.solution(lam, 0.0).psi)
    return float(np.real(np.linalg.det(np.eye(m.shape[0]) - m)))


def _bisect_zero(f, a: float, b: float, width: float) -> float:
    fa = f(a)
    for _ in range(128):
        if b - a <= width:
            break
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fa < 0) != (fm < 0):
            b = mid
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def _zeros_in_valley(
    path: SymplecticPath, a: float, b: float, tangency_tol: float, width: float, depth: int = 0
) -> list[float]:
    """Zeros of the real determinant det(I - M) inside one sigma_min valley.

    A valley can hide a pair of simple zeros bounding a tiny hyperbolic
    window (the generic splitting of a double crossing under perturbation),
    a genuine tangency (kernel of dimension two), or a near miss.  The
    sign structure of the determinant decides between them.
    """
    ra, rb = _rho_real(path, a), _rho_real(path, b)
    if (ra < 0) != (rb < 0):
        return [_bisect_zero(lambda x: _rho_real(path, x), a, b, width)]
    sgn = 1.0 if ra >= 0 else -1.0
    x_min, v_min = golden_section_min(lambda x: sgn * _rho_real(path, x), a, b, width)
    if v_min < -tangency_tol and depth < 4:
        return _zeros_in_valley(path, a, x_min, tangency_tol, width, depth + 1) + _zeros_in_valley(
            path, x_min, b, tangency_tol, width, depth + 1
        )
    if v_min <= tangency_tol:
        return [x_min]
    return []


def find_crossings(
    path: SymplecticPath,
    tol: float = CROSSING_SV_TOL,
    *,
    refine_width: float = REFINE_WIDTH,
) -> list[float]:
    """Parameters where I - M becomes singular, refined to ``refine_width``.

    Detection starts from interior local minima of sigma_min(I - M) on the
    grid (determinant sign changes alone provably miss even-dimensional
    crossings).  Each detected valley is then classified through the real
    determinant: simple zeros are bisected, including the generic pair of
    nearby simple zeros created when a perturbation splits a double
    crossing, and exact tangencies count once.

    Endpoints of the path must be nondegenerate; a path degenerate on more
    than half its grid is rejected outright.
    """
    sigmas = np.array([_sigma_min(m) for m in path.mats])
    if np.count_nonzero(sigmas <= tol) > 0.5 * len(sigmas):
        raise DegeneratePathError(
            "monodromy path is degenerate on more than half the grid"
        )
    if sigmas[0] <= tol or sigmas[-1] <= tol:
        raise EndpointDegenerateError(
            f"endpoint degenerate: sigma_min(I - M) = {sigmas[0]:.3e} / {sigmas[-1]:.3e} "
            f"at the path ends (threshold {tol:.1e})"
        )
    rho_scale = abs(_rho_real(path, float(path.lams[0]))) + abs(
        _rho_real(path, float(path.lams[-1]))
    )
    tangency_tol = 1e-8 * (1.0 + rho_scale)
    interior = (sigmas[1:-1] <= sigmas[:-2]) & (sigmas[1:-1] <= sigmas[2:])
    idxs = np.flatnonzero(interior) + 1

    def sig(lam: float) -> float:
        return _sigma_min(np.real(path.field.solution(lam, 0.0).psi))

    crossings: list[float] = []
    for i in idxs:
        lo, hi = sorted((float(path.lams[i - 1]), float(path.lams[i + 1])))
        lam_star, value = golden_section_min(sig, lo, hi, max(refine_width, 1e-10))
        if value >= tol:
            continue
        crossings.extend(_zeros_in_valley(path, lo, hi, tangency_tol, refine_width))
    crossings.sort()
    merged: list[float] = []
    for lam in crossings:
        if merged and abs(lam - merged[-1]) < 10.0 * refine_width:
            continue
        merged.append(lam)
    return merged


@dataclass(frozen=True)
class Crossing:
    """One degeneracy of the path with its kernel and crossing-form data."""

    lam: float
    kernel: np.ndarray  # (2n, kernel_dim), orthonormal columns
    form: np.ndarray  # symmetric, kernel_dim x kernel_dim
    signature: int

    @property
    def kernel_dim(self) -> int:
        return self.kernel.shape[1]


def crossing_signature(
    path: SymplecticPath,
    lam0: float,
    *,
    sv_tol: float = CROSSING_SV_TOL,
    fd_step: float = FD_STEP,
    form_tol: float = FORM_TOL,
) -> Crossing:
    """Crossing form on ker(M - I) at lam0 and its signature.

    The parameter derivative of M comes from a Richardson-corrected
    central difference with stencil solutions integrated at a tightened
    tolerance; a form eigenvalue indistinguishable from zero raises
    instead of silently perturbing the input problem.
    """
    family = path.field.family
    h = fd_step
    stencil = [lam0 - 2 * h, lam0 - h, lam0, lam0 + h, lam0 + 2 * h]
    sols = fundamental_solutions(family, stencil, np.zeros(5), tol=STENCIL_TOL)
    m_m2, m_m1, m_0, m_p1, m_p2 = (np.real(s.psi) for s in sols)
    mdot = (8.0 * (m_p1 - m_m1) - (m_p2 - m_m2)) / (12.0 * h)
    mdot *= path.direction
    d = m_0.shape[0]
    _, svals, vh = np.linalg.svd(np.eye(d) - m_0)
    kernel = vh[svals < sv_tol].T
    if kernel.shape[1] == 0:
        raise DegenerateCrossingError(
            f"no kernel at lambda={lam0!r}: smallest singular value {svals[-1]:.3e} "
            f"is above the threshold {sv_tol:.1e}"
        )
    J = standard_symplectic_matrix(d // 2)
    q = (J @ kernel).T @ (mdot @ kernel)
    q = 0.5 * (q + q.T)
    eigs = np.linalg.eigvalsh(q)
    scale = form_tol * (1.0 + float(np.max(np.abs(eigs), initial=0.0)))
    if np.any(np.abs(eigs) < scale):
        raise DegenerateCrossingError(
            f"degenerate crossing at lambda={lam0!r}: crossing form has an eigenvalue "
            f"within {scale:.1e} of zero; refine the parameter grid or perturb the family"
        )
    signature = int(np.count_nonzero(eigs > 0) - np.count_nonzero(eigs < 0))
    return Crossing(lam=float(lam0), kernel=kernel, form=q, signature=signature)


def conley_zehnder(path: SymplecticPath, *, sv_tol: float = CROSSING_SV_TOL, details: bool = False):
    """Sum of crossing signatures over the interior crossings of the path."""
    crossings = [
        crossing_signature(path, lam, sv_tol=sv_tol) for lam in find_crossings(path, sv_tol)
    ]
    total = sum(c.signature for c in crossings)
    if details:
        return total, crossings
    return total
