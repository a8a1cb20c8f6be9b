"""Bifurcation tooling: path invariants, candidate scans, orbit verification.

The integer d(gamma) attached to a path in a two-parameter family is the
winding of the monodromy determinant field along (path parameter) x
(spectral shift); a nonzero value forces the bifurcation set to
disconnect the parameter space.  Candidate bifurcation points are found
where the determinant field vanishes on the real axis, scanned on grids
and refined along each axis; complement components of the candidate set
are counted by flood fill.  Individual branches are verified at desk
scale by Fourier-collocation Newton iteration seeded along the kernel of
the linearisation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EndpointDegenerateError, EverywhereDegenerateError, NewtonError
from .integrator import solution_trajectory, standard_symplectic_matrix
from .model import (
    FamilyLike,
    Interval,
    NonlinearFamily,
    ParameterPath,
    Rectangle,
)
from .monodromy import (
    ENDPOINT_RHO_TOL,
    DegeneracyPoint,
    MonodromyField,
    _as_field,
    kernel_scan,
)
from .refine import golden_section_min_batch
from .spectral import FourierTruncation, quadrature_nodes
from .winding import rectangle_curve, winding_number

CANDIDATE_TOL_REL = 1e-6
CANDIDATE_REFINE_WIDTH = 1e-5
ORBIT_RESIDUAL_TOL = 1e-8
ORBIT_TRIVIAL_AMPLITUDE = 1e-4


@dataclass(frozen=True)
class PathRestrictedFamily:
    """A two-parameter family restricted to a polyline, as a one-parameter family.

    The path parameter runs over [0, 1] by normalised arc length, so every
    one-parameter tool (winding, spectral flow, crossing forms) applies
    along the path unchanged.
    """

    family: FamilyLike
    path: ParameterPath

    def __post_init__(self):
        if self.family.arity != 2:
            raise ValueError("path restriction expects a two-parameter family")

    @property
    def n(self) -> int:
        return self.family.n

    @property
    def dim(self) -> int:
        return self.family.dim

    @property
    def arity(self) -> int:
        return 1

    @property
    def name(self) -> str:
        base = getattr(self.family, "name", "")
        return f"{base}|path" if base else "path-restriction"

    def points_at(self, taus) -> np.ndarray:
        pts = self.path.as_array()
        seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
        knots = np.concatenate([[0.0], np.cumsum(seg)]) / np.sum(seg)
        taus = np.asarray(taus, dtype=float).reshape(-1)
        x = np.interp(taus, knots, pts[:, 0])
        y = np.interp(taus, knots, pts[:, 1])
        return np.column_stack([x, y])

    def eval_grid(self, lams, ts) -> np.ndarray:
        taus = np.asarray(lams, dtype=float).reshape(-1)
        return self.family.eval_grid(self.points_at(taus), ts)


def d_gamma(
    family: FamilyLike,
    path: ParameterPath,
    margin: float = 1.0,
    *,
    domain: Rectangle | None = None,
    endpoint_tol: float = ENDPOINT_RHO_TOL,
    samples_per_edge: int = 8,
    max_depth: int = 32,
) -> int:
    """Winding of the determinant field along (path parameter) x shift.

    Endpoints must be admissible (and lie in the declared boundary set when
    a domain is given).
    """
    restricted = PathRestrictedFamily(family, path)
    if domain is not None:
        fa, fb = path.endpoint_flags(domain)
        if not (fa and fb):
            raise EndpointDegenerateError(
                "path endpoints must lie in the admissible boundary set of the domain"
            )
    field = MonodromyField(restricted)
    ra, rb = abs(field.rho(0.0, 0.0)), abs(field.rho(1.0, 0.0))
    if ra <= endpoint_tol or rb <= endpoint_tol:
        raise EndpointDegenerateError(
            f"path endpoints degenerate: |rho| = {ra:.3e} / {rb:.3e} "
            f"(threshold {endpoint_tol:.1e})"
        )

    def fn(points: np.ndarray) -> np.ndarray:
        return field.rho_many(points[:, 0], points[:, 1])

    curve = rectangle_curve((0.0, 1.0), (-margin, margin))
    return winding_number(
        fn, curve, samples_per_edge=samples_per_edge, max_depth=max_depth
    ).winding


# ---------------------------------------------------------------------------
# candidate scans


@dataclass(frozen=True)
class BifurcationCandidate:
    """A parameter point where the linearised problem acquires a kernel."""

    point: tuple
    rho_abs: float
    kernel_dim: int
    bracket: tuple


@dataclass(frozen=True)
class CandidateScan:
    domain: Interval | Rectangle
    candidates: tuple[BifurcationCandidate, ...]
    cells: frozenset | None  # rectangle scans: (i, j) cell indices
    threshold: float


def _kernel_dims(field: MonodromyField, points: np.ndarray, sv_tol: float = 1e-5) -> list[int]:
    sols = field.solutions(points, np.zeros(points.shape[0]))
    dims = []
    eye = np.eye(field.family.dim)
    for sol in sols:
        svals = np.linalg.svd(eye - np.real(sol.psi), compute_uv=False)
        dims.append(int(np.count_nonzero(svals < sv_tol)))
    return dims


def _scan_lines(field, fixed_vals, moving_nodes, axis, threshold, refine_width):
    """Refine |rho| minima along every grid line parallel to one axis.

    Returns refined points (as (x, y) pairs) whose minimum falls under the
    threshold.  Boundary nodes count as one-sided minima.
    """
    F, K = len(fixed_vals), len(moving_nodes)

    def pts_of(fixed_idx: np.ndarray, moving: np.ndarray) -> np.ndarray:
        fixed = fixed_vals[fixed_idx]
        if axis == 0:
            return np.column_stack([moving, fixed])
        return np.column_stack([fixed, moving])

    fi_grid, mi_grid = np.meshgrid(np.arange(F), np.arange(K), indexing="ij")
    all_pts = pts_of(fi_grid.ravel(), moving_nodes[mi_grid.ravel()])
    vals = np.abs(field.rho_many(all_pts, np.zeros(all_pts.shape[0]))).reshape(F, K)

    brackets, owners = [], []
    for f in range(F):
        line = vals[f]
        lo = np.r_[np.inf, line[:-1]]
        hi = np.r_[line[1:], np.inf]
        for m in np.flatnonzero((line <= lo) & (line <= hi)):
            a = moving_nodes[max(m - 1, 0)]
            b = moving_nodes[min(m + 1, K - 1)]
            if a == b:
                continue
            brackets.append((a, b))
            owners.append(f)
    if not brackets:
        return np.empty((0, 2)), np.empty(0), vals
    brackets = np.asarray(brackets, dtype=float)
    owners = np.asarray(owners)

    def f_batch(xs: np.ndarray) -> np.ndarray:
        return np.abs(field.rho_many(pts_of(owners, xs), np.zeros(xs.shape[0])))

    mins, fmins = golden_section_min_batch(f_batch, brackets, refine_width)
    keep = fmins < threshold
    return pts_of(owners[keep], mins[keep]), fmins[keep], vals


def candidate_scan(
    family_or_field,
    domain: Interval | Rectangle,
    *,
    threshold_rel: float = CANDIDATE_TOL_REL,
    refine_width: float = CANDIDATE_REFINE_WIDTH,
) -> CandidateScan:
    """Degeneracy set of the determinant field over a parameter domain.

    Interval domains reuse the kernel scan; rectangle domains scan every
    grid row and column, refine minima along the scan axis, and return the
    set of grid cells hit by refined zeros.
    """
    field = _as_field(family_or_field)
    if isinstance(domain, Interval):
        points = kernel_scan(field, domain)
        dims = _kernel_dims(field, np.array([[p.lam] for p in points])) if points else []
        cands = tuple(
            BifurcationCandidate((p.lam,), p.rho_abs, dims[i], p.bracket)
            for i, p in enumerate(points)
        )
        return CandidateScan(domain, cands, None, threshold_rel)

    xs, ys = domain.axis_nodes(0), domain.axis_nodes(1)
    probe = np.abs(
        field.rho_many(
            domain.sample_points(9), np.zeros(81)
        )
    )
    threshold = threshold_rel * (1.0 + float(probe.max()))
    row_pts, row_vals, row_grid = _scan_lines(field, ys, xs, 0, threshold, refine_width)
    col_pts, col_vals, _ = _scan_lines(field, xs, ys, 1, threshold, refine_width)
    if np.count_nonzero(row_grid < threshold) > 0.5 * row_grid.size:
        raise EverywhereDegenerateError(
            "more than half the rectangle grid is degenerate"
        )
    all_pts = np.vstack([row_pts, col_pts])
    all_vals = np.concatenate([row_vals, col_vals])
    # row-scan zeros sit exactly on a horizontal grid line and column-scan
    # zeros on a vertical one; mark both cells adjacent to the line so the
    # cell cover of the curve has no edge-assignment gaps
    along_row = np.zeros(len(all_pts), dtype=bool)
    along_row[: len(row_pts)] = True
    cells = set()
    hx = (domain.bounds[0][1] - domain.bounds[0][0]) / domain.resolution[0]
    hy = (domain.bounds[1][1] - domain.bounds[1][0]) / domain.resolution[1]
    nx, ny = domain.resolution

    def clamp(i: float, n: int) -> int:
        return min(max(int(i), 0), n - 1)

    for (x, y), on_row in zip(all_pts, along_row):
        fi = (x - domain.bounds[0][0]) / hx
        fj = (y - domain.bounds[1][0]) / hy
        if on_row:
            j_line = int(round(fj))
            for j in (j_line - 1, j_line):
                cells.add((clamp(fi, nx), clamp(j, ny)))
        else:
            i_line = int(round(fi))
            for i in (i_line - 1, i_line):
                cells.add((clamp(i, nx), clamp(fj, ny)))
    dims = _kernel_dims(field, all_pts) if len(all_pts) else []
    cands = tuple(
        BifurcationCandidate((float(p[0]), float(p[1])), float(v), dims[i], ())
        for i, (p, v) in enumerate(zip(all_pts, all_vals))
    )
    return CandidateScan(domain, cands, frozenset(cells), threshold)


def disconnection_report(
    domain: Interval | Rectangle, scan: CandidateScan
) -> tuple[int, np.ndarray | None]:
    """Count 4-connected components of the non-candidate region.

    Rectangle domains return the component count with the cell label grid
    (-1 marks candidate cells); interval domains count the gaps between
    candidates.
    """
    if isinstance(domain, Interval):
        interior = [c for c in scan.candidates if domain.lo < c.point[0] < domain.hi]
        return len(interior) + 1, None
    nx, ny = domain.resolution
    labels = np.full((nx, ny), 0, dtype=int)
    for (i, j) in scan.cells or ():
        labels[i, j] = -1
    count = 0
    for i in range(nx):
        for j in range(ny):
            if labels[i, j] != 0:
                continue
            count += 1
            stack = [(i, j)]
            labels[i, j] = count
            while stack:
                ci, cj = stack.pop()
                for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    ni, nj = ci + di, cj + dj
                    if 0 <= ni < nx and 0 <= nj < ny and labels[ni, nj] == 0:
                        labels[ni, nj] = count
                        stack.append((ni, nj))
    return count, labels


# ---------------------------------------------------------------------------
# periodic orbits by Fourier-collocation Newton


@dataclass(frozen=True)
class OrbitBranch:
    """A nontrivial periodic solution at one parameter value."""

    lam: float
    cutoff: int
    coefficients: np.ndarray  # truncation-ordered Fourier coefficients
    amplitude: float  # root-mean-square over the period
    residual: float
    iterations: int


@dataclass(frozen=True)
class NoBranch:
    """Newton ended on the trivial branch (or left the basin entirely)."""

    lam: float
    reason: str  # "trivial-collapse" | "diverged"
    amplitude: float


class _Collocation:
    """Fourier collocation of J u' + grad(u) = 0 on uniform nodes."""

    def __init__(self, nl: NonlinearFamily, lam: float, cutoff: int):
        self.nl = nl
        self.lam = float(lam)
        self.trunc = FourierTruncation(nl.n, cutoff)
        self.ts = quadrature_nodes(cutoff)
        self.V, self.D = self.trunc.basis_values(self.ts)
        self.J = standard_symplectic_matrix(nl.n)
        self.gram = self.trunc.gram_l2()
        self.M = self.ts.shape[0]
        self.JD = np.einsum("cd,imd->imc", self.J, self.D)

    def nodes_of(self, U: np.ndarray) -> np.ndarray:
        return np.einsum("imc,i->mc", self.V, U)

    def project(self, r_nodes: np.ndarray) -> np.ndarray:
        return (2.0 * np.pi / self.M) * np.einsum("imc,mc->i", self.V, r_nodes) / self.gram

    def residual(self, U: np.ndarray) -> tuple[np.ndarray, float, np.ndarray]:
        u = self.nodes_of(U)
        du = np.einsum("imc,i->mc", self.D, U)
        g = self.nl.gradient_at_nodes(self.lam, self.ts, u)
        r = du @ self.J.T + g
        rms = float(np.sqrt(np.mean(np.sum(r * r, axis=1))))
        return self.project(r), rms, u

    def jacobian(self, u_nodes: np.ndarray, fd_step: float = 1e-6) -> np.ndarray:
        d = self.nl.dim
        Dg = np.empty((self.M, d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = fd_step
            gp = self.nl.gradient_at_nodes(self.lam, self.ts, u_nodes + e)
            gm = self.nl.gradient_at_nodes(self.lam, self.ts, u_nodes - e)
            Dg[:, :, j] = (gp - gm) / (2.0 * fd_step)
        W = self.JD + np.einsum("mcd,imd->imc", Dg, self.V)
        return (2.0 * np.pi / self.M) * np.einsum("imc,jmc->ij", self.V, W) / self.gram[:, None]

    def amplitude(self, U: np.ndarray) -> float:
        u = self.nodes_of(U)
        return float(np.sqrt(np.mean(np.sum(u * u, axis=1))))


def kernel_seed(
    nl: NonlinearFamily, lam_star: float, coll: _Collocation, sv_tol: float = 1e-5
) -> np.ndarray:
    """Periodic kernel direction of the linearisation at a candidate parameter.

    The kernel vector of I - M(lam*) is transported around the period by
    the fundamental solution and projected onto the truncation.
    """
    lin = nl.linearization()
    steps = coll.M * max(8, -(-512 // coll.M))
    _, history = solution_trajectory(lin, lam_star, 0.0, steps=steps)
    monodromy = np.real(history[-1])
    d = monodromy.shape[0]
    _, svals, vh = np.linalg.svd(np.eye(d) - monodromy)
    if svals[-1] > sv_tol:
        raise NewtonError(
            f"no kernel direction at lambda={lam_star!r} "
            f"(sigma_min = {svals[-1]:.3e}); pick a parameter nearer a candidate"
        )
    v = vh[-1]
    stride = steps // coll.M
    u_nodes = np.real(history[:-1:stride] @ v)
    return coll.project(u_nodes)


def newton_orbit(
    nl: NonlinearFamily,
    lam: float,
    cutoff: int,
    seed_amplitude: float,
    *,
    kernel_at: float | None = None,
    search_halfwidth: float = 0.25,
    residual_tol: float = ORBIT_RESIDUAL_TOL,
    trivial_amplitude: float = ORBIT_TRIVIAL_AMPLITUDE,
    max_iterations: int = 60,
) -> OrbitBranch | NoBranch:
    """Damped Newton on the collocated periodic system, seeded along a kernel.

    Returns an :class:`OrbitBranch` on convergence to a nontrivial orbit, a
    :class:`NoBranch` when the iteration collapses onto the trivial branch
    or diverges, and raises :class:`NewtonError` on residual stagnation.
    """
    coll = _Collocation(nl, lam, cutoff)
    if kernel_at is None:
        lin = nl.linearization()
        found = kernel_scan(lin, (lam - search_halfwidth, lam + search_halfwidth), resolution=64)
        if not found:
            raise NewtonError(
                f"no bifurcation candidate within {search_halfwidth} of lambda={lam!r}; "
                "pass kernel_at explicitly"
            )
        kernel_at = min(found, key=lambda p: abs(p.lam - lam)).lam
    seed = kernel_seed(nl, float(kernel_at), coll)
    amp0 = coll.amplitude(seed)
    U = seed * (seed_amplitude / amp0)
    r_hat, rms, u_nodes = coll.residual(U)
    for it in range(1, max_iterations + 1):
        if rms < residual_tol:
            amplitude = coll.amplitude(U)
            if amplitude < trivial_amplitude:
                return NoBranch(lam=float(lam), reason="trivial-collapse", amplitude=amplitude)
            return OrbitBranch(
                lam=float(lam),
                cutoff=cutoff,
                coefficients=U.copy(),
                amplitude=amplitude,
                residual=rms,
                iterations=it - 1,
            )
        jac = coll.jacobian(u_nodes)
        step, *_ = np.linalg.lstsq(jac, -r_hat, rcond=None)
        accepted = False
        for _ in range(20):
            U_next = U + step
            r_next, rms_next, u_next = coll.residual(U_next)
            if rms_next < rms:
                U, r_hat, rms, u_nodes = U_next, r_next, rms_next, u_next
                accepted = True
                break
            step = 0.5 * step
        if not accepted:
            raise NewtonError(
                f"Newton stagnated at residual {rms:.3e} (tolerance {residual_tol:.1e}) "
                f"at lambda={lam!r}"
            )
        if rms > 1e8 or coll.amplitude(U) > 1e3:
            return NoBranch(lam=float(lam), reason="diverged", amplitude=coll.amplitude(U))
    raise NewtonError(
        f"Newton did not converge in {max_iterations} iterations "
        f"(residual {rms:.3e} at lambda={lam!r})"
    )
