"""Fourier-Galerkin assemblies and spectral flow of the operator families.

Two selfadjoint realisations share one stiffness matrix: the
differential operator u -> J u' + S u acting with the L2 pairing, and the
variational Hessian acting with the H^{1/2} pairing.  On the real trig
basis (constants, then sine and cosine vector modes per frequency) both
Gram matrices are diagonal: 2pi on constants and, per mode-k vector,
pi for the L2 product and pi*k for the H^{1/2} product.  The generalised
pencil B x = mu G x is reduced losslessly by the diagonal Gram and solved
as a standard symmetric eigenproblem.

Spectral flow follows the eigenvalue-window definition: the path is
partitioned so that a symmetric window [-W, W] holds a fixed number of
pencil eigenvalues on each segment, W sitting at the midpoint of the
largest spectral gap inside a search band; the flow is the sum over
segments of the count differences in [0, W].  Segments bisect adaptively
until the window count is stable.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .errors import AdmissibilityError, RefinementExhaustedError
from .integrator import standard_symplectic_matrix
from .model import TWO_PI, FamilyLike

INVERTIBILITY_TOL = 1e-6
DEFAULT_BAND_CAP = 1.0
EDGE_PROXIMITY_TOL = 1e-9
ASSEMBLY_SYMMETRY_TOL = 1e-10


@dataclass(frozen=True)
class FourierTruncation:
    """Real trigonometric basis of vector-valued loops up to a mode cutoff.

    Ordering: 2n constant directions, then for k = 1..N the 2n sine-k and
    2n cosine-k vector modes; dimension 2n(2N+1).  The combinations
    a cos kt -/+ J a sin kt span the positive/negative subspaces of the
    derivative part; ``mode_splitting`` returns them as coefficient rows.
    """

    n: int
    cutoff: int

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError("mode cutoff must be at least 1")
        if self.n < 1:
            raise ValueError("half-dimension must be at least 1")

    @property
    def dim(self) -> int:
        return 2 * self.n * (2 * self.cutoff + 1)

    @property
    def block(self) -> int:
        return 2 * self.n

    def gram_l2(self) -> np.ndarray:
        g = np.full(self.dim, np.pi)
        g[: self.block] = TWO_PI
        return g

    def gram_h_half(self) -> np.ndarray:
        g = np.empty(self.dim)
        g[: self.block] = TWO_PI
        for k in range(1, self.cutoff + 1):
            off = self.block * (2 * k - 1)
            g[off : off + 2 * self.block] = np.pi * k
        return g

    def basis_values(self, ts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Values and time derivatives of every basis loop at the nodes.

        Returns arrays of shape (dim, K, 2n).
        """
        K = ts.shape[0]
        d = self.block
        V = np.zeros((self.dim, K, d))
        D = np.zeros((self.dim, K, d))
        for j in range(d):
            V[j, :, j] = 1.0
        for k in range(1, self.cutoff + 1):
            off = d * (2 * k - 1)
            sk, ck = np.sin(k * ts), np.cos(k * ts)
            for j in range(d):
                V[off + j, :, j] = sk
                D[off + j, :, j] = k * ck
                V[off + d + j, :, j] = ck
                D[off + d + j, :, j] = -k * sk
        return V, D

    def mode_splitting(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Coefficient rows spanning the positive/negative mode-k subspaces."""
        d = self.block
        J = standard_symplectic_matrix(self.n)
        off = d * (2 * k - 1)
        plus = np.zeros((d, self.dim))
        minus = np.zeros((d, self.dim))
        for j in range(d):
            a = np.zeros(d)
            a[j] = 1.0
            plus[j, off + d + j] = 1.0
            plus[j, off : off + d] -= J @ a
            minus[j, off + d + j] = 1.0
            minus[j, off : off + d] += J @ a
        return plus, minus


def quadrature_nodes(cutoff: int) -> np.ndarray:
    """Uniform periodic trapezoid nodes, exact for trig products up to the cutoff."""
    M = 8 * (cutoff + 1)
    return np.linspace(0.0, TWO_PI, M, endpoint=False)


@dataclass
class GalerkinAssembly:
    """Stiffness/Gram pair of one operator at one parameter value."""

    kind: str  # "A" (L2 pairing) or "L" (H^{1/2} pairing)
    lam: tuple
    truncation: FourierTruncation
    stiffness: np.ndarray
    gram: np.ndarray  # diagonal entries

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        scale = 1.0 / np.sqrt(self.gram)
        mat = self.stiffness * scale[:, None] * scale[None, :]
        return np.linalg.eigvalsh(mat)

    @property
    def min_abs_eigenvalue(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))

    @property
    def cutoff(self) -> int:
        return self.truncation.cutoff


def _stiffness(family: FamilyLike, lam, trunc: FourierTruncation) -> np.ndarray:
    ts = quadrature_nodes(trunc.cutoff)
    V, D = trunc.basis_values(ts)
    S = family.eval_grid([lam], ts)[0]  # (K, d, d)
    J = standard_symplectic_matrix(family.n)
    W = np.einsum("cd,ikd->ikc", J, D) + np.einsum("kcd,ikd->ikc", S, V)
    B = (TWO_PI / ts.shape[0]) * np.einsum("ikc,jkc->ij", W, V)
    defect = float(np.max(np.abs(B - B.T)))
    if defect > ASSEMBLY_SYMMETRY_TOL:
        raise AdmissibilityError(
            f"assembled stiffness is not symmetric (defect {defect:.3e}); "
            "the coefficient family is not selfadjoint"
        )
    return 0.5 * (B + B.T)


def assemble_A(family: FamilyLike, lam, cutoff: int) -> GalerkinAssembly:
    """Truncation of the differential operator u -> J u' + S u on the L2 pairing."""
    trunc = FourierTruncation(family.n, cutoff)
    lam_t = (float(lam),) if np.ndim(lam) == 0 else tuple(float(x) for x in lam)
    return GalerkinAssembly("A", lam_t, trunc, _stiffness(family, lam, trunc), trunc.gram_l2())


def assemble_L(family: FamilyLike, lam, cutoff: int) -> GalerkinAssembly:
    """Truncation of the variational Hessian on the H^{1/2} pairing."""
    trunc = FourierTruncation(family.n, cutoff)
    lam_t = (float(lam),) if np.ndim(lam) == 0 else tuple(float(x) for x in lam)
    return GalerkinAssembly("L", lam_t, trunc, _stiffness(family, lam, trunc), trunc.gram_h_half())


@dataclass
class ComplexAssembly:
    """Hermitian truncation on the complex exponential basis e^{ikt} v."""

    lam: tuple
    cutoff: int
    stiffness: np.ndarray
    gram_weight: float

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.stiffness / self.gram_weight)

    @property
    def min_abs_eigenvalue(self) -> float:
        return float(np.min(np.abs(self.eigenvalues)))


def assemble_A_complex(family: FamilyLike, lam, cutoff: int) -> ComplexAssembly:
    """Complexified differential-operator truncation; spectra match the real one."""
    d = family.dim
    ts = quadrature_nodes(cutoff)
    K = ts.shape[0]
    modes = np.arange(-cutoff, cutoff + 1)
    dim = d * modes.shape[0]
    V = np.zeros((dim, K, d), dtype=np.complex128)
    D = np.zeros((dim, K, d), dtype=np.complex128)
    for mi, k in enumerate(modes):
        phase = np.exp(1j * k * ts)
        for j in range(d):
            V[mi * d + j, :, j] = phase
            D[mi * d + j, :, j] = 1j * k * phase
    S = family.eval_grid([lam], ts)[0]
    J = standard_symplectic_matrix(family.n)
    W = np.einsum("cd,ikd->ikc", J, D) + np.einsum("kcd,ikd->ikc", S, V)
    B = (TWO_PI / K) * np.einsum("ikc,jkc->ij", W, np.conj(V))
    B = 0.5 * (B + B.conj().T)
    lam_t = (float(lam),) if np.ndim(lam) == 0 else tuple(float(x) for x in lam)
    return ComplexAssembly(lam_t, cutoff, B, TWO_PI)


def default_cutoff(family: FamilyLike, lam_samples, *, n_time: int = 32, floor: int = 4) -> int:
    """Mode cutoff from the sampled operator norm of S.

    High modes of the differential operator sit near +/-k beyond the norm
    of S, so crossings near zero stay resolved once the cutoff clears
    4 + 2 max ||S||.
    """
    ts = np.linspace(0.0, TWO_PI, n_time, endpoint=False)
    S = family.eval_grid(lam_samples, ts)
    norms = np.linalg.norm(S, ord=2, axis=(2, 3))
    return max(floor, int(np.ceil(4.0 + 2.0 * float(norms.max()))))


# ---------------------------------------------------------------------------
# spectral flow


def _window(spec_l: np.ndarray, spec_r: np.ndarray, band_cap: float) -> tuple[float, float]:
    """Midpoint and width of the largest gap of pooled |eigenvalues| in the band."""
    pooled = np.sort(np.abs(np.concatenate([spec_l, spec_r])))
    pooled = pooled[pooled <= band_cap]
    fence = np.concatenate([[0.0], pooled, [band_cap]])
    gaps = np.diff(fence)
    g = int(np.argmax(gaps))
    return 0.5 * (fence[g] + fence[g + 1]), float(gaps[g])


def _count_window(spec: np.ndarray, w: float) -> int:
    return int(np.count_nonzero(np.abs(spec) <= w))


def _count_upper(spec: np.ndarray, w: float) -> int:
    return int(np.count_nonzero((spec >= 0.0) & (spec <= w)))


def spectral_flow(
    assemblies: list[GalerkinAssembly],
    assembler: Callable[[float], GalerkinAssembly] | None = None,
    *,
    require_invertible_endpoints: bool = True,
    invertibility_tol: float = INVERTIBILITY_TOL,
    band_cap: float = DEFAULT_BAND_CAP,
    max_depth: int = 48,
) -> int:
    """Net eigenvalue flow through zero along an ordered list of assemblies.

    ``assembler`` supplies assemblies at bisection midpoints; without it,
    a segment that cannot be certified raises.  Endpoint invertibility is
    enforced unless the path is a closed loop (pass
    ``require_invertible_endpoints=False`` there).
    """
    if len(assemblies) < 2:
        raise ValueError("need at least two assemblies along the path")
    cuts = {a.cutoff for a in assemblies}
    if len(cuts) != 1:
        raise ValueError("assemblies along a path must share the mode cutoff")
    if require_invertible_endpoints:
        for end in (assemblies[0], assemblies[-1]):
            m = end.min_abs_eigenvalue
            if m <= invertibility_tol:
                raise AdmissibilityError(
                    f"endpoint at lambda={end.lam} is not invertible: "
                    f"smallest |pencil eigenvalue| {m:.3e} <= {invertibility_tol:.1e}"
                )

    def segment(left: GalerkinAssembly, right: GalerkinAssembly, depth: int) -> int:
        spec_l, spec_r = left.eigenvalues, right.eigenvalues
        w, gap = _window(spec_l, spec_r, band_cap)
        displacement = float(np.max(np.abs(spec_l - spec_r)))
        edge_clear = gap > 4.0 * EDGE_PROXIMITY_TOL
        if (
            edge_clear
            and _count_window(spec_l, w) == _count_window(spec_r, w)
            and displacement <= 0.5 * gap
        ):
            return _count_upper(spec_r, w) - _count_upper(spec_l, w)
        if depth >= max_depth or assembler is None:
            raise RefinementExhaustedError(
                f"spectral-flow window not stable between lambda={left.lam} and "
                f"lambda={right.lam} after {depth} bisections"
            )
        mid_lam = tuple(0.5 * (np.asarray(left.lam) + np.asarray(right.lam)))
        mid = assembler(mid_lam[0] if len(mid_lam) == 1 else mid_lam)
        return segment(left, mid, depth + 1) + segment(mid, right, depth + 1)

    return sum(segment(assemblies[i], assemblies[i + 1], 0) for i in range(len(assemblies) - 1))


class AssemblyPath:
    """Caching assembler for one operator kind along a one-parameter family."""

    def __init__(
        self,
        family: FamilyLike,
        kind: str,
        cutoff: int,
        *,
        loop_circumference: float | None = None,
    ):
        if kind not in ("A", "L", "A-complex"):
            raise ValueError("operator kind must be 'A', 'L' or 'A-complex'")
        self.family = family
        self.kind = kind
        self.cutoff = cutoff
        self.loop_circumference = loop_circumference
        self._cache: dict[float, GalerkinAssembly] = {}

    def __call__(self, lam: float) -> GalerkinAssembly:
        key = float(lam)
        if self.loop_circumference is not None:
            key = float(np.mod(key, self.loop_circumference))
        if key not in self._cache:
            make = {"A": assemble_A, "L": assemble_L, "A-complex": assemble_A_complex}[self.kind]
            self._cache[key] = make(self.family, key, self.cutoff)
        return self._cache[key]

    def trace(self, band: float = np.inf) -> list[tuple[float, np.ndarray]]:
        rows = []
        for key in sorted(self._cache):
            eigs = self._cache[key].eigenvalues
            rows.append((key, eigs[np.abs(eigs) <= band]))
        return rows


def spectral_flow_along(
    family: FamilyLike,
    kind: str,
    interval: tuple[float, float],
    *,
    cutoff: int | None = None,
    nodes: int = 17,
    loop: bool = False,
    loop_circumference: float = TWO_PI,
    band_cap: float = DEFAULT_BAND_CAP,
    invertibility_tol: float = INVERTIBILITY_TOL,
    max_depth: int = 48,
) -> tuple[int, AssemblyPath]:
    """Spectral flow of one operator family over an interval or a loop.

    For loops the endpoint assembly is reused modulo the circumference, so
    a closed path begins and ends on the identical matrix and the flow of
    a loop of compact perturbations vanishes exactly.
    """
    a, b = float(interval[0]), float(interval[1])
    if cutoff is None:
        samples = np.linspace(a, b, 9)
        cutoff = default_cutoff(family, samples)
    path = AssemblyPath(
        family, kind, cutoff, loop_circumference=loop_circumference if loop else None
    )
    grid = np.linspace(a, b, max(2, nodes))
    assemblies = [path(x) for x in grid]
    flow = spectral_flow(
        assemblies,
        path,
        require_invertible_endpoints=not loop,
        invertibility_tol=invertibility_tol,
        band_cap=band_cap,
        max_depth=max_depth,
    )
    return flow, path
