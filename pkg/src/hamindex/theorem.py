"""Cross-validation of the four indices of a one-parameter family.

The flagship check computes, independently, the winding of the monodromy
determinant field, the spectral flow of the differential-operator
truncations, the spectral flow of the variational-Hessian truncations,
and the Conley-Zehnder index of the monodromy path, then asserts that all
four integers agree.  Only the fundamental-solution cache is shared; the
eigenvalue and crossing machinery stay independent, which is the point
of the check.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError
from .model import FamilyLike
from .monodromy import (
    DEFAULT_MARGIN,
    ENDPOINT_RHO_TOL,
    MonodromyField,
    check_endpoint_admissibility,
    monodromy_index,
)
from .spectral import (
    DEFAULT_BAND_CAP,
    INVERTIBILITY_TOL,
    default_cutoff,
    spectral_flow_along,
)
from .symplectic import CROSSING_SV_TOL, conley_zehnder, symplectic_path


@dataclass(frozen=True)
class IndexReport:
    """The four indices with agreement flag and run diagnostics."""

    winding: int
    sfl_a: int
    sfl_l: int
    cz: int
    agree: bool
    diagnostics: dict = field(default_factory=dict)
    timing_seconds: float = 0.0

    def values(self) -> tuple[int, int, int, int]:
        return (self.winding, self.sfl_a, self.sfl_l, self.cz)


def theorem_check(
    family: FamilyLike,
    interval: tuple[float, float],
    *,
    margin: float = DEFAULT_MARGIN,
    cutoff: int | None = None,
    cz_nodes: int = 257,
    sfl_nodes: int = 17,
    endpoint_rho_tol: float = ENDPOINT_RHO_TOL,
    invertibility_tol: float = INVERTIBILITY_TOL,
    band_cap: float = DEFAULT_BAND_CAP,
    crossing_sv_tol: float = CROSSING_SV_TOL,
    integrator_steps: int | None = None,
    integrator_tol: float | None = None,
) -> IndexReport:
    """Compute and compare all four indices over a parameter interval.

    Raises :class:`AdmissibilityError` when either endpoint is degenerate,
    checked through both the determinant field and the pencil eigenvalues.
    """
    t0 = time.perf_counter()
    a, b = float(interval[0]), float(interval[1])
    kwargs = {}
    if integrator_steps is not None:
        kwargs["steps"] = integrator_steps
    if integrator_tol is not None:
        kwargs["tol"] = integrator_tol
    shared = MonodromyField(family, **kwargs)
    check_endpoint_admissibility(shared, a, b, tol=endpoint_rho_tol)
    if cutoff is None:
        cutoff = default_cutoff(family, np.linspace(a, b, 9))

    winding = monodromy_index(shared, (a, b), margin, endpoint_tol=endpoint_rho_tol)
    sfl_a, path_a = spectral_flow_along(
        family,
        "A",
        (a, b),
        cutoff=cutoff,
        nodes=sfl_nodes,
        band_cap=band_cap,
        invertibility_tol=invertibility_tol,
    )
    sfl_l, path_l = spectral_flow_along(
        family,
        "L",
        (a, b),
        cutoff=cutoff,
        nodes=sfl_nodes,
        band_cap=band_cap,
        invertibility_tol=invertibility_tol,
    )
    mono_path = symplectic_path(shared, (a, b), nodes=cz_nodes)
    cz, crossings = conley_zehnder(mono_path, sv_tol=crossing_sv_tol, details=True)

    values = (winding, sfl_a, sfl_l, cz)
    agree = len(set(values)) == 1
    diagnostics = {
        "interval": [a, b],
        "margin": margin,
        "mode_cutoff": cutoff,
        "crossings": [
            {
                "lambda": c.lam,
                "kernel_dim": c.kernel_dim,
                "signature": c.signature,
            }
            for c in crossings
        ],
        "assemblies_a": len(path_a._cache),
        "assemblies_l": len(path_l._cache),
        "monodromy_cache_size": len(shared._cache),
        "max_symplectic_defect": shared.max_symplectic_defect(),
        "crossing_orientation": "positive crossing = eigenvalue moving upward "
        "through zero as the parameter increases",
    }
    return IndexReport(
        winding=winding,
        sfl_a=sfl_a,
        sfl_l=sfl_l,
        cz=cz,
        agree=agree,
        diagnostics=diagnostics,
        timing_seconds=time.perf_counter() - t0,
    )


def require_admissible_pencils(
    family: FamilyLike,
    interval: tuple[float, float],
    cutoff: int,
    tol: float = INVERTIBILITY_TOL,
):
    """Endpoint invertibility of both pencils, as a precondition check."""
    from .spectral import assemble_A, assemble_L

    for lam in interval:
        for make in (assemble_A, assemble_L):
            asm = make(family, lam, cutoff)
            if asm.min_abs_eigenvalue <= tol:
                raise AdmissibilityError(
                    f"{asm.kind}-pencil not invertible at lambda={lam!r}: "
                    f"smallest |eigenvalue| {asm.min_abs_eigenvalue:.3e}"
                )
