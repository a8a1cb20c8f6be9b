"""Randomised family corpus with certified-invertible endpoints."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import random_trig_family
from .model import CoefficientFamily
from .monodromy import MonodromyField
from .spectral import assemble_A, assemble_L, default_cutoff

ENDPOINT_CERT_TOL = 1e-4


@dataclass(frozen=True)
class CorpusEntry:
    family: CoefficientFamily
    interval: tuple[float, float]
    cutoff: int


def _endpoints_certified(family, interval, cutoff, tol) -> bool:
    field = MonodromyField(family)
    for lam in interval:
        if abs(field.rho(lam, 0.0)) <= tol:
            return False
        for make in (assemble_A, assemble_L):
            if make(family, lam, cutoff).min_abs_eigenvalue <= tol:
                return False
    return True


def random_admissible_corpus(
    seed: int,
    count: int = 20,
    *,
    degree: int = 3,
    amplitude: float = 0.5,
    base_interval: tuple[float, float] = (0.5, 1.5),
    cert_tol: float = ENDPOINT_CERT_TOL,
    max_attempts: int = 40,
) -> list[CorpusEntry]:
    """Deterministic corpus of perturbed-rotation families, n alternating 1/2.

    Endpoints are jittered (and families redrawn) until both the
    determinant field and both pencils are safely invertible at the ends.
    """
    rng = np.random.default_rng(seed)
    entries: list[CorpusEntry] = []
    k = 0
    while len(entries) < count:
        n = 1 + (len(entries) % 2)
        family = random_trig_family(rng, n=n, degree=degree, amplitude=amplitude, name=f"corpus-{k}")
        k += 1
        cutoff = default_cutoff(family, np.linspace(*base_interval, 9))
        placed = False
        for _ in range(max_attempts):
            jitter = rng.uniform(-0.07, 0.07, 2)
            interval = (base_interval[0] + jitter[0], base_interval[1] + jitter[1])
            if _endpoints_certified(family, interval, cutoff, cert_tol):
                entries.append(CorpusEntry(family, interval, cutoff))
                placed = True
                break
        if not placed:
            continue
    return entries
