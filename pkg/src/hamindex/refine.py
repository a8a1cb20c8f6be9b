"""Scalar minimisation helpers used by crossing and degeneracy refinement."""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_section_min(f: Callable[[float], float], a: float, b: float, width: float) -> tuple[float, float]:
    """Minimise a unimodal function on [a, b] down to the given bracket width.

    Returns (argmin estimate, value there).
    """
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    while (b - a) > width:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    x = c if fc < fd else d
    return (x, min(fc, fd))


def golden_section_min_batch(
    f_batch: Callable[[np.ndarray], np.ndarray],
    brackets: np.ndarray,
    width: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Synchronised golden-section over many brackets at once.

    ``f_batch`` maps an array of query points (one per bracket) to values.
    ``brackets`` has shape (B, 2).  Returns (argmins, values), each (B,).
    All brackets iterate together, so each round costs one batched call.
    """
    a = brackets[:, 0].astype(float).copy()
    b = brackets[:, 1].astype(float).copy()
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc = np.asarray(f_batch(c), dtype=float)
    fd = np.asarray(f_batch(d), dtype=float)
    while float(np.max(b - a)) > width:
        left = fc < fd
        b[left], d[left], fd[left] = d[left], c[left], fc[left]
        c[left] = b[left] - _INVPHI * (b[left] - a[left])
        a[~left], c[~left], fc[~left] = c[~left], d[~left], fd[~left]
        d[~left] = a[~left] + _INVPHI * (b[~left] - a[~left])
        query = np.where(left, c, d)
        fq = np.asarray(f_batch(query), dtype=float)
        fc = np.where(left, fq, fc)
        fd = np.where(left, fd, fq)
    take_c = fc < fd
    return np.where(take_c, c, d), np.where(take_c, fc, fd)
