"""Fundamental solutions of the linearised periodic Hamiltonian system.

Solves Psi' = J (S(t) + i s I) Psi, Psi(0) = I over [0, 2pi] with the
classical fixed-step fourth-order Runge-Kutta scheme.  The error estimate
comes from Richardson comparison of a half-step and a full-step pass, and
steps double until the estimate meets the tolerance or the step ceiling
trips.  Everything is vectorised over batches of (lambda, s) points: the
coefficient matrix is evaluated once on the finest half-step time grid
and the coarse pass reuses every other node.

The transpose-symplectic identity Psi^T J Psi = J holds exactly along
trajectories, for complex shifts as well (transpose, not conjugate
transpose); its numerical residual is reported per solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import StepCeilingError
from .model import TWO_PI, FamilyLike, _as_param_array

DEFAULT_STEPS = 2048
DEFAULT_TOL = 1e-9
STEP_CEILING = 2**22

# fixed batch memory budget so chunk boundaries are deterministic
_CHUNK_BYTES = 96 * 1024 * 1024


def standard_symplectic_matrix(n: int) -> np.ndarray:
    """The 2n x 2n block matrix [[0, -I], [I, 0]]."""
    J = np.zeros((2 * n, 2 * n))
    J[:n, n:] = -np.eye(n)
    J[n:, :n] = np.eye(n)
    return J


def symplectic_residual(psi: np.ndarray) -> float:
    """Max-norm of Psi^T J Psi - J (plain transpose, valid for complex shifts)."""
    d = psi.shape[-1]
    J = standard_symplectic_matrix(d // 2)
    return float(np.max(np.abs(psi.T @ J @ psi - J)))


@dataclass(frozen=True)
class FundamentalSolution:
    """Monodromy matrix at z = (lambda, s) with accuracy diagnostics."""

    lam: tuple
    s: float
    psi: np.ndarray  # Psi(2pi); real when s == 0
    steps: int
    error_estimate: float
    symplectic_defect: float


def _rk4_pass(JS: np.ndarray, isJ: np.ndarray | None, steps: int, stride: int) -> np.ndarray:
    """March Psi over `steps` RK4 steps using nodes JS[:, stride*k]."""
    B, _, d, _ = JS.shape
    h = TWO_PI / steps
    if isJ is None:
        psi = np.broadcast_to(np.eye(d), (B, d, d)).copy()

        def A(idx):
            return JS[:, idx]

    else:
        psi = np.broadcast_to(np.eye(d, dtype=np.complex128), (B, d, d)).copy()

        def A(idx):
            return JS[:, idx] + isJ

    half = 0.5 * h
    sixth = h / 6.0
    for k in range(steps):
        j = 2 * stride * k
        A0, Am, A1 = A(j), A(j + stride), A(j + 2 * stride)
        k1 = A0 @ psi
        k2 = Am @ (psi + half * k1)
        k3 = Am @ (psi + half * k2)
        k4 = A1 @ (psi + h * k3)
        psi = psi + sixth * (k1 + 2.0 * (k2 + k3) + k4)
    return psi


def _integrate_chunk(family: FamilyLike, lam_arr: np.ndarray, s_arr: np.ndarray, steps: int, cplx: bool):
    """One Richardson pair (steps and steps/2) for a batch of (lambda, s)."""
    d = family.dim
    J = standard_symplectic_matrix(family.n)
    nodes = np.linspace(0.0, TWO_PI, 2 * steps + 1)
    S = family.eval_grid(lam_arr, nodes)  # (B, 2m+1, d, d)
    JS = np.matmul(J, S)
    isJ = (1j * s_arr)[:, None, None] * J if cplx else None
    fine = _rk4_pass(JS, isJ, steps, stride=1)
    coarse = _rk4_pass(JS, isJ, steps // 2, stride=2)
    est = np.max(np.abs(fine - coarse).reshape(lam_arr.shape[0], d * d), axis=1) / 15.0
    return fine, est


def _chunk_size(steps: int, d: int) -> int:
    per_point = (2 * steps + 1) * d * d * 8 * 3  # S, JS and complex work arrays
    return max(1, _CHUNK_BYTES // per_point)


def fundamental_solutions(
    family: FamilyLike,
    lams,
    ss,
    *,
    steps: int = DEFAULT_STEPS,
    tol: float = DEFAULT_TOL,
    step_ceiling: int = STEP_CEILING,
) -> list[FundamentalSolution]:
    """Monodromy matrices for a batch of spectral-plane points.

    Parameters
    ----------
    lams : array-like
        Parameter points, shape (B,) for one-parameter families or (B, 2).
    ss : array-like
        Spectral shifts, shape (B,).
    steps, tol, step_ceiling
        Initial step count, Richardson target, and the hard cap on steps in
        a single pass.  Steps double until the estimate meets ``tol``.
    """
    lam_arr = _as_param_array(family.arity, lams)
    s_arr = np.asarray(ss, dtype=float).reshape(-1)
    if lam_arr.shape[0] != s_arr.shape[0]:
        raise ValueError("lambda batch and shift batch disagree in length")
    d = family.dim
    J = standard_symplectic_matrix(family.n)
    B = lam_arr.shape[0]
    out: list[FundamentalSolution | None] = [None] * B
    # zero-shift points integrate in real arithmetic, the rest in complex;
    # convergence is per point, so each result depends only on its own input
    for cplx in (False, True):
        group = np.flatnonzero((s_arr != 0.0) == cplx)
        start = 0
        while start < len(group):
            size = min(_chunk_size(steps, d), len(group) - start)
            active = group[start : start + size]
            m = steps
            while True:
                psi, est = _integrate_chunk(family, lam_arr[active], s_arr[active], m, cplx)
                done = est <= tol
                defect = np.max(
                    np.abs(np.swapaxes(psi, -1, -2) @ J @ psi - J).reshape(len(active), d * d),
                    axis=1,
                )
                for k in np.flatnonzero(done):
                    i = active[k]
                    out[i] = FundamentalSolution(
                        lam=tuple(lam_arr[i]),
                        s=float(s_arr[i]),
                        psi=psi[k].copy(),
                        steps=m,
                        error_estimate=float(est[k]),
                        symplectic_defect=float(defect[k]),
                    )
                if np.all(done):
                    break
                if 2 * m > step_ceiling:
                    raise StepCeilingError(
                        f"integrator did not reach tol={tol:.1e} within {step_ceiling} steps "
                        f"(achieved estimate {float(np.max(est[~done])):.3e})",
                        achieved_estimate=float(np.max(est[~done])),
                    )
                active = active[~done]
                m *= 2
            start += size
    return out  # type: ignore[return-value]


def fundamental_solution(
    family: FamilyLike,
    lam,
    s: float = 0.0,
    *,
    steps: int = DEFAULT_STEPS,
    tol: float = DEFAULT_TOL,
    step_ceiling: int = STEP_CEILING,
) -> FundamentalSolution:
    """Monodromy matrix at a single point z = (lambda, s)."""
    return fundamental_solutions(
        family, [lam], [s], steps=steps, tol=tol, step_ceiling=step_ceiling
    )[0]


def solution_trajectory(
    family: FamilyLike, lam, s: float = 0.0, *, steps: int = DEFAULT_STEPS
) -> tuple[np.ndarray, np.ndarray]:
    """Full time history Psi(t_k) on the step grid (single pass, no doubling).

    Returns (times of shape (steps+1,), matrices of shape (steps+1, 2n, 2n)).
    Used for trajectory dumps and for seeding periodic solutions along a
    kernel direction.
    """
    lam_arr = _as_param_array(family.arity, [lam])
    d = family.dim
    J = standard_symplectic_matrix(family.n)
    nodes = np.linspace(0.0, TWO_PI, 2 * steps + 1)
    S = family.eval_grid(lam_arr, nodes)[0]
    JS = J @ S
    cplx = s != 0.0
    dtype = np.complex128 if cplx else np.float64
    isJ = (1j * s) * J if cplx else 0.0
    psi = np.eye(d, dtype=dtype)
    h = TWO_PI / steps
    history = np.empty((steps + 1, d, d), dtype=dtype)
    history[0] = psi
    for k in range(steps):
        j = 2 * k
        A0, Am, A1 = JS[j] + isJ, JS[j + 1] + isJ, JS[j + 2] + isJ
        k1 = A0 @ psi
        k2 = Am @ (psi + 0.5 * h * k1)
        k3 = Am @ (psi + 0.5 * h * k2)
        k4 = A1 @ (psi + h * k3)
        psi = psi + (h / 6.0) * (k1 + 2.0 * (k2 + k3) + k4)
        history[k + 1] = psi
    return nodes[::2], history
