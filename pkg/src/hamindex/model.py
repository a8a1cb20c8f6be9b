"""Parameter domains, paths, and coefficient families.

A coefficient family is a symmetric 2n x 2n matrix of expressions in the
time variable ``t`` and one or two parameters; it is the linearisation of
a periodic Hamiltonian system along its trivial branch.  Validation
checks symmetry and 2pi-periodicity by sampling and never silently
repairs either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EvalError, FamilyValidationError
from .expressions import (
    DEFAULT_VARIABLES,
    Expression,
    evaluate,
    parse_expression,
    to_text,
)

TWO_PI = 2.0 * math.pi

SYMMETRY_TOL = 1e-10
PERIODICITY_TOL = 1e-10
TRIVIAL_BRANCH_TOL = 1e-9


# ---------------------------------------------------------------------------
# parameter domains


@dataclass(frozen=True)
class Interval:
    """Compact parameter interval [lo, hi]; boundary defaults to both ends."""

    lo: float
    hi: float
    resolution: int = 256
    boundary: tuple[float, ...] | None = None

    kind = "interval"
    arity = 1

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("interval requires lo < hi")
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")
        for y in self.boundary_points():
            if not self.contains(y):
                raise ValueError(f"boundary point {y} outside the interval")

    def boundary_points(self) -> tuple[float, ...]:
        if self.boundary is None:
            return (self.lo, self.hi)
        return self.boundary

    def contains(self, point, tol: float = 1e-12) -> bool:
        x = float(np.asarray(point).reshape(()))
        return self.lo - tol <= x <= self.hi + tol

    def in_boundary(self, point, tol: float = 1e-9) -> bool:
        x = float(np.asarray(point).reshape(()))
        return any(abs(x - y) <= tol for y in self.boundary_points())

    def grid(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.resolution + 1)

    def sample_points(self, count: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, count)


@dataclass(frozen=True)
class Circle:
    """Circle parameter domain of given circumference; no boundary subset."""

    circumference: float = TWO_PI
    resolution: int = 64

    kind = "circle"
    arity = 1

    def __post_init__(self):
        if self.circumference <= 0:
            raise ValueError("circumference must be positive")
        if self.resolution < 2:
            raise ValueError("grid resolution must be at least 2")

    def boundary_points(self) -> tuple[float, ...]:
        return ()

    def contains(self, point, tol: float = 1e-12) -> bool:
        return bool(np.isfinite(np.asarray(point)).all())

    def in_boundary(self, point, tol: float = 1e-9) -> bool:
        return False

    def wrap(self, point: float) -> float:
        return float(np.mod(point, self.circumference))

    def grid(self) -> np.ndarray:
        return np.linspace(0.0, self.circumference, self.resolution + 1)

    def sample_points(self, count: int) -> np.ndarray:
        return np.linspace(0.0, self.circumference, count, endpoint=False)


@dataclass(frozen=True)
class Rectangle:
    """Axis-aligned rectangle [a1,b1] x [a2,b2] with per-axis resolution."""

    bounds: tuple[tuple[float, float], tuple[float, float]]
    resolution: tuple[int, int] = (64, 64)
    boundary: tuple[tuple[float, float], ...] = ()

    kind = "rectangle"
    arity = 2

    def __post_init__(self):
        for (a, b) in self.bounds:
            if not a < b:
                raise ValueError("rectangle requires a < b on each axis")
        if min(self.resolution) < 2:
            raise ValueError("grid resolution must be at least 2 per axis")
        for y in self.boundary:
            if not self.contains(y):
                raise ValueError(f"boundary point {y} outside the rectangle")

    def boundary_points(self) -> tuple[tuple[float, float], ...]:
        return self.boundary

    def contains(self, point, tol: float = 1e-12) -> bool:
        p = np.asarray(point, dtype=float).reshape(2)
        return all(
            self.bounds[k][0] - tol <= p[k] <= self.bounds[k][1] + tol for k in (0, 1)
        )

    def in_boundary(self, point, tol: float = 1e-9) -> bool:
        p = np.asarray(point, dtype=float).reshape(2)
        return any(np.hypot(p[0] - y[0], p[1] - y[1]) <= tol for y in self.boundary)

    def axis_nodes(self, axis: int) -> np.ndarray:
        (a, b) = self.bounds[axis]
        return np.linspace(a, b, self.resolution[axis] + 1)

    def sample_points(self, count_per_axis: int) -> np.ndarray:
        xs = np.linspace(*self.bounds[0], count_per_axis)
        ys = np.linspace(*self.bounds[1], count_per_axis)
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.column_stack([gx.ravel(), gy.ravel()])


ParameterDomain = Interval | Circle | Rectangle


@dataclass(frozen=True)
class ParameterPath:
    """Polyline of parameter points; endpoints intended to lie in the boundary set."""

    points: tuple

    def __post_init__(self):
        if len(self.points) < 2:
            raise ValueError("a path needs at least two points")
        prev = None
        for p in self.points:
            arr = np.asarray(p, dtype=float)
            if prev is not None and np.allclose(arr, prev, atol=0, rtol=0):
                raise ValueError("consecutive path points must be distinct")
            prev = arr

    def as_array(self) -> np.ndarray:
        return np.atleast_2d(np.asarray(self.points, dtype=float))

    def endpoints(self):
        return self.points[0], self.points[-1]

    def endpoint_flags(self, domain: ParameterDomain, tol: float = 1e-9) -> tuple[bool, bool]:
        a, b = self.endpoints()
        return domain.in_boundary(a, tol), domain.in_boundary(b, tol)


# ---------------------------------------------------------------------------
# coefficient families


def _param_env(arity: int, lams: np.ndarray) -> dict[str, np.ndarray]:
    if arity == 1:
        return {"lambda": lams[..., 0]}
    return {"lambda1": lams[..., 0], "lambda2": lams[..., 1]}


def _as_param_array(arity: int, lams) -> np.ndarray:
    arr = np.asarray(lams, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arity == 1 and arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim == 1:  # a single 2-parameter point
        arr = arr[None, :]
    if arr.shape[-1] != arity:
        raise ValueError(f"expected parameter points of arity {arity}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class CoefficientFamily:
    """Symmetric 2n x 2n expression matrix S(lambda, t), the central input object."""

    n: int
    entries: tuple[tuple[Expression, ...], ...]
    arity: int = 1
    name: str = ""

    def __post_init__(self):
        d = 2 * self.n
        if len(self.entries) != d or any(len(row) != d for row in self.entries):
            raise ValueError(f"entry table must be {d} x {d}")
        if self.arity not in (1, 2):
            raise ValueError("parameter arity must be 1 or 2")

    @classmethod
    def from_strings(cls, n: int, rows, arity: int = 1, name: str = "") -> "CoefficientFamily":
        parsed = tuple(
            tuple(parse_expression(text, DEFAULT_VARIABLES) for text in row) for row in rows
        )
        return cls(n=n, entries=parsed, arity=arity, name=name)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def entry_strings(self) -> list[list[str]]:
        return [[to_text(e) for e in row] for row in self.entries]

    def eval_grid(self, lams, ts) -> np.ndarray:
        """Evaluate S on a (parameter batch) x (time grid) lattice.

        Returns an array of shape (B, K, 2n, 2n).  Expression errors are
        re-raised with the offending entry indices attached.
        """
        lam_arr = _as_param_array(self.arity, lams)
        t_arr = np.asarray(ts, dtype=float).reshape(-1)
        B, K = lam_arr.shape[0], t_arr.shape[0]
        env = {k: v[:, None] for k, v in _param_env(self.arity, lam_arr).items()}
        env["t"] = t_arr[None, :]
        d = self.dim
        out = np.empty((B, K, d, d))
        for i in range(d):
            for j in range(d):
                try:
                    val = evaluate(self.entries[i][j], env)
                except EvalError as exc:
                    raise EvalError(f"entry ({i},{j}): {exc}") from exc
                out[:, :, i, j] = np.broadcast_to(val, (B, K))
        return out


def eval_S(family: CoefficientFamily, lam, t: float) -> np.ndarray:
    """Evaluate the coefficient matrix at one parameter point and time."""
    return family.eval_grid([lam], [float(t)])[0, 0]


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    kind: str  # asymmetry | aperiodicity | nontrivial-branch
    lam: tuple
    t: float
    entry: tuple[int, int] | None
    magnitude: float


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[Violation, ...]
    n_lambda_samples: int
    n_time_samples: int

    def raise_if_invalid(self):
        if not self.ok:
            worst = max(self.violations, key=lambda v: v.magnitude)
            raise FamilyValidationError(
                f"family fails validation: {len(self.violations)} violation(s); "
                f"worst is {worst.kind} of size {worst.magnitude:.3e} at "
                f"lambda={worst.lam}, t={worst.t:.6f}"
            )


def _lambda_samples(family_arity: int, domain: ParameterDomain | None, n_lambda: int) -> np.ndarray:
    if domain is not None:
        if domain.arity != family_arity:
            raise ValueError("domain arity does not match the family")
        return _as_param_array(family_arity, domain.sample_points(n_lambda))
    if family_arity == 1:
        return np.linspace(-1.0, 1.5, n_lambda)[:, None]
    side = np.linspace(-1.0, 1.5, n_lambda)
    gx, gy = np.meshgrid(side, side, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def validate_family(
    family: CoefficientFamily,
    domain: ParameterDomain | None = None,
    *,
    n_lambda: int = 7,
    n_time: int = 13,
) -> ValidationReport:
    """Check symmetry and 2pi-periodicity of S at sampled points.

    Violations are reported with witness points, never repaired.
    """
    lam_arr = _lambda_samples(family.arity, domain, n_lambda)
    # offset grid keeps t=0 and multiples of pi out, where symmetry bugs can hide
    ts = np.linspace(0.0, TWO_PI, n_time, endpoint=False) + 0.05
    S0 = family.eval_grid(lam_arr, ts)
    S1 = family.eval_grid(lam_arr, ts + TWO_PI)
    violations: list[Violation] = []
    asym = S0 - np.swapaxes(S0, -1, -2)
    aper = S1 - S0
    for b in range(lam_arr.shape[0]):
        lam_tuple = tuple(lam_arr[b])
        for k in range(ts.shape[0]):
            mag = float(np.max(np.abs(asym[b, k])))
            if mag > SYMMETRY_TOL:
                i, j = np.unravel_index(np.argmax(np.abs(asym[b, k])), asym[b, k].shape)
                violations.append(
                    Violation("asymmetry", lam_tuple, float(ts[k]), (int(i), int(j)), mag)
                )
            mag = float(np.max(np.abs(aper[b, k])))
            if mag > PERIODICITY_TOL:
                i, j = np.unravel_index(np.argmax(np.abs(aper[b, k])), aper[b, k].shape)
                violations.append(
                    Violation("aperiodicity", lam_tuple, float(ts[k]), (int(i), int(j)), mag)
                )
    return ValidationReport(
        ok=not violations,
        violations=tuple(violations),
        n_lambda_samples=lam_arr.shape[0],
        n_time_samples=ts.shape[0],
    )


# ---------------------------------------------------------------------------
# nonlinear families and their linearisation


def gradient_variables(n: int) -> tuple[str, ...]:
    return DEFAULT_VARIABLES + tuple(f"u{i + 1}" for i in range(2 * n))


@dataclass(frozen=True)
class NonlinearFamily:
    """Gradient of a Hamiltonian in u1..u2n with a trivial branch at u = 0."""

    n: int
    gradient: tuple[Expression, ...]
    arity: int = 1
    name: str = ""

    def __post_init__(self):
        if len(self.gradient) != 2 * self.n:
            raise ValueError(f"gradient must have {2 * self.n} components")

    @classmethod
    def from_strings(cls, n: int, components, arity: int = 1, name: str = "") -> "NonlinearFamily":
        variables = gradient_variables(n)
        parsed = tuple(parse_expression(text, variables) for text in components)
        return cls(n=n, gradient=parsed, arity=arity, name=name)

    @property
    def dim(self) -> int:
        return 2 * self.n

    def gradient_grid(self, lams, ts, u: np.ndarray) -> np.ndarray:
        """Evaluate the gradient at constant displacement u over a (B, K) lattice."""
        lam_arr = _as_param_array(self.arity, lams)
        t_arr = np.asarray(ts, dtype=float).reshape(-1)
        B, K = lam_arr.shape[0], t_arr.shape[0]
        env = {k: v[:, None] for k, v in _param_env(self.arity, lam_arr).items()}
        env["t"] = t_arr[None, :]
        for i, ui in enumerate(np.asarray(u, dtype=float)):
            env[f"u{i + 1}"] = np.float64(ui)
        out = np.empty((B, K, self.dim))
        for c in range(self.dim):
            out[:, :, c] = np.broadcast_to(evaluate(self.gradient[c], env), (B, K))
        return out

    def gradient_at_nodes(self, lam, ts, u_nodes: np.ndarray) -> np.ndarray:
        """Evaluate the gradient along a discretised trajectory u(t_k).

        ``u_nodes`` has shape (K, 2n); the result matches.
        """
        lam_arr = _as_param_array(self.arity, [lam])
        t_arr = np.asarray(ts, dtype=float).reshape(-1)
        env = {k: np.broadcast_to(v, t_arr.shape) for k, v in _param_env(self.arity, lam_arr[0:1]).items()}
        env["t"] = t_arr
        for i in range(self.dim):
            env[f"u{i + 1}"] = u_nodes[:, i]
        out = np.empty((t_arr.shape[0], self.dim))
        for c in range(self.dim):
            out[:, c] = np.broadcast_to(evaluate(self.gradient[c], env), t_arr.shape)
        return out

    def linearization(self, fd_step: float = 1e-6) -> "LinearizedFamily":
        return LinearizedFamily(self, fd_step)

    def validate_trivial_branch(
        self, domain: ParameterDomain | None = None, *, n_lambda: int = 7, n_time: int = 13
    ) -> ValidationReport:
        """Check that the gradient vanishes along u = 0 at sampled (lambda, t)."""
        lam_arr = _lambda_samples(self.arity, domain, n_lambda)
        ts = np.linspace(0.0, TWO_PI, n_time, endpoint=False) + 0.05
        g0 = self.gradient_grid(lam_arr, ts, np.zeros(self.dim))
        violations = []
        for b in range(lam_arr.shape[0]):
            for k in range(ts.shape[0]):
                mag = float(np.max(np.abs(g0[b, k])))
                if mag > TRIVIAL_BRANCH_TOL:
                    violations.append(
                        Violation("nontrivial-branch", tuple(lam_arr[b]), float(ts[k]), None, mag)
                    )
        return ValidationReport(
            ok=not violations,
            violations=tuple(violations),
            n_lambda_samples=lam_arr.shape[0],
            n_time_samples=ts.shape[0],
        )


@dataclass(frozen=True)
class LinearizedFamily:
    """Coefficient matrix of a nonlinear family at u = 0 via central differences.

    Provides the same ``eval_grid`` interface as :class:`CoefficientFamily`,
    so integrators and assemblies accept either.
    """

    source: NonlinearFamily
    fd_step: float = 1e-6

    @property
    def n(self) -> int:
        return self.source.n

    @property
    def dim(self) -> int:
        return self.source.dim

    @property
    def arity(self) -> int:
        return self.source.arity

    @property
    def name(self) -> str:
        return f"linearized({self.source.name})" if self.source.name else "linearized"

    def eval_grid(self, lams, ts) -> np.ndarray:
        lam_arr = _as_param_array(self.arity, lams)
        t_arr = np.asarray(ts, dtype=float).reshape(-1)
        d, h = self.dim, self.fd_step
        out = np.empty((lam_arr.shape[0], t_arr.shape[0], d, d))
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            plus = self.source.gradient_grid(lam_arr, t_arr, e)
            minus = self.source.gradient_grid(lam_arr, t_arr, -e)
            out[:, :, :, j] = (plus - minus) / (2.0 * h)
        return out


FamilyLike = CoefficientFamily | LinearizedFamily
