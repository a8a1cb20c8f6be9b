"""Built-in example families and the randomised trig-family generator.

Every linear builtin validates (symmetric, 2pi-periodic) and carries a
default domain plus, where meaningful, an admissible test interval used
across the suite.  ``rotation`` is the calibration family: S = lambda I
on the plane, whose monodromy is the rotation by 2 pi lambda, with all
four indices equal to 2 per positively crossed integer level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    Circle,
    CoefficientFamily,
    Interval,
    NonlinearFamily,
    ParameterDomain,
    Rectangle,
    TWO_PI,
)


@dataclass(frozen=True)
class BuiltinFamily:
    key: str
    family: CoefficientFamily
    domain: ParameterDomain
    interval: tuple[float, float] | None  # admissible 1-parameter test window
    margin: float = 1.0


def _diag(n: int, entry: str) -> list[list[str]]:
    d = 2 * n
    return [[entry if i == j else "0" for j in range(d)] for i in range(d)]


def _make_builtins() -> dict[str, BuiltinFamily]:
    table: dict[str, BuiltinFamily] = {}

    def add(key, family, domain, interval, margin=1.0):
        table[key] = BuiltinFamily(key, family, domain, interval, margin)

    add(
        "rotation",
        CoefficientFamily.from_strings(1, _diag(1, "lambda"), name="rotation"),
        Interval(0.5, 1.5, 256),
        (0.5, 1.5),
    )
    add(
        "block_rotation",
        CoefficientFamily.from_strings(2, _diag(2, "lambda"), name="block_rotation"),
        Interval(0.5, 1.5, 256),
        (0.5, 1.5),
    )
    add(
        "twisted",
        CoefficientFamily.from_strings(
            1,
            [
                ["lambda + 0.3*cos(t)", "0.2*sin(t)"],
                ["0.2*sin(t)", "lambda - 0.1*cos(2*t)"],
            ],
            name="twisted",
        ),
        Interval(0.4, 1.6, 256),
        (0.4, 1.6),
    )
    add(
        "loop_pulse",
        CoefficientFamily.from_strings(
            1, _diag(1, "1 + 0.5*sin(lambda)"), name="loop_pulse"
        ),
        Circle(TWO_PI, 64),
        None,
    )
    add(
        "plane_line",
        CoefficientFamily.from_strings(1, _diag(1, "lambda1"), arity=2, name="plane_line"),
        Rectangle(((0.5, 1.5), (0.0, 1.0)), (64, 64)),
        None,
    )
    add(
        "radial",
        CoefficientFamily.from_strings(
            1, _diag(1, "lambda1^2 + lambda2^2"), arity=2, name="radial"
        ),
        Rectangle(((0.0, 1.2), (0.0, 1.2)), (120, 120)),
        None,
    )
    add(
        "zero_field",
        CoefficientFamily.from_strings(1, _diag(1, "0"), name="zero_field"),
        Interval(0.0, 1.0, 64),
        None,
    )
    return table


BUILTIN_FAMILIES: dict[str, BuiltinFamily] = _make_builtins()

# admissible one-parameter families used by cross-method consistency suites
ADMISSIBLE_KEYS = ("rotation", "block_rotation", "twisted")


def builtin(key: str) -> BuiltinFamily:
    try:
        return BUILTIN_FAMILIES[key]
    except KeyError:
        raise KeyError(
            f"unknown builtin family {key!r}; available: {sorted(BUILTIN_FAMILIES)}"
        ) from None


NONLINEAR_BUILTINS: dict[str, NonlinearFamily] = {
    "cubic_focus": NonlinearFamily.from_strings(
        1,
        [
            "lambda*u1 + (u1^2 + u2^2)*u1",
            "lambda*u2 + (u1^2 + u2^2)*u2",
        ],
        name="cubic_focus",
    ),
}


def _fmt(x: float) -> str:
    return repr(round(float(x), 12))


def _trig_string(base: str, c0: float, cos_coeffs, sin_coeffs) -> str:
    """Assemble 'base + c0 + sum c_d cos(dt) + sum s_d sin(dt)' sign-aware."""
    parts = [base] if base else []
    terms = [(c0, None, 0)]
    terms += [(c, "cos", d + 1) for d, c in enumerate(cos_coeffs)]
    terms += [(c, "sin", d + 1) for d, c in enumerate(sin_coeffs)]
    for coeff, fn, deg in terms:
        if coeff == 0.0:
            continue
        mag = _fmt(abs(coeff))
        if fn is None:
            term = mag
        else:
            arg = "t" if deg == 1 else f"{deg}*t"
            term = f"{mag}*{fn}({arg})"
        if not parts:
            parts.append(term if coeff > 0 else f"-{term}")
        else:
            parts.append(f"+ {term}" if coeff > 0 else f"- {term}")
    if not parts:
        return "0"
    return " ".join(parts)


def random_trig_family(
    rng: np.random.Generator,
    n: int = 1,
    degree: int = 3,
    amplitude: float = 0.5,
    *,
    name: str = "",
) -> CoefficientFamily:
    """S(lambda, t) = lambda I + symmetric trigonometric perturbation.

    Harmonic coefficient matrices up to the given degree have entries
    drawn uniformly from [-amplitude, amplitude]; symmetry is built in by
    assigning the identical expression string to mirrored entries.
    """
    d = 2 * n
    c0 = rng.uniform(-amplitude, amplitude, (d, d))
    cos_c = rng.uniform(-amplitude, amplitude, (degree, d, d))
    sin_c = rng.uniform(-amplitude, amplitude, (degree, d, d))
    rows = []
    for i in range(d):
        row = []
        for j in range(d):
            a, b = min(i, j), max(i, j)
            base = "lambda" if i == j else ""
            row.append(
                _trig_string(base, c0[a, b], cos_c[:, a, b], sin_c[:, a, b])
            )
        rows.append(row)
    return CoefficientFamily.from_strings(n, rows, name=name or "random_trig")
