"""Winding of homogeneous planar polynomial pairs via Sturm chains.

For real homogeneous P (degree m) and Q (degree n) with eta = P + iQ
vanishing only at the origin, the winding of eta around the origin is

    (1 + (-1)^(m+n)) * (m_plus - m_minus) / 2

where m_plus/m_minus count sign changes at +/-infinity along the
Euclidean remainder cascade started from N0(s) = P(1, s), N1(s) = Q(1, s).
The remainder sign convention is not innocent: on the field z*z (P =
lambda^2 - s^2, Q = 2 lambda s) plain remainders give 0 while the true
winding is 2, so the shipped default negates remainders (the classical
Sturm convention) and every report records which convention reproduced
the independent phase-tracking oracle.  Whenever the cascade does not
apply (odd total degree aside, m < n or a reversed univariate degree
order after substitution), the oracle value is returned and flagged.

Chains run in exact rational arithmetic by default; the double-precision
fallback snaps coefficients below 1e-12 of the leading scale to zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DegenerateCurveError, NumericalError
from .winding import circle_curve, winding_number

CONVENTIONS = ("negated-remainder", "plain-remainder")
DEFAULT_CONVENTION = "negated-remainder"
FLOAT_SNAP_REL = 1e-12
ISOLATION_SAMPLES = 4096
ISOLATION_TOL_REL = 1e-8


def _trim(coeffs: list) -> tuple:
    """Drop trailing zero coefficients (ascending order: c0 + c1 s + ...)."""
    last = -1
    for i, c in enumerate(coeffs):
        if c != 0:
            last = i
    return tuple(coeffs[: last + 1])


@dataclass(frozen=True)
class Poly:
    """Univariate polynomial with exact (Fraction) or float coefficients."""

    coeffs: tuple  # ascending, no trailing zeros; () is the zero polynomial

    @classmethod
    def from_list(cls, coeffs, exact: bool = True) -> "Poly":
        if exact:
            vals = [Fraction(c) for c in coeffs]
        else:
            vals = [float(c) for c in coeffs]
        return cls(_trim(vals))

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1  # -1 for the zero polynomial

    @property
    def leading(self):
        return self.coeffs[-1]

    def __call__(self, s: float) -> float:
        acc = 0.0
        for c in reversed(self.coeffs):
            acc = acc * s + float(c)
        return acc

    def snap(self) -> "Poly":
        if not self.coeffs or isinstance(self.coeffs[-1], Fraction):
            return self
        scale = max(abs(c) for c in self.coeffs)
        return Poly(_trim([0.0 if abs(c) < FLOAT_SNAP_REL * scale else c for c in self.coeffs]))

    def as_floats(self) -> list[float]:
        return [float(c) for c in self.coeffs]


def _poly_remainder(num: Poly, den: Poly) -> Poly:
    """Remainder of polynomial long division (exact when coefficients are)."""
    r = list(num.coeffs)
    d = den.degree
    lead = den.leading
    while len(r) - 1 >= d and any(c != 0 for c in r):
        k = len(r) - 1 - d
        q = r[-1] / lead
        for i in range(d + 1):
            r[k + i] -= q * den.coeffs[i]
        r.pop()
        while r and r[-1] == 0:
            r.pop()
    return Poly(_trim(r)).snap()


@dataclass(frozen=True)
class SturmChain:
    polys: tuple[Poly, ...]
    convention: str


def sturm_chain(n0: Poly, n1: Poly, convention: str = DEFAULT_CONVENTION) -> SturmChain:
    """Euclidean remainder cascade from (n0, n1); zero remainders terminate.

    Under the negated-remainder convention each new remainder enters with
    its sign flipped (classical Sturm); the plain convention keeps the
    remainder as divided.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}")
    if n0.is_zero or n1.is_zero:
        raise ValueError("the cascade needs two nonzero polynomials")
    if n0.degree < n1.degree:
        raise ValueError("the cascade needs deg N0 >= deg N1; callers handle the swap")
    chain = [n0, n1]
    while True:
        rem = _poly_remainder(chain[-2], chain[-1])
        if rem.is_zero:
            break
        if convention == "negated-remainder":
            rem = Poly(tuple(-c for c in rem.coeffs))
        chain.append(rem)
        if chain[-1].degree == 0:
            break
    return SturmChain(tuple(chain), convention)


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def infinity_sign_changes(chain: SturmChain) -> tuple[int, int]:
    """Sign-change counts of the chain at +infinity and -infinity."""
    plus = [_sign(p.leading) for p in chain.polys]
    minus = [_sign(p.leading) * (-1) ** p.degree for p in chain.polys]

    def changes(signs: list[int]) -> int:
        signs = [s for s in signs if s != 0]
        return sum(1 for a, b in zip(signs, signs[1:]) if a * b < 0)

    return changes(plus), changes(minus)


@dataclass(frozen=True)
class HomogeneousPair:
    """Homogeneous pair (P, Q); coefficients are of lambda^(d-j) s^j, j = 0..d."""

    p_degree: int
    p_coeffs: tuple
    q_degree: int
    q_coeffs: tuple
    exact: bool = True

    def __post_init__(self):
        for name, deg, coeffs in (
            ("P", self.p_degree, self.p_coeffs),
            ("Q", self.q_degree, self.q_coeffs),
        ):
            if len(coeffs) != deg + 1:
                raise ValueError(f"{name} of degree {deg} needs {deg + 1} coefficients")
        if all(c == 0 for c in self.p_coeffs) and all(c == 0 for c in self.q_coeffs):
            raise ValueError("P and Q cannot both vanish identically")

    @classmethod
    def from_lists(cls, p_degree, p_coeffs, q_degree, q_coeffs, exact: bool = True):
        conv = Fraction if exact else float
        return cls(
            p_degree,
            tuple(conv(c) for c in p_coeffs),
            q_degree,
            tuple(conv(c) for c in q_coeffs),
            exact,
        )

    def restricted(self, which: str) -> Poly:
        """The univariate slice N(s) = P(1, s) or Q(1, s)."""
        coeffs = self.p_coeffs if which == "P" else self.q_coeffs
        return Poly(_trim(list(coeffs)))

    def eval_eta(self, lam: np.ndarray, s: np.ndarray) -> np.ndarray:
        """eta = P + iQ evaluated in floats (used by the oracle and checks)."""

        def horner(deg: int, coeffs) -> np.ndarray:
            acc = np.zeros_like(lam, dtype=float)
            for j, c in enumerate(coeffs):
                acc = acc + float(c) * lam ** (deg - j) * s**j
            return acc

        return horner(self.p_degree, self.p_coeffs) + 1j * horner(self.q_degree, self.q_coeffs)


def oracle_winding(pair: HomogeneousPair, radius: float = 1.0, samples: int = 256) -> int:
    """Phase-tracked winding of eta = P + iQ on a circle; independent of chains."""
    curve = circle_curve(radius=radius, vertices=samples)

    def field(points: np.ndarray) -> np.ndarray:
        return pair.eval_eta(points[:, 0], points[:, 1])

    return winding_number(field, curve, samples_per_edge=1).winding


def isolated_zero_check(pair: HomogeneousPair, samples: int = ISOLATION_SAMPLES) -> bool:
    """True when eta has no zero on the unit circle (so none off the origin).

    Dense sampling with local golden-ratio refinement near the smallest
    moduli; homogeneity then propagates a positive circle minimum to all
    of the punctured plane.
    """
    th = np.linspace(0.0, 2.0 * np.pi, max(samples, 16), endpoint=False)
    mags = np.abs(pair.eval_eta(np.cos(th), np.sin(th)))
    scale = 1.0 + float(mags.max())
    threshold = ISOLATION_TOL_REL * scale
    order = np.argsort(mags)
    step = th[1] - th[0]
    phi = (np.sqrt(5.0) - 1.0) / 2.0
    for i in order[:8]:
        a, b = th[i] - step, th[i] + step
        c, d = b - phi * (b - a), a + phi * (b - a)

        def val(x: float) -> float:
            return float(np.abs(pair.eval_eta(np.cos(x), np.sin(x))))

        fc, fd = val(c), val(d)
        while b - a > 1e-10:
            if fc < fd:
                b, d, fd = d, c, fc
                c = b - phi * (b - a)
                fc = val(c)
            else:
                a, c, fc = c, d, fd
                d = a + phi * (b - a)
                fd = val(d)
        if min(fc, fd) < threshold:
            return False
    return bool(mags.min() >= threshold)


@dataclass(frozen=True)
class SturmReport:
    """Everything the formula produced, plus the oracle cross-check."""

    value: int
    method: str  # "chain" | "parity" | "oracle-fallback"
    convention: str
    formula_applicable: bool
    chain_coeffs: tuple | None
    sign_changes: tuple[int, int] | None
    oracle_value: int | None


def homogeneous_index(
    pair: HomogeneousPair,
    convention: str = DEFAULT_CONVENTION,
    *,
    cross_check: bool = True,
) -> SturmReport:
    """Winding of eta = P + iQ around its isolated zero at the origin.

    Odd total degree short-circuits to 0 through the parity prefactor.
    Otherwise the Sturm cascade applies when m >= n and the univariate
    degrees after the substitution stay ordered; any other shape falls
    back to the phase-tracking oracle and is flagged as such.
    """
    if not isolated_zero_check(pair):
        raise NumericalError(
            "eta = P + iQ vanishes away from the origin; the winding formula "
            "needs an isolated zero"
        )
    m, n = pair.p_degree, pair.q_degree
    oracle = oracle_winding(pair) if cross_check else None
    if (m + n) % 2 == 1:
        return SturmReport(0, "parity", convention, True, None, None, oracle)
    n0, n1 = pair.restricted("P"), pair.restricted("Q")
    if m < n or n0.is_zero or (not n1.is_zero and n0.degree < n1.degree):
        value = oracle if oracle is not None else oracle_winding(pair)
        return SturmReport(int(value), "oracle-fallback", convention, False, None, None, oracle)
    if n1.is_zero:
        chain = SturmChain((n0,), convention)
    else:
        chain = sturm_chain(n0, n1, convention)
    m_plus, m_minus = infinity_sign_changes(chain)
    value = (1 + (-1) ** (m + n)) * (m_plus - m_minus) // 2
    return SturmReport(
        int(value),
        "chain",
        convention,
        True,
        tuple(tuple(p.as_floats()) for p in chain.polys),
        (m_plus, m_minus),
        oracle,
    )
