import numpy as np
import pytest

import hamindex as hx
from hamindex.errors import (
    EndpointDegenerateError,
    EverywhereDegenerateError,
    NumericalError,
)
from hamindex.monodromy import (
    MonodromyField,
    kernel_scan,
    lambda_matrix,
    monodromy_index,
    rho,
)

from conftest import constant_family


def rho_rotation(w: complex) -> complex:
    """Closed-form determinant field of S = a I (n=1) at w = a + i s."""
    return (1 - np.exp(2j * np.pi * w)) * (1 - np.exp(-2j * np.pi * w))


class TestLambdaMatrix:
    def test_zero_family_gives_zero_matrix(self, zero_family):
        np.testing.assert_allclose(lambda_matrix(zero_family, 0.2, 0.0), np.zeros((2, 2)), atol=1e-12)

    def test_half_rotation_gives_two_identity(self):
        fam = constant_family(1, "0.5")
        np.testing.assert_allclose(lambda_matrix(fam, 0.0, 0.0), 2 * np.eye(2), atol=1e-10)

    def test_det_matches_eigenvalue_factorisation(self, rotation_field, rng):
        for _ in range(10):
            a, s = rng.uniform(0.1, 1.9), rng.uniform(-1.0, 1.0)
            got = complex(np.linalg.det(rotation_field.lambda_matrix(a, s)))
            assert got == pytest.approx(rho_rotation(a + 1j * s), abs=1e-7)


class TestRho:
    def test_value_at_half(self, rotation_field):
        assert rotation_field.rho(0.5, 0.0) == pytest.approx(4.0, abs=1e-9)

    def test_zero_at_integer(self, rotation_field):
        assert abs(rotation_field.rho(1.0, 0.0)) < 1e-10

    def test_off_axis_value(self, rotation_field):
        expected = 2 - 2 * np.cosh(0.2 * np.pi)
        got = rotation_field.rho(1.0, 0.1)
        assert got.real == pytest.approx(expected, abs=1e-9)
        assert abs(got) > 0.4

    def test_conjugate_symmetry(self, rotation_field, rng):
        for _ in range(10):
            a, s = rng.uniform(0.0, 2.0), rng.uniform(0.01, 1.5)
            up, down = rotation_field.rho(a, s), rotation_field.rho(a, -s)
            assert down == pytest.approx(np.conj(up), abs=1e-9)

    def test_free_function_matches_field(self, rotation, rotation_field):
        assert rho(rotation, 0.5, 0.0) == pytest.approx(rotation_field.rho(0.5, 0.0))


class TestMonodromyIndex:
    def test_rotation_window(self, rotation_field):
        assert monodromy_index(rotation_field, (0.5, 1.5)) == 2

    def test_rotation_empty_window(self, rotation_field):
        assert monodromy_index(rotation_field, (0.1, 0.4)) == 0

    def test_block_family_doubles(self, block_rotation):
        assert monodromy_index(block_rotation, (0.5, 1.5)) == 4

    def test_margin_invariance(self, rotation_field, twisted):
        assert monodromy_index(rotation_field, (0.5, 1.5), margin=0.5) == 2
        assert monodromy_index(rotation_field, (0.5, 1.5), margin=2.0) == 2
        field = MonodromyField(twisted)
        assert monodromy_index(field, (0.4, 1.6), margin=0.5) == monodromy_index(
            field, (0.4, 1.6), margin=2.0
        )

    def test_degenerate_endpoint_rejected(self, rotation_field):
        with pytest.raises(EndpointDegenerateError):
            monodromy_index(rotation_field, (1.0, 1.5))

    def test_additivity_across_regular_point(self, rotation_field):
        total = monodromy_index(rotation_field, (0.5, 2.5))
        left = monodromy_index(rotation_field, (0.5, 1.7))
        right = monodromy_index(rotation_field, (1.7, 2.5))
        assert total == left + right == 4


class TestKernelScan:
    def test_rotation_integers_found(self, rotation_field):
        points = kernel_scan(rotation_field, (0.5, 2.5))
        assert [round(p.lam, 6) for p in points] == [1.0, 2.0]
        for p in points:
            assert p.bracket[0] < p.lam < p.bracket[1]

    def test_empty_window(self, rotation_field):
        assert kernel_scan(rotation_field, (0.1, 0.4)) == []

    def test_zero_family_everywhere_degenerate(self, zero_family):
        with pytest.raises(EverywhereDegenerateError):
            kernel_scan(zero_family, (0.0, 1.0))


class TestOffAxisNonvanishing:
    def test_rho_bounded_away_from_zero_off_axis(self, rng, rotation, block_rotation, twisted):
        # realization of the equivalence: zeros only occur at s = 0
        for fam in (rotation, block_rotation, twisted):
            field = MonodromyField(fam)
            lams = rng.uniform(0.4, 1.6, 60)
            ss = rng.uniform(0.05, 1.5, 60) * rng.choice([-1.0, 1.0], 60)
            values = np.abs(field.rho_many(lams, ss))
            assert values.min() > 1e-6


class TestCache:
    def test_cache_hits_are_reused(self, rotation):
        field = MonodromyField(rotation)
        first = field.solution(0.6, 0.0)
        again = field.solution(0.6, 0.0)
        assert first is again
        assert len(field._cache) == 1
