import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

import hamindex as hx
from hamindex.errors import StepCeilingError
from hamindex.integrator import (
    fundamental_solution,
    fundamental_solutions,
    solution_trajectory,
    standard_symplectic_matrix,
    symplectic_residual,
)

from conftest import constant_family

J2 = standard_symplectic_matrix(1)


def exact_rotation_monodromy(a: complex) -> np.ndarray:
    """Independent oracle: Psi(2pi) = expm(2pi a J) for S = a I."""
    return scipy.linalg.expm(2.0 * np.pi * a * J2)


class TestClosedForms:
    def test_zero_field_is_identity(self, zero_family):
        sol = fundamental_solution(zero_family, 0.7, 0.0)
        np.testing.assert_allclose(sol.psi, np.eye(2), atol=1e-12)
        assert sol.psi.dtype == np.float64

    def test_half_rotation_is_minus_identity(self):
        fam = constant_family(1, "0.5")
        sol = fundamental_solution(fam, 0.0, 0.0)
        np.testing.assert_allclose(sol.psi, -np.eye(2), atol=1e-10)

    @pytest.mark.parametrize("a,s", [(0.3, 0.0), (1.0, 0.4), (0.77, -0.9)])
    def test_matches_matrix_exponential(self, rotation, a, s):
        sol = fundamental_solution(rotation, a, s)
        ref = exact_rotation_monodromy(a + 1j * s)
        if s == 0:
            ref = ref.real
        np.testing.assert_allclose(sol.psi, ref, atol=1e-8)

    def test_complex_shift_eigenvalues(self, rotation):
        a, s = 0.4, 0.25
        sol = fundamental_solution(rotation, a, s)
        eigs = np.sort_complex(np.linalg.eigvals(sol.psi))
        expected = np.sort_complex(
            np.array([np.exp(2j * np.pi * (a + 1j * s)), np.exp(-2j * np.pi * (a + 1j * s))])
        )
        np.testing.assert_allclose(eigs, expected, atol=1e-9)


class TestSymplecticResidual:
    def test_identity(self):
        assert symplectic_residual(np.eye(2)) == 0.0

    def test_half_turn_rotation(self):
        psi = exact_rotation_monodromy(0.5)
        assert symplectic_residual(psi) < 1e-14

    def test_doubled_identity_gives_three(self):
        assert symplectic_residual(2.0 * np.eye(2)) == pytest.approx(3.0)


class TestDiagnostics:
    def test_real_when_shift_vanishes(self, rotation):
        sol = fundamental_solution(rotation, 1.25, 0.0)
        assert sol.psi.dtype == np.float64

    @given(
        a=st.floats(-1.5, 1.5),
        s=st.floats(-1.0, 1.0),
    )
    def test_conjugate_shift_symmetry(self, a, s):
        fam = constant_family(1, "0.8")
        plus = fundamental_solutions(fam, [a], [s])[0]
        minus = fundamental_solutions(fam, [a], [-s])[0]
        np.testing.assert_allclose(minus.psi, np.conj(plus.psi), atol=1e-9)

    def test_determinant_one_at_zero_shift(self, twisted, rng):
        lams = rng.uniform(0.4, 1.6, 8)
        for sol in fundamental_solutions(twisted, lams, np.zeros(8)):
            assert abs(np.linalg.det(sol.psi) - 1.0) < 1e-8

    def test_residual_bounded_by_richardson(self, twisted, rng):
        # 100 random (lambda, s) in the band the artifact's algorithms use
        lams = rng.uniform(0.4, 1.6, 100)
        ss = rng.uniform(-1.0, 1.0, 100)
        for sol in fundamental_solutions(twisted, lams, ss):
            assert sol.symplectic_defect <= 10.0 * max(sol.error_estimate, 1e-12)

    def test_batch_matches_single_bitwise(self, twisted):
        lams = np.array([0.5, 0.8, 1.1, 1.4])
        ss = np.array([0.0, 0.3, -0.2, 0.9])
        batch = fundamental_solutions(twisted, lams, ss)
        for lam, s, sol in zip(lams, ss, batch):
            single = fundamental_solution(twisted, lam, s)
            assert np.array_equal(single.psi, sol.psi)

    def test_step_ceiling_raises(self, rotation):
        with pytest.raises(StepCeilingError) as err:
            fundamental_solution(rotation, 1.0, 0.0, steps=64, tol=1e-30, step_ceiling=256)
        assert err.value.achieved_estimate > 0


class TestConvergenceOrder:
    def test_fourth_order_on_smooth_family(self, twisted):
        # halving the step reduces the error against a fine reference by >= 8
        ref = fundamental_solution(twisted, 0.9, 0.0, steps=32768, tol=1e30)

        def error_at(steps):
            sol = fundamental_solution(twisted, 0.9, 0.0, steps=steps, tol=1e30)
            return np.max(np.abs(sol.psi - ref.psi))

        e_coarse, e_fine = error_at(128), error_at(256)
        assert e_coarse / e_fine >= 8.0


class TestTrajectory:
    def test_trajectory_endpoint_matches_monodromy(self, twisted):
        ts, hist = solution_trajectory(twisted, 1.1, 0.0, steps=2048)
        assert ts[0] == 0.0 and ts[-1] == pytest.approx(2 * np.pi)
        sol = fundamental_solution(twisted, 1.1, 0.0)
        np.testing.assert_allclose(hist[-1], sol.psi, atol=1e-9)

    def test_trajectory_starts_at_identity(self, rotation):
        _, hist = solution_trajectory(rotation, 0.5, 0.0, steps=64)
        np.testing.assert_array_equal(hist[0], np.eye(2))
