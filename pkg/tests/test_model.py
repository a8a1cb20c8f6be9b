import numpy as np
import pytest

import hamindex as hx
from hamindex.errors import EvalError, FamilyValidationError
from hamindex.families import BUILTIN_FAMILIES, NONLINEAR_BUILTINS
from hamindex.model import Interval, Rectangle, eval_S, validate_family

from conftest import constant_family


def family_from(rows, n=1, arity=1):
    return hx.CoefficientFamily.from_strings(n, rows, arity=arity)


class TestEvalS:
    def test_zero_matrix(self, zero_family):
        np.testing.assert_array_equal(eval_S(zero_family, 0.3, 1.0), np.zeros((2, 2)))

    def test_diagonal_lambda(self):
        fam = family_from([["lambda", "0"], ["0", "lambda"]])
        np.testing.assert_allclose(eval_S(fam, 0.7, 0.1), 0.7 * np.eye(2))

    def test_cos_entry_at_pi(self):
        fam = family_from([["cos(t)", "0"], ["0", "cos(t)"]])
        np.testing.assert_allclose(eval_S(fam, 0.0, np.pi), -np.eye(2), atol=1e-15)

    def test_error_carries_entry_indices(self):
        fam = family_from([["1/lambda", "0"], ["0", "1/lambda"]])
        with pytest.raises(EvalError, match=r"entry \(0,0\)"):
            eval_S(fam, 0.0, 0.0)

    def test_syntactically_symmetric_table_evaluates_symmetric(self, rng):
        fam = family_from(
            [["sin(t)*lambda", "cos(2*t) - lambda"], ["cos(2*t) - lambda", "tanh(t)"]]
        )
        for _ in range(20):
            S = eval_S(fam, rng.uniform(-2, 2), rng.uniform(0, 7))
            np.testing.assert_array_equal(S, S.T)


class TestValidation:
    def test_diag_lambda_passes(self):
        report = validate_family(family_from([["lambda", "0"], ["0", "lambda"]]))
        assert report.ok and not report.violations

    def test_asymmetric_pair_flagged_everywhere(self):
        report = validate_family(family_from([["0", "1"], ["0", "0"]]))
        assert not report.ok
        assert all(v.kind == "asymmetry" for v in report.violations)
        assert len(report.violations) == report.n_lambda_samples * report.n_time_samples

    def test_aperiodic_entry_flagged(self):
        report = validate_family(family_from([["t", "0"], ["0", "t"]]))
        assert not report.ok
        assert any(v.kind == "aperiodicity" for v in report.violations)
        with pytest.raises(FamilyValidationError):
            report.raise_if_invalid()

    def test_every_builtin_family_validates(self):
        for key, builtin in BUILTIN_FAMILIES.items():
            report = validate_family(builtin.family, builtin.domain)
            assert report.ok, f"builtin {key} failed validation"

    def test_nonlinear_builtin_trivial_branch(self):
        for nl in NONLINEAR_BUILTINS.values():
            assert nl.validate_trivial_branch().ok

    def test_nontrivial_branch_rejected(self):
        nl = hx.NonlinearFamily.from_strings(1, ["lambda*u1 + 1", "lambda*u2"])
        report = nl.validate_trivial_branch()
        assert not report.ok
        assert all(v.kind == "nontrivial-branch" for v in report.violations)


class TestDomains:
    def test_interval_requires_order_and_resolution(self):
        with pytest.raises(ValueError):
            Interval(1.0, 0.5)
        with pytest.raises(ValueError):
            Interval(0.0, 1.0, resolution=1)

    def test_interval_boundary_defaults_to_endpoints(self):
        dom = Interval(0.0, 2.0)
        assert dom.boundary_points() == (0.0, 2.0)
        assert dom.in_boundary(2.0) and not dom.in_boundary(1.0)

    def test_boundary_must_lie_inside(self):
        with pytest.raises(ValueError):
            Interval(0.0, 1.0, boundary=(2.0,))
        with pytest.raises(ValueError):
            Rectangle(((0, 1), (0, 1)), boundary=((2.0, 0.5),))

    def test_rectangle_contains(self):
        dom = Rectangle(((0.0, 1.2), (0.0, 1.2)))
        assert dom.contains((0.5, 1.0))
        assert not dom.contains((1.3, 0.0))

    def test_path_rejects_repeated_points(self):
        with pytest.raises(ValueError):
            hx.ParameterPath(((0.5, 0.5), (0.5, 0.5)))

    def test_path_endpoint_flags(self):
        dom = Interval(0.0, 1.0)
        path = hx.ParameterPath((0.0, 0.4, 1.0))
        assert path.endpoint_flags(dom) == (True, True)


class TestLinearization:
    def test_cubic_linearization_matches_analytic(self):
        lin = NONLINEAR_BUILTINS["cubic_focus"].linearization()
        S = lin.eval_grid([0.7], np.array([0.0, 1.0, 2.0]))[0]
        for k in range(3):
            np.testing.assert_allclose(S[k], 0.7 * np.eye(2), atol=1e-9)

    def test_time_dependent_gradient(self):
        nl = hx.NonlinearFamily.from_strings(
            1, ["(lambda + 0.2*cos(t))*u1 + u2^3", "(lambda + 0.2*cos(t))*u2"]
        )
        lin = nl.linearization()
        S = lin.eval_grid([1.0], np.array([0.0]))[0, 0]
        np.testing.assert_allclose(S, 1.2 * np.eye(2), atol=1e-9)

    def test_constant_family_helper(self):
        fam = constant_family(2, "0.25")
        np.testing.assert_allclose(eval_S(fam, 0.0, 0.0), 0.25 * np.eye(4))
