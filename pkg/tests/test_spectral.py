import numpy as np
import pytest

import hamindex as hx
from hamindex.errors import AdmissibilityError
from hamindex.spectral import (
    AssemblyPath,
    FourierTruncation,
    assemble_A,
    assemble_A_complex,
    assemble_L,
    default_cutoff,
    quadrature_nodes,
    spectral_flow,
    spectral_flow_along,
)

from conftest import constant_family

TWO_PI = 2 * np.pi


def multiset_close(got, expected, tol=1e-9):
    got, expected = np.sort(np.asarray(got)), np.sort(np.asarray(expected))
    assert got.shape == expected.shape
    np.testing.assert_allclose(got, expected, atol=tol)


class TestTruncation:
    def test_dimension_count(self):
        for n in (1, 2):
            for N in (1, 3, 8):
                assert FourierTruncation(n, N).dim == 2 * n * (2 * N + 1)

    def test_l2_gram_weights(self):
        g = FourierTruncation(1, 2).gram_l2()
        multiset_close(g, [TWO_PI] * 2 + [np.pi] * 8, tol=1e-15)

    def test_h_half_gram_weights(self):
        # constants weigh 2pi; mode-k vectors weigh pi k
        g = FourierTruncation(1, 2).gram_h_half()
        expected = [TWO_PI, TWO_PI, np.pi, np.pi, np.pi, np.pi, TWO_PI, TWO_PI, TWO_PI, TWO_PI]
        np.testing.assert_allclose(g, expected)

    def test_quadrature_node_count(self):
        assert quadrature_nodes(3).shape == (32,)

    def test_mode_splitting_spans_derivative_eigenspaces(self):
        # with S = 0 the Hessian pencil acts as +1 on the positive mode
        # combinations a cos kt - J a sin kt and as -1 on the negative ones
        trunc = FourierTruncation(1, 2)
        asm = assemble_L(constant_family(1, "0"), 0.0, 2)
        for k in (1, 2):
            plus, minus = trunc.mode_splitting(k)
            for row in plus:
                np.testing.assert_allclose(asm.stiffness @ row, asm.gram * row, atol=1e-10)
            for row in minus:
                np.testing.assert_allclose(asm.stiffness @ row, -asm.gram * row, atol=1e-10)


class TestAssemblies:
    def test_a_type_zero_field_spectrum(self):
        asm = assemble_A(constant_family(1, "0"), 0.0, 1)
        multiset_close(asm.eigenvalues, [-1, -1, 0, 0, 1, 1])

    def test_a_type_constant_shift_spectrum(self):
        a, N = 0.3, 3
        asm = assemble_A(constant_family(1, "0.3"), 0.0, N)
        expected = sorted(a + m for m in range(-N, N + 1) for _ in range(2))
        multiset_close(asm.eigenvalues, expected)

    def test_a_type_block_multiplicity(self):
        asm = assemble_A(constant_family(2, "0.3"), 0.0, 2)
        expected = sorted(0.3 + m for m in range(-2, 3) for _ in range(4))
        multiset_close(asm.eigenvalues, expected)

    def test_l_type_zero_field_spectrum(self):
        n, N = 1, 3
        asm = assemble_L(constant_family(n, "0"), 0.0, N)
        expected = [-1.0] * (2 * n * N) + [0.0] * (2 * n) + [1.0] * (2 * n * N)
        multiset_close(asm.eigenvalues, expected)

    def test_l_type_constant_block_eigenvalue(self):
        # on constant loops the derivative part vanishes; eigenvalue is a itself
        asm = assemble_L(constant_family(1, "0.4"), 0.0, 4)
        assert np.min(np.abs(asm.eigenvalues - 0.4)) < 1e-11

    def test_stiffness_symmetric(self, twisted):
        asm = assemble_A(twisted, 0.9, 6)
        assert np.max(np.abs(asm.stiffness - asm.stiffness.T)) < 1e-10

    def test_dimension_formula(self, block_rotation):
        asm = assemble_A(block_rotation, 1.0, 5)
        assert asm.stiffness.shape == (44, 44)

    def test_complexified_spectrum_matches_real(self, twisted):
        real = assemble_A(twisted, 0.8, 6)
        cplx = assemble_A_complex(twisted, 0.8, 6)
        assert np.max(np.abs(np.sort(real.eigenvalues) - np.sort(cplx.eigenvalues))) <= 1e-9

    def test_default_cutoff_scales_with_norm(self):
        small = default_cutoff(constant_family(1, "0.1"), np.array([0.0]))
        large = default_cutoff(constant_family(1, "3.0"), np.array([0.0]))
        assert small == 5 and large == 10


class TestSpectralFlow:
    def test_rotation_window(self, rotation):
        flow, _ = spectral_flow_along(rotation, "A", (0.5, 1.5))
        assert flow == 2

    def test_l_type_agrees(self, rotation):
        flow, _ = spectral_flow_along(rotation, "L", (0.5, 1.5))
        assert flow == 2

    def test_constant_path_vanishes(self):
        fam = constant_family(1, "0.3")
        flow, _ = spectral_flow_along(fam, "A", (0.0, 1.0))
        assert flow == 0

    def test_reversal_negates_exactly(self, rotation, twisted):
        for fam, (a, b) in ((rotation, (0.5, 1.5)), (twisted, (0.4, 1.6))):
            fwd, _ = spectral_flow_along(fam, "A", (a, b))
            rev, _ = spectral_flow_along(fam, "A", (b, a))
            assert rev == -fwd

    def test_concatenation_additive_exactly(self, rotation):
        total, _ = spectral_flow_along(rotation, "A", (0.5, 2.5))
        left, _ = spectral_flow_along(rotation, "A", (0.5, 1.6))
        right, _ = spectral_flow_along(rotation, "A", (1.6, 2.5))
        assert total == left + right == 4

    def test_closed_loop_vanishes_exactly(self):
        loop = hx.builtin("loop_pulse").family
        flow, _ = spectral_flow_along(loop, "A", (0.0, TWO_PI), loop=True)
        assert flow == 0
        flow_l, _ = spectral_flow_along(loop, "L", (0.0, TWO_PI), loop=True)
        assert flow_l == 0

    def test_truncation_stability(self, rotation, twisted):
        for fam, (a, b) in ((rotation, (0.5, 1.5)), (twisted, (0.4, 1.6))):
            base = default_cutoff(fam, np.linspace(a, b, 9))
            f1, _ = spectral_flow_along(fam, "A", (a, b), cutoff=base)
            f2, _ = spectral_flow_along(fam, "A", (a, b), cutoff=base + 4)
            assert f1 == f2

    def test_noninvertible_endpoint_rejected(self, rotation):
        with pytest.raises(AdmissibilityError):
            spectral_flow_along(rotation, "A", (1.0, 1.5))

    def test_needs_shared_cutoff(self, rotation):
        a1 = assemble_A(rotation, 0.5, 4)
        a2 = assemble_A(rotation, 1.5, 5)
        with pytest.raises(ValueError):
            spectral_flow([a1, a2])

    def test_a_and_l_agree_on_builtins(self, rotation, block_rotation, twisted):
        for fam, (a, b) in (
            (rotation, (0.5, 1.5)),
            (block_rotation, (0.5, 1.5)),
            (twisted, (0.4, 1.6)),
        ):
            fa, _ = spectral_flow_along(fam, "A", (a, b))
            fl, _ = spectral_flow_along(fam, "L", (a, b))
            assert fa == fl

    def test_assembler_cache_reused(self, rotation):
        path = AssemblyPath(rotation, "A", 5)
        a1, a2 = path(0.7), path(0.7)
        assert a1 is a2
