import numpy as np
import pytest

import hamindex as hx
from hamindex.bifurcation import (
    NoBranch,
    OrbitBranch,
    PathRestrictedFamily,
    candidate_scan,
    d_gamma,
    disconnection_report,
    newton_orbit,
)
from hamindex.errors import EndpointDegenerateError, NewtonError
from hamindex.families import NONLINEAR_BUILTINS
from hamindex.model import Interval, ParameterPath, Rectangle
from hamindex.monodromy import MonodromyField
from hamindex.spectral import spectral_flow_along
from hamindex.symplectic import conley_zehnder, symplectic_path


@pytest.fixture(scope="module")
def plane_line():
    return hx.builtin("plane_line").family


@pytest.fixture(scope="module")
def radial():
    return hx.builtin("radial")


@pytest.fixture(scope="module")
def cubic():
    return NONLINEAR_BUILTINS["cubic_focus"]


def hline(a, b, y=0.5):
    return ParameterPath(((a, y), (b, y)))


class TestDGamma:
    def test_line_family_reduces_to_rotation(self, plane_line):
        assert d_gamma(plane_line, hline(0.5, 1.5)) == 2

    def test_short_path_vanishes(self, plane_line):
        assert d_gamma(plane_line, hline(0.1, 0.4)) == 0

    def test_reversal_negates(self, plane_line):
        assert d_gamma(plane_line, hline(1.5, 0.5)) == -2

    def test_degenerate_endpoint_rejected(self, plane_line):
        with pytest.raises(EndpointDegenerateError):
            d_gamma(plane_line, hline(1.0, 1.5))

    def test_matches_spectral_flow_and_cz_along_path(self, plane_line, radial):
        cases = [
            (plane_line, ParameterPath(((0.5, 0.2), (1.5, 0.8)))),
            (radial.family, ParameterPath(((0.1, 0.1), (1.1, 0.05)))),
        ]
        for family, path in cases:
            restricted = PathRestrictedFamily(family, path)
            d = d_gamma(family, path)
            flow, _ = spectral_flow_along(restricted, "A", (0.0, 1.0))
            flow_l, _ = spectral_flow_along(restricted, "L", (0.0, 1.0))
            cz = conley_zehnder(symplectic_path(MonodromyField(restricted), (0.0, 1.0)))
            assert d == flow == flow_l == cz

    def test_homotopy_stability(self, radial):
        # same endpoints, both avoiding the degeneracy circle except for the
        # unavoidable crossing; the dogleg is homotopic to the straight path
        straight = ParameterPath(((0.05, 0.05), (1.1, 0.05)))
        dogleg = ParameterPath(((0.05, 0.05), (0.05, 0.6), (0.75, 0.6), (1.1, 0.05)))
        assert d_gamma(radial.family, straight) == d_gamma(radial.family, dogleg)

    def test_endpoints_must_sit_in_declared_boundary(self, plane_line):
        domain = Rectangle(((0.1, 1.6), (0.0, 1.0)), (64, 64), boundary=((0.5, 0.5),))
        with pytest.raises(EndpointDegenerateError):
            d_gamma(plane_line, hline(0.5, 1.5), domain=domain)


class TestCandidateScan:
    def test_interval_scan_reports_kernel_dim(self, rotation):
        scan = candidate_scan(rotation, Interval(0.5, 2.5, 128))
        assert [round(c.point[0], 6) for c in scan.candidates] == [1.0, 2.0]
        assert all(c.kernel_dim == 2 for c in scan.candidates)

    def test_vertical_line_candidates(self, plane_line):
        domain = Rectangle(((0.5, 1.5), (0.0, 1.0)), (40, 40))
        scan = candidate_scan(plane_line, domain)
        assert scan.cells
        for x, y in (c.point for c in scan.candidates):
            assert x == pytest.approx(1.0, abs=1e-4)
        count, _ = disconnection_report(domain, scan)
        assert count == 2

    def test_admissible_family_empty_scan(self, rotation):
        scan = candidate_scan(rotation, Interval(0.1, 0.4, 64))
        assert scan.candidates == ()

    def test_radial_quarter_circle(self, radial):
        domain = Rectangle(((0.0, 1.2), (0.0, 1.2)), (60, 60))
        scan = candidate_scan(radial.family, domain)
        pts = np.array([c.point for c in scan.candidates])
        radii = np.hypot(pts[:, 0], pts[:, 1])
        # refined points sit on the degeneracy levels r^2 = 1 and r^2 = 2
        # (plus the origin); nothing in between
        assert np.all(
            (radii < 0.12) | (np.abs(radii - 1.0) < 0.02) | (np.abs(radii - np.sqrt(2)) < 0.02)
        )
        assert np.any(np.abs(radii - 1.0) < 0.02)


class TestDisconnection:
    def test_empty_candidate_set_is_connected(self, rotation):
        domain = Interval(0.1, 0.4, 64)
        scan = candidate_scan(rotation, domain)
        count, _ = disconnection_report(domain, scan)
        assert count == 1

    def test_interval_components(self, rotation):
        domain = Interval(0.5, 2.5, 128)
        scan = candidate_scan(rotation, domain)
        count, _ = disconnection_report(domain, scan)
        assert count == 3  # two interior degeneracies

    def test_synthetic_line_splits_square(self, radial):
        from hamindex.bifurcation import CandidateScan

        domain = Rectangle(((0.0, 1.0), (0.0, 1.0)), (10, 10))
        cells = frozenset((5, j) for j in range(10))
        scan = CandidateScan(domain, (), cells, 1e-6)
        count, labels = disconnection_report(domain, scan)
        assert count == 2
        assert labels[5, 3] == -1


class TestNewtonOrbit:
    def test_branch_amplitude_sqrt_law(self, cubic):
        orbit = newton_orbit(cubic, 0.9, 8, 0.3)
        assert isinstance(orbit, OrbitBranch)
        assert orbit.amplitude == pytest.approx(np.sqrt(0.1), abs=1e-3)
        assert orbit.residual < 1e-8

    def test_branch_near_crossing(self, cubic):
        orbit = newton_orbit(cubic, 0.99, 8, 0.1)
        assert isinstance(orbit, OrbitBranch)
        assert orbit.amplitude == pytest.approx(0.1, abs=1e-3)

    def test_wrong_side_returns_no_branch(self, cubic):
        outcome = newton_orbit(cubic, 1.1, 8, 0.1, kernel_at=1.0)
        assert isinstance(outcome, NoBranch)
        assert outcome.reason == "trivial-collapse"

    def test_small_seed_collapses_to_trivial_branch(self, cubic):
        # the trivial solution's Newton basin reaches out to amplitude
        # sqrt((1 - lambda)/3) ~ 0.18, so a seed of 0.1 falls back onto it
        outcome = newton_orbit(cubic, 0.9, 8, 0.1)
        assert isinstance(outcome, NoBranch)
        assert outcome.reason == "trivial-collapse"

    def test_kernel_search_failure_is_loud(self, cubic):
        with pytest.raises(NewtonError):
            newton_orbit(cubic, 0.5, 8, 0.1, search_halfwidth=0.1)

    def test_orbit_linearization_degenerate_at_candidate(self, cubic):
        # converged branches appear only near candidate parameters
        orbit = newton_orbit(cubic, 0.99, 8, 0.1)
        lin = cubic.linearization()
        points = hx.kernel_scan(lin, (orbit.lam - 0.25, orbit.lam + 0.25), resolution=64)
        assert points and min(abs(p.lam - orbit.lam) for p in points) < 0.05


class TestPathRestriction:
    def test_needs_two_parameters(self, rotation):
        with pytest.raises(ValueError):
            PathRestrictedFamily(rotation, hline(0.0, 1.0))

    def test_interpolates_linearly(self, plane_line):
        restricted = PathRestrictedFamily(plane_line, hline(0.5, 1.5))
        pts = restricted.points_at([0.0, 0.5, 1.0])
        np.testing.assert_allclose(pts[:, 0], [0.5, 1.0, 1.5])
