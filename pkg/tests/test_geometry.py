"""Tests for the covariance geometry: lambda/rho/mu, regions, Theta, kernels.

Covers:
  1. Worked values for lambda_rho_mu, region_lrm, delta_theta.
  2. The consistency identity lambda_rho_mu == region_lrm o region_decompose.
  3. Cauchy-Schwarz and the kernel inequalities (property-based).
  4. The stable large-gap evaluation of the disjoint-region mu.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from siltlab.errors import SiltError
from siltlab.geometry import (RegionCoords, Tau, delta_theta, k1, k2,
                              lambda_rho_mu, p2h, psi_m, psi_m_vec,
                              region_decompose, region_lrm, region_lrm_vec,
                              theta_region, theta_region_vec)

hursts = st.floats(0.05, 0.95)
times = st.floats(0.0, 5.0)


def random_tau(rng):
    pts = np.sort(rng.uniform(0.0, 3.0, size=4) + 1e-3 * np.arange(1, 5))
    order = rng.integers(0, 3)
    if order == 0:
        s, sp, t, tp = pts    # nested
    elif order == 1:
        s, sp, tp, t = pts    # overlapping
    else:
        s, t, sp, tp = pts    # disjoint
    return Tau(s=s, t=t, sp=sp, tp=tp)


# ---------------------------------------------------------------------------
# worked values
# ---------------------------------------------------------------------------

class TestWorkedValues:
    def test_identical_increments(self):
        g = lambda_rho_mu(0.3, Tau(s=0.5, t=2.0, sp=0.5, tp=2.0))
        assert g.lam == g.rho == pytest.approx(1.5 ** 0.6, rel=1e-14)
        assert g.mu == pytest.approx(g.lam, rel=1e-14)

    def test_bm_overlap(self):
        g = lambda_rho_mu(0.5, Tau(s=0.0, t=2.0, sp=1.0, tp=3.0))
        assert (g.lam, g.rho, g.mu) == pytest.approx((2.0, 2.0, 1.0))

    def test_bm_disjoint_mu_zero(self):
        g = lambda_rho_mu(0.5, Tau(s=0.0, t=1.0, sp=2.0, tp=3.0))
        assert g.mu == pytest.approx(0.0, abs=1e-14)

    def test_region_decompose(self):
        rc = region_decompose(Tau(s=0.0, t=2.0, sp=1.0, tp=3.0))
        assert (rc.region, rc.a, rc.b, rc.c) == (1, 1.0, 1.0, 1.0)
        rc = region_decompose(Tau(s=0.0, t=3.0, sp=1.0, tp=2.0))
        assert (rc.region, rc.a, rc.b, rc.c) == (2, 1.0, 1.0, 1.0)
        rc = region_decompose(Tau(s=0.0, t=1.0, sp=2.0, tp=3.0))
        assert (rc.region, rc.a, rc.b, rc.c) == (3, 1.0, 1.0, 1.0)

    def test_region_decompose_swap_guard(self):
        with pytest.raises(SiltError):
            region_decompose(Tau(s=1.0, t=2.0, sp=0.5, tp=3.0))

    def test_region1_bm(self):
        g = region_lrm(0.5, RegionCoords(1, 1.0, 1.0, 1.0))
        assert (g.lam, g.rho, g.mu) == pytest.approx((2.0, 2.0, 1.0))

    def test_region2_h07(self):
        g = region_lrm(0.7, RegionCoords(2, 1.0, 1.0, 1.0))
        assert g.mu == pytest.approx(2.0 ** 1.4 - 1.0, rel=1e-14)

    @given(a=times, b=times, c=times)
    @settings(max_examples=200, deadline=None)
    def test_region3_mu_vanishes_at_bm(self, a, b, c):
        g = region_lrm(0.5, RegionCoords(3, a, b, c))
        assert abs(g.mu) <= 1e-12 * max(1.0, a + b + c)

    def test_delta_theta_region1(self):
        delta, theta = delta_theta(0.5, 2, RegionCoords(1, 1.0, 1.0, 1.0))
        assert delta == pytest.approx(3.0)
        assert theta == pytest.approx(1.0 / 3.0 - 1.0 / 4.0, rel=1e-12)

    def test_delta_theta_hatted(self):
        delta, theta = delta_theta(0.5, 2, RegionCoords(1, 1.0, 1.0, 1.0),
                                   hatted=True)
        assert delta == pytest.approx(8.0)
        assert theta == pytest.approx(1.0 / 8.0 - 1.0 / 9.0, rel=1e-12)

    @given(a=st.floats(0.01, 5.0), b=times, c=st.floats(0.01, 5.0))
    @settings(max_examples=100, deadline=None)
    def test_theta3_zero_at_bm(self, a, b, c):
        # disjoint increments of Brownian motion are independent; interval
        # lengths are bounded away from 0 so rounding noise in mu stays
        # far below the asserted slack
        theta = theta_region(0.5, 2, 3, a, b, c)
        assert theta == pytest.approx(0.0, abs=1e-12)

    def test_k2_bm_zero(self):
        assert k2(0.5, 1.0, 2.0) == pytest.approx(0.0, abs=1e-14)

    def test_k2_direct(self):
        assert k2(0.7, 1.0, 0.5) == pytest.approx(
            1.5 ** 1.4 - 0.5 ** 1.4, rel=1e-13)

    @given(H=hursts, x=st.floats(0.01, 3.0), y=st.floats(0.01, 3.0),
           z=st.floats(0.01, 3.0))
    @settings(max_examples=200, deadline=None)
    def test_k1_is_twice_mu(self, H, x, y, z):
        g = lambda_rho_mu(H, Tau(s=0.0, t=x, sp=z, tp=z + y))
        assert k1(H, x, y, z) == pytest.approx(2.0 * g.mu, abs=1e-10)


# ---------------------------------------------------------------------------
# psi_m
# ---------------------------------------------------------------------------

class TestPsiM:
    def test_bm_value(self):
        # H=1/2 at (1,1,1): region 3 vanishes (mu=0); nested has lam=3,
        # rho=1, mu=1 -> contribution 8^(-d/2-1); overlapping has lam=rho=2,
        # mu=1 -> contribution 9^(-d/2-1)
        for d in (2, 3):
            ref = 8.0 ** (-0.5 * d - 1) + 9.0 ** (-0.5 * d - 1)
            assert psi_m(0.5, d, 1, 1.0, 1.0, 1.0) == pytest.approx(ref, rel=1e-12)

    def test_m_guard(self):
        with pytest.raises(SiltError):
            psi_m(0.5, 2, 0, 1.0, 1.0, 1.0)

    @given(H=hursts, a=times, b=times, c=times,
           m=st.integers(1, 6))
    @settings(max_examples=200, deadline=None)
    def test_nonnegative(self, H, a, b, c, m):
        assert psi_m(H, 3, m, a, b, c) >= 0.0

    def test_symmetry_bm(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            a, b, c = rng.uniform(0.0, 2.0, 3)
            assert psi_m(0.5, 2, 2, a, b, c) == pytest.approx(
                psi_m(0.5, 2, 2, c, b, a), rel=1e-11)

    def test_vec_matches_scalar(self):
        rng = np.random.default_rng(1)
        a, b, c = rng.uniform(0.0, 4.0, (3, 40))
        vec = psi_m_vec(0.55, 3, 2, a, b, c)
        for i in range(40):
            assert vec[i] == pytest.approx(
                psi_m(0.55, 3, 2, a[i], b[i], c[i]), rel=1e-12)

    def test_no_overflow_high_m(self):
        # large mu would overflow mu^{2m} evaluated naively
        val = psi_m(0.7, 3, 40, 5.0, 0.1, 5.0)
        assert math.isfinite(val) and val >= 0.0


# ---------------------------------------------------------------------------
# consistency and inequalities
# ---------------------------------------------------------------------------

class TestConsistency:
    def test_lrm_matches_regions(self):
        rng = np.random.default_rng(2)
        for _ in range(2000):
            tau = random_tau(rng)
            if tau.s > tau.sp:
                continue
            H = rng.uniform(0.05, 0.95)
            g = lambda_rho_mu(H, tau)
            rc = region_decompose(tau)
            gr = region_lrm(H, rc)
            scale = max(abs(g.lam), abs(g.rho), abs(g.mu), 1e-30)
            # the region parametrization may label the two increments in
            # either order; every kernel is symmetric in (lam, rho)
            pg = sorted((g.lam, g.rho))
            pr = sorted((gr.lam, gr.rho))
            assert abs(pg[0] - pr[0]) <= 1e-12 * scale
            assert abs(pg[1] - pr[1]) <= 1e-12 * scale
            assert abs(g.mu - gr.mu) <= 1e-9 * scale

    def test_cauchy_schwarz(self):
        rng = np.random.default_rng(3)
        for _ in range(2000):
            tau = random_tau(rng)
            H = rng.uniform(0.05, 0.95)
            g = lambda_rho_mu(H, tau)
            assert g.mu * g.mu <= g.lam * g.rho + 1e-12

    def test_vec_matches_scalar_regions(self):
        rng = np.random.default_rng(4)
        a, b, c = rng.uniform(0.0, 3.0, (3, 30))
        for region in (1, 2, 3):
            lam, rho, mu = region_lrm_vec(0.62, region, a, b, c)
            for i in range(30):
                g = region_lrm(0.62, RegionCoords(region, a[i], b[i], c[i]))
                assert lam[i] == pytest.approx(g.lam, rel=1e-12, abs=1e-300)
                assert rho[i] == pytest.approx(g.rho, rel=1e-12, abs=1e-300)
                assert mu[i] == pytest.approx(g.mu, rel=1e-9, abs=1e-13)


class TestStableDisjointMu:
    """The disjoint-region mu as a double difference of x^{2H} cancels
    catastrophically when the middle gap dominates; the stable branch must
    agree with high-precision references."""

    # (H, a, b, c) -> mu computed with 60-digit arithmetic
    CASES = [
        (0.55, 0.5, 1.0e6, 0.5, 5.4739711318238465e-08),
        (0.55, 0.5, 1.0e10, 0.5, 1.3749999999381291e-11),
        (0.55, 0.37, 4.657e13, 0.553, 5.5976190990048968e-15),
        (0.70, 1.0, 1.0e8, 2.0, 8.8754017979036027e-06),
        (0.30, 0.8, 1.0e12, 1.3, -1.9781417248775174e-18),
    ]

    @pytest.mark.parametrize("H,a,b,c,ref", CASES)
    def test_far_field_values(self, H, a, b, c, ref):
        # floats cannot beat the first-difference rounding scale
        # b^{2H-1}(a+c); the naive double difference is off by ~b^{2H} eps,
        # worse by a factor of b/(a+c)
        noise = 5e-15 * b ** (2 * H - 1) * (a + c)
        g = region_lrm(H, RegionCoords(3, a, b, c))
        assert g.mu == pytest.approx(ref, abs=noise)
        mu_vec = region_lrm_vec(H, 3, np.array([a]), np.array([b]),
                                np.array([c]))[2][0]
        assert mu_vec == pytest.approx(ref, abs=noise)

    def test_matches_naive_in_moderate_range(self):
        rng = np.random.default_rng(5)
        e = 1.1
        for _ in range(500):
            H = rng.uniform(0.05, 0.95)
            a, c = rng.uniform(0.1, 2.0, 2)
            b = rng.uniform(0.0, 2.0)
            g = region_lrm(H, RegionCoords(3, a, b, c))
            naive = 0.5 * (p2h(a + b + c, H) + p2h(b, H)
                           - p2h(b + c, H) - p2h(a + b, H))
            assert g.mu == pytest.approx(naive, abs=3e-15 * (a + b + c) ** (2 * H))

    def test_theta_noise_floor(self):
        # before the stable branch this node evaluated to ~4e-3 of pure noise
        theta = theta_region(0.55, 3, 3, 0.3687, 4.657e13, 0.5529, hatted=True)
        assert abs(theta) < 1e-25


class TestThetaVec:
    def test_matches_scalar(self):
        rng = np.random.default_rng(6)
        a, b, c = rng.uniform(0.01, 3.0, (3, 25))
        for region in (1, 2, 3):
            for hatted in (False, True):
                vec = theta_region_vec(0.61, 3, region, a, b, c, hatted=hatted)
                for i in range(25):
                    ref = theta_region(0.61, 3, region, a[i], b[i], c[i],
                                       hatted=hatted)
                    assert vec[i] == pytest.approx(ref, rel=1e-10, abs=1e-300)

    def test_degenerate_maps_to_zero(self):
        # identical increments: gamma = 1 exactly; vectorized Theta returns 0
        # (measure-zero set the quadratures may brush)
        vec = theta_region_vec(0.5, 2, 1, np.array([0.0]), np.array([1.0]),
                               np.array([0.0]))
        assert vec[0] == 0.0
