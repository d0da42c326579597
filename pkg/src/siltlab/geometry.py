"""Deterministic covariance geometry for pairs of fBm increments.

For two increments B_t - B_s and B_t' - B_s' of a one-dimensional fBm,
``lambda`` and ``rho`` are their variances and ``mu`` their covariance.
The time-pair domain splits into three interleaving patterns (nested,
overlapping, disjoint), each parametrized by three nonnegative gaps
(a, b, c); the region formulas below give (lambda_i, rho_i, mu_i) directly
in terms of the gaps.

All functions here are pure and safe to call concurrently.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import SiltError
from .fbm import as_hurst


def p2h(x: float, H: float) -> float:
    """|x|^{2H}, with |x| = 0 mapping to 0 directly."""
    x = abs(x)
    return 0.0 if x == 0.0 else math.exp(2.0 * H * math.log(x))


@dataclass(frozen=True)
class Tau:
    """Two ordered time pairs 0 < s < t <= T, 0 < s' < t' <= T."""

    s: float
    t: float
    sp: float
    tp: float

    def __post_init__(self):
        if not (0 <= self.s < self.t and 0 <= self.sp < self.tp):
            raise SiltError(f"invalid time quadruple {self}")


@dataclass(frozen=True)
class RegionCoords:
    """Region index (1 nested, 2 overlapping, 3 disjoint) plus gaps a,b,c."""

    region: int
    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.region not in (1, 2, 3):
            raise SiltError(f"region must be 1, 2 or 3, got {self.region}")
        if min(self.a, self.b, self.c) < 0:
            raise SiltError("gaps must be nonnegative")


@dataclass(frozen=True)
class GeomValues:
    lam: float
    rho: float
    mu: float


def lambda_rho_mu(H, tau: Tau) -> GeomValues:
    """Variances of the two increments and their covariance."""
    H = as_hurst(H).value
    s, t, sp, tp = tau.s, tau.t, tau.sp, tau.tp
    lam = p2h(t - s, H)
    rho = p2h(tp - sp, H)
    mu = 0.5 * (p2h(s - tp, H) + p2h(sp - t, H)
                - p2h(t - tp, H) - p2h(s - sp, H))
    return GeomValues(lam, rho, mu)


def region_decompose(tau: Tau) -> RegionCoords:
    """Classify an (s,t,s',t') with s <= s' into one of the three gap patterns.

    Boundary ties go to the lower region index (measure zero; fixed for
    determinism).
    """
    s, t, sp, tp = tau.s, tau.t, tau.sp, tau.tp
    if s > sp:
        raise SiltError("region_decompose requires s <= s'; swap the pairs first")
    if sp <= t:
        if t <= tp:
            # s < s' < t < t'
            return RegionCoords(1, sp - s, t - sp, tp - t)
        # s < s' < t' < t
        return RegionCoords(2, sp - s, tp - sp, t - tp)
    # s < t < s' < t'
    return RegionCoords(3, t - s, sp - t, tp - sp)


def region_lrm(H, rc: RegionCoords) -> GeomValues:
    """(lambda_i, rho_i, mu_i) as functions of the gaps on region i."""
    H = as_hurst(H).value
    lam, rho, mu = _region_lrm(H, rc.region, rc.a, rc.b, rc.c)
    return GeomValues(lam, rho, mu)


def _region_lrm(H: float, region: int, a: float, b: float, c: float):
    # scalar fast path shared with the quadrature integrands
    if region == 1:
        lam = p2h(a + b, H)
        rho = p2h(b + c, H)
        mu = 0.5 * (p2h(a + b + c, H) + p2h(b, H) - p2h(c, H) - p2h(a, H))
    elif region == 2:
        lam = p2h(b, H)
        rho = p2h(a + b + c, H)
        mu = 0.5 * (p2h(b + c, H) + p2h(a + b, H) - p2h(c, H) - p2h(a, H))
    else:
        lam = p2h(a, H)
        rho = p2h(c, H)
        if b > a + c and b > 0.0:
            # the naive double difference of x^{2H} loses everything to
            # cancellation once b dominates; this form is exact and stable
            e = 2.0 * H
            g = lambda x: math.expm1(e * math.log1p(x))
            mu = 0.5 * math.exp(e * math.log(b)) * (
                g((a + c) / b) - g(a / b) - g(c / b))
        else:
            mu = 0.5 * (p2h(a + b + c, H) + p2h(b, H)
                        - p2h(b + c, H) - p2h(a + b, H))
    return lam, rho, mu


def delta_theta(H, d: int, rc: RegionCoords, hatted: bool = False):
    """(delta_i, Theta_i), or the hatted variants with lambda+1, rho+1.

    delta = lambda*rho - mu^2 and Theta = delta^{-d/2} - (lambda*rho)^{-d/2}.
    Theta is evaluated as (lambda*rho)^{-d/2} * expm1(-(d/2)*log1p(-gamma))
    with gamma = mu^2/(lambda*rho): near-degenerate geometries would otherwise
    lose all significance to cancellation.
    """
    H = as_hurst(H).value
    lam, rho, mu = _region_lrm(H, rc.region, rc.a, rc.b, rc.c)
    return _delta_theta(lam, rho, mu, d, hatted)


def _delta_theta(lam: float, rho: float, mu: float, d: int, hatted: bool):
    if hatted:
        lam += 1.0
        rho += 1.0
    lr = lam * rho
    delta = lr - mu * mu
    if delta <= 0.0:
        if mu == 0.0 and lr == 0.0:
            return 0.0, 0.0
        raise SiltError(
            "degenerate covariance (delta <= 0): measure-zero point; "
            "quadrature callers must exclude it"
        )
    gamma = mu * mu / lr
    theta = lr ** (-0.5 * d) * math.expm1(-0.5 * d * math.log1p(-gamma))
    return delta, theta


def theta_region(H: float, d: int, region: int, a: float, b: float, c: float,
                 hatted: bool = False) -> float:
    """Scalar Theta_i (or hatted) straight from the gaps; quadrature hot path."""
    lam, rho, mu = _region_lrm(H, region, a, b, c)
    return _delta_theta(lam, rho, mu, d, hatted)[1]


def k1(H, x: float, y: float, z: float) -> float:
    """|z+y|^2H + |z-x|^2H - |z+y-x|^2H - z^2H (twice the covariance of the
    increments over [0,x] and [z,z+y])."""
    H = as_hurst(H).value
    return p2h(z + y, H) + p2h(z - x, H) - p2h(z + y - x, H) - p2h(z, H)


def k2(H, x: float, z: float) -> float:
    """k1 with y = x."""
    return k1(H, x, x, z)


# ---------------------------------------------------------------------------
# numpy-broadcasting variants (quadrature hot paths, nonnegative arguments)


def region_lrm_vec(H: float, region: int, a, b, c):
    """Array version of the per-region (lambda, rho, mu); a,b,c >= 0."""
    import numpy as np

    e = 2.0 * H
    if region == 1:
        lam = (a + b) ** e
        rho = (b + c) ** e
        mu = 0.5 * ((a + b + c) ** e + b ** e - c ** e - a ** e)
    elif region == 2:
        lam = b ** e
        rho = (a + b + c) ** e
        mu = 0.5 * ((b + c) ** e + (a + b) ** e - c ** e - a ** e)
    else:
        lam = a ** e
        rho = c ** e
        mu_naive = 0.5 * ((a + b + c) ** e + b ** e
                          - (b + c) ** e - (a + b) ** e)
        # stable double difference for dominant b (see _region_lrm)
        with np.errstate(divide="ignore", invalid="ignore"):
            bb = np.where(np.asarray(b) > 0.0, b, 1.0)
            g = lambda x: np.expm1(e * np.log1p(np.minimum(x / bb, 2.0)))
            mu_stable = 0.5 * bb ** e * (g(a + c) - g(a) - g(c))
        mu = np.where((b > a + c) & (b > 0.0), mu_stable, mu_naive)
        mu = np.broadcast_to(mu, np.broadcast(lam, rho, mu).shape)
    return lam, rho, mu


def theta_vec(lam, rho, mu, d: int, hatted: bool):
    """Array Theta = (lam rho)^{-d/2} expm1(-(d/2) log1p(-mu^2/(lam rho)));
    degenerate entries (lam*rho = 0 or gamma >= 1) are mapped to 0, which is
    correct for the measure-zero sets the quadratures can brush against."""
    import numpy as np

    if hatted:
        lam = lam + 1.0
        rho = rho + 1.0
    lr = lam * rho
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma = mu * mu / lr
        gamma = np.where(lr > 0.0, gamma, 1.0)
        safe = (gamma < 1.0) & (lr > 0.0)
        gamma = np.where(safe, gamma, 0.5)
        theta = lr ** (-0.5 * d) * np.expm1(-0.5 * d * np.log1p(-gamma))
        theta = np.where(safe, theta, 0.0)
    return theta


def theta_region_vec(H: float, d: int, region: int, a, b, c,
                     hatted: bool = False):
    lam, rho, mu = region_lrm_vec(H, region, a, b, c)
    return theta_vec(lam, rho, mu, d, hatted)


def psi_m_vec(H: float, d: int, m: int, a, b, c):
    """Array Psi_m = sum_i [(1+lam_i)(1+rho_i)]^{-d/2-m} mu_i^{2m}.

    Evaluated as [(1+lam)(1+rho)]^{-d/2} * gamma^m with
    gamma = mu^2/((1+lam)(1+rho)) < 1, so large m never overflows."""
    total = 0.0
    for region in (1, 2, 3):
        lam, rho, mu = region_lrm_vec(H, region, a, b, c)
        lr = (1.0 + lam) * (1.0 + rho)
        total = total + lr ** (-0.5 * d) * (mu * mu / lr) ** m
    return total


def psi_m(H, d: int, m: int, a: float, b: float, c: float) -> float:
    """Sum over the three regions of [(1+lambda_i)(1+rho_i)]^{-d/2-m} mu_i^{2m}."""
    if m < 1:
        raise SiltError("psi_m requires m >= 1")
    H = as_hurst(H).value
    total = 0.0
    for region in (1, 2, 3):
        lam, rho, mu = _region_lrm(H, region, a, b, c)
        lr = (1.0 + lam) * (1.0 + rho)
        total += lr ** (-0.5 * d) * (mu * mu / lr) ** m
    return total
