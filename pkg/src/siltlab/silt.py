"""The approximated self-intersection local time and its renormalization.

I_eps replaces the Dirac delta in the self-intersection time integral by the
Gaussian kernel p_eps(x) = (2 pi eps)^{-d/2} exp(-|x|^2/(2 eps)) and
integrates over the triangle 0 <= s <= t <= T.  Depending on (H, d), the
small-eps behavior falls into one of five regimes, each with its own
subtraction and (in the CLT regimes) scaling.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (DivergenceError, EpsilonGuardError, RationalHurstRequired,
                     RegimeError)
from .fbm import FbmPath, GridSpec, Hurst, as_hurst
from .geometry import p2h
from .quadrature import INF, QuadResult, QuadSpec, integrate_1d

# float H closer than this to a regime boundary must be given as p/q
BOUNDARY_GUARD = 1e-12


class RegimeTag(enum.Enum):
    L2_CONVERGENT = "L2-Convergent"
    POWER_RENORM = "PowerRenorm"
    LOG_RENORM = "LogRenorm"
    CLT_POWER = "CLT-Power"
    CLT_LOG = "CLT-Log"
    UNSUPPORTED = "Unsupported"


CLT_TAGS = (RegimeTag.CLT_POWER, RegimeTag.CLT_LOG)
L2_TAGS = (RegimeTag.L2_CONVERGENT, RegimeTag.POWER_RENORM, RegimeTag.LOG_RENORM)


@dataclass(frozen=True)
class Regime:
    tag: RegimeTag
    H: Hurst
    d: int

    @property
    def is_clt(self) -> bool:
        return self.tag in CLT_TAGS


def classify(H, d: int) -> Regime:
    """Exact (H, d) regime classification.

    Boundary equalities (H = 1/d, H = 3/(2d), H = 3/4) are decided by rational
    arithmetic; a float H within 1e-12 of a boundary without a rational form
    is rejected rather than silently binned.
    """
    H = as_hurst(H)
    if d < 2:
        raise RegimeError("d must be >= 2")
    if H.rational is not None:
        h = H.rational
        one_d, three_2d, three_4 = Fraction(1, d), Fraction(3, 2 * d), Fraction(3, 4)
    else:
        h = H.value
        one_d, three_2d, three_4 = 1.0 / d, 1.5 / d, 0.75
        for b in (one_d, three_2d, three_4):
            if abs(h - b) < BOUNDARY_GUARD and h != b:
                raise RationalHurstRequired(
                    f"H={H.value} is within {BOUNDARY_GUARD} of the regime "
                    f"boundary {b}; pass H as an exact rational p/q"
                )
    if h >= three_4:
        tag = RegimeTag.UNSUPPORTED
    elif h < one_d:
        tag = RegimeTag.L2_CONVERGENT
    elif h == one_d:
        tag = RegimeTag.LOG_RENORM
    elif h < three_2d:
        tag = RegimeTag.POWER_RENORM
    elif h == three_2d:
        tag = RegimeTag.CLT_LOG
    else:
        tag = RegimeTag.CLT_POWER
    return Regime(tag=tag, H=H, d=d)


def chd(H, d: int, spec: QuadSpec | None = None) -> QuadResult:
    """(2 pi)^{-d/2} * integral_0^inf (z^{2H}+1)^{-d/2} dz.

    The tail decays like z^{-2Hd}, so Hd > 1 is required for convergence.
    """
    H = as_hurst(H).value
    if H * d <= 1:
        raise DivergenceError(f"C_{{H,d}} diverges for H*d = {H * d} <= 1")
    spec = spec or QuadSpec(rel_tol=1e-10, abs_tol=1e-14)
    pref = (2.0 * math.pi) ** (-0.5 * d)
    f = lambda z: (p2h(z, H) + 1.0) ** (-0.5 * d)
    res = integrate_1d(f, 0.0, INF, spec)
    return QuadResult(pref * res.value, pref * res.err_estimate, res.evals,
                      res.converged)


def mean_ie(H, d: int, eps: float, T: float,
            spec: QuadSpec | None = None) -> QuadResult:
    """E(I_eps) = (2 pi)^{-d/2} * integral_0^T (T-s)(eps + s^{2H})^{-d/2} ds."""
    Hv = as_hurst(H).value
    if eps < 0:
        raise ValueError("eps must be >= 0")
    if eps == 0 and Hv * d >= 1:
        raise DivergenceError(
            f"E(I_0) diverges for H*d = {Hv * d} >= 1; use eps > 0"
        )
    spec = spec or QuadSpec(rel_tol=1e-11, abs_tol=1e-15)
    pref = (2.0 * math.pi) ** (-0.5 * d)
    f = lambda s: (T - s) * (eps + p2h(s, Hv)) ** (-0.5 * d)
    res = integrate_1d(f, 0.0, T, spec)
    return QuadResult(pref * res.value, pref * res.err_estimate, res.evals,
                      res.converged)


def renorm_subtractor(regime: Regime, eps: float, T: float) -> float:
    """The deterministic quantity subtracted from I_eps in this regime."""
    tag = regime.tag
    if tag is RegimeTag.UNSUPPORTED:
        raise RegimeError("no renormalization is available for H >= 3/4")
    if tag is RegimeTag.L2_CONVERGENT:
        return 0.0
    H, d = regime.H.value, regime.d
    if tag is RegimeTag.POWER_RENORM:
        return T * chd(regime.H, d).value * eps ** (1.0 / (2 * H) - 0.5 * d)
    if tag is RegimeTag.LOG_RENORM:
        return T * math.log(1.0 / eps) / (2 * H * (2 * math.pi) ** (0.5 * d))
    # CLT regimes subtract the exact mean
    return mean_ie(regime.H, d, eps, T).value


def scaling_r(regime: Regime, eps: float) -> float:
    """The factor r(eps) multiplying I_eps - E(I_eps) in the CLT regimes."""
    if regime.tag is RegimeTag.CLT_LOG:
        return math.log(1.0 / eps) ** -0.5
    if regime.tag is RegimeTag.CLT_POWER:
        H, d = regime.H.value, regime.d
        return eps ** (0.5 * d - 3.0 / (4 * H))
    raise RegimeError(f"scaling_r is only defined in CLT regimes, not {regime.tag}")


# ---------------------------------------------------------------------------
# discrete estimator


def trapezoid_weights(grid: GridSpec) -> np.ndarray:
    w = np.full(grid.n + 1, grid.dt)
    w[0] = w[-1] = 0.5 * grid.dt
    return w


def pairwise_sqdist(values: np.ndarray) -> np.ndarray:
    """|B_ti - B_tj|^2 for all grid pairs, via the Gram-matrix identity."""
    g = values @ values.T
    sq = np.einsum("ij,ij->i", values, values)
    out = sq[:, None] + sq[None, :] - 2.0 * g
    np.maximum(out, 0.0, out=out)
    return out


def eps_guard(grid: GridSpec, H, eps: float, override: bool = False) -> None:
    """Refuse eps < dt^{2H}: the kernel would be narrower than one grid step."""
    floor = p2h(grid.dt, as_hurst(H).value)
    if eps < floor and not override:
        raise EpsilonGuardError(
            f"eps={eps} < dt^(2H)={floor:.3e}; the triangle rule cannot resolve "
            "the kernel at this grid (pass override to force)"
        )


def estimate_ie(path: FbmPath, eps: float, override: bool = False,
                sqdist: np.ndarray | None = None) -> float:
    """Trapezoidal discretization of I_eps on the path grid.

    The closed triangle {0 <= s <= t <= T} is integrated as half the full
    square of the symmetric integrand, which reproduces the product trapezoid
    rule on the triangle with the diagonal included at p_eps(0).

    A precomputed ``pairwise_sqdist`` matrix may be passed to share work
    across an eps-ladder.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    eps_guard(path.grid, path.H, eps, override)
    if sqdist is None:
        sqdist = pairwise_sqdist(path.values)
    d = path.grid.d
    w = trapezoid_weights(path.grid)
    kern = np.exp(sqdist / (-2.0 * eps))
    kern *= (2.0 * math.pi * eps) ** (-0.5 * d)
    return 0.5 * float(w @ kern @ w)


def discrete_mean_ie(grid: GridSpec, H, eps: float) -> float:
    """Exact expectation of estimate_ie under the fBm law, same weights.

    Uses E[p_eps(B_t - B_s)] = (2 pi (eps + |t-s|^{2H}))^{-d/2} pair by pair,
    so Monte Carlo centering with this value has zero discretization mismatch.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    Hv = as_hurst(H).value
    t = grid.times
    lam = np.abs(t[:, None] - t[None, :]) ** (2.0 * Hv)
    w = trapezoid_weights(grid)
    kern = (2.0 * math.pi * (eps + lam)) ** (-0.5 * grid.d)
    return 0.5 * float(w @ kern @ w)
