"""Limit constants: Xi_T, per-chaos limit variances, and the CLT variances.

Conventions:

- Xi_T is the fourfold integral of (lam*rho - mu^2)^{-d/2} - (lam*rho)^{-d/2},
  finite iff Hd < 3/2; (2 pi)^{-d} Xi_T is the limit variance of the
  renormalized local time.
- sigma2_power / sigma2_log are the CLT limit variances *per unit T* (the
  limiting law is N(0, T sigma^2); Monte Carlo comparisons multiply by T).
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from .chaos import alpha_m
from .errors import DivergenceError, RegimeError
from .fbm import as_hurst
from .geometry import (_delta_theta, _region_lrm, psi_m, psi_m_vec,
                       theta_region, theta_region_vec, theta_vec)
from .quadrature import (INF, QuadResult, QuadSpec, integrate_1d,
                         integrate_box, integrate_simplex2, integrate_simplex3)

# sigma2_power blows up at the H = 3/(2d) boundary; refuse closer than this
POWER_BOUNDARY_GUARD = 1e-6


def _combine(results, spec: QuadSpec | None = None) -> QuadResult:
    value = sum(r.value for r in results)
    err = sum(r.err_estimate for r in results)
    converged = all(r.converged for r in results)
    if not converged and spec is not None:
        # a small part may miss its own relative tolerance while the total
        # error is still well within tolerance at the combined scale
        converged = err <= max(spec.abs_tol, spec.rel_tol * abs(value))
    return QuadResult(value, err, sum(r.evals for r in results), converged)


def _scale(res: QuadResult, factor: float) -> QuadResult:
    return QuadResult(factor * res.value, abs(factor) * res.err_estimate,
                      res.evals, res.converged)


def xi_t(H, d: int, T: float, spec: QuadSpec | None = None) -> QuadResult:
    """Xi_T via the three-region gap reduction, weight 2(T - a - b - c).

    Scales as T^{4 - 2Hd}.  var_ell(H, d, T) = (2 pi)^{-d} * Xi_T.
    """
    Hv = as_hurst(H).value
    if Hv * d >= 1.5:
        raise DivergenceError(
            f"Xi_T diverges for Hd = {Hv * d} >= 3/2 (L^2 renormalization fails)"
        )
    spec = spec or QuadSpec(rel_tol=1e-5, abs_tol=1e-10)
    parts = []
    for region in (1, 2, 3):
        def f(a, b, c, _r=region):
            return (T - a - b - c) * theta_region_vec(Hv, d, _r, a, b, c)

        parts.append(integrate_simplex3(f, T, spec, vectorized=True))
    return _scale(_combine(parts, spec), 2.0)


def var_ell(H, d: int, T: float, spec: QuadSpec | None = None) -> QuadResult:
    """Limit variance of the renormalized local time, (2 pi)^{-d} Xi_T."""
    return _scale(xi_t(H, d, T, spec), (2.0 * math.pi) ** (-d))


def _require_clt(H, d: int):
    from .silt import classify  # local import to avoid a cycle

    regime = classify(H, d)
    if not regime.is_clt:
        raise RegimeError(
            f"(H={as_hurst(H).value}, d={d}) is in regime {regime.tag.value}; "
            "CLT limit quantities need 3/(2d) <= H < 3/4"
        )
    return regime


def chaos_limit_variance(H, d: int, m: int,
                         spec: QuadSpec | None = None) -> QuadResult:
    """Limit variance (per unit T) of the rescaled 2m-th chaos of I_eps.

    Power regime: alpha_m/((2 pi)^d 2^{2m-1}) * integral over (0,inf)^3 of
    Psi_m.  Log regime: alpha_m/(H 2^{2m} (2 pi)^d) * sum over regions of the
    simplex integral of (lam_i rho_i)^{-d/2} gamma_i^m at (alpha, beta,
    1-alpha-beta).
    """
    from .silt import RegimeTag

    if m < 1:
        raise RegimeError("chaos orders start at m = 1 (chaos 2m of I_eps)")
    regime = _require_clt(H, d)
    Hv = regime.H.value
    spec = spec or QuadSpec(rel_tol=1e-5, abs_tol=1e-14)
    if regime.tag is RegimeTag.CLT_POWER:
        pref = alpha_m(d, m) / ((2.0 * math.pi) ** d * 2.0 ** (2 * m - 1))
        res = integrate_box(
            lambda a, b, c: psi_m_vec(Hv, d, m, a, b, c),
            [(0.0, INF)] * 3, spec, vectorized=True,
        )
        return _scale(res, pref)

    # log regime: gamma_i = mu_i^2 / (lam_i rho_i), unhatted
    pref = alpha_m(d, m) / (Hv * 2.0 ** (2 * m) * (2.0 * math.pi) ** d)
    p = -0.5 * d
    import numpy as np
    from .geometry import region_lrm_vec

    parts = []
    for region in (1, 2, 3):
        def f(alpha, beta, _r=region):
            lam, rho, mu = region_lrm_vec(Hv, _r, alpha, beta,
                                          1.0 - alpha - beta)
            lr = lam * rho
            with np.errstate(divide="ignore", invalid="ignore"):
                out = lr ** (p - m) * (mu * mu) ** m
            return np.where(lr > 0.0, out, 0.0)

        parts.append(integrate_simplex2(f, spec, vectorized=True))
    return _scale(_combine(parts, spec), pref)


def sigma2_power(H, d: int, spec: QuadSpec | None = None) -> QuadResult:
    """CLT limit variance per unit T for 3/(2d) < H < 3/4, d > 2.

    Primary form: 2 (2 pi)^{-d} * sum over regions of the integral of the
    hatted Theta_i over (0,inf)^3.  ``sigma2_power_alt`` computes the
    equivalent single-integral form for cross-checking.
    """
    from .silt import RegimeTag

    regime = _require_clt(H, d)
    if regime.tag is not RegimeTag.CLT_POWER:
        raise RegimeError("sigma2_power needs 3/(2d) < H < 3/4 strictly")
    if d <= 2:
        raise RegimeError("sigma2_power needs d > 2 (the window is empty at d=2)")
    Hv = regime.H.value
    if abs(Hv - 1.5 / d) < POWER_BOUNDARY_GUARD:
        raise RegimeError(
            f"H is within {POWER_BOUNDARY_GUARD} of the divergent boundary "
            "3/(2d); the integral is numerically meaningless this close"
        )
    spec = spec or QuadSpec(rel_tol=5e-4, abs_tol=1e-12)
    parts = []
    for region in (1, 2, 3):
        parts.append(integrate_box(
            lambda a, b, c, _r=region: theta_region_vec(Hv, d, _r, a, b, c,
                                                        hatted=True),
            [(0.0, INF)] * 3, spec, vectorized=True,
        ))
    return _scale(_combine(parts, spec), 2.0 * (2.0 * math.pi) ** (-d))


def sigma2_power_alt(H, d: int, spec: QuadSpec | None = None) -> QuadResult:
    """Single-3-D-integral form of sigma2_power (independent cross-check).

    2 (2 pi)^{-d} * integral over (0,inf)^3 of
    [((1+x^2H)(1+y^2H) - K1(x,y,z)^2/4)^{-d/2} - ((1+x^2H)(1+y^2H))^{-d/2}]
    where K1(x,y,z) = (z+y)^2H + |z-x|^2H - |z+y-x|^2H - z^2H.

    The integrand is only piecewise smooth: |z-x| and |z+y-x| put kink
    surfaces through the interior of the octant.  The outer x integral runs
    through adaptive 1-D quadrature; for each x the inner (y,z) integral is
    split along the kink lines z = x and z + y = x into three smooth pieces,
    each handled by a tensor tanh-sinh rule.  Different decomposition,
    different parametrization and different outer rule than sigma2_power.
    """
    from .silt import RegimeTag

    regime = _require_clt(H, d)
    if regime.tag is not RegimeTag.CLT_POWER or d <= 2:
        raise RegimeError("sigma2_power_alt needs 3/(2d) < H < 3/4 and d > 2")
    Hv = regime.H.value
    spec = spec or QuadSpec(rel_tol=5e-4, abs_tol=1e-12)
    inner_spec = QuadSpec(rel_tol=spec.rel_tol / 10,
                          abs_tol=spec.abs_tol / 10,
                          max_evals=spec.max_evals)
    evals = [0]
    inner_errs = []

    from .geometry import region_lrm_vec

    def theta_gaps(pattern, g1, g2, g3):
        # K1/2 on each smooth piece reduces exactly to one region's mu, so
        # the shared stable kernel evaluates it without cancellation
        lam, rho, mu = region_lrm_vec(Hv, pattern, g1, g2, g3)
        return theta_vec(lam, rho, mu, d, hatted=True)

    def inner(x):
        parts = []
        # z > x: disjoint increments, gaps (x, z - x, y); z = x + v
        parts.append(integrate_box(
            lambda y, v: theta_gaps(3, x, v, y),
            [(0.0, INF), (0.0, INF)], inner_spec, vectorized=True))
        # z < x < z + y: nested, gaps (z, x - z, u) with y = (x - z) + u
        parts.append(integrate_box(
            lambda z, u: theta_gaps(1, z, x - z, u),
            [(0.0, x), (0.0, INF)], inner_spec, vectorized=True))
        # z + y < x: overlapping, gaps (z, y, x - z - y); Duffy map
        # z = xp, y = x(1-p)q keeps the third gap in product form
        def tri(p, q):
            rp = x * (1.0 - p)
            return (x * rp) * theta_gaps(2, x * p, rp * q, rp * (1.0 - q))

        parts.append(integrate_box(
            tri, [(0.0, 1.0), (0.0, 1.0)], inner_spec, vectorized=True))
        total = 0.0
        for r in parts:
            total += r.value
            evals[0] += r.evals
            inner_errs.append(r.err_estimate)
        return total

    res = integrate_1d(inner, 0.0, INF, spec)
    err = res.err_estimate
    if inner_errs:
        err += sum(inner_errs) / len(inner_errs)
    factor = 2.0 * (2.0 * math.pi) ** (-d)
    value = factor * res.value
    err *= factor
    converged = res.converged and err <= max(spec.abs_tol,
                                             spec.rel_tol * abs(value))
    return QuadResult(value, err, res.evals + evals[0], converged)


def sigma2_log(H, d: int, spec: QuadSpec | None = None) -> QuadResult:
    """CLT limit variance per unit T at the boundary H = 3/(2d) (H < 3/4).

    (H (2 pi)^d)^{-1} * sum over regions of the simplex integral of the
    unhatted Theta_i at (alpha, beta, 1-alpha-beta).
    """
    from .silt import RegimeTag

    regime = _require_clt(H, d)
    if regime.tag is not RegimeTag.CLT_LOG:
        raise RegimeError("sigma2_log needs H = 3/(2d) exactly (pass H as p/q)")
    Hv = regime.H.value
    spec = spec or QuadSpec(rel_tol=5e-4, abs_tol=1e-12)
    parts = []
    for region in (1, 2, 3):
        def f(alpha, beta, _r=region):
            return theta_region_vec(Hv, d, _r, alpha, beta,
                                    1.0 - alpha - beta)

        parts.append(integrate_simplex2(f, spec, vectorized=True))
    pref = 1.0 / (Hv * (2.0 * math.pi) ** d)
    return _scale(_combine(parts, spec), pref)


def sigma2_for_regime(regime, spec: QuadSpec | None = None) -> QuadResult:
    """Dispatch to sigma2_log / sigma2_power based on the classified regime."""
    from .silt import RegimeTag

    if regime.tag is RegimeTag.CLT_LOG:
        return sigma2_log(regime.H, regime.d, spec)
    if regime.tag is RegimeTag.CLT_POWER:
        return sigma2_power(regime.H, regime.d, spec)
    raise RegimeError(f"no CLT variance in regime {regime.tag.value}")
