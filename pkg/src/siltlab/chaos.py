"""Wiener-chaos combinatorics and pathwise chaos projections of I_eps.

The 2m-th chaos component of the discrete I_eps is evaluated pathwise as

    (2 pi)^{-d/2} * sum over grid pairs of (eps + lam)^{-d/2-m} Q_m(dB, lam)

with lam = |t-s|^{2H}, dB = B_t - B_s and

    Q_m(x, lam) = (-1)^m sum_{m1+..+md=m} prod_k
                  lam^{mk} He_{2mk}(x_k / sqrt(lam)) / (2^{mk} mk!),

where He_n are probabilists' Hermite polynomials.  The scaled factors
lam^k He_{2k}(x/sqrt(lam)) are polynomials in (x^2, lam) and are evaluated by
a recurrence in that form, so lam = 0 (the grid diagonal) is exact and the
diagonal contributes only to the m = 0 term.

The sign (-1)^m comes from the i^{2m} factor in the Gaussian
integration-by-parts that produces the kernels; the m = 1 single-component
check E[d^2/dx^2 p_eps(X)] < 0 fixes it, and the truncation-convergence test
validates it empirically.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DivergenceError, SiltError
from .fbm import FbmPath, as_hurst
from .geometry import _region_lrm, region_lrm_vec
from .quadrature import QuadResult, QuadSpec, integrate_simplex3
from .silt import trapezoid_weights

MAX_ALPHA_M = 60


def hermite(n: int, x):
    """Probabilists' Hermite polynomial He_n(x), E[He_n(Z)He_m(Z)] = n! delta."""
    if n < 0:
        raise SiltError("hermite order must be >= 0")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.shape else float(prev)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.shape else float(cur)


def compositions(m: int, d: int):
    """All (m1,..,md) with nonnegative entries summing to m, colex order."""
    if d == 1:
        yield (m,)
        return
    for last in range(m + 1):
        for head in compositions(m - last, d - 1):
            yield head + (last,)


def alpha_multi(counts) -> int:
    """prod_k (2 mk)! / (mk! 2^mk), the Gaussian even-moment product."""
    out = 1
    for mk in counts:
        if mk < 0:
            raise SiltError("counts must be nonnegative")
        out *= math.factorial(2 * mk) // (math.factorial(mk) * 2 ** mk)
    return out


@lru_cache(maxsize=None)
def alpha_m(d: int, m: int) -> int:
    """sum over m1+..+md=m of prod (2 mk)! / (mk!)^2, exact integer."""
    if d < 1 or m < 0:
        raise SiltError("alpha_m requires d >= 1 and m >= 0")
    if m > MAX_ALPHA_M:
        raise SiltError(f"alpha_m supported up to m = {MAX_ALPHA_M}")
    total = 0
    for counts in compositions(m, d):
        term = 1
        for mk in counts:
            term *= math.factorial(2 * mk) // (math.factorial(mk) ** 2)
        total += term
    return total


def _scaled_hermite_even(kmax: int, x2: np.ndarray, lam: np.ndarray):
    """G_k = lam^k He_{2k}(x/sqrt(lam)) for k = 0..kmax, as polynomials in
    (x^2, lam):  G_{k+1} = (x^2 - (4k+1) lam) G_k - 2k(2k-1) lam^2 G_{k-1}."""
    gs = [np.ones_like(x2)]
    if kmax >= 1:
        gs.append(x2 - lam)
    for k in range(1, kmax):
        gs.append((x2 - (4 * k + 1) * lam) * gs[k]
                  - (2 * k) * (2 * k - 1) * lam * lam * gs[k - 1])
    return gs


def q_poly(m: int, d: int, comps: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Q_m evaluated on arrays: comps has shape (..., d), lam broadcastable."""
    x2 = comps ** 2
    # per-component G tables, shape (..., d) for each order
    gs = _scaled_hermite_even(m, x2, lam[..., None])
    total = np.zeros(lam.shape)
    for counts in compositions(m, d):
        term = np.ones(lam.shape)
        coeff = 1.0
        for k, mk in enumerate(counts):
            if mk:
                term = term * gs[mk][..., k]
                coeff /= 2.0 ** mk * math.factorial(mk)
        total += coeff * term
    return (-1.0) ** m * total


def project_chaos(path: FbmPath, eps: float, m: int) -> float:
    """Pathwise projection of the discrete I_eps onto chaos 2m.

    Uses the same triangle rule, grid and diagonal convention as estimate_ie;
    m = 0 reproduces discrete_mean_ie(grid, H, eps).
    """
    return project_chaos_multi(path, eps, [m])[0]


class ChaosProjector:
    """Precomputed projection kernels for one (grid, H, eps, orders) setup.

    All path-independent arrays (the |t-s|^{2H} table, the weighted
    (eps+lam)^{-d/2-m} kernels, the recurrence coefficient tables) are built
    once, so projecting many Monte Carlo paths costs only the per-path
    elementwise work.
    """

    def __init__(self, grid, H, eps: float, ms):
        if eps <= 0:
            raise ValueError("eps must be > 0")
        self.ms = list(ms)
        if any(m < 0 for m in self.ms):
            raise SiltError("m must be >= 0")
        self.grid = grid
        Hv = as_hurst(H).value
        t = grid.times
        lam = np.abs(t[:, None] - t[None, :]) ** (2.0 * Hv)
        d = grid.d
        self.d = d
        w = trapezoid_weights(grid)
        ww = w[:, None] * w[None, :]
        pref = 0.5 * (2.0 * math.pi) ** (-0.5 * d)
        # weighted kernel per order: the full quadratic form collapses to an
        # elementwise dot with Q_m afterwards
        self.kern = {m: pref * (eps + lam) ** (-(0.5 * d + m)) * ww
                     for m in set(self.ms)}
        mmax = max(self.ms) if self.ms else 0
        self.mmax = mmax
        lam3 = lam[..., None]
        self._lam = lam3
        # recurrence coefficients (4k+1) lam and 2k(2k-1) lam^2 for k >= 1
        self._ak = [(4 * k + 1) * lam3 for k in range(1, mmax)]
        self._bk = [(2 * k) * (2 * k - 1) * lam3 * lam3
                    for k in range(1, mmax)]
        self._comps = {m: list(compositions(m, d)) for m in set(self.ms)}

    def project(self, values: np.ndarray) -> list[float]:
        diffs = values[:, None, :] - values[None, :, :]
        x2 = np.multiply(diffs, diffs, out=diffs)
        gs = [None]  # G_0 == 1; handled by skipping mk == 0 factors
        if self.mmax >= 1:
            gs.append(x2 - self._lam)
        for k in range(1, self.mmax):
            prev = self._bk[k - 1] if k == 1 else self._bk[k - 1] * gs[k - 1]
            gs.append((x2 - self._ak[k - 1]) * gs[k] - prev)
        out = []
        for m in self.ms:
            total = None
            for counts in self._comps[m]:
                term = None
                coeff = 1.0
                for k, mk in enumerate(counts):
                    if mk:
                        g = gs[mk][..., k]
                        term = g if term is None else term * g
                        coeff /= 2.0 ** mk * math.factorial(mk)
                if term is None:
                    # all-zero composition: empty product, Q_0 == 1
                    term = np.ones(self.kern[m].shape)
                total = coeff * term if total is None else total + coeff * term
            q = (-1.0) ** m * total
            out.append(float(np.vdot(self.kern[m], q)))
        return out


def project_chaos_multi(path: FbmPath, eps: float, ms) -> list[float]:
    """Projections for several chaos orders, sharing the pairwise arrays."""
    proj = ChaosProjector(path.grid, path.H, eps, ms)
    return proj.project(path.values)


def chaos_variance(H, d: int, eps: float, m: int, T: float,
                   spec: QuadSpec | None = None) -> QuadResult:
    """E[(2m-th chaos of I_eps)^2], by exact quadrature.

    alpha_m / ((2 pi)^d 2^{2m}) times the fourfold integral of
    (eps+lam)^{-d/2-m} (eps+rho)^{-d/2-m} mu^{2m}, reduced to three 3-D
    integrals over the gap simplex {a+b+c < T} with weight 2(T-a-b-c).

    m = 0 returns E(I_eps)^2 (the zeroth-chaos contribution to E(I_eps^2)).
    """
    Hv = as_hurst(H).value
    if eps < 0 or (eps == 0 and Hv * d >= 1.5):
        raise DivergenceError("chaos_variance needs eps > 0 (or Hd < 3/2)")
    spec = spec or QuadSpec(rel_tol=1e-6, abs_tol=1e-12)
    p = -(0.5 * d + m)
    two_m = 2 * m
    pref = alpha_m(d, m) / ((2.0 * math.pi) ** d * 2.0 ** two_m)

    total = 0.0
    err = 0.0
    evals = 0
    converged = True
    for region in (1, 2, 3):
        def f(a, b, c, _r=region):
            lam, rho, mu = region_lrm_vec(Hv, _r, a, b, c)
            out = ((T - a - b - c) * (eps + lam) ** p * (eps + rho) ** p)
            if two_m:
                out = out * mu ** two_m
            return out

        res = integrate_simplex3(f, T, spec, vectorized=True)
        total += res.value
        err += res.err_estimate
        evals += res.evals
        converged = converged and res.converged
    return QuadResult(2.0 * pref * total, 2.0 * pref * err, evals, converged)
