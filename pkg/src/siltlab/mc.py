"""Seeded Monte Carlo experiments at desk scale.

Three experiment kinds share the plumbing here:

- ``clt``: the rescaled fluctuation r(eps) (I_eps - E(I_eps)) against its
  normal limit, in the two CLT regimes;
- ``l2``: variance and Cauchy diagnostics of the renormalized estimator along
  a geometric eps-ladder, in the L2 regimes;
- ``chaos-check``: empirical variances of the pathwise chaos projections
  against exact quadrature, plus orthogonality and a Bessel bound.

Every experiment is exactly reproducible: path seeds are derived from the
config seed with a splittable seed sequence, paths are processed in index
order, and all reductions use compensated summation in a fixed order, so the
report is bit-identical regardless of thread count.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sstats

from .chaos import ChaosProjector, chaos_variance
from .errors import RegimeError, SiltError
from .fbm import GridSpec, Hurst, as_hurst, gen_circulant
from .limits import sigma2_for_regime, var_ell
from .silt import (CLT_TAGS, L2_TAGS, RegimeTag, classify, discrete_mean_ie,
                   eps_guard, estimate_ie, pairwise_sqdist, renorm_subtractor,
                   scaling_r)

MIN_PATHS = 100
QQ_POINTS = 99


@dataclass(frozen=True)
class McConfig:
    """One experiment: process parameters, grid, eps-ladder, seed."""

    H: Hurst
    d: int
    n: int
    T: float
    eps: tuple
    paths: int
    seed: int
    experiment: str
    override: bool = False
    m_orders: tuple = (1, 2, 3, 4)

    def __post_init__(self):
        object.__setattr__(self, "H", as_hurst(self.H))
        eps = self.eps if isinstance(self.eps, (tuple, list)) else (self.eps,)
        eps = tuple(float(e) for e in eps)
        if not eps or any(e <= 0 for e in eps):
            raise SiltError("eps ladder must be nonempty and positive")
        if list(eps) != sorted(eps, reverse=True):
            raise SiltError("eps ladder must be strictly decreasing")
        object.__setattr__(self, "eps", eps)
        if self.paths < MIN_PATHS:
            raise SiltError(f"paths must be >= {MIN_PATHS}")
        if self.experiment not in ("clt", "l2", "chaos-check"):
            raise SiltError(f"unknown experiment {self.experiment!r}")
        grid = self.grid  # validates n, T, d
        for e in eps:
            eps_guard(grid, self.H, e, self.override)

    @property
    def grid(self) -> GridSpec:
        return GridSpec(n=self.n, T=self.T, d=self.d)

    def to_dict(self) -> dict:
        return {
            "H": str(self.H.rational) if self.H.rational is not None
            else self.H.value,
            "H_value": self.H.value,
            "d": self.d,
            "n": self.n,
            "T": self.T,
            "eps": list(self.eps),
            "paths": self.paths,
            "seed": self.seed,
            "experiment": self.experiment,
            "override": self.override,
            "m_orders": list(self.m_orders),
        }


@dataclass
class McReport:
    """Self-describing result bundle for one experiment."""

    config: dict
    regime: str
    per_eps: list
    references: dict
    ks: dict | None = None
    qq: list | None = None
    cauchy: list | None = None
    slope: dict | None = None
    chaos: list | None = None
    cross: list | None = None
    bessel: dict | None = None
    wall_clock_s: float = 0.0
    notes: list = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"config": self.config, "regime": self.regime,
               "per_eps": self.per_eps, "references": self.references,
               "wall_clock_s": self.wall_clock_s, "notes": self.notes}
        for k in ("ks", "qq", "cauchy", "slope", "chaos", "cross", "bessel"):
            v = getattr(self, k)
            if v is not None:
                out[k] = v
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def path_seeds(seed: int, paths: int) -> np.ndarray:
    """Per-path 64-bit seeds derived from the experiment seed."""
    ss = np.random.SeedSequence(seed)
    return ss.generate_state(paths, dtype=np.uint64)


def _fsum(values) -> float:
    return math.fsum(float(v) for v in values)


def _moments(x: np.ndarray) -> dict:
    """Sample mean/variance/skewness/kurtosis with MC standard errors.

    Higher-moment standard errors use the normal-theory approximations
    sqrt(6/N) and sqrt(24/N); they are diagnostics, not test statistics.
    """
    n = len(x)
    mean = _fsum(x) / n
    c = x - mean
    m2 = _fsum(c * c) / (n - 1)
    sd = math.sqrt(m2)
    m2b = _fsum(c * c) / n
    m3 = _fsum(c ** 3) / n
    m4 = _fsum(c ** 4) / n
    skew = m3 / m2b ** 1.5 if m2b > 0 else 0.0
    kurt = m4 / m2b ** 2 if m2b > 0 else 0.0
    return {
        "n_paths": n,
        "mean": mean,
        "mean_stderr": sd / math.sqrt(n),
        "var": m2,
        "var_stderr": m2 * math.sqrt(2.0 / (n - 1)),
        "skewness": skew,
        "skewness_stderr": math.sqrt(6.0 / n),
        "kurtosis": kurt,
        "kurtosis_stderr": math.sqrt(24.0 / n),
    }


def _quad_ref(res) -> dict:
    return {"value": res.value, "err_estimate": res.err_estimate,
            "evals": res.evals, "converged": res.converged}


def _qq_table(x: np.ndarray, scale: float) -> list:
    """QQ pairs against N(0, scale^2) at QQ_POINTS interior quantiles."""
    xs = np.sort(x)
    probs = (np.arange(1, QQ_POINTS + 1)) / (QQ_POINTS + 1)
    q_emp = np.quantile(xs, probs)
    q_th = sstats.norm.ppf(probs, scale=scale)
    return [[float(a), float(b)] for a, b in zip(q_th, q_emp)]


def _simulate_ie(cfg: McConfig):
    """(paths, n_eps) matrix of I_eps values, common paths across the ladder."""
    grid = cfg.grid
    seeds = path_seeds(cfg.seed, cfg.paths)
    out = np.empty((cfg.paths, len(cfg.eps)))
    for i, s in enumerate(seeds):
        path = gen_circulant(cfg.H, grid, int(s))
        sq = pairwise_sqdist(path.values)
        for j, e in enumerate(cfg.eps):
            out[i, j] = estimate_ie(path, e, override=cfg.override, sqdist=sq)
    return out


def run_clt(cfg: McConfig) -> McReport:
    """Rescaled fluctuations r(eps)(I_eps - E(I_eps)) vs the normal limit.

    The limit variance reference is T * sigma2 for the classified regime; the
    KS test and QQ table are computed at the smallest eps of the ladder.
    """
    t0 = time.time()
    regime = classify(cfg.H, cfg.d)
    if regime.tag not in CLT_TAGS:
        raise RegimeError(
            f"run_clt needs a CLT regime, got {regime.tag.value} "
            f"(for d=2 the CLT window is empty: 3/(2d) = 3/4)"
        )
    grid = cfg.grid
    sigma2 = sigma2_for_regime(regime)
    ref_var = cfg.T * sigma2.value
    dmeans = {e: discrete_mean_ie(grid, cfg.H, e) for e in cfg.eps}
    ies = _simulate_ie(cfg)

    per_eps = []
    raw_vars = []
    for j, e in enumerate(cfg.eps):
        centered = ies[:, j] - dmeans[e]
        stat = scaling_r(regime, e) * centered
        mom = _moments(stat)
        mom["eps"] = e
        mom["reference_var"] = ref_var
        mom["scaling_r"] = scaling_r(regime, e)
        per_eps.append(mom)
        cmom = _moments(centered)
        raw_vars.append(cmom["var"])

    smallest = scaling_r(regime, cfg.eps[-1]) * (ies[:, -1] - dmeans[cfg.eps[-1]])
    scale = math.sqrt(ref_var)
    ks_stat, ks_p = sstats.kstest(smallest, "norm", args=(0.0, scale))
    report = McReport(
        config=cfg.to_dict(),
        regime=regime.tag.value,
        per_eps=per_eps,
        references={"sigma2": _quad_ref(sigma2), "limit_var": ref_var},
        ks={"eps": cfg.eps[-1], "stat": float(ks_stat), "p_value": float(ks_p)},
        qq=_qq_table(smallest, scale),
    )
    if len(cfg.eps) >= 2:
        log_eps = np.log(cfg.eps)
        log_var = np.log(raw_vars)
        fit = np.polyfit(log_eps, log_var, 1)
        H, d = regime.H.value, regime.d
        ref_slope = (-(d - 1.5 / H) if regime.tag is RegimeTag.CLT_POWER
                     else None)
        report.slope = {"fitted": float(fit[0]),
                        "reference": ref_slope,
                        "log_vars": [float(v) for v in log_var]}
    report.wall_clock_s = time.time() - t0
    return report


def run_l2(cfg: McConfig) -> McReport:
    """Variance and Cauchy diagnostics of I_eps - E(I_eps) on an eps-ladder.

    Terminal variance is compared against the (2 pi)^{-d} Xi_T quadrature;
    the Cauchy diagnostic E[(I_eps - I_eps')^2] uses common paths per rung.
    """
    t0 = time.time()
    regime = classify(cfg.H, cfg.d)
    if regime.tag not in L2_TAGS:
        raise RegimeError(f"run_l2 needs an L2 regime, got {regime.tag.value}")
    grid = cfg.grid
    ref = var_ell(cfg.H, cfg.d, cfg.T)
    dmeans = {e: discrete_mean_ie(grid, cfg.H, e) for e in cfg.eps}
    ies = _simulate_ie(cfg)

    per_eps = []
    for j, e in enumerate(cfg.eps):
        centered = ies[:, j] - dmeans[e]
        mom = _moments(centered)
        mom["eps"] = e
        mom["reference_var"] = ref.value
        # mean of I_eps minus the regime subtractor: stable across the ladder
        # in the renormalizing regimes, divergent mean made visible otherwise
        sub = renorm_subtractor(regime, e, cfg.T)
        shifted = ies[:, j] - sub
        mom["renormalized_mean"] = _fsum(shifted) / cfg.paths
        mom["renormalized_mean_stderr"] = mom["mean_stderr"]
        per_eps.append(mom)

    cauchy = []
    for j in range(len(cfg.eps) - 1):
        diff = ies[:, j] - ies[:, j + 1]
        sq = diff * diff
        mean_sq = _fsum(sq) / cfg.paths
        var_sq = _moments(sq)["var"]
        cauchy.append({
            "eps": cfg.eps[j],
            "eps_next": cfg.eps[j + 1],
            "mean_sq_diff": mean_sq,
            "mean_sq_diff_stderr": math.sqrt(var_sq / cfg.paths),
        })

    report = McReport(
        config=cfg.to_dict(),
        regime=regime.tag.value,
        per_eps=per_eps,
        references={"var_ell": _quad_ref(ref)},
        cauchy=cauchy,
    )
    report.wall_clock_s = time.time() - t0
    return report


def run_chaos_check(cfg: McConfig) -> McReport:
    """Empirical chaos-projection variances vs quadrature, plus orthogonality.

    Also reports the Bessel diagnostic: the summed chaos variances must not
    exceed the total empirical variance of I_eps (within MC error).
    """
    t0 = time.time()
    grid = cfg.grid
    eps = cfg.eps[0]
    ms = list(cfg.m_orders)
    proj = ChaosProjector(grid, cfg.H, eps, ms)
    seeds = path_seeds(cfg.seed, cfg.paths)
    projections = np.empty((cfg.paths, len(ms)))
    ies = np.empty(cfg.paths)
    for i, s in enumerate(seeds):
        path = gen_circulant(cfg.H, grid, int(s))
        projections[i] = proj.project(path.values)
        ies[i] = estimate_ie(path, eps, override=cfg.override)

    refs = {m: chaos_variance(cfg.H, cfg.d, eps, m, cfg.T) for m in ms}
    chaos_rows = []
    for k, m in enumerate(ms):
        mom = _moments(projections[:, k])
        ref = refs[m]
        chaos_rows.append({
            "m": m,
            "empirical_var": mom["var"],
            "empirical_var_stderr": mom["var_stderr"],
            "mean": mom["mean"],
            "mean_stderr": mom["mean_stderr"],
            "quadrature_var": ref.value,
            "quadrature_err": ref.err_estimate,
            "ratio": mom["var"] / ref.value if ref.value else math.nan,
        })

    cross = []
    for a in range(len(ms)):
        for b in range(a + 1, len(ms)):
            xa = projections[:, a] - _fsum(projections[:, a]) / cfg.paths
            xb = projections[:, b] - _fsum(projections[:, b]) / cfg.paths
            prod = xa * xb
            cov = _fsum(prod) / (cfg.paths - 1)
            se = math.sqrt(_moments(prod)["var"] / cfg.paths)
            cross.append({"m1": ms[a], "m2": ms[b], "cov": cov, "stderr": se})

    total = _moments(ies)
    sum_chaos = _fsum(row["empirical_var"] for row in chaos_rows)
    bessel = {
        "sum_chaos_var": sum_chaos,
        "total_var": total["var"],
        "total_var_stderr": total["var_stderr"],
        "holds_within_3se": sum_chaos
        <= total["var"] + 3.0 * total["var_stderr"],
    }

    regime = classify(cfg.H, cfg.d)
    report = McReport(
        config=cfg.to_dict(),
        regime=regime.tag.value,
        per_eps=[dict(_moments(ies), eps=eps)],
        references={f"chaos_var_m{m}": _quad_ref(refs[m]) for m in ms},
        chaos=chaos_rows,
        cross=cross,
        bessel=bessel,
    )
    report.wall_clock_s = time.time() - t0
    return report


def run(cfg: McConfig) -> McReport:
    """Dispatch on cfg.experiment."""
    if cfg.experiment == "clt":
        return run_clt(cfg)
    if cfg.experiment == "l2":
        return run_l2(cfg)
    return run_chaos_check(cfg)
