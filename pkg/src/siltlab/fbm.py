"""Exact sampling of d-dimensional fractional Brownian motion on uniform grids.

Two exact-in-law generators are provided: an O(n^3) Cholesky factorization of
the increment covariance, and the O(n log n) Davies-Harte circulant embedding.
Both are deterministic given (config, seed).

Reproducibility contract: the RNG is numpy's PCG64 seeded through
``SeedSequence([seed, stream])``, one independent stream per path component
(and per path index in Monte Carlo drivers), so results do not depend on
execution order or thread count.  Gaussian variates come from
``Generator.standard_normal`` (numpy's ziggurat); this choice is fixed because
bit-exact reproducibility is promised per generator.
"""

from __future__ import annotations

import io
import struct
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import SiltError

# relative tolerance below which negative circulant eigenvalues are treated
# as rounding noise and clamped to zero
CIRCULANT_EIG_TOL = 1e-10

_BIN_MAGIC = b"FBMP"
_BIN_VERSION = 1
# magic(4) version(u32) n(u64) d(u32) H(f64) + 4 pad bytes = 32
_BIN_HEADER = struct.Struct("<4sIQId4x")


@dataclass(frozen=True)
class Hurst:
    """Hurst parameter in (0,1), optionally with an exact rational form."""

    value: float
    rational: Fraction | None = None

    def __post_init__(self):
        if not 0.0 < self.value < 1.0:
            raise SiltError(f"Hurst parameter must lie in (0,1), got {self.value}")
        if self.rational is not None and float(self.rational) != self.value:
            raise SiltError(
                f"rational form {self.rational} != float value {self.value}"
            )

    @classmethod
    def parse(cls, text: str) -> "Hurst":
        """Parse '0.4' or 'p/q'; the rational form is kept when given as p/q."""
        text = text.strip()
        if "/" in text:
            frac = Fraction(text)
            return cls(float(frac), frac)
        return cls(float(text))

    def __float__(self) -> float:
        return self.value


def as_hurst(H) -> Hurst:
    if isinstance(H, Hurst):
        return H
    if isinstance(H, Fraction):
        return Hurst(float(H), H)
    if isinstance(H, str):
        return Hurst.parse(H)
    return Hurst(float(H))


@dataclass(frozen=True)
class GridSpec:
    """Uniform time grid: n steps of size T/n, d components."""

    n: int
    T: float
    d: int

    def __post_init__(self):
        if self.n < 1:
            raise SiltError("n must be >= 1")
        if self.T <= 0:
            raise SiltError("T must be positive")
        if self.d < 2:
            raise SiltError("d must be >= 2")

    @property
    def dt(self) -> float:
        return self.T / self.n

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n + 1) * self.dt


@dataclass(frozen=True)
class FbmPath:
    """A sampled fBm trajectory; values[k] is B at time k*dt, values[0] = 0."""

    grid: GridSpec
    H: Hurst
    values: np.ndarray  # (n+1, d)
    seed: int
    method: str = "circulant"  # provenance: 'circulant' | 'cholesky' | 'cholesky-fallback'

    def __post_init__(self):
        v = self.values
        if v.shape != (self.grid.n + 1, self.grid.d):
            raise SiltError(f"values shape {v.shape} does not match grid")
        if not np.all(np.isfinite(v)):
            raise SiltError("path contains non-finite values")
        if np.any(v[0] != 0.0):
            raise SiltError("path must start at the origin")
        v.setflags(write=False)


def fbm_cov(H, s: float, t: float) -> float:
    """Per-component covariance 0.5*(t^2H + s^2H - |t-s|^2H), s,t >= 0."""
    H = as_hurst(H).value
    return 0.5 * (_p2h(t, H) + _p2h(s, H) - _p2h(abs(t - s), H))


def fgn_cov(H, lag: int, dt: float) -> float:
    """Autocovariance of step-dt increments of fBm at the given lag."""
    H = as_hurst(H).value
    k = abs(lag)
    g = 0.5 * (_p2h(k + 1, H) + _p2h(abs(k - 1), H) - 2.0 * _p2h(k, H))
    return _p2h(dt, H) * g


def _p2h(x: float, H: float) -> float:
    # |x|^{2H} with the 0 -> 0 convention, avoiding pow(0, .) corner cases
    x = abs(x)
    return 0.0 if x == 0.0 else float(np.exp(2.0 * H * np.log(x)))


def _component_rngs(seed: int, d: int) -> list[np.random.Generator]:
    # one documented sub-stream per component: SeedSequence([seed, k])
    return [
        np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, k])))
        for k in range(d)
    ]


def _increments_to_path(grid: GridSpec, H: Hurst, inc: np.ndarray, seed: int,
                        method: str) -> FbmPath:
    values = np.zeros((grid.n + 1, grid.d))
    np.cumsum(inc, axis=0, out=values[1:])
    return FbmPath(grid=grid, H=H, values=values, seed=seed, method=method)


def gen_cholesky(H, grid: GridSpec, seed: int) -> FbmPath:
    """Exact fBm path via Cholesky factorization of the fGn covariance.

    Guarded to n <= 4096 (O(n^2) memory, O(n^3) factorization).
    """
    H = as_hurst(H)
    if grid.n > 4096:
        raise SiltError("gen_cholesky is guarded to n <= 4096; use gen_circulant")
    lags = np.abs(np.subtract.outer(np.arange(grid.n), np.arange(grid.n)))
    row = np.array([fgn_cov(H, k, grid.dt) for k in range(grid.n)])
    cov = row[lags]
    try:
        L = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:  # should not occur for H in (0,1)
        raise SiltError(f"fGn covariance not positive definite: {exc}") from exc
    inc = np.empty((grid.n, grid.d))
    for k, rng in enumerate(_component_rngs(seed, grid.d)):
        inc[:, k] = L @ rng.standard_normal(grid.n)
    return _increments_to_path(grid, H, inc, seed, "cholesky")


def circulant_eigenvalues(H, n: int, dt: float) -> np.ndarray:
    """Eigenvalues of the 2n-circulant embedding of the fGn covariance."""
    H = as_hurst(H)
    r = np.array([fgn_cov(H, k, dt) for k in range(n + 1)])
    c = np.concatenate([r, r[-2:0:-1]])  # length 2n
    eig = np.fft.fft(c).real
    return eig


def gen_circulant(H, grid: GridSpec, seed: int) -> FbmPath:
    """Exact fBm path via Davies-Harte circulant embedding (FFT, O(n log n)).

    Falls back to gen_cholesky (recorded in ``method``) if the embedding has a
    genuinely negative eigenvalue, i.e. below -CIRCULANT_EIG_TOL relative to
    the largest one.
    """
    H = as_hurst(H)
    n = grid.n
    if n == 1:
        # single step: just one normal per component
        sd = np.sqrt(fgn_cov(H, 0, grid.dt))
        inc = np.empty((1, grid.d))
        for k, rng in enumerate(_component_rngs(seed, grid.d)):
            inc[0, k] = sd * rng.standard_normal()
        return _increments_to_path(grid, H, inc, seed, "circulant")

    eig = circulant_eigenvalues(H, n, grid.dt)
    emax = eig.max()
    if eig.min() < -CIRCULANT_EIG_TOL * emax:
        return _fallback(H, grid, seed)
    eig = np.clip(eig, 0.0, None)

    m = 2 * n
    inc = np.empty((n, grid.d))
    for comp, rng in enumerate(_component_rngs(seed, grid.d)):
        # fixed draw order: z[0] -> index 0, z[1] -> index n,
        # z[2+2(k-1)], z[3+2(k-1)] -> real/imag parts of index k = 1..n-1
        z = rng.standard_normal(m)
        w = np.empty(m, dtype=complex)
        w[0] = np.sqrt(eig[0] / m) * z[0]
        w[n] = np.sqrt(eig[n] / m) * z[1]
        half = np.sqrt(eig[1:n] / (2 * m))
        w[1:n] = half * (z[2::2] + 1j * z[3::2])
        w[n + 1:] = np.conj(w[1:n][::-1])
        inc[:, comp] = np.fft.fft(w)[:n].real
    return _increments_to_path(grid, H, inc, seed, "circulant")


def _fallback(H: Hurst, grid: GridSpec, seed: int) -> FbmPath:
    path = gen_cholesky(H, grid, seed)
    object.__setattr__(path, "method", "cholesky-fallback")
    return path


# ---------------------------------------------------------------------------
# path I/O


def write_csv(path: FbmPath, fh) -> None:
    """CSV: header t,b1,...,bd; one row per grid point, 17 significant digits."""
    close = False
    if isinstance(fh, (str, bytes)):
        fh = open(fh, "w", newline="\n")
        close = True
    try:
        fh.write("t," + ",".join(f"b{k + 1}" for k in range(path.grid.d)) + "\n")
        times = path.grid.times
        for i in range(path.grid.n + 1):
            row = [f"{times[i]:.17g}"] + [f"{v:.17g}" for v in path.values[i]]
            fh.write(",".join(row) + "\n")
    finally:
        if close:
            fh.close()


def read_csv(fh, H, T: float, seed: int = 0) -> FbmPath:
    close = False
    if isinstance(fh, (str, bytes)):
        fh = open(fh, "r")
        close = True
    try:
        header = fh.readline().strip().split(",")
        d = len(header) - 1
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    finally:
        if close:
            fh.close()
    n = data.shape[0] - 1
    grid = GridSpec(n=n, T=T, d=d)
    return FbmPath(grid=grid, H=as_hurst(H), values=np.ascontiguousarray(data[:, 1:]),
                   seed=seed, method="file")


def write_binary(path: FbmPath, fh) -> None:
    """Binary format: 32-byte header then row-major little-endian doubles."""
    close = False
    if isinstance(fh, (str, bytes)):
        fh = open(fh, "wb")
        close = True
    try:
        fh.write(_BIN_HEADER.pack(_BIN_MAGIC, _BIN_VERSION, path.grid.n,
                                  path.grid.d, path.H.value))
        fh.write(path.values.astype("<f8").tobytes(order="C"))
    finally:
        if close:
            fh.close()


def read_binary(fh, T: float, seed: int = 0) -> FbmPath:
    close = False
    if isinstance(fh, (str, bytes)):
        fh = open(fh, "rb")
        close = True
    try:
        magic, version, n, d, Hval = _BIN_HEADER.unpack(fh.read(_BIN_HEADER.size))
        if magic != _BIN_MAGIC:
            raise SiltError("not a FBMP file")
        if version != _BIN_VERSION:
            raise SiltError(f"unsupported FBMP version {version}")
        raw = fh.read(8 * (n + 1) * d)
    finally:
        if close:
            fh.close()
    values = np.frombuffer(raw, dtype="<f8").reshape(n + 1, d).copy()
    grid = GridSpec(n=n, T=T, d=d)
    return FbmPath(grid=grid, H=Hurst(Hval), values=values, seed=seed, method="file")
