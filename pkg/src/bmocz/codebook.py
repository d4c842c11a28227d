"""Zero and polynomial codebooks, separation metrics and radius selection."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .codec import BmoczConfig, index_to_bits, map_bits_to_zeros, poly_from_zeros
from .errors import ConfigurationError, NumericalError, ResourceError

MAX_ENUM_K = 16
MAX_ML_RADIUS_K = 13
METRICS = ("phase", "euclidean")


@dataclass(frozen=True)
class ZeroCodebook:
    cfg: BmoczConfig
    zero_vectors: np.ndarray  # (2**K, K), row i <-> bit pattern of i

    def __len__(self):
        return len(self.zero_vectors)


@dataclass(frozen=True)
class PolyCodebook:
    cfg: BmoczConfig
    codewords: np.ndarray  # (2**K, K+1)

    def __len__(self):
        return len(self.codewords)


@dataclass(frozen=True)
class RadiusSearchSpec:
    """Grid-and-refine search for the codeword-separation optimum.

    The coarse grid has ``grid_points`` radii evenly spaced over
    (1, r_max]. Each refinement round re-grids the incumbent +/- one step
    at ``refine_factor`` times finer spacing, so both neighbours are
    re-examined.
    """

    r_max: float = 4.0
    grid_points: int = 61
    rounds: int = 3
    refine_factor: int = 10
    metric: str = "phase"

    def __post_init__(self):
        if not self.r_max > 1.0:
            raise ConfigurationError(f"empty search interval (1, {self.r_max}]")
        if self.grid_points < 2 or self.rounds < 0 or self.refine_factor < 2:
            raise ConfigurationError("grid_points >= 2, rounds >= 0, refine_factor >= 2 required")
        if self.metric not in METRICS:
            raise ConfigurationError(f"metric must be one of {METRICS}, got {self.metric!r}")

    def coarse_grid(self) -> np.ndarray:
        return np.linspace(1.0, self.r_max, self.grid_points + 1)[1:]


@dataclass(frozen=True)
class RadiusCurve:
    K: int
    samples: tuple = field(default_factory=tuple)  # ((R, d_min), ...)

    @property
    def R(self) -> np.ndarray:
        return np.array([r for r, _ in self.samples])

    @property
    def d_min(self) -> np.ndarray:
        return np.array([d for _, d in self.samples])

    def __len__(self):
        return len(self.samples)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["K", "R", "d_min"])
        for r, d in self.samples:
            w.writerow([self.K, repr(float(r)), repr(float(d))])
        return buf.getvalue()


def build_codebooks(cfg: BmoczConfig) -> tuple[ZeroCodebook, PolyCodebook]:
    if cfg.K > MAX_ENUM_K:
        raise ResourceError(f"K={cfg.K} exceeds the enumeration bound K <= {MAX_ENUM_K}")
    bits = index_to_bits(np.arange(2**cfg.K), cfg.K)
    zeros = map_bits_to_zeros(bits, cfg)
    return ZeroCodebook(cfg, zeros), PolyCodebook(cfg, poly_from_zeros(zeros))


def _pair_block_min(C: np.ndarray, metric: str, block: int) -> float:
    # Pairs (i, j), j > i, scanned in row blocks. Accumulation runs
    # sequentially over the coefficient index so every pair sees the same
    # floating point operations as a scalar pairwise loop.
    n, m = C.shape
    re = np.ascontiguousarray(C.real)
    im = np.ascontiguousarray(C.imag)
    best = np.inf
    for s in range(0, n - 1, block):
        e = min(s + block, n - 1)
        if metric == "euclidean":
            acc = np.zeros((e - s, n - s - 1))
            for k in range(m):
                dr = re[s + 1 :, k][None, :] - re[s:e, k][:, None]
                di = im[s + 1 :, k][None, :] - im[s:e, k][:, None]
                acc += dr * dr + di * di
        else:
            # <x_i, x_j> = sum_k conj(x_i[k]) x_j[k]; norms accumulated alike
            ar = re[s:e, :][:, None, :]
            ai = im[s:e, :][:, None, :]
            br = re[s + 1 :, :][None, :, :]
            bi = im[s + 1 :, :][None, :, :]
            pr = np.zeros((e - s, n - s - 1))
            pi = np.zeros_like(pr)
            na = np.zeros((e - s, 1))
            nb = np.zeros((1, n - s - 1))
            for k in range(m):
                pr += ar[..., k] * br[..., k] + ai[..., k] * bi[..., k]
                pi += ar[..., k] * bi[..., k] - ai[..., k] * br[..., k]
                na += ar[..., k] * ar[..., k] + ai[..., k] * ai[..., k]
                nb += br[..., k] * br[..., k] + bi[..., k] * bi[..., k]
            acc = na + nb - 2.0 * np.hypot(pr, pi)
        rows = np.arange(s, e)[:, None]
        cols = np.arange(s + 1, n)[None, :]
        acc[cols <= rows] = np.inf
        best = min(best, float(acc.min()))
    return best


def codeword_distance(x, y, metric: str = "euclidean") -> float:
    """Squared distance between two codewords.

    ``euclidean`` is ||x - y||^2 under the fixed phase convention.
    ``phase`` minimizes over a common unimodular factor,
    min_c ||x - c y||^2 = ||x||^2 + ||y||^2 - 2|<x, y>|, the separation
    seen by a decoder that is blind to the channel phase.
    """
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    if metric == "euclidean":
        acc = 0.0
        for a, b in zip(x, y):
            dr = b.real - a.real
            di = b.imag - a.imag
            acc += dr * dr + di * di
        return acc
    if metric == "phase":
        pr = pi = na = nb = 0.0
        for a, b in zip(x, y):
            pr += a.real * b.real + a.imag * b.imag
            pi += a.real * b.imag - a.imag * b.real
            na += a.real * a.real + a.imag * a.imag
            nb += b.real * b.real + b.imag * b.imag
        return na + nb - 2.0 * float(np.hypot(pr, pi))
    raise ConfigurationError(f"metric must be one of {METRICS}, got {metric!r}")


def min_codeword_distance(cb, metric: str = "euclidean", block: int = 256) -> float:
    """Minimum squared separation over all distinct codeword pairs.

    ``cb`` may be a :class:`PolyCodebook` or a raw ``(n, K+1)`` array.
    """
    C = np.asarray(cb.codewords if isinstance(cb, PolyCodebook) else cb, dtype=complex)
    if metric not in METRICS:
        raise ConfigurationError(f"metric must be one of {METRICS}, got {metric!r}")
    if C.ndim != 2 or C.shape[0] < 2:
        raise ConfigurationError("need at least two codewords")
    return _pair_block_min(C, metric, block)


def min_zero_distance(zb) -> float:
    """Smallest distance between two distinct points of the zero constellation."""
    if isinstance(zb, ZeroCodebook):
        cfg = zb.cfg
    else:
        cfg = zb
    pts = np.concatenate([cfg.R * cfg.phases, cfg.phases / cfg.R])
    d = np.abs(pts[:, None] - pts[None, :])
    d[np.diag_indices_from(d)] = np.inf
    return float(d.min())


def radius_dizet(K: int) -> float:
    if K < 1:
        raise ConfigurationError(f"K must be >= 1, got {K}")
    return float(np.sqrt(1.0 + np.sin(np.pi / K)))


def _objective(K: int, R: float, metric: str) -> float:
    _, cb = build_codebooks(BmoczConfig(K, R))
    v = min_codeword_distance(cb, metric)
    if not np.isfinite(v):
        raise NumericalError(f"non-finite separation at K={K}, R={R}")
    return v


def _argmax(grid, values):
    # smallest R among ties within 1e-12
    values = np.asarray(values)
    top = values.max()
    return int(np.flatnonzero(values >= top - 1e-12)[0])


def radius_ml(K: int, search: RadiusSearchSpec | None = None) -> float:
    """Radius maximizing the minimum codeword separation."""
    search = search or RadiusSearchSpec()
    if K < 1:
        raise ConfigurationError(f"K must be >= 1, got {K}")
    if K > MAX_ML_RADIUS_K:
        raise ResourceError(f"K={K} exceeds {MAX_ML_RADIUS_K}; cost grows as 4^K per sample")
    grid = search.coarse_grid()
    values = [_objective(K, r, search.metric) for r in grid]
    i = _argmax(grid, values)
    best, step = grid[i], grid[1] - grid[0]
    for _ in range(search.rounds):
        fine = np.linspace(best - step, best + step, 2 * search.refine_factor + 1)
        fine = fine[(fine > 1.0) & (fine <= search.r_max)]
        values = [_objective(K, r, search.metric) for r in fine]
        best = fine[_argmax(fine, values)]
        step /= search.refine_factor
    return float(best)


def radius_curve(K: int, R_grid, metric: str = "phase") -> RadiusCurve:
    R_grid = np.asarray(R_grid, dtype=float)
    if np.any(R_grid <= 1.0):
        raise ConfigurationError("all radii must exceed 1")
    samples = tuple((float(r), _objective(K, float(r), metric)) for r in R_grid)
    return RadiusCurve(K, samples)
