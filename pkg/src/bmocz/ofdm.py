"""OFDM with cyclic prefix and the three sequence-to-subcarrier mappings.

A grid is indexed ``[subcarrier, symbol]``. All routines also accept
stacks of grids/streams with arbitrary leading batch dimensions, which
the simulator relies on.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError


class Mapping(str, enum.Enum):
    TIME = "time"
    FREQUENCY = "frequency"
    TIME_FREQUENCY = "time_frequency"

    @classmethod
    def parse(cls, value) -> "Mapping":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"tf": "time_frequency", "timefrequency": "time_frequency", "freq": "frequency"}
        try:
            return cls(aliases.get(key, key))
        except ValueError:
            raise ConfigurationError(
                f"unknown mapping {value!r}; expected one of {[m.value for m in cls]}"
            ) from None


@dataclass(frozen=True)
class OfdmConfig:
    N_idft: int
    P: int
    K: int
    mapping: Mapping = Mapping.FREQUENCY
    N_cp: int | None = None  # default N_idft // 8
    M: int | None = None  # time-frequency only
    scramble_seed: int | None = None
    subcarrier_offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mapping", Mapping.parse(self.mapping))
        if self.N_cp is None:
            object.__setattr__(self, "N_cp", self.N_idft // 8)
        if self.N_idft < 1 or self.N_idft & (self.N_idft - 1):
            raise ConfigurationError(f"N_idft must be a power of two, got {self.N_idft}")
        if self.N_cp < 0:
            raise ConfigurationError(f"N_cp must be >= 0, got {self.N_cp}")
        if self.P < 1 or self.K < 1:
            raise ConfigurationError("P and K must be positive")
        if self.mapping is Mapping.TIME_FREQUENCY:
            if self.M is None or self.M < 1:
                raise ConfigurationError("time-frequency mapping needs M >= 1 OFDM symbols")
        if self.subcarrier_offset < 0:
            raise ConfigurationError("subcarrier_offset must be >= 0")
        if self.subcarrier_offset + self.n_subcarriers > self.N_idft:
            raise ConfigurationError(
                f"{self.mapping.value} mapping needs {self.n_subcarriers} subcarriers "
                f"(offset {self.subcarrier_offset}) but N_idft={self.N_idft}"
            )

    @property
    def n_subcarriers(self) -> int:
        if self.mapping is Mapping.TIME:
            return self.P
        if self.mapping is Mapping.FREQUENCY:
            return self.K + 1
        return math.ceil(self.P * (self.K + 1) / self.M)

    @property
    def n_symbols(self) -> int:
        if self.mapping is Mapping.TIME:
            return self.K + 1
        if self.mapping is Mapping.FREQUENCY:
            return self.P
        return self.M

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.n_subcarriers, self.n_symbols

    @property
    def symbol_len(self) -> int:
        return self.N_idft + self.N_cp

    @property
    def stream_len(self) -> int:
        return self.n_symbols * self.symbol_len

    @cached_property
    def cell_index(self) -> tuple[np.ndarray, np.ndarray]:
        """(l, m) grid cell of every coefficient x_{p,k}, each shaped (P, K+1)."""
        p, k = np.meshgrid(np.arange(self.P), np.arange(self.K + 1), indexing="ij")
        if self.mapping is Mapping.TIME:
            return p, k
        if self.mapping is Mapping.FREQUENCY:
            return k, p
        flat = p * (self.K + 1) + k  # = l*M + m
        return flat // self.M, flat % self.M


def map_to_grid(codewords, cfg: OfdmConfig) -> np.ndarray:
    """Place P codewords (``(..., P, K+1)``) on a ``(..., n_sc, n_sym)`` grid."""
    x = np.asarray(codewords, dtype=complex)
    if x.shape[-2:] != (cfg.P, cfg.K + 1):
        raise ConfigurationError(f"expected codewords of shape (P, K+1)=({cfg.P}, {cfg.K + 1}), got {x.shape}")
    grid = np.zeros(x.shape[:-2] + cfg.grid_shape, dtype=complex)
    l, m = cfg.cell_index
    grid[..., l, m] = x
    return grid


def demap_from_grid(grid, cfg: OfdmConfig) -> np.ndarray:
    g = np.asarray(grid)
    if g.shape[-2:] != cfg.grid_shape:
        raise ConfigurationError(f"grid shape {g.shape[-2:]} does not match {cfg.grid_shape}")
    l, m = cfg.cell_index
    return g[..., l, m]


def _qpsk_phases(seed: int, shape: tuple[int, int]) -> np.ndarray:
    # counter-based generator: same (seed, cell index) -> same phase at both ends
    rng = np.random.Generator(np.random.Philox(key=seed))
    q = rng.integers(0, 4, size=shape[0] * shape[1]).reshape(shape)
    return np.exp(1j * np.pi * (2 * q + 1) / 4)


def scramble(grid, seed: int) -> np.ndarray:
    g = np.asarray(grid, dtype=complex)
    return g * _qpsk_phases(seed, g.shape[-2:])


def descramble(grid, seed: int) -> np.ndarray:
    g = np.asarray(grid, dtype=complex)
    return g * np.conj(_qpsk_phases(seed, g.shape[-2:]))


def ofdm_symbols(grid, cfg: OfdmConfig, oversample: int = 1) -> np.ndarray:
    """Useful (CP-free) part of every OFDM symbol: ``(..., n_sym, N_idft*oversample)``.

    Scrambling is not applied here.
    """
    g = np.asarray(grid, dtype=complex)
    n = cfg.N_idft * oversample
    bins = np.zeros(g.shape[:-2] + (g.shape[-1], n), dtype=complex)
    off = cfg.subcarrier_offset
    bins[..., off : off + g.shape[-2]] = np.swapaxes(g, -1, -2)
    # unitary at the Nyquist rate; oversampled symbols keep the same samples
    return np.fft.ifft(bins, axis=-1) * (n / np.sqrt(cfg.N_idft))


def modulate(grid, cfg: OfdmConfig) -> np.ndarray:
    g = np.asarray(grid, dtype=complex)
    if g.shape[-2:] != cfg.grid_shape:
        raise ConfigurationError(f"grid shape {g.shape[-2:]} does not match {cfg.grid_shape}")
    if cfg.scramble_seed is not None:
        g = scramble(g, cfg.scramble_seed)
    s = ofdm_symbols(g, cfg)
    if cfg.N_cp:
        s = np.concatenate([s[..., -cfg.N_cp :], s], axis=-1)
    return s.reshape(s.shape[:-2] + (-1,))


def demodulate(samples, cfg: OfdmConfig, M_total: int | None = None) -> np.ndarray:
    s = np.asarray(samples, dtype=complex)
    M_total = cfg.n_symbols if M_total is None else M_total
    if s.shape[-1] != M_total * cfg.symbol_len:
        raise ConfigurationError(
            f"stream length {s.shape[-1]} != {M_total} symbols x {cfg.symbol_len} samples"
        )
    s = s.reshape(s.shape[:-1] + (M_total, cfg.symbol_len))[..., cfg.N_cp :]
    f = np.fft.fft(s, axis=-1) / np.sqrt(cfg.N_idft)
    off = cfg.subcarrier_offset
    g = np.swapaxes(f[..., off : off + cfg.n_subcarriers], -1, -2)
    if cfg.scramble_seed is not None:
        g = descramble(g, cfg.scramble_seed)
    return g


def write_cf64(path, samples) -> None:
    """Interleaved little-endian float64 I/Q."""
    s = np.asarray(samples, dtype=complex).ravel()
    np.stack([s.real, s.imag], axis=-1).astype("<f8").tofile(path)


def read_cf64(path) -> np.ndarray:
    a = np.fromfile(path, dtype="<f8")
    return a[0::2] + 1j * a[1::2]


def grid_to_csv(grid) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["subcarrier", "symbol", "re", "im"])
    g = np.asarray(grid)
    for l in range(g.shape[0]):
        for m in range(g.shape[1]):
            w.writerow([l, m, repr(float(g[l, m].real)), repr(float(g[l, m].imag))])
    return buf.getvalue()
