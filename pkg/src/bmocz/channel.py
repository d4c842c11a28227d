"""AWGN, Rayleigh block fading and exponential-PDP multipath channels.

CN(0, s2) always means total variance s2, split evenly between the real
and imaginary parts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class PdpSpec:
    L: int
    rho: float

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ConfigurationError(f"L must be a positive integer, got {self.L!r}")
        if not 0.0 < self.rho < 1.0:
            raise ConfigurationError(f"rho must lie in (0, 1), got {self.rho!r}")


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray

    @property
    def L(self) -> int:
        return len(self.taps)


def crandn(rng: np.random.Generator, size=None, var: float = 1.0):
    """Circularly symmetric complex Gaussian samples with total variance ``var``."""
    s = np.sqrt(var / 2.0)
    return s * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def pdp_weights(spec: PdpSpec) -> np.ndarray:
    """Tap powers (1 - rho) / (1 - rho^L) * rho^l, l = 0..L-1."""
    l = np.arange(spec.L)
    return (1.0 - spec.rho) / (1.0 - spec.rho**spec.L) * spec.rho**l


def draw_multipath(spec: PdpSpec, rng: np.random.Generator, size=None) -> ChannelRealization | np.ndarray:
    """One realization, or an array ``size + (L,)`` of tap vectors if ``size`` is given."""
    w = pdp_weights(spec)
    shape = (spec.L,) if size is None else tuple(np.atleast_1d(size)) + (spec.L,)
    h = crandn(rng, shape) * np.sqrt(w)
    return ChannelRealization(h) if size is None else h


def draw_flat_gain(rng: np.random.Generator, size=None):
    g = crandn(rng, size)
    return complex(g) if size is None else g


def awgn(x, N0: float, rng: np.random.Generator) -> np.ndarray:
    if N0 < 0:
        raise ConfigurationError(f"N0 must be >= 0, got {N0}")
    x = np.asarray(x, dtype=complex)
    if N0 == 0:
        return x.copy()
    return x + crandn(rng, x.shape, N0)


def convolve(x, h) -> np.ndarray:
    """Full linear convolution, length len(x) + L - 1."""
    taps = h.taps if isinstance(h, ChannelRealization) else h
    x = np.asarray(x, dtype=complex)
    taps = np.asarray(taps, dtype=complex)
    if x.size == 0 or taps.size == 0:
        raise ConfigurationError("convolution inputs must be nonempty")
    return np.convolve(x, taps)


def convolve_truncated(x: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Batched linear convolution keeping the first ``x.shape[-1]`` outputs.

    ``x`` is ``(B, T)`` and ``taps`` is ``(B, L)``; row b of x is filtered
    by row b of taps.
    """
    out = np.zeros_like(x, dtype=complex)
    T = x.shape[-1]
    for l in range(min(taps.shape[-1], T)):
        out[..., l:] += taps[..., l : l + 1] * x[..., : T - l]
    return out


def snr_db_to_n0(snr_db) -> np.ndarray | float:
    """Unit-energy codewords: SNR = 1 / N0."""
    return 10.0 ** (-np.asarray(snr_db, dtype=float) / 10.0)
