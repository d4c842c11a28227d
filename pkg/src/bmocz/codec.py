"""Bits <-> zeros <-> unit-energy polynomial coefficients.

Each of the K bits selects one zero of a conjugate-reciprocal pair placed
at angle 2*pi*k/K: radius R for a one, 1/R for a zero. The transmitted
sequence is the coefficient vector of the monic polynomial with those
zeros, scaled to unit energy. ``coeffs[n]`` multiplies ``z**n``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguityError, ConfigurationError

AMBIGUITY_BAND = 1e-6


@dataclass(frozen=True)
class BmoczConfig:
    K: int
    R: float

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ConfigurationError(f"K must be a positive integer, got {self.K!r}")
        if not np.isfinite(self.R) or self.R <= 1.0:
            raise ConfigurationError(f"R must be finite and > 1, got {self.R!r}")
        object.__setattr__(self, "K", int(self.K))
        object.__setattr__(self, "R", float(self.R))

    @property
    def phases(self) -> np.ndarray:
        """Unit phasors e^{j 2 pi k / K}, k = 0..K-1."""
        return np.exp(2j * np.pi * np.arange(self.K) / self.K)


def _check_bits(bits, K: int) -> np.ndarray:
    b = np.asarray(bits)
    if b.shape[-1:] != (K,):
        raise ConfigurationError(f"expected {K} bits per message, got shape {b.shape}")
    if not np.all((b == 0) | (b == 1)):
        raise ConfigurationError("bits must be 0 or 1")
    return b.astype(np.int8)


def map_bits_to_zeros(bits, cfg: BmoczConfig) -> np.ndarray:
    """Place one zero per bit.

    Accepts a single message of shape ``(K,)`` or a batch ``(..., K)``.
    """
    b = _check_bits(bits, cfg.K)
    radius = np.where(b == 1, cfg.R, 1.0 / cfg.R)
    return radius * cfg.phases


def zeros_to_bits(zeros, cfg: BmoczConfig) -> np.ndarray:
    z = np.asarray(zeros, dtype=complex)
    if z.shape[-1:] != (cfg.K,):
        raise ConfigurationError(f"expected {cfg.K} zeros, got shape {z.shape}")
    mod = np.abs(z)
    ok = (np.abs(mod - cfg.R) <= AMBIGUITY_BAND) | (np.abs(mod - 1.0 / cfg.R) <= AMBIGUITY_BAND)
    if not np.all(ok):
        bad = np.argwhere(~ok)[0]
        raise AmbiguityError(
            f"zero {tuple(int(i) for i in bad)} has modulus {mod[tuple(bad)]:.9g}, "
            f"not within {AMBIGUITY_BAND} of R={cfg.R} or 1/R"
        )
    return (mod > 1.0).astype(np.int8)


def poly_from_zeros(zeros) -> np.ndarray:
    """Expand prod_k (z - zeros[k]) and normalize to unit energy.

    Works on a single zero vector ``(K,)`` or a batch ``(..., K)``; the
    returned coefficients are in ascending powers with the leading
    coefficient real and positive.
    """
    z = np.asarray(zeros, dtype=complex)
    if z.ndim == 0 or z.shape[-1] < 1:
        raise ConfigurationError("need at least one zero")
    K = z.shape[-1]
    c = np.zeros(z.shape[:-1] + (K + 1,), dtype=complex)
    c[..., 0] = 1.0
    # multiply by (z - a_k) one monomial at a time, k = 0..K-1
    for k in range(K):
        a = z[..., k : k + 1]
        shifted = np.zeros_like(c)
        shifted[..., 1:] = c[..., :-1]
        c = shifted - a * c
    return c / np.linalg.norm(c, axis=-1, keepdims=True)


def encode(bits, cfg: BmoczConfig) -> np.ndarray:
    return poly_from_zeros(map_bits_to_zeros(bits, cfg))


def evaluate_poly(coeffs, z):
    """Horner evaluation of sum_n coeffs[n] * z**n (z may be an array)."""
    c = np.asarray(coeffs, dtype=complex)
    if c.ndim != 1 or c.size == 0:
        raise ConfigurationError("coefficients must be a nonempty 1-D sequence")
    acc = np.zeros_like(np.asarray(z, dtype=complex))
    for cn in c[::-1]:
        acc = acc * z + cn
    return acc if acc.ndim else complex(acc)


def index_to_bits(index, K: int) -> np.ndarray:
    """Bit pattern of an integer, bit 0 least significant."""
    return ((np.asarray(index)[..., None] >> np.arange(K)) & 1).astype(np.int8)


def bits_to_index(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    return (b << np.arange(b.shape[-1])).sum(axis=-1)


def aperiodic_autocorrelation(x) -> np.ndarray:
    """a[l] = sum_n x[n] * conj(x[n + l]) for l = 0..len(x)-1."""
    x = np.asarray(x, dtype=complex)
    n = x.size
    return np.array([np.sum(x[: n - l] * np.conj(x[l:])) for l in range(n)])
