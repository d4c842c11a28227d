"""ML (codebook search) and DiZeT (direct zero testing) decoders.

Both decoders accept a single received sequence of length N or a batch
``(T, N)``. Neither needs channel state: scaling the input by any nonzero
complex constant leaves the decisions unchanged.
"""
from __future__ import annotations

import numpy as np

from .codebook import build_codebooks
from .codec import BmoczConfig, index_to_bits
from .errors import ConfigurationError, NumericalError

MAX_GRAM_COND = 1e14


def vandermonde(zeros, N: int) -> np.ndarray:
    """K x N matrix with row k = (1, a_k, a_k**2, ..., a_k**(N-1))."""
    z = np.asarray(zeros, dtype=complex)
    if N < z.shape[-1] + 1:
        raise ConfigurationError(f"N={N} must be at least K+1={z.shape[-1] + 1}")
    return z[..., :, None] ** np.arange(N)


def _as_batch(y, N):
    y = np.asarray(y, dtype=complex)
    single = y.ndim == 1
    y2 = y[None, :] if single else y
    if y2.ndim != 2 or y2.shape[1] != N:
        raise ConfigurationError(f"received sequence length must be N={N}, got shape {y.shape}")
    return y2, single


class MlDecoder:
    """Exhaustive search over the 2^K zero vectors.

    For each candidate with Vandermonde matrix A (K x N) and Gram matrix
    G = A A^H = L L^H, the metric ||G^{-1/2} A y||^2 is evaluated as the
    quadratic form b^H G^{-1} b = ||L^{-1} b||^2, b = A y. The whitened
    rows L^{-1} A are precomputed once, so decoding a batch is a single
    matrix product.

    When N = K+1 the null space of A is spanned by the candidate codeword
    x itself, so the same metric equals ||y||^2 - |x^H y|^2 and needs 2^K
    rather than K 2^K inner products. ``method="whitened"`` forces the
    general route.
    """

    def __init__(self, cfg: BmoczConfig, N: int | None = None, method: str = "auto"):
        self.cfg = cfg
        self.N = cfg.K + 1 if N is None else int(N)
        if method not in ("auto", "whitened"):
            raise ConfigurationError(f"method must be 'auto' or 'whitened', got {method!r}")
        self.method = "projection" if method == "auto" and self.N == cfg.K + 1 else "whitened"
        zb, cb = build_codebooks(cfg)
        self.zero_vectors = zb.zero_vectors
        self.bits = index_to_bits(np.arange(len(zb)), cfg.K)
        A = vandermonde(zb.zero_vectors, self.N)  # (C, K, N)
        self.gram = A @ np.conj(np.swapaxes(A, -1, -2))
        self.whitened = np.empty_like(A)
        for i in range(len(A)):
            w = np.linalg.eigvalsh(self.gram[i])
            if not (w[0] > 0 and w[-1] / w[0] < MAX_GRAM_COND):
                cond = np.inf if w[0] <= 0 else w[-1] / w[0]
                raise NumericalError(
                    f"Gram matrix of candidate {i} is ill-conditioned (cond={cond:.3g})"
                )
            L = np.linalg.cholesky(self.gram[i])
            self.whitened[i] = np.linalg.solve(L, A[i])
        self._W = self.whitened.reshape(-1, self.N)
        self._Xc = np.conj(cb.codewords)  # unit-energy rows

    @property
    def n_candidates(self) -> int:
        return len(self.zero_vectors)

    def metrics(self, y) -> np.ndarray:
        """Metric of every candidate: shape (2^K,) or (T, 2^K) for a batch."""
        y2, single = _as_batch(y, self.N)
        if self.method == "projection":
            c = y2 @ self._Xc.T  # (T, C)
            m = (y2.real**2 + y2.imag**2).sum(axis=1)[:, None] - (c.real**2 + c.imag**2)
            np.maximum(m, 0.0, out=m)  # a squared projection norm; rounding can dip below 0
        else:
            B = self._W @ y2.T  # (C*K, T)
            m = (B.real**2 + B.imag**2).reshape(self.n_candidates, self.cfg.K, -1).sum(axis=1).T
        return m[0] if single else m

    def decode_index(self, y) -> np.ndarray:
        # argmin returns the first minimum, i.e. the lowest candidate index
        return np.argmin(self.metrics(y), axis=-1)

    def decode(self, y):
        idx = self.decode_index(y)
        return self.bits[idx], self.zero_vectors[idx]


def ml_decode(y, dec: MlDecoder):
    """Return ``(bits, zeros)`` for the candidate with the smallest metric."""
    return dec.decode(y)


def ml_metric_direct(y, zeros) -> float:
    """Metric of one candidate computed from scratch with G^{-1/2}."""
    y = np.asarray(y, dtype=complex)
    A = vandermonde(zeros, y.size)
    G = A @ A.conj().T
    w, U = np.linalg.eigh(G)
    inv_sqrt = (U / np.sqrt(w)) @ U.conj().T
    v = inv_sqrt @ (A @ y)
    return float(np.vdot(v, v).real)


def dizet_metrics(y, cfg: BmoczConfig, weighted: bool = True):
    """Per-bit metrics for the inner (bit 0) and outer (bit 1) candidates.

    Returns two arrays shaped like the bit decisions.
    """
    y = np.asarray(y, dtype=complex)
    N = y.shape[-1]
    if N < cfg.K + 1:
        raise ConfigurationError(f"received sequence length {N} < K+1={cfg.K + 1}")
    powers = np.arange(N)
    out = []
    for r in (1.0 / cfg.R, cfg.R):
        V = (r * cfg.phases)[:, None] ** powers  # (K, N)
        m = np.abs(y @ V.T)
        if weighted:
            m = m * r ** (-(N - 1) / 2)
        out.append(m)
    return out[0], out[1]


def dizet_decode(y, cfg: BmoczConfig, weighted: bool = True):
    """Decide each bit by testing both zeros of its pair.

    Ties go to the inner zero (bit 0).
    """
    inner, outer = dizet_metrics(y, cfg, weighted)
    bits = (outer < inner).astype(np.int8)
    radius = np.where(bits == 1, cfg.R, 1.0 / cfg.R)
    return bits, radius * cfg.phases
