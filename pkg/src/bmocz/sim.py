"""Monte Carlo BER/BLER sweeps and PAPR statistics for BMOCZ-OFDM.

One trial is one packet of P codewords; a block is one codeword, so a
packet contributes P blocks and P*K bits. Every batch of packets draws
from its own generator seeded with (seed, snr index, batch index), so
results do not depend on the number of worker threads.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .channel import PdpSpec, convolve_truncated, crandn, pdp_weights, snr_db_to_n0
from .codebook import RadiusSearchSpec, build_codebooks, radius_dizet, radius_ml
from .codec import BmoczConfig
from .decode import MlDecoder, dizet_decode
from .errors import ConfigurationError
from .ofdm import Mapping, OfdmConfig, demap_from_grid, demodulate, map_to_grid, modulate, ofdm_symbols, scramble

DECODERS = ("ml", "dizet")
CHANNELS = ("awgn", "flat", "multipath")
CSV_HEADER = ["snr_db", "ber", "bler", "bit_errors", "bits", "block_errors", "blocks"]


@lru_cache(maxsize=None)
def _radius_ml_cached(K: int, search: RadiusSearchSpec) -> float:
    return radius_ml(K, search)


def resolve_radius(K: int, policy, decoder: str = "ml", search: RadiusSearchSpec | None = None) -> float:
    """Turn a radius policy ('auto', 'ml', 'dizet' or a number) into a value.

    'auto' picks the radius matched to the decoder.
    """
    search = search or RadiusSearchSpec()
    if isinstance(policy, str):
        p = policy.strip().lower()
        if p == "auto":
            p = "ml" if decoder == "ml" else "dizet"
        if p == "ml":
            return _radius_ml_cached(K, search)
        if p == "dizet":
            return radius_dizet(K)
        try:
            policy = float(p)
        except ValueError:
            raise ConfigurationError(f"radius must be 'auto', 'ml', 'dizet' or a number, got {policy!r}") from None
    R = float(policy)
    if not R > 1.0:
        raise ConfigurationError(f"explicit radius must exceed 1, got {R}")
    return R


@dataclass(frozen=True)
class SweepSpec:
    K: int
    decoder: str = "ml"
    radius: object = "auto"
    channel: str = "awgn"
    pdp: PdpSpec | None = None
    mapping: Mapping = Mapping.FREQUENCY
    P: int = 1
    N_idft: int | None = None  # default 2**K
    N_cp: int | None = None  # default N_idft // 8
    M: int | None = None
    scramble_seed: int | None = None
    snr_db: tuple = tuple(range(0, 31, 2))
    trials: int = 100_000
    seed: int = 0
    max_block_errors: int | None = 200
    batch_packets: int | None = None
    dizet_weighted: bool = True
    radius_search: RadiusSearchSpec = field(default_factory=RadiusSearchSpec)
    common_draws: bool = False  # size draws for all three mappings (common random numbers)

    def __post_init__(self):
        object.__setattr__(self, "mapping", Mapping.parse(self.mapping))
        object.__setattr__(self, "snr_db", tuple(float(s) for s in np.atleast_1d(self.snr_db)))
        if self.decoder not in DECODERS:
            raise ConfigurationError(f"decoder must be one of {DECODERS}, got {self.decoder!r}")
        if self.channel not in CHANNELS:
            raise ConfigurationError(f"channel must be one of {CHANNELS}, got {self.channel!r}")
        if self.channel == "multipath" and self.pdp is None:
            raise ConfigurationError("multipath channel needs a PdpSpec")
        if self.trials < 1:
            raise ConfigurationError("trials must be >= 1")
        if not self.snr_db:
            raise ConfigurationError("SNR grid is empty")
        if self.max_block_errors is not None and self.max_block_errors < 1:
            raise ConfigurationError("max_block_errors must be >= 1 or None")
        self.ofdm_config()  # subcarrier capacity checks

    @property
    def n_idft(self) -> int:
        return self.N_idft if self.N_idft is not None else 2**self.K

    def ofdm_config(self, mapping: Mapping | None = None) -> OfdmConfig:
        return OfdmConfig(
            N_idft=self.n_idft,
            P=self.P,
            K=self.K,
            mapping=mapping or self.mapping,
            N_cp=self.N_cp,
            M=self.M,
            scramble_seed=self.scramble_seed,
        )

    @property
    def batch(self) -> int:
        return self.batch_packets or max(1, 2000 // self.P)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["mapping"] = self.mapping.value
        return d


@dataclass
class SweepPoint:
    snr_db: float
    bits: int = 0
    bit_errors: int = 0
    blocks: int = 0
    block_errors: int = 0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")

    @property
    def bler(self) -> float:
        return self.block_errors / self.blocks if self.blocks else float("nan")


@dataclass
class SweepResult:
    spec: SweepSpec
    R: float
    points: list

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    @property
    def ber(self) -> np.ndarray:
        return np.array([p.ber for p in self.points])

    @property
    def bler(self) -> np.ndarray:
        return np.array([p.bler for p in self.points])

    @property
    def ebn0_db(self) -> np.ndarray:
        return self.snr_db - 10 * np.log10(self.spec.K)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for p in self.points:
            w.writerow([repr(p.snr_db), repr(p.ber), repr(p.bler), p.bit_errors, p.bits, p.block_errors, p.blocks])
        return buf.getvalue()

    def metadata(self) -> dict:
        return {
            "tool": "bmocz",
            "version": __version__,
            "spec": self.spec.to_dict(),
            "R": self.R,
            "ebn0_db": [float(v) for v in self.ebn0_db],
            "counts": [dataclasses.asdict(p) for p in self.points],
        }

    def write(self, path) -> tuple[Path, Path]:
        """Write the CSV and its JSON metadata sidecar (same stem, .json)."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        side = path.with_suffix(".json")
        side.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return path, side


def snr_at_rate(snr_db, rate, target: float) -> float:
    """First SNR where ``rate`` falls to ``target``, interpolating log10(rate) linearly.

    Returns nan if the curve never crosses the target.
    """
    snr_db = np.asarray(snr_db, dtype=float)
    rate = np.asarray(rate, dtype=float)
    lt = math.log10(target)
    for i in range(len(rate) - 1):
        a, b = rate[i], rate[i + 1]
        if a >= target > b:
            la = math.log10(a)
            lb = math.log10(b) if b > 0 else la - 12.0
            t = (la - lt) / (la - lb)
            return float(snr_db[i] + t * (snr_db[i + 1] - snr_db[i]))
    return float("nan")


class _Link:
    """Everything a batch needs, built once per sweep."""

    def __init__(self, spec: SweepSpec, R: float):
        self.spec = spec
        self.cfg = BmoczConfig(spec.K, R)
        self.ofdm = spec.ofdm_config()
        _, cb = build_codebooks(self.cfg)
        self.codebook = cb.codewords
        self.ml = MlDecoder(self.cfg) if spec.decoder == "ml" else None
        if spec.common_draws:
            n_sym = max(spec.K + 1, spec.P, spec.M or 1)
        else:
            n_sym = self.ofdm.n_symbols
        self.draw_symbols = n_sym
        self.draw_len = n_sym * self.ofdm.symbol_len

    def draws(self, snr_index: int, batch_index: int, n: int):
        s = self.spec
        rng = np.random.default_rng([s.seed, snr_index, batch_index])
        idx = rng.integers(0, 2**s.K, size=(n, s.P))
        if s.channel == "flat":
            chan = crandn(rng, (n, self.draw_symbols))
        elif s.channel == "multipath":
            chan = crandn(rng, (n, s.pdp.L)) * np.sqrt(pdp_weights(s.pdp))
        else:
            chan = None
        noise = crandn(rng, (n, self.draw_len))
        return idx, chan, noise

    def run_batch(self, snr_index: int, batch_index: int, n: int, N0: float):
        s, cfg = self.spec, self.ofdm
        idx, chan, noise = self.draws(snr_index, batch_index, n)
        tx = modulate(map_to_grid(self.codebook[idx], cfg), cfg)
        T = cfg.stream_len
        if s.channel == "flat":
            S = cfg.n_symbols
            tx = (tx.reshape(n, S, cfg.symbol_len) * chan[:, :S, None]).reshape(n, T)
        elif s.channel == "multipath":
            tx = convolve_truncated(tx, chan)
        rx = tx + math.sqrt(N0) * noise[:, :T]
        y = demap_from_grid(demodulate(rx, cfg), cfg).reshape(n * s.P, s.K + 1)
        if self.ml is not None:
            est = self.ml.decode_index(y)
        else:
            bits_hat, _ = dizet_decode(y, self.cfg, weighted=s.dizet_weighted)
            est = (bits_hat.astype(np.int64) << np.arange(s.K)).sum(axis=-1)
        diff = np.bitwise_xor(est, idx.reshape(-1))
        bit_err = int(sum(((diff >> k) & 1).sum() for k in range(s.K)))
        block_err = int(np.count_nonzero(diff))
        return bit_err, block_err


def run_error_sweep(spec: SweepSpec, threads: int = 1, progress=None) -> SweepResult:
    """BER/BLER versus SNR for one (decoder, channel, mapping) combination."""
    R = resolve_radius(spec.K, spec.radius, spec.decoder, spec.radius_search)
    link = _Link(spec, R)
    n_batches = -(-spec.trials // spec.batch)
    sizes = [min(spec.batch, spec.trials - b * spec.batch) for b in range(n_batches)]
    points = []
    pool = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        for i, snr in enumerate(spec.snr_db):
            N0 = float(snr_db_to_n0(snr))
            pt = SweepPoint(snr_db=snr)
            b = 0
            while b < n_batches:
                wave = range(b, min(b + max(1, threads), n_batches))
                if pool is None:
                    outs = [link.run_batch(i, j, sizes[j], N0) for j in wave]
                else:
                    outs = list(pool.map(lambda j: link.run_batch(i, j, sizes[j], N0), wave))
                stop = False
                for j, (be, ke) in zip(wave, outs):
                    pt.bits += sizes[j] * spec.P * spec.K
                    pt.blocks += sizes[j] * spec.P
                    pt.bit_errors += be
                    pt.block_errors += ke
                    if spec.max_block_errors is not None and pt.block_errors >= spec.max_block_errors:
                        stop = True
                        break
                if stop:
                    break
                b = wave.stop
            points.append(pt)
            if progress:
                progress(f"snr={snr:g} dB  ber={pt.ber:.3e}  bler={pt.bler:.3e}  blocks={pt.blocks}")
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(spec, R, points)


def run_mapping_comparison(spec: SweepSpec, mappings=tuple(Mapping), threads: int = 1, progress=None) -> dict:
    """Run the same sweep under each mapping with common random numbers.

    Bits, channel taps (or gains) and noise for trial t come from the same
    draws for every mapping; only the waveform layout differs.
    """
    mappings = [Mapping.parse(m) for m in mappings]
    specs = {m: dataclasses.replace(spec, mapping=m, common_draws=True) for m in mappings}
    out = {}
    for m, s in specs.items():
        if progress:
            progress(f"mapping={m.value}")
        out[m] = run_error_sweep(s, threads=threads, progress=progress)
    return out


def papr_db(s) -> np.ndarray | float:
    """10 log10(max |s|^2 / mean |s|^2) along the last axis."""
    s = np.asarray(s, dtype=complex)
    if s.size == 0:
        raise ConfigurationError("PAPR of an empty signal is undefined")
    p = s.real**2 + s.imag**2
    avg = p.mean(axis=-1)
    if np.any(avg == 0):
        raise ConfigurationError("PAPR of an all-zero signal is undefined")
    v = 10 * np.log10(p.max(axis=-1) / avg)
    return float(v) if np.ndim(v) == 0 else v


@dataclass
class PaprResult:
    samples_db: np.ndarray  # sorted ascending
    meta: dict = field(default_factory=dict)

    def ccdf(self, threshold):
        """Pr(PAPR > threshold)."""
        t = np.asarray(threshold, dtype=float)
        above = self.samples_db.size - np.searchsorted(self.samples_db, t, side="right")
        v = above / self.samples_db.size
        return float(v) if v.ndim == 0 else v

    def level(self, prob: float) -> float:
        """PAPR value at which the empirical CCDF falls to ``prob``."""
        return float(np.quantile(self.samples_db, 1.0 - prob))

    def to_csv(self, step: float = 0.05) -> str:
        top = math.ceil(self.samples_db[-1] / step) * step
        grid = np.round(np.arange(0.0, top + step / 2, step), 10)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["papr_db", "ccdf"])
        for t, c in zip(grid, self.ccdf(grid)):
            w.writerow([repr(float(t)), repr(float(c))])
        return buf.getvalue()

    def write(self, path) -> tuple[Path, Path]:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_csv())
        side = path.with_suffix(".json")
        side.write_text(json.dumps(self.meta, indent=2, sort_keys=True) + "\n")
        return path, side


def run_papr_ccdf(
    mapping,
    K: int,
    R=None,
    P: int = 64,
    N_idft: int = 512,
    M: int | None = 5,
    n_symbols: int = 10_000,
    seed: int = 0,
    scramble_seed: int | None = None,
    scramble_on: bool | None = None,
    oversample: int = 1,
    radius_search: RadiusSearchSpec | None = None,
) -> PaprResult:
    """Empirical PAPR distribution of the CP-free OFDM symbols.

    By default the QPSK scrambler is on for time and time-frequency
    mapping and off for frequency mapping; ``R=None`` uses the ML radius.
    """
    mapping = Mapping.parse(mapping)
    R = resolve_radius(K, "ml" if R is None else R, "ml", radius_search)
    if scramble_on is None:
        scramble_on = mapping is not Mapping.FREQUENCY
    if scramble_on and scramble_seed is None:
        scramble_seed = seed
    cfg = OfdmConfig(
        N_idft=N_idft,
        P=P,
        K=K,
        mapping=mapping,
        M=M if mapping is Mapping.TIME_FREQUENCY else None,
        scramble_seed=scramble_seed if scramble_on else None,
    )
    if oversample < 1:
        raise ConfigurationError("oversample must be >= 1")
    _, cb = build_codebooks(BmoczConfig(K, R))
    per_packet = cfg.n_symbols
    n_packets = -(-n_symbols // per_packet)
    batch = max(1, 4096 // per_packet)
    out = []
    for b, start in enumerate(range(0, n_packets, batch)):
        n = min(batch, n_packets - start)
        rng = np.random.default_rng([seed, b])
        grid = map_to_grid(cb.codewords[rng.integers(0, 2**K, size=(n, P))], cfg)
        if cfg.scramble_seed is not None:
            grid = scramble(grid, cfg.scramble_seed)
        out.append(papr_db(ofdm_symbols(grid, cfg, oversample)).ravel())
    samples = np.sort(np.concatenate(out)[:n_symbols])
    meta = {
        "tool": "bmocz",
        "version": __version__,
        "mapping": mapping.value,
        "K": K,
        "R": R,
        "P": P,
        "N_idft": N_idft,
        "M": cfg.M,
        "n_subcarriers": cfg.n_subcarriers,
        "n_symbols": int(samples.size),
        "seed": seed,
        "scramble_seed": cfg.scramble_seed,
        "oversample": oversample,
    }
    return PaprResult(samples, meta)
