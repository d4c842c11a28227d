"""Binary modulation on conjugate-reciprocal zeros (BMOCZ)."""

__version__ = "0.1.0"

from .codec import BmoczConfig, encode, evaluate_poly, map_bits_to_zeros, poly_from_zeros, zeros_to_bits
from .codebook import (
    RadiusSearchSpec,
    build_codebooks,
    min_codeword_distance,
    min_zero_distance,
    radius_curve,
    radius_dizet,
    radius_ml,
)
from .decode import MlDecoder, dizet_decode, ml_decode, vandermonde
from .channel import PdpSpec, awgn, convolve, draw_flat_gain, draw_multipath, pdp_weights
from .ofdm import Mapping, OfdmConfig, demap_from_grid, demodulate, map_to_grid, modulate
from .sim import SweepSpec, papr_db, run_error_sweep, run_mapping_comparison, run_papr_ccdf
