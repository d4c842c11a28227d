import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bmocz.codebook import radius_dizet, radius_ml
from bmocz.codec import BmoczConfig, encode, index_to_bits, zeros_to_bits
from bmocz.decode import MlDecoder, dizet_decode, dizet_metrics, ml_decode, ml_metric_direct, vandermonde
from bmocz.errors import ConfigurationError, NumericalError


def crandn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


class TestVandermonde:
    def test_examples(self):
        np.testing.assert_allclose(vandermonde([2], 3), [[1, 2, 4]])
        np.testing.assert_allclose(vandermonde([1j], 4), [[1, 1j, -1, -1j]], atol=1e-15)
        assert vandermonde(np.ones(4) * 0.5, 5).shape == (4, 5)

    def test_short_n(self):
        with pytest.raises(ConfigurationError):
            vandermonde([1, 2, 3], 3)


@pytest.fixture(scope="module")
def ml4():
    return MlDecoder(BmoczConfig(4, radius_ml(4)))


class TestMlDecoder:
    def test_gram_hermitian_pd(self, ml4):
        G = ml4.gram
        np.testing.assert_allclose(G, np.conj(np.swapaxes(G, -1, -2)), atol=1e-12)
        assert np.all(np.linalg.eigvalsh(G)[:, 0] > 0)
        assert ml4.n_candidates == 16

    def test_noiseless_identity_channel(self, ml4):
        bits = index_to_bits(np.arange(16), 4)
        y = encode(bits, ml4.cfg)
        bh, zh = ml_decode(y, ml4)
        np.testing.assert_array_equal(bh, bits)
        np.testing.assert_array_equal(zeros_to_bits(zh, ml4.cfg), bits)

    def test_noiseless_flat_channel(self, ml4):
        bits = index_to_bits(np.arange(16), 4)
        y = (0.3 - 0.7j) * encode(bits, ml4.cfg)
        np.testing.assert_array_equal(ml4.decode(y)[0], bits)

    def test_single_sequence(self, ml4):
        b = np.array([1, 0, 1, 1])
        bh, zh = ml_decode(encode(b, ml4.cfg), ml4)
        np.testing.assert_array_equal(bh, b)
        assert zh.shape == (4,)

    def test_quadratic_form_matches_inverse_sqrt_oracle(self, ml4):
        rng = np.random.default_rng(11)
        Y = crandn(rng, (100, ml4.N))
        fast = ml4.metrics(Y)
        for t in range(100):
            for i, z in enumerate(ml4.zero_vectors):
                assert abs(fast[t, i] - ml_metric_direct(Y[t], z)) < 1e-9

    @pytest.mark.parametrize("K", [2, 4, 6, 8])
    def test_projection_matches_whitened(self, K):
        cfg = BmoczConfig(K, 1.4)
        fast, slow = MlDecoder(cfg), MlDecoder(cfg, method="whitened")
        assert fast.method == "projection" and slow.method == "whitened"
        Y = crandn(np.random.default_rng(K), (200, K + 1))
        np.testing.assert_allclose(fast.metrics(Y), slow.metrics(Y), atol=1e-9)
        np.testing.assert_array_equal(fast.decode_index(Y), slow.decode_index(Y))

    def test_longer_input_uses_whitened(self):
        assert MlDecoder(BmoczConfig(3, 1.5), N=6).method == "whitened"
        with pytest.raises(ConfigurationError):
            MlDecoder(BmoczConfig(3, 1.5), method="fast")

    def test_precomputed_matches_per_call(self):
        cfg = BmoczConfig(3, 1.6)
        dec = MlDecoder(cfg, N=6)
        rng = np.random.default_rng(5)
        for _ in range(20):
            y = crandn(rng, 6)
            m = dec.metrics(y)
            for i, z in enumerate(dec.zero_vectors):
                A = vandermonde(z, 6)
                b = A @ y
                ref = np.real(np.conj(b) @ np.linalg.solve(A @ A.conj().T, b))
                assert abs(m[i] - ref) < 1e-10

    def test_metric_nonnegative_and_zero_at_truth(self, ml4):
        rng = np.random.default_rng(2)
        assert np.all(ml4.metrics(crandn(rng, (50, ml4.N))) >= 0)
        x = encode([0, 1, 1, 0], ml4.cfg)
        assert ml4.metrics(x)[0b0110] < 1e-14

    def test_longer_sequence(self):
        cfg = BmoczConfig(3, 1.5)
        dec = MlDecoder(cfg, N=6)
        h = np.array([0.9, 0.3 - 0.2j, 0.1j])
        for i in range(8):
            y = np.convolve(encode(index_to_bits(i, 3), cfg), h)
            assert dec.decode_index(y) == i

    def test_wrong_length(self, ml4):
        with pytest.raises(ConfigurationError):
            ml4.metrics(np.zeros(7))

    def test_ill_conditioned(self):
        with pytest.raises(NumericalError, match="candidate"):
            MlDecoder(BmoczConfig(4, 50.0), N=12)


class TestDizet:
    def test_noiseless_all_patterns(self):
        cfg = BmoczConfig(4, radius_dizet(4))
        bits = index_to_bits(np.arange(16), 4)
        bh, zh = dizet_decode(encode(bits, cfg), cfg)
        np.testing.assert_array_equal(bh, bits)
        np.testing.assert_array_equal(zeros_to_bits(zh, cfg), bits)

    def test_k1_metrics(self):
        cfg = BmoczConfig(1, 2.0)
        inner, outer = dizet_metrics(encode([1], cfg), cfg)
        assert outer[0] < 1e-15 and inner[0] > 0.1
        assert dizet_decode(encode([1], cfg), cfg)[0][0] == 1

    def test_tie_goes_to_inner(self):
        cfg = BmoczConfig(2, 1.5)
        assert list(dizet_decode(np.zeros(3), cfg)[0]) == [0, 0]

    def test_weighting_helps(self):
        # 10 dB, K=7, 10^4 trials
        cfg = BmoczConfig(7, radius_dizet(7))
        rng = np.random.default_rng(2024)
        bits = rng.integers(0, 2, (10_000, 7))
        y = encode(bits, cfg) + np.sqrt(0.1) * crandn(rng, (10_000, 8))
        weighted = np.count_nonzero(dizet_decode(y, cfg)[0] != bits)
        unweighted = np.count_nonzero(dizet_decode(y, cfg, weighted=False)[0] != bits)
        assert weighted < unweighted


@pytest.mark.parametrize(
    "K,radius", [(K, r) for K in range(1, 9) for r in ("ml", "dizet") if not (K == 1 and r == "dizet")]
)
def test_noiseless_perfection_single_tap(K, radius):
    # radius_dizet(1) == 1 collapses the pair, so K=1 only runs with the ML radius
    R = radius_ml(K) if radius == "ml" else radius_dizet(K)
    cfg = BmoczConfig(K, R)
    bits = index_to_bits(np.arange(2**K), K)
    y = (-0.4 + 1.1j) * encode(bits, cfg)
    np.testing.assert_array_equal(MlDecoder(cfg).decode(y)[0], bits)
    np.testing.assert_array_equal(dizet_decode(y, cfg)[0], bits)


@settings(max_examples=40, deadline=None)
@given(
    st.floats(-5, 5).filter(lambda v: abs(v) > 1e-3),
    st.floats(-5, 5),
    st.integers(0, 2**31 - 1),
)
def test_scale_invariance(re, im, seed):
    cfg = BmoczConfig(5, 1.4)
    dec = MlDecoder(cfg)
    rng = np.random.default_rng(seed)
    y = encode(rng.integers(0, 2, 5), cfg) + 0.3 * crandn(rng, 6)
    c = complex(re, im)
    np.testing.assert_array_equal(dec.decode(c * y)[0], dec.decode(y)[0])
    np.testing.assert_array_equal(dizet_decode(c * y, cfg)[0], dizet_decode(y, cfg)[0])
