import itertools

import numpy as np
import pytest
from numpy.polynomial import polynomial as npoly

from bmocz.codebook import (
    PolyCodebook,
    RadiusSearchSpec,
    build_codebooks,
    codeword_distance,
    min_codeword_distance,
    min_zero_distance,
    radius_curve,
    radius_dizet,
    radius_ml,
)
from bmocz.codec import BmoczConfig, encode, index_to_bits
from bmocz.errors import ConfigurationError, ResourceError

SQ2 = np.sqrt(2.0)


def brute_force_min(C, metric):
    return min(codeword_distance(C[i], C[j], metric) for i, j in itertools.combinations(range(len(C)), 2))


def dense_grid_oracle(K, step, metric):
    # independent path: numpy root expansion and a Gram matrix
    phases = np.exp(2j * np.pi * np.arange(K) / K)
    bits = np.array(list(itertools.product((0, 1), repeat=K)))
    best_r, best_v = None, -np.inf
    for R in np.arange(1 + step, 4 + step / 2, step):
        zeros = np.where(bits == 1, R, 1 / R) * phases
        C = np.array([npoly.polyfromroots(z) for z in zeros], dtype=complex)
        C /= np.linalg.norm(C, axis=1, keepdims=True)
        G = C.conj() @ C.T
        iu = np.triu_indices(len(C), 1)
        if metric == "phase":
            v = np.min(2 - 2 * np.abs(G[iu]))
        else:
            v = np.min(2 - 2 * G.real[iu])
        if v > best_v + 1e-12:
            best_r, best_v = R, v
    return best_r


class TestBuildCodebooks:
    def test_sizes(self):
        zb, cb = build_codebooks(BmoczConfig(1, 2.0))
        assert len(zb) == len(cb) == 2
        _, cb4 = build_codebooks(BmoczConfig(4, 1.5))
        assert len(cb4) == 16
        assert np.allclose(np.sum(np.abs(cb4.codewords) ** 2, axis=1), 1)

    def test_ordering(self):
        cfg = BmoczConfig(2, SQ2)
        zb, cb = build_codebooks(cfg)
        np.testing.assert_allclose(cb.codewords[0], [-0.4472, 0, 0.8944], atol=1e-4)
        for i in range(4):
            np.testing.assert_allclose(cb.codewords[i], encode(index_to_bits(i, 2), cfg))
        # bit k of the index selects the R zero
        assert abs(zb.zero_vectors[0b10][1]) == pytest.approx(SQ2)
        assert abs(zb.zero_vectors[0b10][0]) == pytest.approx(1 / SQ2)

    def test_distinct(self):
        _, cb = build_codebooks(BmoczConfig(5, 1.3))
        assert min_codeword_distance(cb) > 0

    def test_too_large(self):
        with pytest.raises(ResourceError):
            build_codebooks(BmoczConfig(17, 1.1))


class TestMinCodewordDistance:
    def test_k1_single_pair(self):
        _, cb = build_codebooks(BmoczConfig(1, SQ2))
        expected = 2 * (3 - 2 * SQ2) / 3  # hand expansion of both codewords
        assert min_codeword_distance(cb) == pytest.approx(expected, abs=1e-12)

    def test_duplicate_is_zero(self):
        _, cb = build_codebooks(BmoczConfig(3, 1.5))
        dup = np.vstack([cb.codewords, cb.codewords[2:3]])
        assert min_codeword_distance(dup) == 0.0
        assert min_codeword_distance(dup, metric="phase") == 0.0

    @pytest.mark.parametrize("K", [2, 4, 6, 8])
    @pytest.mark.parametrize("metric", ["euclidean", "phase"])
    def test_bit_exact_against_brute_force(self, K, metric):
        _, cb = build_codebooks(BmoczConfig(K, 1.37))
        assert min_codeword_distance(cb, metric, block=7) == brute_force_min(cb.codewords, metric)

    def test_order_invariant(self):
        _, cb = build_codebooks(BmoczConfig(6, 1.6))
        perm = np.random.default_rng(1).permutation(len(cb))
        for metric in ("euclidean", "phase"):
            assert min_codeword_distance(cb.codewords[perm], metric) == pytest.approx(
                min_codeword_distance(cb, metric), abs=1e-15
            )

    def test_phase_metric_is_lower_bound(self):
        _, cb = build_codebooks(BmoczConfig(5, 2.0))
        assert min_codeword_distance(cb, "phase") <= min_codeword_distance(cb, "euclidean")

    def test_needs_two(self):
        with pytest.raises(ConfigurationError):
            min_codeword_distance(np.ones((1, 3)))


class TestMinZeroDistance:
    def test_k1(self):
        assert min_zero_distance(BmoczConfig(1, 2.0)) == pytest.approx(1.5)

    @pytest.mark.parametrize("K", [2, 3, 4, 8, 13])
    def test_dizet_radius_gap_balance(self, K):
        # at the DiZeT radius the radial gap equals half the chord between
        # adjacent inner zeros (the inner zero's distance to the sector edge)
        R = radius_dizet(K)
        half_inner_chord = np.sin(np.pi / K) / R
        assert abs((R - 1 / R) - half_inner_chord) < 1e-6
        zb, _ = build_codebooks(BmoczConfig(K, R))
        assert min_zero_distance(zb) == pytest.approx(R - 1 / R, abs=1e-12)

    def test_near_unit_radius(self):
        for K in (3, 8):
            d = min_zero_distance(BmoczConfig(K, 1.0001))
            assert d == pytest.approx(1.0001 - 1 / 1.0001, rel=1e-9)
            assert d < 2 * np.sin(np.pi / K) / 1.0001


class TestRadii:
    def test_dizet_values(self):
        assert radius_dizet(2) == pytest.approx(SQ2, abs=1e-12)
        assert radius_dizet(4) == pytest.approx(np.sqrt(1 + np.sqrt(2) / 2), abs=1e-12)
        assert radius_dizet(4) == pytest.approx(1.30656, abs=1e-5)

    def test_dizet_decreasing(self):
        r = [radius_dizet(K) for K in range(2, 200)]
        assert np.all(np.diff(r) < 0) and r[-1] > 1

    @pytest.mark.parametrize("metric", ["phase", "euclidean"])
    def test_ml_matches_dense_grid(self, metric):
        r = radius_ml(4, RadiusSearchSpec(metric=metric))
        assert abs(r - dense_grid_oracle(4, 1e-4, metric)) < 2e-3

    def test_ml_objective_not_worse_than_dizet(self):
        search = RadiusSearchSpec()
        r_ml, r_dz = radius_ml(4, search), radius_dizet(4)
        obj = lambda r: min_codeword_distance(build_codebooks(BmoczConfig(4, r))[1], search.metric)
        assert obj(r_ml) >= obj(r_dz)

    @pytest.mark.parametrize("K", range(4, 9))
    def test_ml_above_dizet(self, K):
        assert radius_ml(K) > radius_dizet(K)

    def test_search_validation(self):
        with pytest.raises(ConfigurationError):
            RadiusSearchSpec(r_max=1.0)
        with pytest.raises(ConfigurationError):
            RadiusSearchSpec(metric="manhattan")
        with pytest.raises(ResourceError):
            radius_ml(14)


class TestRadiusCurve:
    def test_unimodal_on_coarse_grid(self):
        curve = radius_curve(4, [1.1, 1.5, 2.0, 3.0, 4.0])
        s = np.sign(np.diff(curve.d_min))
        assert s[0] > 0 and s[-1] < 0 and np.count_nonzero(np.diff(s)) == 1

    @pytest.mark.parametrize("K", [3, 5, 8])
    def test_near_zero_close_to_unit_radius(self, K):
        assert radius_curve(K, [1.001]).d_min[0] < 0.01

    def test_length_and_csv(self):
        grid = np.linspace(1.05, 3, 9)
        curve = radius_curve(3, grid)
        assert len(curve) == 9
        np.testing.assert_array_equal(curve.R, grid)
        lines = curve.to_csv().splitlines()
        assert lines[0] == "K,R,d_min" and len(lines) == 10

    def test_rejects_r_below_one(self):
        with pytest.raises(ConfigurationError):
            radius_curve(3, [0.9, 1.2])
