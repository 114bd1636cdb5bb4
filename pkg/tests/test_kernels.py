"""Tests for Gaussian kernels, ALD dictionaries and multikernel features."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gp_skrl.errors import EmptyDictionaryError, ShapeMismatchError
from gp_skrl.kernels.dictionary import Dictionary, ald_distance, sparsify
from gp_skrl.kernels.features import FeatureMap, multikernel_feature
from gp_skrl.kernels.gaussian import gaussian_gram, gaussian_kernel
from gp_skrl.schemas.config import KernelConfig

vectors = st.lists(st.floats(-10, 10, allow_nan=False), min_size=3, max_size=3)


def _brute_force_ald(elements: np.ndarray, z: np.ndarray, tau: float) -> float:
    """min_c ||phi(z) - sum c_i phi(d_i)||^2 solved as a dense least-squares problem."""
    K = gaussian_gram(elements, elements, tau)
    k = gaussian_gram(elements, z[None, :], tau)[:, 0]
    c, *_ = np.linalg.lstsq(K, k, rcond=None)
    return float(1.0 - 2.0 * c @ k + c @ K @ c)


class TestGaussianKernel:
    @given(vectors, vectors, st.floats(0.1, 5.0))
    @settings(max_examples=100, deadline=None)
    def test_symmetric_and_bounded(self, a, b, tau):
        k_ab = gaussian_kernel(a, b, tau)
        assert k_ab == pytest.approx(gaussian_kernel(b, a, tau))
        assert 0.0 <= k_ab <= 1.0

    def test_self_similarity_is_one(self):
        assert gaussian_kernel([1.0, 2.0], [1.0, 2.0], 0.5) == 1.0

    def test_known_value(self):
        assert gaussian_kernel([0.0], [1.0], 1.0) == pytest.approx(np.exp(-1.0))

    def test_non_positive_width_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            gaussian_kernel([0.0], [1.0], 0.0)

    def test_gram_is_positive_semidefinite(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(30, 4))
        eig = np.linalg.eigvalsh(gaussian_gram(X, X, 1.3))
        assert eig.min() > -1e-10


class TestALD:
    def test_empty_dictionary_gives_one(self):
        d = Dictionary(2, 1.0, 0.1)
        delta, coeffs = ald_distance([0.3, 0.4], d)
        assert delta == 1.0
        assert coeffs.size == 0

    def test_member_has_zero_residual(self):
        d = Dictionary(2, 1.0, 0.1)
        d.add([0.0, 0.0])
        d.add([1.0, 0.5])
        delta, _ = d.ald([1.0, 0.5])
        assert delta == pytest.approx(0.0, abs=1e-8)

    def test_matches_brute_force_on_random_instances(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            dim = int(rng.integers(1, 4))
            tau = float(rng.uniform(0.5, 2.0))
            candidates = rng.uniform(-3.0, 3.0, size=(int(rng.integers(2, 12)), dim))
            d = sparsify(candidates, KernelConfig(widths=[tau], dict_width=tau, ald_threshold=0.2))
            z = rng.uniform(-3.0, 3.0, size=dim)
            delta, _ = d.ald(z)
            assert delta == pytest.approx(_brute_force_ald(d.elements, z, tau), abs=1e-8)

    def test_two_element_midpoint(self):
        d = Dictionary(1, 1.0, 0.1)
        d.add([0.0])
        d.add([2.0])
        delta, coeffs = d.ald([1.0])
        assert delta == pytest.approx(_brute_force_ald(d.elements, np.array([1.0]), 1.0), abs=1e-8)
        assert coeffs[0] == pytest.approx(coeffs[1])

    def test_adding_elements_never_increases_residual(self):
        rng = np.random.default_rng(3)
        queries = rng.uniform(-2.0, 2.0, size=(20, 3))
        d = Dictionary(3, 1.0, 0.05)
        previous = np.ones(len(queries))
        for point in rng.uniform(-2.0, 2.0, size=(15, 3)):
            if d.ald(point)[0] <= 1e-6:
                continue
            d.add(point)
            current = np.array([d.ald(q)[0] for q in queries])
            assert np.all(current <= previous + 1e-10)
            previous = current

    def test_wrong_dimension_rejected(self):
        d = Dictionary(3, 1.0, 0.1)
        with pytest.raises(ValueError, match="dimension 3"):
            d.add([1.0, 2.0])


class TestSparsify:
    def test_retained_elements_exceeded_threshold_when_admitted(self):
        rng = np.random.default_rng(5)
        cfg = KernelConfig(widths=[1.0], dict_width=1.0, ald_threshold=0.3)
        d = sparsify(rng.uniform(-2.0, 2.0, size=(300, 2)), cfg)
        for i in range(1, len(d)):
            prefix = Dictionary(2, 1.0, 0.3)
            for e in d.elements[:i]:
                prefix.add(e)
            assert prefix.ald(d.elements[i])[0] > 0.3

    def test_every_sample_is_spanned_by_the_final_dictionary(self):
        rng = np.random.default_rng(6)
        cfg = KernelConfig(widths=[1.0], dict_width=1.0, ald_threshold=0.25)
        samples = rng.uniform(-2.0, 2.0, size=(200, 3))
        d = sparsify(samples, cfg)
        assert all(d.ald(z)[0] <= 0.25 + 1e-10 for z in samples)

    def test_first_sample_seeds_the_dictionary(self):
        d = sparsify(np.array([[1.0, 1.0], [1.0, 1.0]]), KernelConfig(dict_width=1.0))
        assert len(d) == 1
        np.testing.assert_array_equal(d.elements[0], [1.0, 1.0])

    def test_lower_threshold_keeps_more_elements(self):
        rng = np.random.default_rng(8)
        samples = rng.uniform(-1.0, 1.0, size=(400, 3))
        coarse = sparsify(samples, KernelConfig(dict_width=0.9, ald_threshold=0.5))
        fine = sparsify(samples, KernelConfig(dict_width=0.9, ald_threshold=0.1))
        assert len(fine) > len(coarse)

    def test_cached_inverse_stays_accurate(self):
        rng = np.random.default_rng(9)
        d = sparsify(rng.uniform(-2.0, 2.0, size=(500, 6)), KernelConfig(dict_width=0.9, ald_threshold=0.3))
        assert d.inverse_error() < 1e-8

    def test_input_scale_is_applied(self):
        cfg = KernelConfig(dict_width=1.0, ald_threshold=0.1, input_scale=[10.0])
        d = sparsify(np.array([[0.0], [1.0]]), cfg)
        # scaled distance 0.1 is well inside one kernel width
        assert len(d) == 1

    def test_save_load_is_bit_exact(self, tmp_path):
        rng = np.random.default_rng(10)
        cfg = KernelConfig(dict_width=0.9, ald_threshold=0.3, input_scale=[6, 6, 1, 6, 3, 3])
        d = sparsify(rng.uniform(-3.0, 3.0, size=(200, 6)), cfg)
        loaded = Dictionary.load(d.save(tmp_path / "dict.npz"))
        assert np.array_equal(loaded.elements, d.elements)
        assert np.array_equal(loaded.gram_inv, d.gram_inv)
        assert np.array_equal(loaded.scale, d.scale)
        assert loaded.tau == d.tau


class TestFeatures:
    def _dictionary(self) -> Dictionary:
        d = Dictionary(2, 1.0, 0.1)
        for p in ([0.0, 0.0], [1.0, 0.0], [0.0, 2.0]):
            d.add(p)
        return d

    def test_width_major_layout(self):
        d = self._dictionary()
        fmap = FeatureMap(d, [0.5, 2.0])
        phi = fmap([0.5, 0.5])
        assert phi.shape == (1, 6)
        np.testing.assert_allclose(phi[0, :3], gaussian_gram(d.elements, [[0.5, 0.5]], 0.5)[:, 0])
        np.testing.assert_allclose(phi[0, 3:], gaussian_gram(d.elements, [[0.5, 0.5]], 2.0)[:, 0])

    def test_multikernel_feature_length(self):
        d = self._dictionary()
        cfg = KernelConfig(widths=[0.7, 0.8, 0.9, 1.0])
        assert multikernel_feature([0.1, 0.2], d, cfg).shape == (12,)

    def test_batch_rows(self):
        fmap = FeatureMap(self._dictionary(), [1.0])
        assert fmap(np.zeros((7, 2))).shape == (7, 3)

    def test_empty_dictionary_rejected(self):
        with pytest.raises(EmptyDictionaryError):
            FeatureMap(Dictionary(2, 1.0, 0.1), [1.0])

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ShapeMismatchError, match="dimension 2"):
            FeatureMap(self._dictionary(), [1.0])([1.0, 2.0, 3.0])
