import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plkeygen import (
    BinaryKey,
    SymbolKey,
    ZeroEnergyError,
    abs_correlation,
    det_correlation,
    key_distance,
    key_entropy,
    space_freq_correlation,
    zin_ctf_correlation,
)

finite_complex = st.complex_numbers(min_magnitude=0, max_magnitude=1e6,
                                    allow_nan=False, allow_infinity=False)


class TestDetCorrelation:
    def test_self_correlation_is_one(self, rng):
        x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
        assert det_correlation(x, x) == pytest.approx(1.0)

    def test_scaled_copy_has_unit_modulus(self, rng):
        x = rng.standard_normal(32) + 1j * rng.standard_normal(32)
        c = 0.3 - 2.7j
        assert abs(det_correlation(x, c * x)) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert det_correlation([1, 0], [0, 1]) == 0

    def test_zero_energy_rejected(self):
        with pytest.raises(ZeroEnergyError):
            det_correlation([0, 0], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            det_correlation([1, 2], [1, 2, 3])

    @given(st.lists(finite_complex, min_size=1, max_size=32),
           st.lists(finite_complex, min_size=1, max_size=32))
    @settings(max_examples=200, deadline=None)
    def test_cauchy_schwarz(self, xs, ys):
        n = min(len(xs), len(ys))
        x, y = np.array(xs[:n]), np.array(ys[:n])
        if np.sum(np.abs(x) ** 2) == 0 or np.sum(np.abs(y) ** 2) == 0:
            return
        assert abs(det_correlation(x, y)) <= 1 + 1e-9


class TestAbsCorrelation:
    def test_phase_removed(self, rng):
        x = np.abs(rng.standard_normal(32)) + 0.1
        phases = np.exp(1j * rng.uniform(0, 2 * np.pi, 32))
        assert abs_correlation(x, x * phases) == pytest.approx(1.0)

    def test_orthogonal(self):
        assert abs_correlation([1, 0], [0, 1]) == 0.0

    def test_ensemble_ordering(self, rng):
        # magnitude correlation dominates the complex one on average for
        # independent random spectra (positivity of magnitudes)
        det_vals, abs_vals = [], []
        for _ in range(50):
            x = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            y = rng.standard_normal(64) + 1j * rng.standard_normal(64)
            det_vals.append(abs(det_correlation(x, y)))
            abs_vals.append(abs_correlation(x, y))
        assert np.mean(abs_vals) >= np.mean(det_vals)


class TestEnsembleCorrelations:
    def test_single_spectrum_diagonal(self, rng):
        x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        assert space_freq_correlation([x], 3, 3) == pytest.approx(1.0)

    def test_diagonal_is_real_for_single_realization(self, rng):
        x = rng.standard_normal(16) + 1j * rng.standard_normal(16)
        r = space_freq_correlation([x], 5, 5)
        assert abs(r.imag) < 1e-12

    def test_independent_ensemble_decorrelates(self, rng):
        ensemble = [rng.standard_normal(8) + 1j * rng.standard_normal(8)
                    for _ in range(100)]
        assert abs(space_freq_correlation(ensemble, 2, 5)) <= 0.05
        assert abs(space_freq_correlation(ensemble, 3, 3)) <= 0.05

    def test_zin_ctf_variant(self, rng):
        zins = [rng.standard_normal(8) + 1j * rng.standard_normal(8)
                for _ in range(100)]
        ctfs = [rng.standard_normal(8) + 1j * rng.standard_normal(8)
                for _ in range(100)]
        assert abs(zin_ctf_correlation(zins, ctfs, 1, 6)) <= 0.05
        assert abs(zin_ctf_correlation([zins[0]], [ctfs[0]], 2, 2)) == pytest.approx(1.0)

    def test_pairing_check(self, rng):
        with pytest.raises(ValueError):
            zin_ctf_correlation([rng.standard_normal(4)],
                                [rng.standard_normal(4)] * 2, 0, 0)


class TestKeyDistance:
    def test_identical_zero(self):
        assert key_distance(BinaryKey([1, 0, 1]), BinaryKey([1, 0, 1])) == 0.0

    def test_binary_hamming(self):
        assert key_distance(BinaryKey([1, 0, 1, 1]), BinaryKey([0, 0, 1, 0])) == 2.0

    def test_quaternary_example(self):
        a = SymbolKey(symbols=[3, 0], nbits=2, mask=[True, True])
        b = SymbolKey(symbols=[0, 3], nbits=2, mask=[True, True])
        assert key_distance(a, b) == pytest.approx(2.0)

    def test_both_all_zero(self):
        assert key_distance(BinaryKey([0, 0]), BinaryKey([0, 0])) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            key_distance(BinaryKey([1]), BinaryKey([1, 0]))

    @given(st.lists(st.integers(0, 1), min_size=1, max_size=24),
           st.lists(st.integers(0, 1), min_size=1, max_size=24),
           st.lists(st.integers(0, 1), min_size=1, max_size=24))
    @settings(max_examples=200, deadline=None)
    def test_binary_metric_properties(self, a, b, c):
        n = min(len(a), len(b), len(c))
        ka, kb, kc = (np.array(v[:n]) for v in (a, b, c))
        assert key_distance(ka, kb) == key_distance(kb, ka)
        assert key_distance(ka, ka) == 0.0
        assert key_distance(ka, kc) <= key_distance(ka, kb) + key_distance(kb, kc)


class TestKeyEntropy:
    def test_all_zero_keys(self):
        keys = [BinaryKey([0, 0, 0])] * 10
        assert key_entropy(keys) == 0.0

    def test_fair_iid_bits(self):
        rng = np.random.default_rng(17)
        keys = rng.integers(0, 2, size=(10_000, 8))
        assert key_entropy(list(keys)) == pytest.approx(1.0, abs=0.02)

    def test_deterministic_pattern(self):
        keys = [BinaryKey([0, 1, 0, 1])] * 25
        assert key_entropy(keys) == 0.0

    def test_uniform_symbols(self):
        rng = np.random.default_rng(3)
        keys = rng.integers(0, 4, size=(20_000, 4))
        assert key_entropy(list(keys)) == pytest.approx(2.0, abs=0.02)
