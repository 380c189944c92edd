import numpy as np
import pytest

from plkeygen import FrequencyGrid, NoisySounder, Spectrum, impulse_response, observe
from plkeygen.sounding import make_window, raised_cosine_window


class TestObserve:
    def test_infinite_snr_is_exact(self, grid):
        truth = Spectrum.constant(grid, 0.5 - 0.2j)
        out = observe(truth, NoisySounder(snr_h_db=np.inf, seed=1))
        assert np.array_equal(out.values, truth.values)

    def test_deterministic_per_stream(self, grid):
        truth = Spectrum.constant(grid, 1.0)
        sounder = NoisySounder(seed=9)
        a = observe(truth, sounder, stream=3)
        b = observe(truth, sounder, stream=3)
        c = observe(truth, sounder, stream=4)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)

    def test_rms_error_matches_snr_and_averaging(self):
        # 30 dB, 100 averages: relative rms = 10^(-30/20)/sqrt(100) = 3.16e-4...
        # use per-bin statistics over 10^4 bins
        g = FrequencyGrid(1e6, 1e3, 10_000)
        truth = Spectrum.constant(g, 1.0)
        out = observe(truth, NoisySounder(snr_h_db=30.0, n_avg=100, seed=5))
        rms = float(np.sqrt(np.mean(np.abs(out.values - truth.values) ** 2)))
        expect = 10 ** (-30 / 20) / np.sqrt(100)
        assert expect * 0.8 < rms < expect * 1.2

    def test_error_scales_with_magnitude(self, grid):
        vals = np.linspace(0.1, 2.0, grid.n_bins).astype(complex)
        truth = Spectrum(grid, vals)
        out = observe(truth, NoisySounder(snr_h_db=20.0, n_avg=1, seed=2))
        rel = np.abs(out.values - truth.values) / np.abs(truth.values)
        # relative error is magnitude-independent: compare low/high halves
        lo = np.sqrt(np.mean(rel[: grid.n_bins // 2] ** 2))
        hi = np.sqrt(np.mean(rel[grid.n_bins // 2:] ** 2))
        assert 0.5 < lo / hi < 2.0

    def test_n_avg_validation(self):
        with pytest.raises(ValueError):
            NoisySounder(n_avg=0)


class TestImpulseResponse:
    def test_flat_spectrum_is_delta(self, grid):
        h = Spectrum.constant(grid, 1.0)
        ir = impulse_response(h, pad_factor=0, window=None)
        assert ir.samples[0] == pytest.approx(1.0)
        assert np.max(ir.samples[1:]) < 1e-12

    def test_shift_theorem(self, grid):
        k = 17
        tau = k / (grid.n_bins * grid.f_step)
        h = Spectrum(grid, np.exp(-2j * np.pi * grid.frequencies * tau))
        ir = impulse_response(h, pad_factor=0, window=None)
        assert int(np.argmax(ir.samples)) == k
        assert ir.samples[k] == pytest.approx(1.0)

    def test_shift_theorem_interpolated(self, grid):
        k, pad = 9, 3
        tau = k / (grid.n_bins * grid.f_step)
        h = Spectrum(grid, np.exp(-2j * np.pi * grid.frequencies * tau))
        ir = impulse_response(h, pad_factor=pad, window=None)
        assert int(np.argmax(ir.samples)) == k * (1 + pad)
        assert ir.t_step == pytest.approx(1.0 / ((1 + pad) * grid.n_bins * grid.f_step))

    def test_pad_zero_equals_plain_ifft(self, grid, rng):
        vals = rng.standard_normal(grid.n_bins) + 1j * rng.standard_normal(grid.n_bins)
        h = Spectrum(grid, vals)
        ir = impulse_response(h, pad_factor=0, window=None)
        assert np.allclose(ir.samples, np.abs(np.fft.ifft(vals)), rtol=1e-12)

    def test_parseval(self, grid, rng):
        vals = rng.standard_normal(grid.n_bins) + 1j * rng.standard_normal(grid.n_bins)
        h = Spectrum(grid, vals)
        ir = impulse_response(h, pad_factor=0, window=None)
        time_energy = float(np.sum(ir.samples ** 2))
        freq_energy = float(np.mean(np.abs(vals) ** 2))
        assert time_energy == pytest.approx(freq_energy, rel=1e-9)

    def test_interpolation_preserves_original_samples(self, grid, rng):
        vals = rng.standard_normal(grid.n_bins) + 1j * rng.standard_normal(grid.n_bins)
        h = Spectrum(grid, vals)
        base = impulse_response(h, pad_factor=0, window="kaiser:4.0")
        fine = impulse_response(h, pad_factor=3, window="kaiser:4.0")
        assert np.allclose(fine.samples[:: 4], base.samples, rtol=1e-9, atol=1e-12)

    def test_negative_pad_rejected(self, grid):
        with pytest.raises(ValueError):
            impulse_response(Spectrum.constant(grid, 1.0), pad_factor=-1)


class TestWindows:
    def test_none_is_flat(self):
        assert np.all(make_window(64, None) == 1.0)

    def test_raised_cosine_limits(self):
        assert np.all(raised_cosine_window(64, 0.0) == 1.0)
        hann_like = raised_cosine_window(64, 1.0)
        assert hann_like[0] == pytest.approx(0.0, abs=1e-12)
        assert hann_like[32] == pytest.approx(1.0, rel=1e-2)

    def test_kaiser_spec(self):
        w = make_window(128, "kaiser:4.0")
        assert np.array_equal(w, np.kaiser(128, 4.0))

    def test_invalid_specs(self):
        with pytest.raises(ValueError):
            make_window(64, "hamming:1")
        with pytest.raises(ValueError):
            raised_cosine_window(64, 1.5)
