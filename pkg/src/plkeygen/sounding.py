"""Simulated channel estimation: noisy observation and impulse responses."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .spectral import Spectrum


@dataclass(frozen=True)
class NoisySounder:
    """Estimator model: white per-bin noise, averaged over repeated soundings.

    ``snr_h_db`` applies to transfer-function observations, ``snr_z_db`` to
    impedance observations; either may be ``inf`` for a perfect estimator.
    Noise is generated deterministically from ``(seed, stream)`` so distinct
    observables and parties draw independent but reproducible noise.
    """

    snr_h_db: float = 30.0
    snr_z_db: float = 30.0
    n_avg: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.n_avg < 1:
            raise ValueError(f"n_avg must be >= 1, got {self.n_avg}")


def observe(truth: Spectrum, sounder: NoisySounder,
            snr_db: Optional[float] = None, stream: int = 0) -> Spectrum:
    """Observe ``truth`` through the sounder.

    Each of the ``n_avg`` soundings adds circularly-symmetric complex noise
    scaled so the per-bin SNR equals the configured value; the soundings are
    averaged.  ``snr_db`` defaults to the sounder's transfer-function SNR.
    """
    snr = sounder.snr_h_db if snr_db is None else snr_db
    if np.isinf(snr):
        return truth
    rng = np.random.default_rng(np.random.SeedSequence(sounder.seed, spawn_key=(stream,)))
    sigma = np.abs(truth.values) * 10.0 ** (-snr / 20.0)
    shape = (sounder.n_avg, truth.grid.n_bins)
    noise = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    noise *= sigma / np.sqrt(2.0)
    return Spectrum(truth.grid, truth.values + noise.mean(axis=0))


@dataclass(frozen=True, eq=False)
class ImpulseResponse:
    """Magnitude trace |h(k * t_step)| derived from a band-limited spectrum."""

    t_step: float
    samples: np.ndarray
    origin: float = 0.0
    window: "WindowSpec" = None

    def __post_init__(self):
        if not self.t_step > 0:
            raise ValueError("t_step must be positive")
        samples = np.asarray(self.samples, dtype=np.float64).copy()
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    def __len__(self) -> int:
        return len(self.samples)


WindowSpec = Union[None, float, str]


def raised_cosine_window(n: int, rolloff: float) -> np.ndarray:
    """Flat window with raised-cosine tapers covering ``rolloff`` of each edge."""
    if not 0 <= rolloff <= 1:
        raise ValueError("rolloff must lie in [0, 1]")
    w = np.ones(n)
    if rolloff == 0 or n < 3:
        return w
    edge = int(np.floor(rolloff * (n - 1) / 2.0))
    if edge == 0:
        return w
    k = np.arange(edge + 1)
    ramp = 0.5 * (1.0 + np.cos(np.pi * (2.0 * k / (rolloff * (n - 1)) - 1.0)))
    w[: edge + 1] = ramp
    w[n - edge - 1:] = ramp[::-1]
    return w


def make_window(n: int, window: WindowSpec) -> np.ndarray:
    """Resolve a window spec: None (no taper), a raised-cosine roll-off in
    [0, 1], or ``"kaiser:<beta>"``."""
    if window is None:
        return np.ones(n)
    if isinstance(window, str):
        kind, _, arg = window.partition(":")
        if kind == "kaiser":
            return np.kaiser(n, float(arg))
        raise ValueError(f"unknown window spec {window!r}")
    return raised_cosine_window(n, float(window))


def impulse_response(h: Spectrum, pad_factor: int,
                     window: WindowSpec = "kaiser:4.0") -> ImpulseResponse:
    """Inverse transform of ``h`` zero-padded by ``pad_factor * n_bins`` bins.

    Zero padding interpolates the time trace (sinc interpolation); samples at
    the original instants are preserved.  The taper suppresses the sidelobes
    of the brick-wall measurement band, which would otherwise show up as
    false peaks near the detection floor; pass ``None`` to invert the raw
    spectrum.
    """
    if pad_factor < 0:
        raise ValueError(f"pad_factor must be >= 0, got {pad_factor}")
    n = h.grid.n_bins
    vals = h.values
    if window is not None:
        vals = vals * make_window(n, window)
    if pad_factor:
        vals = np.concatenate([vals, np.zeros(pad_factor * n, dtype=np.complex128)])
    time_domain = np.fft.ifft(vals) * (1 + pad_factor)
    t_step = 1.0 / ((1 + pad_factor) * n * h.grid.f_step)
    return ImpulseResponse(t_step=t_step, samples=np.abs(time_domain),
                           window=window)
