"""Key generation from impulse-response peak positions.

Forward and reverse responses of a reciprocal two-port share their peak
support (though not the peak amplitudes), so both ends can blockize the
peak arrival times into the same binary key without exchanging it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .sounding import ImpulseResponse, WindowSpec, impulse_response
from .spectral import Spectrum


@dataclass(frozen=True, eq=False)
class PeakSet:
    """Strictly increasing sample indices of detected local maxima."""

    indices: np.ndarray
    t_step: float

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64).copy()
        if idx.ndim != 1:
            raise ValueError("indices must be one-dimensional")
        if idx.size > 1 and not np.all(np.diff(idx) > 0):
            raise ValueError("peak indices must be strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    def times(self) -> np.ndarray:
        return self.indices * self.t_step

    def __len__(self) -> int:
        return len(self.indices)


@dataclass(frozen=True, eq=False)
class BinaryKey:
    """Fixed-length sequence of {0, 1} symbols."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.uint8).copy()
        if bits.ndim != 1:
            raise ValueError("bits must be one-dimensional")
        if np.any(bits > 1):
            raise ValueError("bits must be 0 or 1")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def ones_count(self) -> int:
        return int(self.bits.sum())

    def __len__(self) -> int:
        return len(self.bits)

    def __str__(self) -> str:
        return "".join("1" if b else "0" for b in self.bits)


@dataclass(frozen=True)
class TdstConfig:
    """End-to-end settings for the peak-position key pipeline.

    ``epsilon_samples`` is the block duration in samples of the interpolated
    trace; ``gamma`` is the relative energy floor for peak detection; ``m``
    limits the key to its first m one-blocks.
    """

    pad_factor: int = 4
    gamma: float = 0.01
    epsilon_samples: int = 3
    n_blocks: int = 200
    m: int = 5
    window: "WindowSpec" = "kaiser:4.0"

    def __post_init__(self):
        if not 0 < self.gamma < 1:
            raise ValueError("gamma must lie strictly between 0 and 1")
        if self.pad_factor < 0 or self.epsilon_samples < 1:
            raise ValueError("pad_factor must be >= 0 and epsilon_samples >= 1")
        if self.n_blocks < 1 or self.m < 1:
            raise ValueError("n_blocks and m must be >= 1")


def detect_peaks(h: ImpulseResponse, gamma: float) -> PeakSet:
    """Interior local maxima of |h|^2 at or above ``gamma * max |h|^2``.

    The rise is strict and the fall non-strict, so plateaus resolve to their
    earliest sample; boundary samples are never peaks.
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie strictly between 0 and 1")
    if len(h) == 0:
        raise ValueError("empty impulse response")
    power = h.samples.astype(np.float64) ** 2
    floor = gamma * float(power.max())
    return PeakSet(_kernels.peak_indices(power, floor), h.t_step)


def blockize(peaks: PeakSet, epsilon: float, n_blocks: int) -> BinaryKey:
    """OR the peaks into ``n_blocks`` time blocks of duration ``epsilon``.

    ``epsilon`` must be an integer multiple of the trace sampling period;
    peaks beyond the covered span are ignored.
    """
    if n_blocks < 1:
        raise ValueError("n_blocks must be >= 1")
    ratio = epsilon / peaks.t_step
    eps_samples = int(round(ratio))
    if eps_samples < 1 or abs(ratio - eps_samples) > 1e-9 * max(1.0, ratio):
        raise ValueError("epsilon must be a positive integer multiple of t_step")
    bits = np.zeros(n_blocks, dtype=np.uint8)
    blocks = peaks.indices // eps_samples
    bits[blocks[blocks < n_blocks]] = 1
    return BinaryKey(bits)


def limit_first_m(key: BinaryKey, m: int) -> BinaryKey:
    """Clear every one after the m-th one."""
    if m < 1:
        raise ValueError("m must be >= 1")
    keep = np.cumsum(key.bits) <= m
    return BinaryKey(key.bits * keep.astype(np.uint8))


def tdst_key(h_observed: Spectrum, cfg: TdstConfig = TdstConfig()) -> BinaryKey:
    """Interpolate, detect peaks, blockize and limit: the full binary key."""
    ir = impulse_response(h_observed, cfg.pad_factor, cfg.window)
    peaks = detect_peaks(ir, cfg.gamma)
    key = blockize(peaks, cfg.epsilon_samples * ir.t_step, cfg.n_blocks)
    return limit_first_m(key, cfg.m)


def peak_support_coincidence(h1: Spectrum, h2: Spectrum,
                             cfg: TdstConfig = TdstConfig(),
                             tol_samples: int = 1,
                             match_gamma: Optional[float] = None) -> float:
    """Fraction of the leading peaks of ``h1`` whose delay recurs in ``h2``.

    The first ``min(cfg.m, #peaks)`` peaks of ``h1`` (the early arrivals,
    which stay sharp and resolvable; later echoes merge into broad clusters)
    count as matched when a local maximum of ``h2`` lies within
    ``tol_samples`` interpolated samples.  Peak amplitudes are direction
    dependent, so the candidate maxima of ``h2`` are taken above the much
    lower floor ``match_gamma`` (default ``cfg.gamma / 100``): a detectable
    peak of one direction may fall below the detection threshold in the
    other while still marking the same path delay.  Returns 1.0 when ``h1``
    has no peaks at all.
    """
    if h1.grid != h2.grid:
        raise ValueError("spectra must share one grid")
    if match_gamma is None:
        match_gamma = cfg.gamma / 100.0
    ir1 = impulse_response(h1, cfg.pad_factor, cfg.window)
    ir2 = impulse_response(h2, cfg.pad_factor, cfg.window)
    p1 = detect_peaks(ir1, cfg.gamma)
    p2 = detect_peaks(ir2, match_gamma)
    if len(p1) == 0:
        return 1.0
    lead = p1.indices[: min(cfg.m, len(p1))]
    if len(p2) == 0:
        return 0.0
    matched = sum(1 for t in lead if np.min(np.abs(p2.indices - t)) <= tol_samples)
    return matched / len(lead)
