"""Symbol keys from complex CSI spectra: linear levels, Gray bits, coded keys."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import AllBinsMaskedError
from .spectral import Spectrum
from .tdst import BinaryKey


@dataclass(frozen=True, eq=False)
class SymbolKey:
    """Symbols over a 2**nbits-ary alphabet with per-position validity flags.

    ``lsb_value`` records the physical magnitude of one quantization step
    when the key came out of :func:`quantize_levels` (used by the coded
    arrangement); it is not part of the key material itself.
    """

    symbols: np.ndarray
    nbits: int
    mask: np.ndarray
    lsb_value: Optional[float] = None

    def __post_init__(self):
        if not 1 <= self.nbits <= 16:
            raise ValueError("nbits must lie in [1, 16]")
        symbols = np.asarray(self.symbols, dtype=np.int64).copy()
        mask = np.asarray(self.mask, dtype=bool).copy()
        if symbols.shape != mask.shape or symbols.ndim != 1:
            raise ValueError("symbols and mask must be 1-d and equally long")
        if np.any((symbols < 0) | (symbols > 2 ** self.nbits - 1)):
            raise ValueError("symbols outside the alphabet")
        symbols.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "symbols", symbols)
        object.__setattr__(self, "mask", mask)

    def valid_symbols(self) -> np.ndarray:
        return self.symbols[self.mask]

    def __len__(self) -> int:
        return len(self.symbols)


def _round_half_up(x) -> np.ndarray:
    # round-half-away-from-zero for nonnegative inputs; np.round would
    # round ties to even and desynchronize the two ends
    return np.floor(np.asarray(x) + 0.5)


def quantize_levels(csi: Spectrum, nbits: int,
                    mask: Optional[np.ndarray] = None) -> SymbolKey:
    """Linear quantization of |csi| over 2**nbits - 1 levels.

    Magnitudes are normalized by the largest valid bin, so the level pattern
    is invariant to overall link gain; masked bins emit symbol 0 with
    ``mask=False`` and do not influence the normalization.
    """
    if not 1 <= nbits <= 16:
        raise ValueError("nbits must lie in [1, 16]")
    mag = np.abs(csi.values)
    if mask is None:
        mask = np.ones(len(mag), dtype=bool)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != mag.shape:
            raise ValueError("mask length must match the spectrum")
    if not mask.any():
        raise AllBinsMaskedError("no valid bins to quantize")
    peak = float(mag[mask].max())
    levels = 2 ** nbits - 1
    symbols = np.zeros(len(mag), dtype=np.int64)
    if peak > 0:
        symbols[mask] = _round_half_up(mag[mask] / peak * levels).astype(np.int64)
        lsb = peak / levels
    else:
        lsb = 0.0
    return SymbolKey(symbols=symbols, nbits=nbits, mask=mask, lsb_value=lsb)


def gray_encode(key: SymbolKey) -> BinaryKey:
    """Gray-code each valid symbol and concatenate, most significant bit first."""
    valid = key.valid_symbols()
    gray = valid ^ (valid >> 1)
    shifts = np.arange(key.nbits - 1, -1, -1)
    bits = (gray[:, None] >> shifts[None, :]) & 1
    return BinaryKey(bits.reshape(-1).astype(np.uint8))


def gray_decode(key: BinaryKey, nbits: int) -> SymbolKey:
    """Inverse of :func:`gray_encode`; all positions valid."""
    if len(key) % nbits:
        raise ValueError("bit count is not a multiple of nbits")
    bits = key.bits.reshape(-1, nbits).astype(np.int64)
    shifts = np.arange(nbits - 1, -1, -1)
    gray = (bits << shifts[None, :]).sum(axis=1)
    sym = gray.copy()
    shift = 1
    while shift < nbits:
        sym ^= sym >> shift
        shift <<= 1
    return SymbolKey(symbols=sym, nbits=nbits, mask=np.ones(len(sym), dtype=bool))


def coded_arrange(key: SymbolKey, lsb_value: float,
                  full_scale: float = 1.0) -> SymbolKey:
    """Amplitude-aware arrangement over the 2**nbits-ary alphabet.

    The final symbol grades the physical size of one quantization step
    against the finest step a full-scale signal of ``full_scale`` could
    produce (``full_scale / (2**nbits - 1)**2``); every other symbol is
    multiplied by it modulo the alphabet and the grade itself is appended.
    Two spectra with the same shape but different amplitudes therefore stop
    producing the same key.
    """
    if not lsb_value > 0:
        raise ValueError("lsb_value must be positive")
    if not full_scale > 0:
        raise ValueError("full_scale must be positive")
    levels = 2 ** key.nbits - 1
    step = full_scale / levels / levels
    s_last = int(np.clip(_round_half_up(lsb_value / step), 0, levels))
    modulus = levels + 1
    symbols = np.concatenate([(key.symbols * s_last) % modulus, [s_last]])
    mask = np.concatenate([key.mask, [True]])
    return SymbolKey(symbols=symbols, nbits=key.nbits, mask=mask)
