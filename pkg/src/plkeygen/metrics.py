"""Evaluation statistics: correlation coefficients, key distance, entropy."""
from __future__ import annotations

from typing import Sequence, Union

import numpy as np

from .errors import ZeroEnergyError
from .quantize import SymbolKey
from .spectral import Spectrum
from .tdst import BinaryKey

KeyLike = Union[BinaryKey, SymbolKey, np.ndarray, Sequence[int]]


def _as_array(x) -> np.ndarray:
    if isinstance(x, Spectrum):
        return x.values
    if isinstance(x, BinaryKey):
        return x.bits.astype(np.float64)
    if isinstance(x, SymbolKey):
        return x.symbols.astype(np.float64)
    return np.asarray(x)


def det_correlation(x, y) -> complex:
    """Normalized inner product sum(x * conj(y)) / sqrt(E_x * E_y).

    Self-correlation is exactly 1 and the modulus never exceeds 1.
    """
    xv = _as_array(x).astype(np.complex128)
    yv = _as_array(y).astype(np.complex128)
    if xv.shape != yv.shape or xv.ndim != 1 or xv.size < 1:
        raise ValueError("inputs must be equally long 1-d sequences")
    ex = float(np.sum(np.abs(xv) ** 2))
    ey = float(np.sum(np.abs(yv) ** 2))
    if ex == 0.0 or ey == 0.0:
        raise ZeroEnergyError("correlation of a zero-energy sequence")
    return complex(np.sum(xv * np.conj(yv)) / np.sqrt(ex * ey))


def abs_correlation(x, y) -> float:
    """Correlation of the element-wise magnitudes (phases removed)."""
    return float(np.real(det_correlation(np.abs(_as_array(x)), np.abs(_as_array(y)))))


def _ensemble_matrix(ensemble) -> np.ndarray:
    rows = [_as_array(e).astype(np.complex128) for e in ensemble]
    if not rows:
        raise ValueError("ensemble must not be empty")
    return np.stack(rows)


def space_freq_correlation(ensemble, ell: int, m: int) -> complex:
    """Cross-realization correlation between frequency bins ``ell`` and ``m``.

    The expectation runs over independently drawn realization pairs of an
    ensemble sharing a transmitter; for a single realization it degenerates
    to the deterministic bin product.
    """
    mat = _ensemble_matrix(ensemble)
    num = np.mean(mat[:, ell]) * np.conj(np.mean(mat[:, m]))
    den = np.sqrt(np.mean(np.abs(mat[:, ell]) ** 2) * np.mean(np.abs(mat[:, m]) ** 2))
    if den == 0.0:
        raise ZeroEnergyError("zero-energy bins in ensemble correlation")
    return complex(num / den)


def zin_ctf_correlation(zin_ensemble, ctf_ensemble, ell: int, m: int) -> complex:
    """Correlation between input impedances and transfer functions that
    share the same transmitter, at bins ``ell`` and ``m``."""
    zmat = _ensemble_matrix(zin_ensemble)
    hmat = _ensemble_matrix(ctf_ensemble)
    if zmat.shape[0] != hmat.shape[0]:
        raise ValueError("ensembles must pair one impedance with one CTF per realization")
    num = np.mean(zmat[:, ell]) * np.conj(np.mean(hmat[:, m]))
    den = np.sqrt(np.mean(np.abs(zmat[:, ell]) ** 2) * np.mean(np.abs(hmat[:, m]) ** 2))
    if den == 0.0:
        raise ZeroEnergyError("zero-energy bins in ensemble correlation")
    return complex(num / den)


def key_distance(ka: KeyLike, kb: KeyLike) -> float:
    """Sum of absolute symbol differences over the largest symbol present.

    Equals the Hamming distance for binary keys; the normalization caps the
    per-symbol contribution at 1 so alphabets of different size compare.
    """
    a = _as_array(ka).astype(np.float64)
    b = _as_array(kb).astype(np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("keys must be equally long 1-d sequences")
    top = max(float(a.max(initial=0.0)), float(b.max(initial=0.0)))
    if top == 0.0:
        return 0.0  # both all-zero, hence identical
    return float(np.sum(np.abs(a - b)) / top)


def key_entropy(keys: Sequence[KeyLike]) -> float:
    """Plug-in entropy (bits/symbol) of the per-position symbol distribution,
    averaged over positions of an ensemble of equally long keys."""
    mat = np.stack([_as_array(k).astype(np.int64) for k in keys])
    n_real, n_pos = mat.shape
    if n_real < 1 or n_pos < 1:
        raise ValueError("need at least one key with at least one position")
    total = 0.0
    for pos in range(n_pos):
        _, counts = np.unique(mat[:, pos], return_counts=True)
        p = counts / n_real
        total += float(-(p * np.log2(p)).sum())
    return total / n_pos
