"""Frequency-grid spectra and reciprocal two-port (transmission-matrix) algebra.

All values are dense complex arrays on a uniform frequency grid and are
immutable after construction; every operation is a pure function.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from . import _kernels
from .errors import DegenerateDenominatorError, GridMismatchError, ReciprocityError

#: determinant tolerance enforced when a two-port is built by this package
RECIPROCITY_TOL_BUILD = 1e-9
#: looser tolerance accepted for two-ports arriving from external data
RECIPROCITY_TOL_INPUT = 1e-6
#: denominators below this magnitude are an error, never +/-inf
DENOM_FLOOR = 1e-30

Complexish = Union[complex, float, np.ndarray, "Spectrum"]


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid: ``f_start + k * f_step`` for ``k < n_bins``."""

    f_start: float
    f_step: float
    n_bins: int

    def __post_init__(self):
        if not self.f_step > 0:
            raise ValueError(f"f_step must be positive, got {self.f_step}")
        if self.n_bins < 2:
            raise ValueError(f"n_bins must be at least 2, got {self.n_bins}")
        if self.f_start < 0:
            raise ValueError(f"f_start must be nonnegative, got {self.f_start}")

    @property
    def frequencies(self) -> np.ndarray:
        return self.f_start + np.arange(self.n_bins) * self.f_step

    @property
    def f_stop(self) -> float:
        return self.f_start + (self.n_bins - 1) * self.f_step


def broadband_grid(n_bins: int = 1024) -> FrequencyGrid:
    """Default broadband grid covering 0.1-80 MHz."""
    return FrequencyGrid(0.1e6, (80e6 - 0.1e6) / (n_bins - 1), n_bins)


def narrowband_grid(n_bins: int = 512) -> FrequencyGrid:
    """Narrowband grid covering 3-500 kHz."""
    return FrequencyGrid(3e3, (500e3 - 3e3) / (n_bins - 1), n_bins)


def _coerce_values(grid: FrequencyGrid, values) -> np.ndarray:
    if isinstance(values, Spectrum):
        if values.grid != grid:
            raise GridMismatchError("spectrum defined on a different grid")
        return values.values
    arr = np.asarray(values, dtype=np.complex128)
    if arr.ndim == 0:
        arr = np.full(grid.n_bins, complex(arr), dtype=np.complex128)
    if arr.shape != (grid.n_bins,):
        raise ValueError(f"expected {grid.n_bins} values, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("spectrum values must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Complex samples over a shared :class:`FrequencyGrid`."""

    grid: FrequencyGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _coerce_values(self.grid, self.values))

    @classmethod
    def constant(cls, grid: FrequencyGrid, value: complex) -> "Spectrum":
        return cls(grid, np.full(grid.n_bins, complex(value), dtype=np.complex128))

    def __len__(self) -> int:
        return self.grid.n_bins


def _same_grid(*spectra: Spectrum) -> FrequencyGrid:
    grid = spectra[0].grid
    for s in spectra[1:]:
        if s.grid != grid:
            raise GridMismatchError("spectra do not share one frequency grid")
    return grid


def _checked_div(num: np.ndarray, den: np.ndarray, what: str) -> np.ndarray:
    if np.min(np.abs(den)) < DENOM_FLOOR:
        raise DegenerateDenominatorError(f"near-zero denominator in {what}")
    return num / den


@dataclass(frozen=True, eq=False)
class AbcdChannel:
    """Per-frequency 2x2 transmission matrix of a reciprocal two-port.

    B is in ohm, C in siemens, A and D dimensionless.  Construction enforces
    the unit-determinant reciprocity condition |A*D - C*B - 1| <= tol per bin.
    """

    grid: FrequencyGrid
    A: Spectrum
    B: Spectrum
    C: Spectrum
    D: Spectrum

    def __post_init__(self):
        _same_grid(self.A, self.B, self.C, self.D)
        if self.A.grid != self.grid:
            raise GridMismatchError("entries and channel grid differ")
        defect = np.max(np.abs(self.reciprocity_defect()))
        if defect > RECIPROCITY_TOL_BUILD:
            raise ReciprocityError(
                f"determinant deviates from 1 by {defect:.3e} (> {RECIPROCITY_TOL_BUILD})"
            )

    @classmethod
    def from_arrays(cls, grid: FrequencyGrid, a, b, c, d) -> "AbcdChannel":
        return cls(grid, Spectrum(grid, a), Spectrum(grid, b),
                   Spectrum(grid, c), Spectrum(grid, d))

    def reciprocity_defect(self) -> np.ndarray:
        return self.A.values * self.D.values - self.C.values * self.B.values - 1.0

    def entries(self) -> np.ndarray:
        """Stacked (4, n_bins) array of A, B, C, D values."""
        return np.stack([self.A.values, self.B.values, self.C.values, self.D.values])


@dataclass(frozen=True, eq=False)
class Termination:
    """Transmit/receive impedance pair; real parts must be nonnegative."""

    z_t: Spectrum
    z_l: Spectrum

    def __post_init__(self):
        _same_grid(self.z_t, self.z_l)
        for name, spec in (("z_t", self.z_t), ("z_l", self.z_l)):
            worst = np.min(spec.values.real)
            if worst < -1e-12 * max(1.0, float(np.max(np.abs(spec.values)))):
                raise ValueError(f"{name} has negative real part ({worst:.3e})")

    @classmethod
    def from_constants(cls, grid: FrequencyGrid, z_t: complex, z_l: complex) -> "Termination":
        return cls(Spectrum.constant(grid, z_t), Spectrum.constant(grid, z_l))

    @property
    def grid(self) -> FrequencyGrid:
        return self.z_t.grid


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def abcd_identity(grid: FrequencyGrid) -> AbcdChannel:
    """Unit two-port: A = D = 1, B = C = 0."""
    one = np.ones(grid.n_bins, dtype=np.complex128)
    zero = np.zeros(grid.n_bins, dtype=np.complex128)
    return AbcdChannel.from_arrays(grid, one, zero, zero, one)


def abcd_line(grid: FrequencyGrid, z0: complex, gamma: Complexish,
              length: float) -> AbcdChannel:
    """Uniform line segment: A = D = cosh(gl), B = z0 sinh(gl), C = sinh(gl)/z0."""
    if not length > 0:
        raise ValueError(f"length must be positive, got {length}")
    if abs(z0) == 0:
        raise ValueError("characteristic impedance must be nonzero")
    if isinstance(gamma, Spectrum):
        g = gamma.values * length
    else:
        g = np.broadcast_to(np.asarray(gamma, dtype=np.complex128), (grid.n_bins,)) * length
    ch = np.cosh(g)
    sh = np.sinh(g)
    return AbcdChannel.from_arrays(grid, ch, z0 * sh, sh / z0, ch)


def abcd_shunt(grid: FrequencyGrid, y: Complexish) -> AbcdChannel:
    """Shunt admittance block: A = D = 1, B = 0, C = y."""
    yv = y.values if isinstance(y, Spectrum) else np.broadcast_to(
        np.asarray(y, dtype=np.complex128), (grid.n_bins,))
    one = np.ones(grid.n_bins, dtype=np.complex128)
    zero = np.zeros(grid.n_bins, dtype=np.complex128)
    return AbcdChannel.from_arrays(grid, one, zero, yv, one)


def cascade(left: AbcdChannel, right: AbcdChannel) -> AbcdChannel:
    """Per-bin matrix product ``left @ right``."""
    if left.grid != right.grid:
        raise GridMismatchError("cascade of two-ports on different grids")
    stack = np.stack([left.entries(), right.entries()])
    a, b, c, d = _kernels.cascade_chain(stack)
    return AbcdChannel.from_arrays(left.grid, a, b, c, d)


def cascade_chain(blocks: Sequence[AbcdChannel]) -> AbcdChannel:
    """Cascade an ordered sequence of two-ports sharing one grid."""
    if not blocks:
        raise ValueError("cannot cascade an empty sequence")
    grid = blocks[0].grid
    for blk in blocks[1:]:
        if blk.grid != grid:
            raise GridMismatchError("cascade of two-ports on different grids")
    if len(blocks) == 1:
        return blocks[0]
    stack = np.stack([blk.entries() for blk in blocks])
    a, b, c, d = _kernels.cascade_chain(stack)
    return AbcdChannel.from_arrays(grid, a, b, c, d)


def reverse_direction(ch: AbcdChannel) -> AbcdChannel:
    """Two-port seen from the opposite direction: A and D swap, B and C stay."""
    defect = np.max(np.abs(ch.reciprocity_defect()))
    if defect > RECIPROCITY_TOL_INPUT:
        raise ReciprocityError(
            f"refusing to reverse a non-reciprocal two-port (defect {defect:.3e})"
        )
    return AbcdChannel(ch.grid, ch.D, ch.B, ch.C, ch.A)


# ---------------------------------------------------------------------------
# transfer functions and input impedances
# ---------------------------------------------------------------------------

def _ctf(a, b, c, d, zt, zl) -> np.ndarray:
    den = zl * a + b + zl * zt * c + zt * d
    if np.min(np.abs(den)) < DENOM_FLOOR:
        raise DegenerateDenominatorError("degenerate termination/network in CTF")
    return zl / den


def ctf_forward(ch: AbcdChannel, term: Termination) -> Spectrum:
    """Voltage transfer function for transmission from port 1 to port 2."""
    if term.grid != ch.grid:
        raise GridMismatchError("termination grid differs from channel grid")
    vals = _ctf(ch.A.values, ch.B.values, ch.C.values, ch.D.values,
                term.z_t.values, term.z_l.values)
    return Spectrum(ch.grid, vals)


def ctf_reverse(ch: AbcdChannel, term: Termination) -> Spectrum:
    """Voltage transfer function for transmission from port 2 to port 1."""
    if term.grid != ch.grid:
        raise GridMismatchError("termination grid differs from channel grid")
    vals = _ctf(ch.D.values, ch.B.values, ch.C.values, ch.A.values,
                term.z_t.values, term.z_l.values)
    return Spectrum(ch.grid, vals)


def zin_port1(ch: AbcdChannel, z_l: Complexish) -> Spectrum:
    """Input impedance at port 1 with port 2 terminated by ``z_l``."""
    zl = z_l.values if isinstance(z_l, Spectrum) else np.broadcast_to(
        np.asarray(z_l, dtype=np.complex128), (ch.grid.n_bins,))
    num = ch.A.values + _checked_div(ch.B.values, zl, "zin_port1")
    den = ch.C.values + _checked_div(ch.D.values, zl, "zin_port1")
    return Spectrum(ch.grid, _checked_div(num, den, "zin_port1"))


def zin_port2(ch: AbcdChannel, z_l: Complexish) -> Spectrum:
    """Input impedance at port 2 with port 1 terminated by ``z_l``."""
    zl = z_l.values if isinstance(z_l, Spectrum) else np.broadcast_to(
        np.asarray(z_l, dtype=np.complex128), (ch.grid.n_bins,))
    num = ch.D.values + _checked_div(ch.B.values, zl, "zin_port2")
    den = ch.C.values + _checked_div(ch.A.values, zl, "zin_port2")
    return Spectrum(ch.grid, _checked_div(num, den, "zin_port2"))


# ---------------------------------------------------------------------------
# symmetric normalization of trans-impedance / trans-admittance
# ---------------------------------------------------------------------------

def normalize_transimpedance(i1g: Spectrum, v2: Spectrum, i2g: Spectrum,
                             v1: Spectrum, zin1: Spectrum, zin2: Spectrum,
                             term: Termination) -> tuple[Spectrum, Spectrum]:
    """Divider-corrected trans-impedances ``(Z21', Z12')``.

    The corrected injected current and open-circuit receive voltage remove
    the source/load divider effect, so both directions agree for any
    reciprocal two-port regardless of the actual terminations.
    """
    grid = _same_grid(i1g, v2, i2g, v1, zin1, zin2, term.z_t, term.z_l)
    zt, zl = term.z_t.values, term.z_l.values
    i1i = _checked_div(zt * i1g.values, zin1.values + zt, "normalize_transimpedance")
    v2oc = _checked_div((zin2.values + zl) * v2.values, zl, "normalize_transimpedance")
    z21 = _checked_div(v2oc, i1i, "normalize_transimpedance")
    i2i = _checked_div(zt * i2g.values, zin2.values + zt, "normalize_transimpedance")
    v1oc = _checked_div((zin1.values + zl) * v1.values, zl, "normalize_transimpedance")
    z12 = _checked_div(v1oc, i2i, "normalize_transimpedance")
    return Spectrum(grid, z21), Spectrum(grid, z12)


def normalize_transadmittance(v1g: Spectrum, i2: Spectrum, v2g: Spectrum,
                              i1: Spectrum, zin1: Spectrum, zin2: Spectrum,
                              term: Termination) -> tuple[Spectrum, Spectrum]:
    """Divider-corrected trans-admittances ``(Y21', Y12')`` (dual case)."""
    grid = _same_grid(v1g, i2, v2g, i1, zin1, zin2, term.z_t, term.z_l)
    zt, zl = term.z_t.values, term.z_l.values
    v1i = _checked_div(zin1.values * v1g.values, zin1.values + zt, "normalize_transadmittance")
    i2cc = _checked_div((zin2.values + zl) * i2.values, zin2.values, "normalize_transadmittance")
    y21 = _checked_div(i2cc, v1i, "normalize_transadmittance")
    v2i = _checked_div(zin2.values * v2g.values, zin2.values + zt, "normalize_transadmittance")
    i1cc = _checked_div((zin1.values + zl) * i1.values, zin1.values, "normalize_transadmittance")
    y12 = _checked_div(i1cc, v2i, "normalize_transadmittance")
    return Spectrum(grid, y21), Spectrum(grid, y12)


def transimpedance_observables(ch: AbcdChannel, term: Termination,
                               i1g: complex = 1.0) -> tuple[Spectrum, Spectrum, Spectrum, Spectrum]:
    """Simulate the raw current-drive measurements ``(I1g, V2, I2g, V1)``.

    A current generator with parallel impedance z_t drives one port while
    the other is loaded with z_l; the received voltage is taken across the
    load.  Both transmission directions are produced.
    """
    grid = ch.grid
    if term.grid != grid:
        raise GridMismatchError("termination grid differs from channel grid")
    zt, zl = term.z_t.values, term.z_l.values
    a, b, c, d = ch.A.values, ch.B.values, ch.C.values, ch.D.values
    z1 = zin_port1(ch, term.z_l).values
    z2 = zin_port2(ch, term.z_l).values
    i1g_v = np.full(grid.n_bins, complex(i1g), dtype=np.complex128)
    inj1 = _checked_div(i1g_v * zt, zt + z1, "transimpedance_observables")
    v2 = _checked_div(zl * inj1, c * zl + d, "transimpedance_observables")
    inj2 = _checked_div(i1g_v * zt, zt + z2, "transimpedance_observables")
    v1 = _checked_div(zl * inj2, c * zl + a, "transimpedance_observables")
    return (Spectrum(grid, i1g_v), Spectrum(grid, v2),
            Spectrum(grid, i1g_v), Spectrum(grid, v1))


def transadmittance_observables(ch: AbcdChannel, term: Termination,
                                v1g: complex = 1.0) -> tuple[Spectrum, Spectrum, Spectrum, Spectrum]:
    """Simulate the raw voltage-drive measurements ``(V1g, I2, V2g, I1)``."""
    grid = ch.grid
    if term.grid != grid:
        raise GridMismatchError("termination grid differs from channel grid")
    zt, zl = term.z_t.values, term.z_l.values
    a, b, c, d = ch.A.values, ch.B.values, ch.C.values, ch.D.values
    z1 = zin_port1(ch, term.z_l).values
    z2 = zin_port2(ch, term.z_l).values
    v1g_v = np.full(grid.n_bins, complex(v1g), dtype=np.complex128)
    vp1 = _checked_div(v1g_v * z1, z1 + zt, "transadmittance_observables")
    i2 = _checked_div(vp1, a * zl + b, "transadmittance_observables")
    vp2 = _checked_div(v1g_v * z2, z2 + zt, "transadmittance_observables")
    i1 = _checked_div(vp2, d * zl + b, "transadmittance_observables")
    return (Spectrum(grid, v1g_v), Spectrum(grid, i2),
            Spectrum(grid, v1g_v), Spectrum(grid, i1))


def asymmetry_metric(h1: Spectrum, h2: Spectrum) -> float:
    """Mean absolute forward/reverse difference, normalized by mean |h1|."""
    _same_grid(h1, h2)
    ref = float(np.mean(np.abs(h1.values)))
    diff = float(np.mean(np.abs(h1.values - h2.values)))
    if ref < DENOM_FLOOR:
        if diff < DENOM_FLOOR:
            return 0.0
        raise DegenerateDenominatorError("reference spectrum has zero mean magnitude")
    return diff / ref
