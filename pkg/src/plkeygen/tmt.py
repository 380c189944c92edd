"""Transmission-matrix recovery from locally observable quantities.

One end measures its forward transfer function and its own input impedance;
the far end's input impedance arrives over the public channel.  Together
with the unit-determinant reciprocity constraint this pins the full per-bin
transmission matrix down to a two-root ambiguity, resolved by passivity and
spectral continuity.  The reverse transfer function then follows without
ever transmitting it.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DegenerateDenominatorError, GridMismatchError
from .spectral import AbcdChannel, Spectrum, Termination

_ROOT_RULES = {
    "passivity": _kernels.ROOT_RULE_PASSIVITY,
    "continuity": _kernels.ROOT_RULE_CONTINUITY,
}

#: per-bin status codes mirrored from the kernel
STATUS_OK = _kernels.STATUS_OK
STATUS_DEGENERATE = _kernels.STATUS_DEGENERATE
STATUS_NO_ROOT = _kernels.STATUS_NO_ROOT
STATUS_BOTH_REJECTED = _kernels.STATUS_BOTH_REJECTED
STATUS_DET_FAIL = _kernels.STATUS_DET_FAIL


@dataclass(frozen=True, eq=False)
class TmtObservation:
    """What one communication end knows: H1 and both input impedances."""

    h1_hat: Spectrum
    zin1_hat: Spectrum
    zin2_hat: Spectrum
    term: Termination

    def __post_init__(self):
        grid = self.h1_hat.grid
        for spec in (self.zin1_hat, self.zin2_hat, self.term.z_t, self.term.z_l):
            if spec.grid != grid:
                raise GridMismatchError("observation spectra on different grids")


@dataclass(frozen=True)
class SolveOptions:
    root_rule: str = "passivity"
    det_tol: float = 1e-9
    passivity_tol: float = 1e-6
    rank_tol: float = 1e-10

    def __post_init__(self):
        if self.root_rule not in _ROOT_RULES:
            raise ValueError(f"unknown root_rule {self.root_rule!r}")


@dataclass(frozen=True, eq=False)
class TmtSolution:
    """Recovered two-port plus per-bin diagnostics.

    Bins that could not be solved are flagged ``valid=False`` (see ``status``
    for the reason) and carry identity matrix entries as placeholders; they
    must be excluded downstream via the mask.
    """

    abcd: AbcdChannel
    h2_hat: Spectrum
    residual: np.ndarray
    branch: np.ndarray
    valid: np.ndarray
    status: np.ndarray


def solve_abcd(obs: TmtObservation, opts: SolveOptions = SolveOptions()) -> TmtSolution:
    """Per-bin recovery of (A, B, C, D) from one end's observables.

    The three measurement equations define a one-parameter affine family of
    matrices; substituting it into the determinant constraint leaves two
    candidate roots per bin.  ``opts.root_rule`` picks one: ``passivity``
    keeps the candidate whose probe input impedances stay passive (falling
    back to continuity with the previous bin, then to the smaller root);
    ``continuity`` tracks the previous bin's solution directly.
    """
    grid = obs.h1_hat.grid
    if np.min(np.abs(obs.h1_hat.values)) < 1e-30:
        raise DegenerateDenominatorError("observed H1 has a zero bin")
    abcd, branch, status, residual = _kernels.tmt_solve(
        obs.h1_hat.values,
        obs.zin1_hat.values,
        obs.zin2_hat.values,
        obs.term.z_t.values,
        obs.term.z_l.values,
        rule=_ROOT_RULES[opts.root_rule],
        det_tol=opts.det_tol,
        pass_tol=opts.passivity_tol,
        rank_tol=opts.rank_tol,
    )
    channel = AbcdChannel.from_arrays(grid, abcd[0], abcd[1], abcd[2], abcd[3])
    h2 = recover_h2_values(abcd, obs.term)
    return TmtSolution(
        abcd=channel,
        h2_hat=Spectrum(grid, h2),
        residual=residual,
        branch=branch,
        valid=status == STATUS_OK,
        status=status,
    )


def recover_h2_values(abcd: np.ndarray, term: Termination) -> np.ndarray:
    zt, zl = term.z_t.values, term.z_l.values
    den = zl * abcd[3] + abcd[1] + zl * zt * abcd[2] + zt * abcd[0]
    if np.min(np.abs(den)) < 1e-30:
        raise DegenerateDenominatorError("zero denominator when reconstructing H2")
    return zl / den


def recover_h2(sol: TmtSolution, term: Termination) -> Spectrum:
    """Reverse transfer function implied by the recovered matrix."""
    return Spectrum(sol.abcd.grid, recover_h2_values(sol.abcd.entries(), term))


def delta_mismatch(h2_alice: Spectrum, h2_bob: Spectrum) -> np.ndarray:
    """Per-bin relative disagreement |(a - b) / a|; NaN where a is zero."""
    if h2_alice.grid != h2_bob.grid:
        raise GridMismatchError("spectra on different grids")
    ref = np.abs(h2_alice.values)
    out = np.full(h2_alice.grid.n_bins, np.nan)
    ok = ref >= 1e-30
    out[ok] = np.abs(h2_alice.values[ok] - h2_bob.values[ok]) / ref[ok]
    return out
