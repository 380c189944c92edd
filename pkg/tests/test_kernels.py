"""Cross-checks between the jitted kernels and their numpy mirrors."""
import numpy as np
import pytest

from plkeygen import _kernels
from plkeygen._kernels import (
    ROOT_RULE_CONTINUITY,
    ROOT_RULE_PASSIVITY,
    _cascade_chain_numpy,
    _peak_indices_numpy,
    _tmt_solve_numpy,
    cascade_chain,
    peak_indices,
    tmt_solve,
)

needs_numba = pytest.mark.skipif(not _kernels.NUMBA_ENABLED,
                                 reason="numba backend disabled")


def random_stack(rng, n_mat=6, n_bins=128):
    stack = rng.standard_normal((n_mat, 4, n_bins)) \
        + 1j * rng.standard_normal((n_mat, 4, n_bins))
    return stack.astype(np.complex128)


def solver_inputs(rng, n_bins=256):
    from conftest import random_reciprocal_channel
    from plkeygen import FrequencyGrid, Termination, ctf_forward, zin_port1, zin_port2

    grid = FrequencyGrid(0.1e6, (80e6 - 0.1e6) / (n_bins - 1), n_bins)
    term = Termination.from_constants(grid, 1.0, 1e4)
    ch = random_reciprocal_channel(grid, rng)
    h1 = ctf_forward(ch, term).values
    z1 = zin_port1(ch, term.z_l).values
    z2 = zin_port2(ch, term.z_l).values
    zt = term.z_t.values
    zl = term.z_l.values
    return ch, h1, z1, z2, zt, zl


class TestCascadeChain:
    def test_numpy_matches_direct_product(self, rng):
        stack = random_stack(rng, n_mat=3, n_bins=16)
        out = _cascade_chain_numpy(stack)
        for i in range(16):
            total = np.eye(2, dtype=complex)
            for k in range(3):
                a, b, c, d = stack[k, :, i]
                total = total @ np.array([[a, b], [c, d]])
            assert np.allclose(out[:, i], total.reshape(-1), rtol=1e-12)

    @needs_numba
    def test_backends_agree(self, rng):
        # instruction-level choices (SIMD/FMA) leave ulp-scale differences
        stack = random_stack(rng)
        assert np.allclose(cascade_chain(stack), _cascade_chain_numpy(stack),
                           rtol=1e-12, atol=0)

    @needs_numba
    def test_backend_is_deterministic(self, rng):
        stack = random_stack(rng)
        assert np.array_equal(cascade_chain(stack), cascade_chain(stack))


class TestPeakIndices:
    def test_numpy_reference_cases(self):
        power = np.array([0.0, 1.0, 0.04, 0.0, 0.25, 0.0])
        assert list(_peak_indices_numpy(power, 0.1)) == [1, 4]
        assert list(_peak_indices_numpy(np.linspace(1, 0, 8), 0.0)) == []
        assert list(_peak_indices_numpy(np.array([1.0]), 0.0)) == []

    @needs_numba
    def test_backends_agree(self, rng):
        for _ in range(20):
            power = np.abs(rng.standard_normal(512))
            floor = float(rng.uniform(0, 0.5)) * float(power.max())
            assert np.array_equal(peak_indices(power, floor),
                                  _peak_indices_numpy(power, floor))


class TestTmtSolve:
    @needs_numba
    @pytest.mark.parametrize("rule", [ROOT_RULE_PASSIVITY, ROOT_RULE_CONTINUITY])
    def test_backends_agree(self, rng, rule):
        ch, h1, z1, z2, zt, zl = solver_inputs(rng)
        got = tmt_solve(h1, z1, z2, zt, zl, rule=rule)
        ref = _tmt_solve_numpy(h1, z1, z2, zt, zl, rule, 1e-9, 1e-6, 1e-10)
        assert np.array_equal(got[1], ref[1])  # branch
        assert np.array_equal(got[2], ref[2])  # status
        assert np.allclose(got[0], ref[0], rtol=1e-9, atol=1e-12)
        assert np.allclose(got[3], ref[3], rtol=1e-6, atol=1e-12)

    def test_numpy_path_recovers_truth(self, rng):
        ch, h1, z1, z2, zt, zl = solver_inputs(rng)
        abcd, branch, status, residual = _tmt_solve_numpy(
            h1, z1, z2, zt, zl, ROOT_RULE_PASSIVITY, 1e-9, 1e-6, 1e-10)
        truth = ch.entries()
        assert np.all(status == _kernels.STATUS_OK)
        assert np.max(np.abs(abcd - truth) / (np.abs(truth) + 1e-12)) < 1e-6
