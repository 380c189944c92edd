import numpy as np
import pytest

from plkeygen import (
    AbcdChannel,
    FrequencyGrid,
    Spectrum,
    Termination,
    abcd_line,
    abcd_shunt,
    cascade_chain,
)


@pytest.fixture(scope="session")
def grid() -> FrequencyGrid:
    return FrequencyGrid(0.1e6, (80e6 - 0.1e6) / 255, 256)


@pytest.fixture(scope="session")
def term(grid) -> Termination:
    return Termination.from_constants(grid, 1.0, 1e4)


def random_reciprocal_channel(grid: FrequencyGrid, rng: np.random.Generator,
                              n_segments: int = 4) -> AbcdChannel:
    """Random cascade of lossy lines, shunts and series elements.

    Built from first principles (not via the topology module) so it can act
    as an independent source of reciprocal two-ports in tests.
    """
    f = grid.frequencies
    blocks = []
    for _ in range(n_segments):
        z0 = rng.uniform(40, 80)
        length = rng.uniform(10, 60)
        a1 = rng.uniform(5e-7, 2e-6)
        gamma = Spectrum(grid, 1e-4 + a1 * np.sqrt(f) + 2j * np.pi * f / 2e8)
        blocks.append(abcd_line(grid, z0, gamma, length))
        kind = rng.integers(0, 2)
        if kind == 0:
            y = rng.uniform(1e-3, 5e-2) * (1 + 0.5j * rng.standard_normal())
            blocks.append(abcd_shunt(grid, y))
        else:
            zs = rng.uniform(5, 200) * (1 + 0.5j * rng.standard_normal())
            one = np.ones(grid.n_bins, complex)
            zero = np.zeros(grid.n_bins, complex)
            blocks.append(AbcdChannel.from_arrays(
                grid, one, np.full(grid.n_bins, zs), zero, one))
    return cascade_chain(blocks)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
