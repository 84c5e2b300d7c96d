import pytest

from phaseplane.geometry import DyadicGrid, Tile
from phaseplane.wave_packets import build_mother_wavelet


@pytest.fixture(scope="session")
def mw():
    return build_mother_wavelet(N=16384, L=512.0)


@pytest.fixture(scope="session")
def grid():
    return DyadicGrid()


def make_tile(k, n, m, grid=None):
    return Tile.at(grid or DyadicGrid(), k, n, m)
