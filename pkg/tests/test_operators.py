import numpy as np
import pytest

from phaseplane.geometry import TileCollection, Tree
from phaseplane.operators import (
    FrequencyChoice,
    PeriodicFunction,
    convergence_errors,
    frequency_pairs,
    get_operator,
    hardy_littlewood,
    maximal_partial_sum,
    model_carleson,
    partial_sum,
    partial_sum_by_convolution,
    periodic_maximal,
    periodic_partial_sum,
    schatten_test_function,
    signed_tree_operator,
    signed_tree_ratio,
    subfamily_cross_pairings,
    tree_operator,
)
from phaseplane.sampling import MeasurableSet, SampledFunction, Sampling
from phaseplane.utils import PreconditionError
from phaseplane.values import HilbertVector
from phaseplane.wave_packets import synthesize_packet

from .conftest import make_tile

S = Sampling(half_length=64.0, count=1024)


def gaussian_function(sampling=S):
    return SampledFunction.from_callable(sampling, lambda x: np.exp(-np.pi * x**2))


def test_partial_sum_is_a_projection():
    f = gaussian_function()
    g = partial_sum(f, -0.5, 1.0)
    np.testing.assert_allclose(partial_sum(g, -0.5, 1.0).samples, g.samples, atol=1e-13)
    # The whole band gives f back
    np.testing.assert_allclose(partial_sum(f, -4.0, 4.0).samples, f.samples, atol=1e-13)

    with pytest.raises(PreconditionError):
        partial_sum(f, 1.0, 1.0)


def test_partial_sum_agrees_with_dirichlet_convolution():
    f = gaussian_function()
    indices = [500, 512, 520]
    spectral = partial_sum(f, -3.0, 3.0).samples[indices]
    direct = partial_sum_by_convolution(f, -3.0, 3.0, indices)
    np.testing.assert_allclose(direct, spectral, atol=1e-6)

    # A band that cuts through the spectrum
    spectral = partial_sum(f, -0.5, 1.0).samples[indices]
    direct = partial_sum_by_convolution(f, -0.5, 1.0, indices)
    np.testing.assert_allclose(direct, spectral, atol=1e-2)


def test_maximal_partial_sum():
    f = gaussian_function()
    single = maximal_partial_sum(f, [(-0.5, 1.0)])
    np.testing.assert_allclose(single, np.abs(partial_sum(f, -0.5, 1.0).samples), atol=1e-13)

    family = frequency_pairs(1.0, 1)
    assert len(family) == 10
    assert all(m < n for m, n in family)
    star = maximal_partial_sum(f, family)
    for m, n in family:
        assert np.all(star >= np.abs(partial_sum(f, m, n).samples) - 1e-12)

    # Vector values use the pointwise norm
    H = HilbertVector(d=2)
    v = SampledFunction(S, np.stack([f.samples, 2 * f.samples], axis=1), H)
    np.testing.assert_allclose(
        maximal_partial_sum(v, [(-0.5, 1.0)]), np.sqrt(5) * single, rtol=1e-10, atol=1e-14
    )

    with pytest.raises(PreconditionError):
        maximal_partial_sum(f, [])
    with pytest.raises(PreconditionError):
        maximal_partial_sum(f, [(1.0, 0.0)])


def test_periodic_partial_sum():
    f = PeriodicFunction.from_callable(lambda x: np.exp(6j * np.pi * x), 64)
    np.testing.assert_allclose(periodic_partial_sum(f, -2, 2).samples, 0.0, atol=1e-13)
    np.testing.assert_allclose(periodic_partial_sum(f, 0, 3).samples, f.samples, atol=1e-13)
    assert periodic_partial_sum(f, 3, 3).sup_distance(f) < 1e-13
    np.testing.assert_allclose(periodic_maximal(f, [(-2, 2), (0, 3)]), 1.0)

    with pytest.raises(PreconditionError):
        periodic_partial_sum(f, 1, 0)
    with pytest.raises(PreconditionError):
        periodic_maximal(f, [])


@pytest.mark.parametrize("p", [4 / 3, 2.0, 4.0])
def test_schatten_partial_sums_converge(p):
    f = schatten_test_function(count=1024, p=p)
    assert f.samples.shape == (1024, 2, 2)
    degrees = [1, 2, 4, 8, 16, 32, 64]
    errors = convergence_errors(f, degrees)
    assert list(errors) == degrees
    values = [errors[n] for n in degrees]
    assert all(b < a for a, b in zip(values, values[1:]))
    assert errors[64] < 1e-3


def test_model_carleson_picks_tiles_by_frequency(mw, grid):
    P = make_tile(0, 0, 1)
    f = synthesize_packet(mw, P).values
    collection = TileCollection(grid, (P,))

    # N(x) in w_{P_u} everywhere
    inside = FrequencyChoice.constant(mw.sampling, P.w_u.center)
    out = model_carleson(mw, f, inside, collection)
    np.testing.assert_allclose(out.samples, f.samples / 20, atol=1e-10)

    # N(x) in w_{P_d}
    below = FrequencyChoice.constant(mw.sampling, P.w_d.center)
    assert model_carleson(mw, f, below, collection).norm(2) == 0.0

    empty = TileCollection(grid, ())
    assert model_carleson(mw, f, inside, empty).norm(2) == 0.0
    with pytest.raises(PreconditionError):
        model_carleson(mw, f, inside, TileCollection(grid, (make_tile(3, 0, 0),)))
    with pytest.raises(PreconditionError):
        FrequencyChoice(mw.sampling, np.zeros(3))


def test_tree_operators(mw):
    top = make_tile(1, 0, 1)
    T = Tree(frozenset([top, make_tile(0, 0, 0)]), top, "up")
    f = synthesize_packet(mw, make_tile(0, 0, 0)).values + synthesize_packet(mw, top).values

    A = tree_operator(mw, T, f)
    ones = signed_tree_operator(mw, T, f, [1, 1])
    np.testing.assert_allclose(ones.samples, A.samples)
    keyed = signed_tree_operator(mw, T, f, {P: 1.0 for P in T.tiles})
    np.testing.assert_allclose(keyed.samples, A.samples)

    with pytest.raises(PreconditionError):
        signed_tree_operator(mw, T, f, [1])
    with pytest.raises(PreconditionError):
        signed_tree_operator(mw, T, f, [1, 2])

    rng = np.random.default_rng(0)
    assert signed_tree_ratio(mw, T, f, 2.0, rng) > 0
    zero = SampledFunction.zeros(mw.sampling)
    assert signed_tree_ratio(mw, T, zero, 2.0, rng) == 0.0

    # Tiles at the same time index modulo 20 are orthogonal in an up-tree
    assert subfamily_cross_pairings(mw, T) < 1e-8


def test_hardy_littlewood():
    ones = SampledFunction.from_callable(S, lambda x: np.ones_like(x))
    np.testing.assert_allclose(hardy_littlewood(ones), 1.0)

    spike = np.zeros(1024)
    spike[512] = 1.0
    M = hardy_littlewood(SampledFunction(S, spike))
    assert M[512] == 1.0
    assert M[513] == 0.5
    assert np.all(M > 0)

    A = MeasurableSet.interval(S, 0.0, 1.0)
    MA = hardy_littlewood(A)
    assert np.all(MA >= A.indicator)
    assert np.all(MA[A.mask] == 1.0)

    f = gaussian_function()
    assert np.all(hardy_littlewood(f) >= np.abs(f.samples) - 1e-15)


def test_get_operator():
    assert get_operator("CN") is model_carleson
    assert get_operator("M") is hardy_littlewood
    with pytest.raises(PreconditionError):
        get_operator("T")
