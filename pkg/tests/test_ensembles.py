import numpy as np
import pytest

from phaseplane.ensembles import (
    DisjPropEnsembleSpec,
    amplitude_constrained,
    random_bounded,
    random_disjprop_collection,
    random_frequency_choice,
    random_set,
)
from phaseplane.geometry import Universe, check_disjointness_property, tile_le_u
from phaseplane.sampling import MeasurableSet, Sampling
from phaseplane.utils import CapacityError, PreconditionError
from phaseplane.values import ComplexScalar, HilbertVector, SchattenMatrix

S = Sampling(half_length=64.0, count=4096)


@pytest.mark.parametrize("seed", range(5))
def test_random_disjprop_collection(seed):
    spec = DisjPropEnsembleSpec(seed=seed, tree_count=4, tiles_per_tree=4)
    ensemble = random_disjprop_collection(spec)

    assert check_disjointness_property(ensemble.trees)
    assert 1 <= len(ensemble.trees) <= 4
    assert len(ensemble.trees) + ensemble.dropped == 4
    for T in ensemble.trees:
        assert T.kind == "up"
        assert all(tile_le_u(P, T.top) for P in T.tiles)
        assert all(spec.universe.contains(P) for P in T.tiles)
    assert ensemble.tree_length > 0

    # Seeded
    again = random_disjprop_collection(spec)
    assert again.trees == ensemble.trees
    assert again.evicted == ensemble.evicted

    # Builds a valid collection
    collection = ensemble.collection()
    assert len(collection) == sum(len(T) for T in ensemble.trees)


def test_ensemble_spec_validation():
    with pytest.raises(PreconditionError):
        DisjPropEnsembleSpec(tree_count=0)
    with pytest.raises(PreconditionError):
        DisjPropEnsembleSpec(tiles_per_tree=0)


def test_capacity_error():
    # Room for a single tile
    universe = Universe(k_min=0, k_max=0, time_min=0.0, time_max=1.0, freq_min=0.0, freq_max=1.0)
    with pytest.raises(CapacityError):
        random_disjprop_collection(DisjPropEnsembleSpec(tree_count=2, universe=universe))


def test_random_set_and_frequency_choice():
    rng = np.random.default_rng(0)
    A = random_set(S, rng, (-8.0, 8.0), pieces=3, length=2.0)
    assert 0 < A.measure <= 6.0
    assert A.issubset(MeasurableSet.interval(S, -8.0, 8.0))

    N = random_frequency_choice(S, rng, (0.0, 4.0), cell=1.0)
    assert np.all((N.values >= 0.0) & (N.values < 4.0))
    # Constant on unit cells: 32 samples each
    cells = N.values.reshape(-1, 32)
    np.testing.assert_array_equal(cells, cells[:, :1].repeat(32, axis=1))


@pytest.mark.parametrize(
    "space,dual",
    [(ComplexScalar(), False), (HilbertVector(d=3), False), (SchattenMatrix(p=4.0, d=2), True)],
)
def test_amplitude_constrained(space, dual):
    rng = np.random.default_rng(1)
    F = MeasurableSet.interval(S, -2.0, 3.0)
    result = amplitude_constrained(S, space, rng, F, (0.0, 2.0), dual=dual)
    norm = space.dual_norm if dual else space.norm
    norms = norm(result.f.samples)
    assert np.all(norms <= F.indicator + 1e-12)
    assert np.all(norms[~F.mask] == 0)
    assert np.max(norms) > 0
    assert result.residual >= 0

    with pytest.raises(PreconditionError):
        amplitude_constrained(S, space, rng, F, (2.0, 0.0))


def test_random_bounded():
    rng = np.random.default_rng(2)
    f = random_bounded(S, HilbertVector(d=2), rng, (0.0, 2.0), (-4.0, 4.0))
    assert np.max(f.pointwise_norm()) == pytest.approx(1.0)
