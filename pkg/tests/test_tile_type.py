import math

import numpy as np
import pytest

from phaseplane.config import ExperimentConfig
from phaseplane.density_energy import EnergyContext, energy
from phaseplane.ensembles import DisjPropEnsembleSpec, random_bounded, random_disjprop_collection
from phaseplane.geometry import union_of_trees
from phaseplane.operators import FrequencyChoice
from phaseplane.sampling import MeasurableSet, SampledFunction, Sampling
from phaseplane.tile_type import (
    EXPERIMENTS,
    RatioReport,
    RatioRow,
    experiment_label,
    fourier_tile_type_ratio,
    hilbert_basic_ratio,
    improved_energy_ratio,
    lambda_grid,
    large_p_sum,
    log_tile_type_ratio,
    major_subset,
    make_instance,
    operator_norm_ratio,
    restricted_weak_type,
    run_experiment,
    run_instance,
    two_case_pairing,
    weak_type_ratio,
)
from phaseplane.utils import PreconditionError
from phaseplane.values import HilbertVector, SchattenMatrix

from .conftest import make_tile

PAIRING_EXPERIMENTS = ("restricted_weak_type", "two_case")


@pytest.fixture(scope="module")
def small_config():
    return ExperimentConfig().with_changes(
        **{
            "ensemble.seed_count": 2,
            "ensemble.sizes": [1, 2],
            "ensemble.tree_count": 2,
            "ensemble.tiles_per_tree": 3,
        }
    )


@pytest.fixture(scope="module")
def trees():
    return random_disjprop_collection(DisjPropEnsembleSpec(seed=4, tree_count=3)).trees


def bounded(mw, space, seed=0):
    return random_bounded(mw.sampling, space, np.random.default_rng(seed), (0.0, 4.0), (-32.0, 32.0))


def test_ratio_row():
    assert RatioRow("x", 0, 1, 1.0, 4.0).ratio == 0.25
    assert RatioRow("x", 0, 1, 0.0, 0.0).ratio == 0.0
    assert RatioRow("x", 0, 1, 1.0, 0.0).ratio == math.inf


def test_ratio_report():
    rows = tuple(
        RatioRow("x", seed, size, lhs, 1.0)
        for seed, size, lhs in [(0, 1, 1.0), (1, 1, 2.0), (0, 2, 2.2), (1, 2, 1.0), (0, 4, 2.0)]
    )
    report = RatioReport("x", rows)
    assert report.max == 2.2
    assert report.max_by_size() == {1: 2.0, 2: 2.2, 4: 2.0}
    assert report.drift == pytest.approx(0.1)
    assert report.stable()
    assert not report.stable(threshold=0.05)
    assert report.p95 == pytest.approx(np.percentile([1.0, 2.0, 2.2, 1.0, 2.0], 95))

    summary = report.summary()
    assert summary["instances"] == 5
    assert summary["max_by_size"] == {"1": 2.0, "2": 2.2, "4": 2.0}

    lines = report.to_csv().splitlines()
    assert lines[0] == "experiment,seed,size,lhs,rhs,ratio"
    assert lines[1] == "x,0,1,1.0,1.0,1.0"

    # Infinite ratios are never stable
    assert not RatioReport("x", (RatioRow("x", 0, 1, 1.0, 0.0),)).stable()
    assert RatioReport("x").max == 0.0


def test_large_p_sum():
    r = 0.9 / 2
    result = large_p_sum(1.0, 1.0, q=2.0, alpha=0.9, p=2.0)
    assert result.level_sum == pytest.approx(2.0 + 1.0 / (2**r - 1.0), rel=1e-9)
    assert result.bound == 1.0
    assert result.case_bound == 1.0

    # |E| > |F|: the size-case bound beats the target only for p >= q / alpha
    E, F = 4.0, 1.0
    case_bound = large_p_sum(E, F, 2.0, 0.9, 4.0).case_bound
    assert case_bound == pytest.approx(E ** (1 - r))
    assert case_bound <= large_p_sum(E, F, 2.0, 0.9, 4.0).bound
    assert case_bound > large_p_sum(E, F, 2.0, 0.9, 1.25).bound
    assert case_bound == pytest.approx(large_p_sum(E, F, 2.0, 0.9, 2.0 / 0.9).bound)

    # |E| <= |F|
    assert large_p_sum(1.0, 4.0, 2.0, 0.9, 2.0).case_bound == pytest.approx(1 + math.log(4.0))

    with pytest.raises(PreconditionError):
        large_p_sum(0.0, 1.0, 2.0, 0.9, 2.0)


def test_major_subset_far_apart():
    S = Sampling(64.0, 2048)
    E = MeasurableSet.interval(S, -32.0, 0.0)
    F = MeasurableSet.interval(S, 20.0, 21.0)
    subset = major_subset(E, F, K=16.0)
    assert subset.K == 16.0
    assert subset.E_tilde.measure == E.measure
    assert F.issubset(subset.G)
    assert subset.G.issubset(subset.G_tilde)
    assert subset.G_tilde.issubset(MeasurableSet.interval(S, 0.0, 64.0))

    with pytest.raises(PreconditionError):
        major_subset(F, E)
    with pytest.raises(PreconditionError):
        major_subset(E, MeasurableSet.empty(S))


def test_pairings(mw):
    tiles = [make_tile(0, 0, 1), make_tile(1, 2, 3), make_tile(-1, 5, 2)]
    F = MeasurableSet.interval(mw.sampling, 0.0, 1.0)
    E = MeasurableSet.interval(mw.sampling, -2.0, 6.0)
    f = SampledFunction(mw.sampling, F.indicator)
    g = SampledFunction(mw.sampling, E.indicator)
    N = FrequencyChoice.constant(mw.sampling, 1.75)

    result = restricted_weak_type(mw, f, g, N, tiles, F, E, p=2.0)
    assert result.lhs > 0
    assert result.rhs == pytest.approx(math.sqrt(F.measure * E.measure))
    assert result.case_bound is None
    swapped = restricted_weak_type(mw, g, f, N, tiles, E, F, p=2.0)
    assert swapped.case_bound == pytest.approx(F.measure * (1 + math.log(E.measure / F.measure)))

    with pytest.raises(PreconditionError):
        restricted_weak_type(mw, f, g, N, tiles, F, E, p=1.0)
    with pytest.raises(PreconditionError):
        restricted_weak_type(mw, f, g, N, tiles, MeasurableSet.empty(mw.sampling), E, p=2.0)

    two = two_case_pairing(mw, f, g, N, tiles, F, E)
    assert two.rhs == pytest.approx(F.measure * (1 + math.log(E.measure / F.measure)))
    assert 0 <= two.inside <= two.lhs + 1e-15
    assert two.inside_ratio == two.inside / F.measure
    assert two.K >= 16.0


def test_hilbert_estimates(mw, trees):
    f = bounded(mw, HilbertVector(d=4))
    lhs, rhs = hilbert_basic_ratio(mw, f, trees)
    assert 0 < lhs and 0 < rhs
    assert hilbert_basic_ratio(mw, f, []) == (0.0, f.norm(2))

    # Schatten-2 matrices are a Hilbert space: the same numbers as C^4
    matrices = SampledFunction(mw.sampling, f.samples.reshape(-1, 2, 2), SchattenMatrix(p=2.0, d=2))
    np.testing.assert_allclose(hilbert_basic_ratio(mw, matrices, trees), (lhs, rhs), rtol=1e-10)
    np.testing.assert_allclose(
        log_tile_type_ratio(mw, matrices, trees), log_tile_type_ratio(mw, f, trees), rtol=1e-10
    )
    schatten4 = SampledFunction(mw.sampling, matrices.samples, SchattenMatrix(p=4.0, d=2))
    with pytest.raises(PreconditionError):
        hilbert_basic_ratio(mw, schatten4, trees)

    tiles = union_of_trees(trees)
    lambdas = lambda_grid(mw, f, tiles)
    assert len(lambdas) == 10
    assert all(b < a for a, b in zip(lambdas, lambdas[1:]))
    lhs, rhs = weak_type_ratio(mw, f, tiles, lambdas)
    assert lhs >= 0 and rhs == pytest.approx(f.norm(2) ** 2)
    with pytest.raises(PreconditionError):
        weak_type_ratio(mw, f, tiles, [1.0, 0.0])

    assert log_tile_type_ratio(mw, SampledFunction.zeros(mw.sampling), trees) == (0.0, 0.0)


def test_fourier_tile_type_and_improved_energy(mw, trees):
    f = bounded(mw, SchattenMatrix(p=4.0, d=2), seed=1)
    lhs, rhs = fourier_tile_type_ratio(mw, f, trees, q=2.0, alpha=0.9)
    assert lhs > 0 and rhs > 0
    with pytest.raises(PreconditionError):
        fourier_tile_type_ratio(mw, f, trees, q=1.0, alpha=0.9)
    with pytest.raises(PreconditionError):
        fourier_tile_type_ratio(mw, f, trees, q=2.0, alpha=1.0)

    tiles = union_of_trees(trees)
    value, lam = improved_energy_ratio(mw, f, tiles)
    assert value >= 0 and lam > 0
    # Past the largest maximal average every tile is kept
    everything, _ = improved_energy_ratio(mw, f, tiles, lam=10.0)
    assert everything == pytest.approx(energy(tiles, EnergyContext(mw, f, 2.0)))
    assert improved_energy_ratio(mw, f, []) == (0.0, 0.0)
    with pytest.raises(PreconditionError):
        improved_energy_ratio(mw, f, tiles, lam=0.0)


def test_operator_norm_ratio(mw):
    ensemble = random_disjprop_collection(DisjPropEnsembleSpec(seed=4, tree_count=3))
    collection, trees = ensemble.collection(), ensemble.trees
    f = bounded(mw, HilbertVector(d=2))
    N = FrequencyChoice.constant(mw.sampling, 1.0)

    def ratio(name, **kwargs):
        return operator_norm_ratio(name, mw, f, N, collection, trees, **kwargs)

    line, periodic = ratio("S"), ratio("s")
    # The window taken as one period has the same discrete spectrum
    assert periodic[0] == pytest.approx(line[0], rel=1e-9)
    assert line[0] <= line[1] * (1 + 1e-12)
    assert line[1] == pytest.approx(f.norm(2))

    # [-1, 1] is one of the pairs, and finer levels add pairs
    coarse, fine = ratio("Sstar", level=2), ratio("Sstar", level=3)
    assert line[0] <= coarse[0] * (1 + 1e-12)
    assert coarse[0] <= fine[0] * (1 + 1e-12)

    maximal = ratio("M")
    assert maximal[0] >= maximal[1] * (1 - 1e-12)
    assert ratio("CN")[0] >= 0
    assert ratio("AT")[0] > 0
    assert operator_norm_ratio("AT", mw, f, N, collection) == (0.0, f.norm(2))

    with pytest.raises(PreconditionError):
        ratio("T")


@pytest.mark.parametrize("name", sorted(EXPERIMENTS))
def test_every_experiment_runs(small_config, name):
    p = 2.0 if name in PAIRING_EXPERIMENTS else None
    row = run_instance(name, small_config, seed=0, size=1, p=p)
    assert row.experiment == experiment_label(name, p)
    assert row.lhs >= 0 and row.rhs >= 0
    assert math.isfinite(row.ratio)


def test_pairing_splits_reuse_the_instance(small_config):
    restricted = run_instance("restricted_weak_type", small_config, 0, 1, p=2.0)
    case = run_instance("restricted_weak_type_case", small_config, 0, 1)
    assert case.lhs == pytest.approx(restricted.lhs)
    assert case.rhs > 0

    whole = run_instance("two_case", small_config, 0, 1)
    inside = run_instance("two_case_inside", small_config, 0, 1)
    assert 0 <= inside.lhs <= whole.lhs + 1e-12
    assert inside.rhs > 0


def test_run_experiment(small_config):
    report = run_experiment("hilbert_basic", small_config, n_jobs=1)
    assert [(r.seed, r.size) for r in report.rows] == [(0, 1), (0, 2), (1, 1), (1, 2)]
    assert np.all(np.isfinite(report.ratios))
    assert set(report.max_by_size()) == {1, 2}
    assert report.notes["maximal_level"] == small_config.maximal_level
    assert report.summary()["notes"]["frequency_bound"] == small_config.frequency_bound

    # Same rows whatever the worker count
    again = run_experiment("hilbert_basic", small_config, n_jobs=2)
    assert again.rows == report.rows

    with pytest.raises(PreconditionError):
        run_instance("strong_type", small_config, 0, 1)


def test_instances_are_seeded(small_config):
    a = make_instance(small_config, seed=3, size=2)
    b = make_instance(small_config, seed=3, size=2)
    assert a.ensemble.trees == b.ensemble.trees
    F, E = a.sets("E")
    assert E.measure > F.measure > 0
    F2, E2 = b.sets("E")
    np.testing.assert_array_equal(F.mask, F2.mask)
    assert make_instance(small_config, 3, 1, with_trees=False).ensemble is None
