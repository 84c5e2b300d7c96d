"""
Measured constants of the tile estimates.

Each estimate is evaluated as a pair `(lhs, rhs)` on one instance; the
ensemble runner collects these over seeds and sizes into a `RatioReport`
whose maximal ratio should stay put when the tile family grows.
"""

import csv
import functools
import io
import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from joblib import Parallel, delayed

from phaseplane.config import ExperimentConfig, describe
from phaseplane.density_energy import (
    DensityContext,
    EnergyContext,
    TileDecomposition,
    energy,
    tile_pairing_terms,
    tree_lemma_check,
)
from phaseplane.ensembles import (
    DisjPropEnsemble,
    DisjPropEnsembleSpec,
    amplitude_constrained,
    random_bounded,
    random_disjprop_collection,
    random_frequency_choice,
    random_set,
)
from phaseplane.geometry import Tile, TileCollection, Tree, Universe, union_of_trees
from phaseplane.operators import (
    OPERATORS,
    FrequencyChoice,
    PeriodicFunction,
    frequency_pairs,
    get_operator,
    hardy_littlewood,
    signed_tree_ratio,
    tree_operator,
)
from phaseplane.sampling import MeasurableSet, SampledFunction
from phaseplane.utils import NumericalFloorError, PreconditionError
from phaseplane.values import ComplexScalar, HilbertVector, conjugate_exponent, lp_norm
from phaseplane.wave_packets import (
    MotherWavelet,
    build_mother_wavelet,
    coefficients,
    synthesize_packets,
)

logger = logging.getLogger(__name__)

STABILITY_DRIFT = 0.25
# Config fields stated in every report
REPORT_SETTINGS = ("q", "alpha", "K", "maximal_level", "frequency_bound")
MAX_K_DOUBLINGS = 16


# Reports


@dataclass(frozen=True)
class RatioRow:
    experiment: str
    seed: int
    size: int
    lhs: float
    rhs: float

    @property
    def ratio(self) -> float:
        if self.rhs > 0:
            return self.lhs / self.rhs
        return 0.0 if self.lhs <= 1e-12 else math.inf


@dataclass(frozen=True)
class RatioReport:
    """Per-instance sides and ratios of one estimate, with summary statistics."""

    experiment: str
    rows: Tuple[RatioRow, ...] = ()
    notes: Dict[str, object] = field(default_factory=dict)

    @property
    def ratios(self) -> np.ndarray:
        return np.asarray([r.ratio for r in self.rows], dtype=float)

    @property
    def max(self) -> float:
        return float(self.ratios.max()) if self.rows else 0.0

    @property
    def p95(self) -> float:
        return float(np.percentile(self.ratios, 95)) if self.rows else 0.0

    def max_by_size(self) -> Dict[int, float]:
        out: Dict[int, float] = {}
        for r in self.rows:
            out[r.size] = max(out.get(r.size, 0.0), r.ratio)
        return dict(sorted(out.items()))

    @property
    def drift(self) -> float:
        """Largest relative growth of the maximal ratio from one size to the next."""
        maxima = list(self.max_by_size().values())
        growth = [b / a - 1.0 for a, b in zip(maxima, maxima[1:]) if a > 0]
        return max(growth, default=0.0)

    def stable(self, threshold: float = STABILITY_DRIFT) -> bool:
        return bool(np.all(np.isfinite(self.ratios))) and self.drift < threshold

    def summary(self) -> dict:
        return {
            "experiment": self.experiment,
            "instances": len(self.rows),
            "max": self.max,
            "p95": self.p95,
            "drift": self.drift,
            "stable": self.stable(),
            "max_by_size": {str(k): v for k, v in self.max_by_size().items()},
            "notes": dict(self.notes),
        }

    def to_csv(self) -> str:
        """Columns `experiment, seed, size, lhs, rhs, ratio`."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["experiment", "seed", "size", "lhs", "rhs", "ratio"])
        for r in self.rows:
            writer.writerow([r.experiment, r.seed, r.size, repr(r.lhs), repr(r.rhs), repr(r.ratio)])
        return buffer.getvalue()


# Estimates on one instance


def _tree_length(trees: Iterable[Tree]) -> float:
    return float(sum(T.interval.length for T in trees))


def _require_hilbert(f: SampledFunction) -> None:
    space = f.space
    if space.kind in ("scalar", "hilbert") or (space.kind == "schatten" and space.exponent == 2):
        return
    raise PreconditionError(f"Needs Hilbert-space values but got: {space.kind} (p={space.exponent})")


def hilbert_basic_ratio(
    mw: MotherWavelet, f: SampledFunction, trees: Sequence[Tree]
) -> Tuple[float, float]:
    """
    Both sides of

        (sum_P |<f, phi_P>|^2)^(1/2)  <~  ||f||_2 + A^(1/3) ||f||_2^(2/3)

    with `A = (sup_P |<f, phi_P>| / |I_P|^(1/2)) (sum_T |I_T|)^(1/2)`.
    """
    _require_hilbert(f)
    tiles = union_of_trees(trees)
    if not tiles:
        return 0.0, f.norm(2)
    norms = f.space.norm(coefficients(f, synthesize_packets(mw, tiles)))
    lhs = float(np.sqrt(np.sum(norms**2)))
    lengths = np.asarray([P.I.length for P in tiles])
    A = float(np.max(norms / np.sqrt(lengths))) * math.sqrt(_tree_length(trees))
    norm2 = f.norm(2)
    return lhs, norm2 + A ** (1 / 3) * norm2 ** (2 / 3)


def weak_type_ratio(
    mw: MotherWavelet, f: SampledFunction, tiles: Sequence[Tile], lambdas: Iterable[float]
) -> Tuple[float, float]:
    """
    `max_lambda lambda^2 sum {|I_P| : |<f, phi_P>| / |I_P|^(1/2) > lambda}`
    against `||f||_2^2`.
    """
    _require_hilbert(f)
    lambdas = list(lambdas)
    if any(lam <= 0 for lam in lambdas):
        raise PreconditionError("every `lambda` must be positive")
    tiles = sorted(set(tiles))
    rhs = f.norm(2) ** 2
    if not tiles:
        return 0.0, rhs
    lengths = np.asarray([P.I.length for P in tiles])
    sizes = f.space.norm(coefficients(f, synthesize_packets(mw, tiles))) / np.sqrt(lengths)
    lhs = max((lam**2 * float(lengths[sizes > lam].sum()) for lam in lambdas), default=0.0)
    return lhs, rhs


def lambda_grid(mw: MotherWavelet, f: SampledFunction, tiles: Sequence[Tile], decades: int = 3) -> List[float]:
    """Three points per decade below the largest normalized coefficient."""
    tiles = sorted(set(tiles))
    if not tiles:
        return [1.0]
    lengths = np.asarray([P.I.length for P in tiles])
    top = float(np.max(f.space.norm(coefficients(f, synthesize_packets(mw, tiles))) / np.sqrt(lengths)))
    if top <= 0:
        return [1.0]
    return [top * 10 ** (-j / 3) for j in range(3 * decades + 1)]


def log_tile_type_ratio(
    mw: MotherWavelet, f: SampledFunction, trees: Sequence[Tree]
) -> Tuple[float, float]:
    """
    Both sides of

        (sum_T ||A_T f||_2^2)^(1/2)
            <~  ||f||_2 (1 + log+((||f||_inf / ||f||_2) (sum_T |I_T|)^(1/2)))^(1/2)
    """
    _require_hilbert(f)
    norm2, sup = f.norm(2), f.norm(np.inf)
    if norm2 == 0:
        if sup > 0:
            raise PreconditionError("`f` has vanishing L^2 norm but is not zero")
        return 0.0, 0.0
    lhs = math.sqrt(sum(tree_operator(mw, T, f).norm(2) ** 2 for T in trees))
    argument = sup / norm2 * math.sqrt(_tree_length(trees))
    log_plus = max(0.0, math.log(argument)) if argument > 0 else 0.0
    rhs = norm2 * math.sqrt(1.0 + log_plus)
    return lhs, rhs


def fourier_tile_type_ratio(
    mw: MotherWavelet, f: SampledFunction, trees: Sequence[Tree], q: float, alpha: float
) -> Tuple[float, float]:
    """
    Both sides of the Fourier tile-type `(q, alpha)` inequality

        (sum_T ||A_T f||_q^q)^(1/q)
            <~  ||f||_q + (||f||_inf (sum_T |I_T|)^(1/q))^(1 - alpha) ||f||_q^alpha
    """
    if not 1 < q < math.inf:
        raise PreconditionError(f"`q` must be in (1, inf) but was: {q}")
    if not 0 < alpha < 1:
        raise PreconditionError(f"`alpha` must be in (0, 1) but was: {alpha}")
    lhs = sum(tree_operator(mw, T, f).norm(q) ** q for T in trees) ** (1 / q)
    norm_q, sup = f.norm(q), f.norm(np.inf)
    rhs = norm_q + (sup * _tree_length(trees) ** (1 / q)) ** (1 - alpha) * norm_q**alpha
    return float(lhs), float(rhs)


@dataclass(frozen=True)
class PairingResult:
    """Pairing total against `|F|^(1/p) |E|^(1/p')`; `case_bound` is `|E| (1 + log(|F|/|E|))` when `|E| <= |F|`."""

    lhs: float
    rhs: float
    case_bound: Optional[float] = None


def restricted_weak_type(
    mw: MotherWavelet,
    f: SampledFunction,
    g: SampledFunction,
    N: FrequencyChoice,
    tiles: Sequence[Tile],
    F: MeasurableSet,
    E: MeasurableSet,
    p: float,
) -> PairingResult:
    """`sum_P |<<f, phi_P>, <g 1_{N in w_P_u}, phi_P>>|` for `|f| <= 1_F`, `|g|_* <= 1_E`."""
    if F.measure <= 0 or E.measure <= 0:
        raise PreconditionError("`F` and `E` must have positive measure")
    if not 1 < p < math.inf:
        raise PreconditionError(f"`p` must be in (1, inf) but was: {p}")
    lhs = float(np.sum(tile_pairing_terms(mw, sorted(set(tiles)), f, g, N)))
    rhs = F.measure ** (1 / p) * E.measure ** (1 / conjugate_exponent(p))
    case_bound = None
    if E.measure <= F.measure:
        case_bound = E.measure * (1 + math.log(F.measure / E.measure))
    return PairingResult(lhs, rhs, case_bound)


@dataclass(frozen=True)
class MajorSubset:
    E_tilde: MeasurableSet
    G: MeasurableSet
    G_tilde: MeasurableSet
    K: float


def major_subset(E: MeasurableSet, F: MeasurableSet, K: float = 16.0) -> MajorSubset:
    """
    `G = {M 1_F > K |F| / |E|}`, `G~ = {M 1_G > 1/8}` and `E~ = E \\ G~`.

    `K` is doubled until `|E~| >= |E| / 2`; the result records the `K` used.
    """
    if not 0 < F.measure < E.measure:
        raise PreconditionError(
            f"Needs |E| > |F| > 0 but got: |E|={E.measure:g}, |F|={F.measure:g}"
        )
    MF = hardy_littlewood(F)
    for _ in range(MAX_K_DOUBLINGS + 1):
        G = MeasurableSet(E.sampling, MF > K * F.measure / E.measure)
        G_tilde = MeasurableSet(E.sampling, hardy_littlewood(G) > 1 / 8)
        E_tilde = E - G_tilde
        if E_tilde.measure >= E.measure / 2:
            return MajorSubset(E_tilde, G, G_tilde, K)
        logger.warning("|E~| < |E|/2 with K=%g; doubling K", K)
        K *= 2
    raise NumericalFloorError(f"No major subset after {MAX_K_DOUBLINGS} doublings of K")


def _double_inside(P: Tile, S: MeasurableSet) -> bool:
    """Whether `2 I_P` (same center, twice the length) lies in `S` on the sample grid."""
    c, length = P.I.center, P.I.length
    L = S.sampling.half_length
    if c - length < -L or c + length > L:
        return False
    mask = S.sampling.mask(c - length, c + length)
    return bool(np.any(mask)) and bool(np.all(S.mask[mask]))


@dataclass(frozen=True)
class TwoCaseResult:
    """
    Pairing with `g` cut to the major subset, against `|F| (1 + log(|E|/|F|))`,
    and the part over tiles with `2 I_P` inside `G~` (bounded by `C |F|`).
    """

    lhs: float
    rhs: float
    inside: float
    measure_F: float
    K: float

    @property
    def inside_ratio(self) -> float:
        return self.inside / self.measure_F


def two_case_pairing(
    mw: MotherWavelet,
    f: SampledFunction,
    g: SampledFunction,
    N: FrequencyChoice,
    tiles: Sequence[Tile],
    F: MeasurableSet,
    E: MeasurableSet,
    K: float = 16.0,
) -> TwoCaseResult:
    subset = major_subset(E, F, K)
    tiles = sorted(set(tiles))
    terms = tile_pairing_terms(mw, tiles, f, g.multiply(subset.E_tilde.indicator), N)
    inside = np.asarray([_double_inside(P, subset.G_tilde) for P in tiles], dtype=bool)
    return TwoCaseResult(
        lhs=float(terms.sum()),
        rhs=F.measure * (1 + math.log(E.measure / F.measure)),
        inside=float(terms[inside].sum()) if len(tiles) else 0.0,
        measure_F=F.measure,
        K=subset.K,
    )


def improved_energy_ratio(
    mw: MotherWavelet,
    f: SampledFunction,
    tiles: Sequence[Tile],
    q: float = 2.0,
    universe: Optional[Universe] = None,
    lam: Optional[float] = None,
) -> Tuple[float, float]:
    """
    `(energy(P'), lambda)` for the tiles `P'` with `inf_{I_P} Mf <= lambda`.

    Without `lambda`, the median of `inf_{I_P} Mf` over the tiles is used.
    """
    tiles = sorted(set(tiles))
    if not tiles:
        return 0.0, lam or 0.0
    Mf = hardy_littlewood(f)
    sampling = f.sampling
    lows = []
    for P in tiles:
        mask = sampling.mask(P.I.left, P.I.right)
        lows.append(float(Mf[mask].min()) if np.any(mask) else math.inf)
    lows = np.asarray(lows)
    if lam is None:
        lam = float(np.median(lows[np.isfinite(lows)]))
    if lam <= 0:
        raise PreconditionError(f"`lam` must be positive but was: {lam}")
    kept = [P for P, low in zip(tiles, lows) if low <= lam]
    return energy(kept, EnergyContext(mw, f, q), universe), lam


@dataclass(frozen=True)
class LargePSum:
    """The level sum bounding the pairing, the target bound, and the size-case bound."""

    level_sum: float
    bound: float
    case_bound: float


def large_p_sum(measure_E: float, measure_F: float, q: float, alpha: float, p: float) -> LargePSum:
    """
    `sum_n min{1, |E| 2^-n} min{1, |F|^(a/q) 2^(-n a/q)} 2^n` against
    `|F|^(1/p) |E|^(1/p')`. The case bound is `|E| (1 + log(|F|/|E|))` when
    `|E| <= |F|`, else `|F|^(a/q) |E|^(1 - a/q)`; the latter is below the
    target bound only for `p >= q / alpha`.
    """
    if measure_E <= 0 or measure_F <= 0:
        raise PreconditionError("Needs |E| > 0 and |F| > 0")
    r = alpha / q
    lo = math.floor(math.log2(min(measure_E, measure_F))) - 60
    hi = math.ceil(math.log2(max(measure_E, measure_F)) + 60 / r)
    n = np.arange(lo, hi + 1, dtype=float)
    terms = (
        np.minimum(1.0, measure_E * 2.0 ** (-n))
        * np.minimum(1.0, measure_F**r * 2.0 ** (-n * r))
        * 2.0**n
    )
    if measure_E <= measure_F:
        case_bound = measure_E * (1 + math.log(measure_F / measure_E))
    else:
        case_bound = measure_F**r * measure_E ** (1 - r)
    bound = measure_F ** (1 / p) * measure_E ** (1 / conjugate_exponent(p))
    return LargePSum(float(terms.sum()), bound, case_bound)


def operator_norm_ratio(
    name: str,
    mw: MotherWavelet,
    f: SampledFunction,
    N: FrequencyChoice,
    collection: TileCollection,
    trees: Sequence[Tree] = (),
    bound: float = 1.0,
    level: int = 3,
    q: float = 2.0,
) -> Tuple[float, float]:
    """
    `(||T f||_q, ||f||_q)` for the operator registered under `name`.

    `S` cuts the band `[-bound, bound]` and `s` does the same with the
    sample window taken as one period, so the two agree. `Sstar` maximizes
    over `frequency_pairs(bound, level)`. `CN` sums over `collection` with
    the frequency choice `N`. `AT` takes the worst of `trees`.
    """
    operator = get_operator(name)
    rhs = f.norm(q)
    if name == "S":
        return operator(f, -bound, bound).norm(q), rhs
    if name == "CN":
        return operator(mw, f, N, collection).norm(q), rhs
    if name == "AT":
        return max((operator(mw, T, f).norm(q) for T in trees), default=0.0), rhs
    if name == "Sstar":
        values = operator(f, frequency_pairs(bound, level))
    elif name == "s":
        n = int(math.floor(bound * 2 * f.sampling.half_length))
        periodic = operator(PeriodicFunction(f.samples, f.space), -n, n)
        values = f.space.norm(periodic.samples)
    else:
        values = operator(f)
    return lp_norm(values, f.step, ComplexScalar(), q), rhs


def decomposition_level_sum(decomposition: TileDecomposition) -> float:
    """`sum_{n,j} density(T_nj) energy(T_nj) |I_T_nj|`."""
    return float(sum(lt.density * lt.energy * lt.tree.interval.length for lt in decomposition.trees))


# Ensembles


@functools.lru_cache(maxsize=4)
def cached_wavelet(N: int, L: float) -> MotherWavelet:
    return build_mother_wavelet(N, L)


def ensemble_spec(config: ExperimentConfig, seed: int, size: int) -> DisjPropEnsembleSpec:
    return DisjPropEnsembleSpec(
        seed=seed + 1_000_003 * size,
        tree_count=config.ensemble.tree_count * size,
        tiles_per_tree=config.ensemble.tiles_per_tree,
        universe=config.universe.build(),
        grid=config.grid.build(),
    )


@dataclass
class Instance:
    """Shared inputs of one (seed, size) instance."""

    config: ExperimentConfig
    mw: MotherWavelet
    rng: np.random.Generator
    ensemble: Optional[DisjPropEnsemble] = None

    @property
    def band(self) -> Tuple[float, float]:
        return (self.config.universe.freq_min, self.config.universe.freq_max)

    @property
    def window(self) -> Tuple[float, float]:
        return (self.config.universe.time_min, self.config.universe.time_max)

    def bounded(self, space) -> SampledFunction:
        return random_bounded(self.mw.sampling, space, self.rng, self.band, self.window)

    def sets(self, larger: str = "E") -> Tuple[MeasurableSet, MeasurableSet]:
        """Random `(F, E)` with the named set strictly larger."""
        sampling = self.mw.sampling
        small = random_set(sampling, self.rng, self.window, pieces=1, length=2.0)
        big = random_set(sampling, self.rng, self.window, pieces=6, length=2.0) | small
        big = big | random_set(sampling, self.rng, self.window, pieces=1, length=4.0)
        return (small, big) if larger == "E" else (big, small)

    def pairing_inputs(self, larger: str = "E"):
        space = self.config.values.build()
        F, E = self.sets(larger)
        f = amplitude_constrained(self.mw.sampling, space, self.rng, F, self.band).f
        g = amplitude_constrained(self.mw.sampling, space, self.rng, E, self.band, dual=True).f
        N = random_frequency_choice(self.mw.sampling, self.rng, self.band)
        return f, g, N, F, E


def make_instance(
    config: ExperimentConfig, seed: int, size: int, with_trees: bool = True
) -> Instance:
    mw = cached_wavelet(config.sampling.N, config.sampling.L)
    ensemble = random_disjprop_collection(ensemble_spec(config, seed, size)) if with_trees else None
    return Instance(config, mw, np.random.default_rng([seed, size]), ensemble)


def _hilbert(inst: Instance) -> HilbertVector:
    return HilbertVector(d=inst.config.values.dim)


def _hilbert_basic(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    return hilbert_basic_ratio(inst.mw, inst.bounded(_hilbert(inst)), inst.ensemble.trees)


def _weak_type(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    f = inst.bounded(_hilbert(inst))
    tiles = union_of_trees(inst.ensemble.trees)
    return weak_type_ratio(inst.mw, f, tiles, lambda_grid(inst.mw, f, tiles))


def _log_tile_type(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    return log_tile_type_ratio(inst.mw, inst.bounded(_hilbert(inst)), inst.ensemble.trees)


def _fourier_tile_type(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    f = inst.bounded(inst.config.values.build())
    return fourier_tile_type_ratio(
        inst.mw, f, inst.ensemble.trees, inst.config.q, inst.config.alpha
    )


def _restricted_pairing(inst: Instance, p: Optional[float]) -> PairingResult:
    f, g, N, F, E = inst.pairing_inputs("F")
    tiles = union_of_trees(inst.ensemble.trees)
    return restricted_weak_type(inst.mw, f, g, N, tiles, F, E, p or inst.config.p_list[0])


def _restricted_weak_type(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    result = _restricted_pairing(inst, p)
    return result.lhs, result.rhs


def _restricted_weak_type_case(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    # `F` is drawn larger than `E`, so the case bound is always defined
    result = _restricted_pairing(inst, p)
    return result.lhs, result.case_bound


def _two_case_result(inst: Instance) -> TwoCaseResult:
    f, g, N, F, E = inst.pairing_inputs("E")
    tiles = union_of_trees(inst.ensemble.trees)
    return two_case_pairing(inst.mw, f, g, N, tiles, F, E, inst.config.K)


def _two_case(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    result = _two_case_result(inst)
    return result.lhs, result.rhs


def _two_case_inside(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    result = _two_case_result(inst)
    return result.inside, result.measure_F


def _tree_lemma(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    f, g, N, F, E = inst.pairing_inputs("E")
    ctx_d = DensityContext(E, N)
    ctx_e = EnergyContext(inst.mw, f, inst.config.q, F)
    universe = inst.config.universe.build()
    worst = (0.0, 0.0)
    for T in inst.ensemble.trees:
        lhs, rhs = tree_lemma_check(T, f, g, ctx_d, ctx_e, universe)
        if RatioRow("", 0, 0, lhs, rhs).ratio >= RatioRow("", 0, 0, *worst).ratio:
            worst = (lhs, rhs)
    return worst


def _improved_energy(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    f = inst.bounded(inst.config.values.build())
    tiles = union_of_trees(inst.ensemble.trees)
    return improved_energy_ratio(
        inst.mw, f, tiles, inst.config.q, inst.config.universe.build()
    )


def _signed_tree(inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    f = inst.bounded(inst.config.values.build())
    worst = 0.0
    for T in inst.ensemble.trees:
        worst = max(worst, signed_tree_ratio(inst.mw, T, f, inst.config.q, inst.rng))
    return worst, 1.0


def _operator_norm(name: str, inst: Instance, p: Optional[float]) -> Tuple[float, float]:
    config = inst.config
    f = inst.bounded(config.values.build())
    N = random_frequency_choice(inst.mw.sampling, inst.rng, inst.band)
    return operator_norm_ratio(
        name,
        inst.mw,
        f,
        N,
        inst.ensemble.collection(),
        inst.ensemble.trees,
        config.frequency_bound,
        config.maximal_level,
        config.q,
    )


def operator_experiment(name: str) -> str:
    """Registry name of the norm experiment for the operator `name`."""
    return f"norm_{name}"


EXPERIMENTS: Dict[str, Callable[[Instance, Optional[float]], Tuple[float, float]]] = {
    "hilbert_basic": _hilbert_basic,
    "weak_type": _weak_type,
    "log_tile_type": _log_tile_type,
    "fourier_tile_type": _fourier_tile_type,
    "restricted_weak_type": _restricted_weak_type,
    "restricted_weak_type_case": _restricted_weak_type_case,
    "two_case": _two_case,
    "two_case_inside": _two_case_inside,
    "tree_lemma": _tree_lemma,
    "improved_energy": _improved_energy,
    "signed_tree": _signed_tree,
    **{operator_experiment(name): functools.partial(_operator_norm, name) for name in OPERATORS},
}


def experiment_label(name: str, p: Optional[float] = None) -> str:
    return name if p is None else f"{name}[p={p:g}]"


def run_instance(
    name: str, config: ExperimentConfig, seed: int, size: int, p: Optional[float] = None
) -> RatioRow:
    try:
        experiment = EXPERIMENTS[name]
    except KeyError:
        raise PreconditionError(
            f"`name` must be one of {tuple(EXPERIMENTS)} but was: {name}"
        ) from None
    lhs, rhs = experiment(make_instance(config, seed, size), p)
    return RatioRow(experiment_label(name, p), seed, size, float(lhs), float(rhs))


def run_experiment(
    name: str,
    config: ExperimentConfig,
    p: Optional[float] = None,
    n_jobs: Optional[int] = None,
) -> RatioReport:
    """
    Run one experiment over `config.ensemble` seeds and sizes.

    Instances run in parallel with joblib; rows come back in
    (seed, size) order whatever the worker scheduling.
    """
    ensemble = config.ensemble
    seeds = range(ensemble.seed, ensemble.seed + ensemble.seed_count)
    jobs = [(seed, size) for seed in seeds for size in ensemble.sizes]
    n_jobs = ensemble.threads if n_jobs is None else n_jobs
    rows = Parallel(n_jobs=n_jobs)(
        delayed(run_instance)(name, config, seed, size, p) for seed, size in jobs
    )
    report = RatioReport(experiment_label(name, p), tuple(rows), describe(config, REPORT_SETTINGS))
    logger.info(
        "%s: %d instances, max ratio %.4g, drift %.3f",
        report.experiment,
        len(rows),
        report.max,
        report.drift,
    )
    return report
