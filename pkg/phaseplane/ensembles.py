"""
Seeded random inputs: tree families with the disjointness property,
amplitude-constrained functions, frequency choices and sets.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from phaseplane.geometry import (
    PACKET_SPACING,
    DyadicGrid,
    DyadicInterval,
    FREQUENCY,
    Tile,
    TileCollection,
    Tree,
    Universe,
    check_disjointness_property,
)
from phaseplane.operators import FrequencyChoice, partial_sum
from phaseplane.sampling import MeasurableSet, SampledFunction, Sampling
from phaseplane.utils import CapacityError, PreconditionError
from phaseplane.values import ValueSpace

logger = logging.getLogger(__name__)

MAX_TOP_ATTEMPTS = 200


@dataclass(frozen=True)
class DisjPropEnsembleSpec:
    """Recipe for a random up-tree family with the disjointness property."""

    seed: int = 0
    tree_count: int = 4
    tiles_per_tree: int = 4
    universe: Universe = field(default_factory=Universe)
    grid: DyadicGrid = field(default_factory=DyadicGrid)

    def __post_init__(self):
        if self.tree_count < 1:
            raise PreconditionError(f"`tree_count` must be positive but was: {self.tree_count}")
        if self.tiles_per_tree < 1:
            raise PreconditionError(
                f"`tiles_per_tree` must be positive but was: {self.tiles_per_tree}"
            )


@dataclass(frozen=True)
class DisjPropEnsemble:
    """
    The generated trees and their generation log: tiles evicted to restore
    the disjointness property, and trees that eviction emptied.
    """

    spec: DisjPropEnsembleSpec
    trees: Tuple[Tree, ...]
    evicted: Tuple[Tile, ...] = ()
    dropped: int = 0

    def collection(self) -> TileCollection:
        tiles = [P for T in self.trees for P in T.sorted_tiles]
        return TileCollection(self.spec.grid, tuple(tiles), self.spec.universe)

    @property
    def tree_length(self) -> float:
        """`sum_T |I_T|` over the minimal top intervals."""
        return float(sum(T.interval.length for T in self.trees))


def _up_frequency(top: Tile, k: int) -> Optional[DyadicInterval]:
    """Frequency interval at time scale `k` whose upper half contains the top's upper half."""
    half = top.w_u.ancestor(-k - 1)
    if half.n % 2 == 0:
        return None
    return DyadicInterval(top.grid, FREQUENCY, -k, half.n >> 1)


def _populate(
    top: Tile,
    spec: DisjPropEnsembleSpec,
    residues: Dict[Tuple[int, int], int],
    rng: np.random.Generator,
) -> List[Tile]:
    """Random members `P <=_u top` inside the universe, keeping equal-frequency offsets at 20 n |I|."""
    universe = spec.universe
    candidates = []
    for k in range(top.I.k, universe.k_min - 1, -1):
        w = _up_frequency(top, k)
        if w is None or w.n not in universe.freq_indices(spec.grid, k):
            continue
        key = (w.k, w.n)
        if key not in residues:
            residues[key] = int(rng.integers(PACKET_SPACING))
        times = universe.time_indices(spec.grid, k)
        for I in top.I.descendants(k):  # noqa: E741
            if I.n in times and I.n % PACKET_SPACING == residues[key]:
                candidates.append(Tile(I=I, w=w))
    if not candidates:
        return []
    count = min(spec.tiles_per_tree, len(candidates))
    picks = rng.choice(len(candidates), size=count, replace=False)
    return sorted(candidates[i] for i in picks)


def random_disjprop_collection(spec: DisjPropEnsembleSpec) -> DisjPropEnsemble:
    """
    Sample up-trees and evict tiles until the family has the disjointness property.

    Tops are drawn so that tops sharing frequency have disjoint time
    intervals; each tree is populated with random members; then the tile
    named by each reported violation is evicted (a deterministic order)
    until the check passes.

    Raises
    ------
    CapacityError
        When the universe cannot hold `tree_count` non-overlapping tops.
    """
    rng = np.random.default_rng(spec.seed)
    universe = spec.universe
    residues: Dict[Tuple[int, int], int] = {}
    tops: List[Tile] = []
    members: List[List[Tile]] = []
    for _ in range(spec.tree_count):
        for _attempt in range(MAX_TOP_ATTEMPTS):
            k = int(rng.integers(universe.k_min, universe.k_max + 1))
            times = universe.time_indices(spec.grid, k)
            freqs = universe.freq_indices(spec.grid, k)
            if len(times) == 0 or len(freqs) == 0:
                continue
            top = Tile.at(spec.grid, k, int(rng.choice(times)), int(rng.choice(freqs)))
            if any(top.I.intersects(T.I) and top.w.intersects(T.w) for T in tops):
                continue
            tiles = _populate(top, spec, residues, rng)
            if tiles:
                tops.append(top)
                members.append(tiles)
                break
        else:
            raise CapacityError(
                f"Could not place tree {len(tops) + 1} of {spec.tree_count} in the universe"
            )

    evicted = []
    while True:
        trees = [Tree(frozenset(m), top, "up") for top, m in zip(tops, members) if m]
        index = [i for i, m in enumerate(members) if m]
        violation = check_disjointness_property(trees)
        if violation:
            break
        owner = index[violation.other_tree_index]
        members[owner].remove(violation.other_tile)
        evicted.append(violation.other_tile)

    dropped = sum(1 for m in members if not m)
    if dropped:
        logger.info("Eviction emptied %d of %d trees (seed %d)", dropped, len(tops), spec.seed)
    return DisjPropEnsemble(spec, tuple(trees), tuple(evicted), dropped)


# Random functions and sets


def random_set(
    sampling: Sampling,
    rng: np.random.Generator,
    window: Tuple[float, float],
    pieces: int = 4,
    length: float = 2.0,
) -> MeasurableSet:
    """Union of `pieces` random intervals of the given `length` inside `window`."""
    lo, hi = window
    mask = np.zeros(sampling.count, dtype=bool)
    for left in rng.uniform(lo, hi - length, size=pieces):
        mask |= sampling.mask(left, left + length)
    return MeasurableSet(sampling, mask)


def random_frequency_choice(
    sampling: Sampling,
    rng: np.random.Generator,
    band: Tuple[float, float],
    cell: float = 1.0,
) -> FrequencyChoice:
    """`N(x)` constant on cells of length `cell`, uniform in `band`."""
    x = sampling.positions
    cells = np.floor((x + sampling.half_length) / cell).astype(int)
    values = rng.uniform(band[0], band[1], size=cells.max() + 1)
    return FrequencyChoice(sampling, values[cells])


def _clip(samples: np.ndarray, norms: np.ndarray, bound: np.ndarray) -> np.ndarray:
    extra = (1,) * (samples.ndim - 1)
    scale = np.ones_like(norms)
    over = norms > bound
    scale[over] = bound[over] / norms[over]
    return samples * scale.reshape(scale.shape + extra)


@dataclass(frozen=True)
class ConstrainedFunction:
    """A random `f` with `|f| <= 1_F` and the violation left before the final clip."""

    f: SampledFunction
    residual: float


def amplitude_constrained(
    sampling: Sampling,
    space: ValueSpace,
    rng: np.random.Generator,
    F: MeasurableSet,
    band: Tuple[float, float],
    rounds: int = 2,
    dual: bool = False,
) -> ConstrainedFunction:
    """
    Random band-limited values shaped to `|f|_X <= 1_F`.

    Draws random spectral values in `band`, then `rounds` times cuts to `F`,
    clips the norm to one and projects back onto the band. A final cut and
    clip makes the bound exact; the violation it removed is `residual`.
    With `dual=True` the norm is the dual norm (for `g` in `L^inf(E; X*)`).
    """
    if band[0] >= band[1]:
        raise PreconditionError(f"`band` must be an interval but was: {band}")
    norm = space.dual_norm if dual else space.norm
    xi = sampling.frequencies
    spectrum = space.random(rng, size=(sampling.count,))
    inside = (xi >= band[0]) & (xi <= band[1])
    spectrum[~inside] = 0
    f = SampledFunction.from_spectrum(sampling, spectrum, space)
    bound = F.indicator
    peak = float(np.max(norm(f.samples))) if np.any(inside) else 0.0
    if peak > 0:
        f = f.scale(1.0 / peak)
    for _ in range(rounds):
        cut = f.multiply(bound)
        f = cut.with_samples(_clip(cut.samples, norm(cut.samples), bound))
        f = partial_sum(f, band[0], band[1])
    cut = f.multiply(bound)
    norms = norm(cut.samples)
    residual = float(np.max(np.maximum(norms - bound, 0.0)))
    return ConstrainedFunction(cut.with_samples(_clip(cut.samples, norms, bound)), residual)


def random_bounded(
    sampling: Sampling,
    space: ValueSpace,
    rng: np.random.Generator,
    band: Tuple[float, float],
    window: Tuple[float, float],
) -> SampledFunction:
    """Random band-limited `f` with `max |f| = 1`, supported (before band-limiting) in `window`."""
    F = MeasurableSet.interval(sampling, window[0], window[1])
    f = amplitude_constrained(sampling, space, rng, F, band, rounds=1).f
    f = partial_sum(f, band[0], band[1])
    peak = float(np.max(f.pointwise_norm()))
    return f.scale(1.0 / peak) if peak > 0 else f
