"""
Density and energy of tile collections, and the decompositions they drive.

    density(P) = sup_{P in P, P' >= P} int_{E_P'} v_{I_P'}
    energy(P)  = sup_{T subset P} Delta(T)
    Delta(T)   = (|I_T|^-1 int |sum_{P in T_u} <f, phi_P> phi_P|^q)^(1/q)

with `E_P' = E ∩ {N in w_P'}` and `T_u` the tiles of `T` below its
top in the up-order. The supremum defining the energy runs over
complete trees (all tiles of the collection below a candidate top).
"""

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np

from phaseplane.geometry import (
    FREQUENCY,
    DyadicInterval,
    Tile,
    TileCollection,
    Tree,
    Universe,
    check_disjointness_property,
    tile_le,
    tile_le_u,
    weight_v,
    weight_v_mass,
)
from phaseplane.operators import FrequencyChoice
from phaseplane.sampling import MeasurableSet, SampledFunction
from phaseplane.utils import DecompositionError, PreconditionError
from phaseplane.wave_packets import MotherWavelet, pair, synthesize_packet

logger = logging.getLogger(__name__)

__all__ = [
    "weight_v",
    "weight_v_mass",
    "DensityContext",
    "EnergyContext",
    "density",
    "tile_density",
    "tree_energy",
    "energy",
    "complete_trees",
    "tree_lemma_check",
    "tile_pairing_terms",
    "candidate_tops",
    "Split",
    "density_split",
    "energy_split",
    "LevelTree",
    "TileDecomposition",
    "full_decomposition",
    "exhaustive_subtree_energy",
    "naive_energy_check",
]

AMPLITUDE_TOLERANCE = 1e-9
MAX_EXHAUSTIVE_TILES = 12

Tiles = Union[TileCollection, Iterable[Tile]]


def _tiles_and_universe(tiles: Tiles, universe: Optional[Universe]) -> Tuple[List[Tile], Universe]:
    if universe is None:
        universe = tiles.universe if isinstance(tiles, TileCollection) else Universe()
    return sorted(set(tiles)), universe


# Density


@dataclass(frozen=True)
class DensityContext:
    E: MeasurableSet
    N: FrequencyChoice

    def __post_init__(self):
        if self.E.sampling != self.N.sampling:
            raise PreconditionError("`E` and `N` live on different sample grids")

    @property
    def measure(self) -> float:
        return self.E.measure


def _dominator_masses(
    P: Tile, ctx: DensityContext, universe: Universe
) -> Iterator[Tuple[Tile, float]]:
    """`(P', int_{E_P'} v_{I_P'})` for the tiles `P' >= P` whose mass is positive."""
    x = ctx.E.sampling.positions
    h = ctx.E.sampling.step
    in_w = ctx.E.mask & ctx.N.inside(P.w.left, P.w.right)
    if not np.any(in_w):
        return
    xs, freqs = x[in_w], ctx.N.values[in_w]
    for k in range(P.I.k, max(universe.k_max, P.I.k) + 1):
        I = P.I.ancestor(k)  # noqa: E741
        cells = 1 << (k - P.I.k)
        width = P.w.length / cells
        cell = np.clip(np.floor((freqs - P.w.left) / width).astype(int), 0, cells - 1)
        masses = np.bincount(cell, weights=weight_v(I, xs) * h, minlength=cells)
        for c in np.flatnonzero(masses):
            w = DyadicInterval(P.grid, FREQUENCY, -k, (P.w.n << (k - P.I.k)) + int(c))
            yield Tile(I=I, w=w), float(masses[c])


def tile_density(P: Tile, ctx: DensityContext, universe: Optional[Universe] = None) -> float:
    """`sup_{P' >= P} int_{E_P'} v_{I_P'}`."""
    universe = universe or Universe()
    return max((m for _, m in _dominator_masses(P, ctx, universe)), default=0.0)


def density(tiles: Tiles, ctx: DensityContext, universe: Optional[Universe] = None) -> float:
    """
    Density of a tile collection; zero for an empty collection or `E`.

    Dominating tiles range up to the universe's coarsest scale.
    """
    tiles, universe = _tiles_and_universe(tiles, universe)
    return max((tile_density(P, ctx, universe) for P in tiles), default=0.0)


# Energy


@dataclass(frozen=True)
class EnergyContext:
    """
    Parameters
    ----------
    mw : MotherWavelet
        Sample grid and packets.
    f : SampledFunction
        The function whose tile coefficients carry the energy.
    q : float
        Exponent in `(1, inf)`.
    F : MeasurableSet, optional
        Support set with `|f| <= 1_F`; needed by the decomposition bounds.
    """

    mw: MotherWavelet
    f: SampledFunction
    q: float = 2.0
    F: Optional[MeasurableSet] = None
    _coefficients: Dict[Tile, np.ndarray] = field(
        default_factory=dict, compare=False, repr=False
    )

    def __post_init__(self):
        if not (1 < self.q < np.inf):
            raise PreconditionError(f"`q` must be in (1, inf) but was: {self.q}")
        if self.f.sampling != self.mw.sampling:
            raise PreconditionError("`f` and the mother wavelet live on different sample grids")

    def coefficient(self, P: Tile) -> np.ndarray:
        """`<f, phi_P>` (memoized)."""
        c = self._coefficients.get(P)
        if c is None:
            c = pair(self.f, synthesize_packet(self.mw, P))
            self._coefficients[P] = c
        return c

    def tile_sum(self, tiles: Iterable[Tile]) -> SampledFunction:
        """`sum_P <f, phi_P> phi_P` in the given order."""
        extra = (1,) * len(self.f.space.shape)
        out = np.zeros_like(self.f.samples)
        for P in tiles:
            values = synthesize_packet(self.mw, P).values.samples
            out = out + values.reshape(values.shape + extra) * self.coefficient(P)
        return self.f.with_samples(out)


def _delta(tiles: List[Tile], I_T: DyadicInterval, ctx: EnergyContext) -> float:
    if not tiles:
        return 0.0
    return ctx.tile_sum(tiles).norm(ctx.q) / I_T.length ** (1.0 / ctx.q)


def tree_energy(tree: Tree, ctx: EnergyContext) -> float:
    """
    `Delta(T)` over the up-part `{P in T : P <=_u top}`, normalized by the
    minimal top interval `I_T`; zero when the up-part is empty.
    """
    up = [P for P in tree.sorted_tiles if tile_le_u(P, tree.top)]
    if not up:
        return 0.0
    return _delta(up, tree.interval, ctx)


def candidate_tops(tiles: List[Tile], universe: Universe) -> List[Tile]:
    """The tiles themselves and every universe tile dominating one of them."""
    tops = set(tiles)
    for P in tiles:
        tops.update(universe.dominating(P))
    return sorted(tops)


def complete_trees(tiles: Tiles, universe: Optional[Universe] = None) -> Iterator[Tree]:
    """The complete tree `{P : P <= top}` of every candidate top, in top order."""
    tiles, universe = _tiles_and_universe(tiles, universe)
    for top in candidate_tops(tiles, universe):
        members = [P for P in tiles if tile_le(P, top)]
        if members:
            yield Tree(frozenset(members), top, "general")


def energy(tiles: Tiles, ctx: EnergyContext, universe: Optional[Universe] = None) -> float:
    """Supremum of `Delta` over complete trees; zero for an empty collection."""
    return max((tree_energy(T, ctx) for T in complete_trees(tiles, universe)), default=0.0)


# Tree lemma


def _check_amplitude(values: np.ndarray, mask: np.ndarray, name: str, set_name: str) -> None:
    excess = values - mask.astype(float)
    if np.any(excess > AMPLITUDE_TOLERANCE):
        raise PreconditionError(
            f"`{name}` exceeds 1_{set_name} pointwise (by up to {float(excess.max()):.3e})"
        )


def tile_pairing_terms(
    mw: MotherWavelet,
    tiles: Iterable[Tile],
    f: SampledFunction,
    g: SampledFunction,
    N: FrequencyChoice,
) -> np.ndarray:
    """`|<<f, phi_P>, <g 1_{N in w_P_u}, phi_P>>|` per tile."""
    terms = []
    for P in tiles:
        packet = synthesize_packet(mw, P)
        cut = g.multiply(N.inside(P.w_u.left, P.w_u.right))
        terms.append(abs(complex(f.space.pair(pair(f, packet), pair(cut, packet)))))
    return np.asarray(terms, dtype=float)


def tree_lemma_check(
    tree: Tree,
    f: SampledFunction,
    g: SampledFunction,
    ctx_d: DensityContext,
    ctx_e: EnergyContext,
    universe: Optional[Universe] = None,
) -> Tuple[float, float]:
    """
    Both sides of the tree estimate

        sum_{P in T} |<<f, phi_P>, <g 1_{N in w_P_u}, phi_P>>|
            <~  density(T) energy(T) |I_T|

    Requires `|f| <= 1_F` (with `F` from `ctx_e`) and `|g|_* <= 1_E`.
    """
    if ctx_e.F is None:
        raise PreconditionError("`ctx_e.F` is required to validate the amplitude of `f`")
    _check_amplitude(f.pointwise_norm(), ctx_e.F.mask, "f", "F")
    _check_amplitude(f.space.dual_norm(g.samples), ctx_d.E.mask, "g", "E")
    lhs = float(np.sum(tile_pairing_terms(ctx_e.mw, tree.sorted_tiles, f, g, ctx_d.N)))
    rhs = density(tree, ctx_d, universe) * energy(tree, ctx_e, universe) * tree.interval.length
    return lhs, rhs


def naive_energy_check(tree: Tree, ctx: EnergyContext, universe: Optional[Universe] = None) -> float:
    """
    `max_P |<f, phi_P>| / (|I_P|^(1/2) energy(T))`; at most `1 / ||phi||_q`
    since every tile is a (one-tile) tree. Zero when the energy vanishes.
    """
    e = energy(tree, ctx, universe)
    if e == 0:
        return 0.0
    space = ctx.f.space
    return max(
        float(space.norm(ctx.coefficient(P))) / (math.sqrt(P.I.length) * e)
        for P in tree.sorted_tiles
    )


# Splits


@dataclass(frozen=True)
class Split:
    """
    Outcome of one density or energy split.

    `before` / `after` are the functional of the input and of the remainder
    (recomputed); `constant` is the tree-length tally normalized by the
    bound the lemma states, `None` when the normalization is undefined.
    """

    remainder: Tuple[Tile, ...]
    trees: Tuple[Tree, ...]
    before: float
    after: float
    constant: Optional[float] = None

    @property
    def tree_length(self) -> float:
        return float(sum(T.interval.length for T in self.trees))

    def tiles(self) -> List[Tile]:
        return sorted(list(self.remainder) + [P for T in self.trees for P in T.sorted_tiles])


def _maximal(tops: Iterable[Tile]) -> List[Tile]:
    tops = sorted(set(tops))
    return [A for A in tops if not any(A != B and tile_le(A, B) for B in tops)]


def density_split(
    tiles: Tiles, ctx: DensityContext, universe: Optional[Universe] = None
) -> Split:
    """
    Remove trees under the maximal tiles `P'` with `int_{E_P'} v_{I_P'} > density / 2`.

    The remainder has at most half the density (recomputed).
    """
    tiles, universe = _tiles_and_universe(tiles, universe)
    d = density(tiles, ctx, universe)
    if d == 0:
        return Split(tuple(tiles), (), 0.0, 0.0)

    dense = set()
    for P in tiles:
        dense.update(Q for Q, m in _dominator_masses(P, ctx, universe) if m > d / 2)
    tops = _maximal(dense)
    groups: Dict[Tile, List[Tile]] = {top: [] for top in tops}
    remainder = []
    for P in tiles:
        top = next((Q for Q in tops if tile_le(P, Q)), None)
        if top is None:
            remainder.append(P)
        else:
            groups[top].append(P)
    trees = tuple(Tree(frozenset(groups[top]), top, "general") for top in tops if groups[top])

    after = density(remainder, ctx, universe)
    if after > d / 2:
        raise DecompositionError(f"Density split left density {after:g} > {d / 2:g}")
    tree_length = float(sum(T.interval.length for T in trees))
    constant = tree_length * d / ctx.measure if ctx.measure > 0 else None
    return Split(tuple(remainder), trees, d, after, constant)


def _selection_key(top: Tile) -> Tuple[float, float, float]:
    return (top.w.center, top.I.left, top.I.length)


def energy_split(
    tiles: Tiles,
    ctx: EnergyContext,
    alpha: float = 0.9,
    universe: Optional[Universe] = None,
) -> Split:
    """
    Repeatedly remove the complete tree with `Delta > energy / 2` whose top
    is maximal and has the lowest frequency center (then leftmost, then shortest).

    The remainder has at most half the energy (recomputed).

    Raises
    ------
    DecompositionError
        When the remainder keeps too much energy, or the selected up-parts
        break the disjointness property.
    """
    if not 0 < alpha < 1:
        raise PreconditionError(f"`alpha` must be in (0, 1) but was: {alpha}")
    tiles, universe = _tiles_and_universe(tiles, universe)
    e = energy(tiles, ctx, universe)
    if e == 0:
        return Split(tuple(tiles), (), 0.0, 0.0)

    remaining = list(tiles)
    trees: List[Tree] = []
    deltas: Dict[Tuple[Tile, frozenset], float] = {}
    for _ in range(len(tiles) + 1):
        heavy = []
        for top in candidate_tops(remaining, universe):
            members = frozenset(P for P in remaining if tile_le(P, top))
            if not members:
                continue
            key = (top, members)
            if key not in deltas:
                deltas[key] = tree_energy(Tree(members, top, "general"), ctx)
            if deltas[key] > e / 2:
                heavy.append((top, members))
        if not heavy:
            break
        maximal = set(_maximal(top for top, _ in heavy))
        top, members = min(
            ((t, m) for t, m in heavy if t in maximal), key=lambda tm: _selection_key(tm[0])
        )
        trees.append(Tree(members, top, "general"))
        remaining = [P for P in remaining if P not in members]
    else:
        raise DecompositionError("Energy split did not terminate")

    after = energy(remaining, ctx, universe)
    if after > e / 2:
        raise DecompositionError(f"Energy split left energy {after:g} > {e / 2:g}")
    up_parts = [T.up_part() for T in trees if any(tile_le_u(P, T.top) for P in T)]
    disjointness = check_disjointness_property(up_parts)
    if not disjointness:
        raise DecompositionError(
            f"Selected up-trees violate the disjointness property: {disjointness}"
        )
    tree_length = float(sum(T.interval.length for T in trees))
    constant = None
    if ctx.F is not None and ctx.F.measure > 0:
        constant = tree_length * e ** (ctx.q / alpha) / ctx.F.measure
    return Split(tuple(remaining), tuple(trees), e, after, constant)


# Full decomposition


def _level(
    d: float, e: float, measure_E: float, measure_F: float, q: float, alpha: float
) -> float:
    """
    Largest `n` with `d <= |E| 2^-n` and `e <= |F|^(a/q) 2^(-n a/q)`;
    `inf` when both functionals vanish.
    """
    n = math.inf
    if d > 0:
        n_d = math.floor(math.log2(measure_E / d))
        while d > measure_E * 2.0 ** (-n_d):
            n_d -= 1
        n = min(n, n_d)
    if e > 0:
        if measure_F <= 0:
            raise PreconditionError("Positive energy needs a support `F` of positive measure")
        n_e = math.floor(math.log2(measure_F) - (q / alpha) * math.log2(e))
        while e > _energy_bound(measure_F, n_e, q, alpha):
            n_e -= 1
        n = min(n, n_e)
    return n


def _energy_bound(measure_F: float, n: int, q: float, alpha: float) -> float:
    return measure_F ** (alpha / q) * 2.0 ** (-n * alpha / q)


@dataclass(frozen=True)
class LevelTree:
    level: int
    tree: Tree
    density: float
    energy: float


@dataclass(frozen=True)
class TileDecomposition:
    """Trees `T_{n,j}` by level `n` and the residual tiles of zero density and energy."""

    trees: Tuple[LevelTree, ...] = ()
    residual: Tuple[Tile, ...] = ()
    measure_E: float = 0.0
    measure_F: float = 0.0
    q: float = 2.0
    alpha: float = 0.9

    @property
    def levels(self) -> Dict[int, List[Tree]]:
        out: Dict[int, List[Tree]] = {}
        for lt in self.trees:
            out.setdefault(lt.level, []).append(lt.tree)
        return dict(sorted(out.items()))

    def tallies(self) -> Dict[int, float]:
        """`sum_j |I_{T_{n,j}}|` per level."""
        return {n: float(sum(T.interval.length for T in trees)) for n, trees in self.levels.items()}

    def constants(self) -> Dict[int, float]:
        """Tallies normalized by `2^n`."""
        return {n: tally * 2.0 ** (-n) for n, tally in self.tallies().items()}

    def tiles(self) -> List[Tile]:
        return sorted(list(self.residual) + [P for lt in self.trees for P in lt.tree.sorted_tiles])

    def check_bounds(self) -> None:
        """
        Raises
        ------
        DecompositionError
            When a tree breaks the density or energy bound of its level.
        """
        for lt in self.trees:
            if lt.density > self.measure_E * 2.0 ** (-lt.level) * (1 + 1e-12):
                raise DecompositionError(f"Tree at level {lt.level} has density {lt.density:g}")
            bound = _energy_bound(self.measure_F, lt.level, self.q, self.alpha)
            if lt.energy > bound * (1 + 1e-12):
                raise DecompositionError(f"Tree at level {lt.level} has energy {lt.energy:g}")

    def to_json(self) -> dict:
        levels = []
        for n, trees in self.levels.items():
            levels.append(
                {
                    "n": n,
                    "tops": [T.top.to_json() for T in trees],
                    "tally": self.tallies()[n],
                    "constant": self.constants()[n],
                }
            )
        return {
            "levels": levels,
            "trees": [
                {
                    "n": lt.level,
                    "top": lt.tree.top.to_json(),
                    "tiles": [P.to_json() for P in lt.tree.sorted_tiles],
                    "density": lt.density,
                    "energy": lt.energy,
                }
                for lt in self.trees
            ],
            "residual": [P.to_json() for P in self.residual],
            "measure_E": self.measure_E,
            "measure_F": self.measure_F,
            "q": self.q,
            "alpha": self.alpha,
        }

    def to_csv(self) -> str:
        """Columns `n, j, length, density, energy`."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["n", "j", "length", "density", "energy"])
        counters: Dict[int, int] = {}
        for lt in self.trees:
            j = counters.get(lt.level, 0)
            counters[lt.level] = j + 1
            writer.writerow(
                [lt.level, j, repr(lt.tree.interval.length), repr(lt.density), repr(lt.energy)]
            )
        return buffer.getvalue()


def full_decomposition(
    tiles: Tiles,
    ctx_d: DensityContext,
    ctx_e: EnergyContext,
    alpha: float = 0.9,
    universe: Optional[Universe] = None,
) -> TileDecomposition:
    """
    Alternate density and energy splits until both functionals vanish.

    Each round works at the level `n` the current remainder satisfies and
    splits off trees with whichever functional would break the bounds of
    level `n + 1`. Every tree split off in that round is filed under `n`,
    and its recomputed density and energy are checked against the bounds
    of `n`.

    Raises
    ------
    DecompositionError
        When the round count exceeds the tile count plus the scale range,
        or a tree breaks the bounds of its level.
    """
    if not 0 < alpha < 1:
        raise PreconditionError(f"`alpha` must be in (0, 1) but was: {alpha}")
    if ctx_e.F is None:
        raise PreconditionError("`ctx_e.F` is required for the energy bounds")
    tiles, universe = _tiles_and_universe(tiles, universe)
    measure_E, measure_F, q = ctx_d.measure, ctx_e.F.measure, ctx_e.q

    placed: List[LevelTree] = []
    remaining = list(tiles)
    for _ in range(len(tiles) + len(universe.scales) + 1):
        d = density(remaining, ctx_d, universe)
        e = energy(remaining, ctx_e, universe)
        n = _level(d, e, measure_E, measure_F, q, alpha)
        if n == math.inf:
            break
        if d > measure_E * 2.0 ** (-n - 1):
            split = density_split(remaining, ctx_d, universe)
        else:
            split = energy_split(remaining, ctx_e, alpha, universe)
        for T in split.trees:
            d_T, e_T = density(T, ctx_d, universe), energy(T, ctx_e, universe)
            placed.append(LevelTree(int(n), T, d_T, e_T))
        logger.debug(
            "Level %s: split off %d trees, %d tiles remain",
            n,
            len(split.trees),
            len(split.remainder),
        )
        remaining = list(split.remainder)
    else:
        raise DecompositionError(
            f"Decomposition did not terminate within {len(tiles) + len(universe.scales)} rounds"
        )

    decomposition = TileDecomposition(
        trees=tuple(sorted(placed, key=lambda lt: (lt.level, lt.tree.top))),
        residual=tuple(remaining),
        measure_E=measure_E,
        measure_F=measure_F,
        q=q,
        alpha=alpha,
    )
    decomposition.check_bounds()
    if decomposition.tiles() != sorted(tiles):
        raise DecompositionError("Decomposition lost or duplicated tiles")
    return decomposition


def exhaustive_subtree_energy(
    tiles: Tiles, ctx: EnergyContext, universe: Optional[Universe] = None
) -> Tuple[float, float]:
    """
    Energy over complete trees and over every subtree, for at most 12 tiles.

    Returns
    -------
    (complete, exhaustive)
        `exhaustive >= complete`; the gap measures how much the complete-tree
        restriction of the supremum gives away.
    """
    tiles, universe = _tiles_and_universe(tiles, universe)
    if len(tiles) > MAX_EXHAUSTIVE_TILES:
        raise PreconditionError(
            f"Exhaustive enumeration needs at most {MAX_EXHAUSTIVE_TILES} tiles "
            f"but got: {len(tiles)}"
        )
    complete = 0.0
    exhaustive = 0.0
    for T in complete_trees(tiles, universe):
        up = [P for P in T.sorted_tiles if tile_le_u(P, T.top)]
        complete = max(complete, tree_energy(T, ctx))
        for r in range(1, len(up) + 1):
            for subset in itertools.combinations(up, r):
                I_S = Tree(frozenset(subset), T.top, "general").interval
                exhaustive = max(exhaustive, _delta(list(subset), I_S, ctx))
    return complete, exhaustive
