"""
Dyadic phase-plane geometry.

Intervals are kept as integer (scale, index) pairs relative to a grid,
and every predicate below is computed on those integers. Floating point
endpoints only exist for sampling (`left`, `right`, `center`).
"""

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

import numpy as np

from phaseplane.utils import (
    EmptyTreeError,
    GridMismatchError,
    PreconditionError,
    StandingAssumptionError,
    Violation,
    pairs,
)

TIME = "time"
FREQUENCY = "frequency"
TREE_KINDS = ("general", "up", "down")

# Equal-frequency tiles of a collection sit on time indices
# that agree modulo this spacing
PACKET_SPACING = 20


@dataclass(frozen=True)
class DyadicGrid:
    """
    A time grid `t + [n 2^k r, (n+1) 2^k r)` and its frequency
    grid `t_freq + [n 2^k / r, (n+1) 2^k / r)`.

    Parameters
    ----------
    t : float
        Time translation.
    r : float
        Time dilation (positive). The frequency grid is dilated by `1/r`.
    t_freq : float
        Frequency translation. Independent of `t`.
    """

    t: float = 0.0
    r: float = 1.0
    t_freq: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r > 0):
            raise PreconditionError(f"`r` must be positive but was: {self.r}")

    def to_json(self) -> dict:
        return {"t": self.t, "r": self.r, "t_freq": self.t_freq}

    @staticmethod
    def from_json(d: dict) -> "DyadicGrid":
        return DyadicGrid(
            t=float(d.get("t", 0.0)),
            r=float(d.get("r", 1.0)),
            t_freq=float(d.get("t_freq", 0.0)),
        )


def _check_same_grid(a: "DyadicInterval", b: "DyadicInterval") -> None:
    if a.grid != b.grid:
        raise GridMismatchError(f"Intervals live on different grids: {a.grid} vs {b.grid}")
    if a.axis != b.axis:
        raise GridMismatchError(f"Cannot compare a {a.axis} interval with a {b.axis} interval")


@dataclass(frozen=True, order=False)
class DyadicInterval:
    """
    The dyadic interval with scale `k` and index `n` on one axis of `grid`.

    A time interval has length `2^k r`, a frequency interval `2^k / r`.
    """

    grid: DyadicGrid
    axis: str
    k: int
    n: int

    @property
    def length(self) -> float:
        scale = self.grid.r if self.axis == TIME else 1.0 / self.grid.r
        return math.ldexp(scale, self.k)

    @property
    def origin(self) -> float:
        return self.grid.t if self.axis == TIME else self.grid.t_freq

    @property
    def left(self) -> float:
        return self.origin + self.n * self.length

    @property
    def right(self) -> float:
        return self.origin + (self.n + 1) * self.length

    @property
    def center(self) -> float:
        return self.origin + (self.n + 0.5) * self.length

    def contains(self, other: "DyadicInterval") -> bool:
        """Whether `other` is a subset of `self` (exact)."""
        _check_same_grid(self, other)
        if other.k > self.k:
            return False
        return (other.n >> (self.k - other.k)) == self.n

    def intersects(self, other: "DyadicInterval") -> bool:
        # Dyadic intervals are either nested or disjoint
        return self.contains(other) or other.contains(self)

    def ancestor(self, k: int) -> "DyadicInterval":
        if k < self.k:
            raise PreconditionError(f"`k` ({k}) is finer than the interval scale ({self.k})")
        return DyadicInterval(self.grid, self.axis, k, self.n >> (k - self.k))

    @property
    def parent(self) -> "DyadicInterval":
        return self.ancestor(self.k + 1)

    def descendants(self, k: int) -> Iterator["DyadicInterval"]:
        """All sub-intervals at the finer scale `k`, left to right."""
        if k > self.k:
            raise PreconditionError(f"`k` ({k}) is coarser than the interval scale ({self.k})")
        d = self.k - k
        for n in range(self.n << d, (self.n + 1) << d):
            yield DyadicInterval(self.grid, self.axis, k, n)

    def lower_half(self) -> "DyadicInterval":
        return DyadicInterval(self.grid, self.axis, self.k - 1, 2 * self.n)

    def upper_half(self) -> "DyadicInterval":
        return DyadicInterval(self.grid, self.axis, self.k - 1, 2 * self.n + 1)

    def __repr__(self) -> str:
        return f"{self.axis[0]}[{self.left:g}, {self.right:g})"


@dataclass(frozen=True)
class HalfTile:
    """A half-tile rectangle `I x w` where `w` is one half of a tile's frequency interval."""

    I: DyadicInterval  # noqa: E741
    w: DyadicInterval

    def intersects(self, other: "HalfTile") -> bool:
        return self.I.intersects(other.I) and self.w.intersects(other.w)


@dataclass(frozen=True)
class Tile:
    """
    A dyadic rectangle `I x w` of area one.

    Use `Tile.at()` to build one from integer data.
    """

    I: DyadicInterval  # noqa: E741
    w: DyadicInterval

    def __post_init__(self):
        if self.I.axis != TIME or self.w.axis != FREQUENCY:
            raise PreconditionError("A tile is a time interval times a frequency interval")
        if self.I.grid != self.w.grid:
            raise GridMismatchError("Tile intervals live on different grids")
        if self.w.k != -self.I.k:
            raise PreconditionError(
                f"Tile area must be one: time scale {self.I.k} needs frequency scale "
                f"{-self.I.k} but got {self.w.k}"
            )

    @staticmethod
    def at(grid: DyadicGrid, k: int, n_time: int, n_freq: int) -> "Tile":
        """Tile with time interval `(k, n_time)` and frequency interval `(-k, n_freq)`."""
        return Tile(
            I=DyadicInterval(grid, TIME, int(k), int(n_time)),
            w=DyadicInterval(grid, FREQUENCY, -int(k), int(n_freq)),
        )

    @property
    def grid(self) -> DyadicGrid:
        return self.I.grid

    @property
    def key(self) -> Tuple[int, int, int, int]:
        """Sort key: lexicographic in (k_I, n_I, k_w, n_w)."""
        return (self.I.k, self.I.n, self.w.k, self.w.n)

    @property
    def w_d(self) -> DyadicInterval:
        return self.w.lower_half()

    @property
    def w_u(self) -> DyadicInterval:
        return self.w.upper_half()

    @property
    def down(self) -> HalfTile:
        return HalfTile(self.I, self.w_d)

    @property
    def up(self) -> HalfTile:
        return HalfTile(self.I, self.w_u)

    def __lt__(self, other: "Tile") -> bool:
        return self.key < other.key

    def __repr__(self) -> str:
        return f"Tile(k={self.I.k}, n={self.I.n}, m={self.w.n})"

    def to_json(self) -> dict:
        return {"kI": self.I.k, "nI": self.I.n, "kW": self.w.k, "nW": self.w.n}

    @staticmethod
    def from_json(grid: DyadicGrid, d: dict) -> "Tile":
        return Tile(
            I=DyadicInterval(grid, TIME, int(d["kI"]), int(d["nI"])),
            w=DyadicInterval(grid, FREQUENCY, int(d["kW"]), int(d["nW"])),
        )


def half_le(h: HalfTile, h2: HalfTile) -> bool:
    """Order on half-tiles: `I ⊆ I'` and `w ⊇ w'`."""
    return h2.I.contains(h.I) and h.w.contains(h2.w)


def tile_le(P: Tile, P2: Tile) -> bool:
    """`P <= P'`: `I_P ⊆ I_P'` and `w_P ⊇ w_P'`."""
    return P2.I.contains(P.I) and P.w.contains(P2.w)


def tile_le_d(P: Tile, P2: Tile) -> bool:
    return half_le(P.down, P2.down)


def tile_le_u(P: Tile, P2: Tile) -> bool:
    return half_le(P.up, P2.up)


_ORDERS = {"general": tile_le, "up": tile_le_u, "down": tile_le_d}


def tile_order(kind: str):
    """The tile order used by trees of `kind` ('general', 'up' or 'down')."""
    try:
        return _ORDERS[kind]
    except KeyError:
        raise PreconditionError(f"`kind` must be one of {TREE_KINDS} but was: {kind}")


def _smallest_nested(intervals: List[DyadicInterval]) -> Optional[DyadicInterval]:
    smallest = min(intervals, key=lambda w: w.k)
    if all(w.contains(smallest) for w in intervals):
        return smallest
    return None


def _common_ancestor(intervals: List[DyadicInterval]) -> DyadicInterval:
    k = max(i.k for i in intervals)
    while True:
        ancestors = {i.ancestor(k) for i in intervals}
        if len(ancestors) == 1:
            return ancestors.pop()
        k += 1


def admissible_top(
    tiles: Iterable[Tile], I: DyadicInterval, kind: str = "general"  # noqa: E741
) -> Optional[Tile]:
    """
    A top tile with time interval `I` for `tiles` under the `kind` order,
    or `None` when no frequency interval makes `I` admissible.
    """
    tiles = list(tiles)
    le = tile_order(kind)
    if not all(I.contains(P.I) for P in tiles):
        return None
    fk = -I.k
    if kind == "general":
        region = _smallest_nested([P.w for P in tiles])
        if region is None or region.k < fk:
            return None
        w = next(region.descendants(fk))
    else:
        halves = [P.w_d if kind == "down" else P.w_u for P in tiles]
        region = _smallest_nested(halves)
        if region is None or region.k < fk - 1:
            return None
        d = region.k - (fk - 1)
        # Lower halves have even indices, upper halves odd ones
        m = region.n << d if kind == "down" else ((region.n + 1) << d) - 1
        w = DyadicInterval(I.grid, FREQUENCY, fk, m >> 1)
    top = Tile(I=I, w=w)
    if all(le(P, top) for P in tiles):
        return top
    return None


@dataclass(frozen=True)
class Tree:
    """
    Tiles that all lie below `top` in the `kind` order.

    The top need not be a member. `kind` is stored and checked
    on construction.
    """

    tiles: frozenset
    top: Tile
    kind: str = "general"

    def __post_init__(self):
        le = tile_order(self.kind)
        object.__setattr__(self, "tiles", frozenset(self.tiles))
        for P in self.tiles:
            if not le(P, self.top):
                raise PreconditionError(f"{P} is not below the top {self.top} ({self.kind} order)")

    @staticmethod
    def complete(tiles: Iterable[Tile], top: Tile, kind: str = "general") -> "Tree":
        """The tree of all `tiles` below `top`."""
        le = tile_order(kind)
        return Tree(frozenset(P for P in tiles if le(P, top)), top, kind)

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self) -> Iterator[Tile]:
        return iter(self.sorted_tiles)

    @cached_property
    def sorted_tiles(self) -> Tuple[Tile, ...]:
        return tuple(sorted(self.tiles))

    @cached_property
    def interval(self) -> DyadicInterval:
        """The minimal top time interval `I_T`."""
        return minimal_top_interval(self)

    def up_part(self) -> "Tree":
        """`T_u`: the members with `P <=_u top`."""
        return Tree(frozenset(P for P in self.tiles if tile_le_u(P, self.top)), self.top, "up")


def minimal_top_interval(tree: Tree) -> DyadicInterval:
    """
    The smallest dyadic `I` such that some `I x w` is an admissible top.

    Every other admissible top time interval contains it.
    """
    if not tree.tiles:
        raise EmptyTreeError("Cannot find the top interval of an empty tree.")
    tiles = tree.sorted_tiles
    I = _common_ancestor([P.I for P in tiles])  # noqa: E741
    for _ in range(64):
        if admissible_top(tiles, I, tree.kind) is not None:
            return I
        I = I.parent  # noqa: E741
    raise PreconditionError("The tiles do not form a tree: no admissible top was found.")


@dataclass(frozen=True)
class Universe:
    """
    The bounded part of the phase plane that enumerations run over.

    Scales `k` in `[k_min, k_max]`, time window `[time_min, time_max)`
    and frequency window `[freq_min, freq_max)` (absolute coordinates).
    """

    k_min: int = -2
    k_max: int = 2
    time_min: float = -32.0
    time_max: float = 32.0
    freq_min: float = 0.0
    freq_max: float = 4.0

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise PreconditionError("`k_min` must not exceed `k_max`")
        if not (self.time_min < self.time_max and self.freq_min < self.freq_max):
            raise PreconditionError("Universe windows must be nonempty")

    @property
    def scales(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def time_indices(self, grid: DyadicGrid, k: int) -> range:
        length = math.ldexp(grid.r, k)
        lo = math.ceil((self.time_min - grid.t) / length)
        hi = math.floor((self.time_max - grid.t) / length)
        return range(lo, hi)

    def freq_indices(self, grid: DyadicGrid, k: int) -> range:
        length = math.ldexp(1.0 / grid.r, -k)
        lo = math.ceil((self.freq_min - grid.t_freq) / length)
        hi = math.floor((self.freq_max - grid.t_freq) / length)
        return range(lo, hi)

    def contains(self, P: Tile) -> bool:
        return (
            self.k_min <= P.I.k <= self.k_max
            and P.I.n in self.time_indices(P.grid, P.I.k)
            and P.w.n in self.freq_indices(P.grid, P.I.k)
        )

    def tiles(self, grid: DyadicGrid) -> Iterator[Tile]:
        for k in self.scales:
            for n in self.time_indices(grid, k):
                for m in self.freq_indices(grid, k):
                    yield Tile.at(grid, k, n, m)

    def dominating(self, P: Tile) -> Iterator[Tile]:
        """All tiles `P' >= P` with scale at most `k_max` (including `P`)."""
        for k in range(P.I.k, max(self.k_max, P.I.k) + 1):
            I = P.I.ancestor(k)  # noqa: E741
            for w in P.w.descendants(-k):
                yield Tile(I=I, w=w)

    def to_json(self) -> dict:
        return {
            "k_min": self.k_min,
            "k_max": self.k_max,
            "time_min": self.time_min,
            "time_max": self.time_max,
            "freq_min": self.freq_min,
            "freq_max": self.freq_max,
        }

    @staticmethod
    def from_json(d: dict) -> "Universe":
        return Universe(
            k_min=int(d["k_min"]),
            k_max=int(d["k_max"]),
            time_min=float(d["time_min"]),
            time_max=float(d["time_max"]),
            freq_min=float(d["freq_min"]),
            freq_max=float(d["freq_max"]),
        )


def check_standing_assumption(tiles: Iterable[Tile]) -> Optional[Tuple[Tile, Tile]]:
    """First pair of distinct equal-frequency tiles whose time offset is not a multiple of 20 |I|."""
    by_freq: Dict[Tuple[int, int], List[Tile]] = {}
    for P in sorted(set(tiles)):
        by_freq.setdefault((P.w.k, P.w.n), []).append(P)
    for group in by_freq.values():
        for P, P2 in pairs(group):
            if (P.I.n - P2.I.n) % PACKET_SPACING != 0:
                return P, P2
    return None


@dataclass(frozen=True)
class TileCollection:
    """
    A finite set of tiles on one grid, with the universe it was drawn from.

    Equal-frequency tiles must be offset by `20 n |I|` in time;
    violating collections are rejected.
    """

    grid: DyadicGrid
    tiles: Tuple[Tile, ...] = ()
    universe: Universe = field(default_factory=Universe)

    def __post_init__(self):
        tiles = tuple(sorted(set(self.tiles)))
        for P in tiles:
            if P.grid != self.grid:
                raise GridMismatchError(f"{P} is not on the collection grid {self.grid}")
        offending = check_standing_assumption(tiles)
        if offending is not None:
            P, P2 = offending
            raise StandingAssumptionError(
                f"Equal-frequency tiles {P} and {P2} are not offset by a multiple of "
                f"{PACKET_SPACING} |I|"
            )
        object.__setattr__(self, "tiles", tiles)

    def __len__(self) -> int:
        return len(self.tiles)

    def __iter__(self) -> Iterator[Tile]:
        return iter(self.tiles)

    def __contains__(self, P: Tile) -> bool:
        return P in self._members

    @cached_property
    def _members(self) -> frozenset:
        return frozenset(self.tiles)

    def with_tiles(self, tiles: Iterable[Tile]) -> "TileCollection":
        return TileCollection(self.grid, tuple(tiles), self.universe)

    def to_json(self) -> dict:
        return {
            "grid": self.grid.to_json(),
            "tiles": [P.to_json() for P in self.tiles],
            "universe": self.universe.to_json(),
        }

    @staticmethod
    def from_json(d: dict) -> "TileCollection":
        grid = DyadicGrid.from_json(d["grid"])
        universe = Universe.from_json(d["universe"]) if "universe" in d else Universe()
        return TileCollection(
            grid=grid,
            tiles=tuple(Tile.from_json(grid, t) for t in d.get("tiles", [])),
            universe=universe,
        )


def union_of_trees(trees: Iterable[Tree]) -> List[Tile]:
    """All member tiles of `trees`, each once, sorted."""
    trees = list(trees)
    return sorted(set().union(*[t.tiles for t in trees])) if trees else []


def check_disjointness_property(trees: List[Tree]) -> Union[bool, Violation]:
    """
    Check the disjointness property of a tree family.

    Whenever `P` in `T` and `P'` in `T'` satisfy `w_P ⊆ w_{P'_d}`,
    the time interval of `P'` must miss `I_T`.

    Returns
    -------
    `True`, or the first `Violation` found (which is falsy).
    """
    members = [(i, P) for i, tree in enumerate(trees) for P in tree.sorted_tiles]
    for i, P in members:
        I_T = trees[i].interval
        for j, P2 in members:
            if P2.w_d.contains(P.w) and P2.I.intersects(I_T):
                return Violation(
                    tile=P,
                    tree_index=i,
                    other_tile=P2,
                    other_tree_index=j,
                    reason="w_P inside the lower half of P' but I_P' meets I_T",
                )
    return True


def down_halves_disjoint(tiles: Iterable[Tile]) -> bool:
    """Whether the down-halves of all (distinct) `tiles` are pairwise disjoint."""
    return all(not P.down.intersects(P2.down) for P, P2 in pairs(sorted(set(tiles))))


def split_into_up_trees(tree: Tree) -> List[Tree]:
    """
    Split a tree into up-trees under its maximal tiles.

    Each tile goes to the first (in tile order) maximal tile above it.

    Raises
    ------
    PreconditionError
        When a part is not an up-tree or two maximal tiles overlap in time,
        i.e. the tree did not come from a family with the disjointness property.
    """
    tiles = tree.sorted_tiles
    maximal = [P for P in tiles if not any(P != Q and tile_le(P, Q) for Q in tiles)]
    groups: Dict[Tile, List[Tile]] = {top: [] for top in maximal}
    for P in tiles:
        top = next(Q for Q in maximal if tile_le(P, Q))
        groups[top].append(P)

    parts = []
    for top in maximal:
        try:
            parts.append(Tree(frozenset(groups[top]), top, "up"))
        except PreconditionError as e:
            raise PreconditionError(f"Part under maximal tile {top} is not an up-tree: {e}")
    for A, B in pairs(maximal):
        if A.I.intersects(B.I):
            raise PreconditionError(f"Maximal tiles {A} and {B} overlap in time")
    return parts


def disjoint_time_ancestors(P: Tile, tiles: Iterable[Tile], tree: Tree) -> bool:
    """
    Among tiles `P'` with `w_{P'_d} ⊇ w_P`, check that their time intervals
    are pairwise disjoint and miss `I_T`.
    """
    above = [P2 for P2 in sorted(set(tiles)) if P2.w_d.contains(P.w)]
    if any(P2.I.intersects(tree.interval) for P2 in above):
        return False
    return all(not A.I.intersects(B.I) for A, B in pairs(above))


# Weights adapted to a time interval

WEIGHT_DECAY = 10


def weight_v(I: DyadicInterval, x: Union[float, np.ndarray]):
    """`v_I(x) = |I|^-1 (1 + |x - c(I)| / |I|)^-10` (vectorized over `x`)."""
    if I.axis != TIME:
        raise PreconditionError("`I` must be a time interval")
    u = np.abs(np.asarray(x, dtype=float) - I.center) / I.length
    return (1.0 + u) ** (-WEIGHT_DECAY) / I.length


def _weight_antiderivative(u):
    u = np.asarray(u, dtype=float)
    return np.sign(u) * (1.0 - (1.0 + np.abs(u)) ** (1 - WEIGHT_DECAY)) / (WEIGHT_DECAY - 1)


def weight_v_mass(I: DyadicInterval, left: float, right: float) -> float:
    """Exact integral of `v_I` over `[left, right)`; over the whole line it is 2/9."""
    if I.axis != TIME:
        raise PreconditionError("`I` must be a time interval")
    if right <= left:
        return 0.0
    a = (left - I.center) / I.length
    b = (right - I.center) / I.length
    return float(_weight_antiderivative(b) - _weight_antiderivative(a))
