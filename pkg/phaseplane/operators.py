"""
Partial Fourier sums, their maximal and periodic versions, the model
Carleson operator, tree operators and the Hardy-Littlewood maximal function.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft

from phaseplane.geometry import PACKET_SPACING, Tile, TileCollection, Tree
from phaseplane.sampling import MeasurableSet, SampledFunction, Sampling
from phaseplane.utils import PreconditionError, pairs
from phaseplane.values import ComplexScalar, SchattenMatrix, ValueSpace
from phaseplane.wave_packets import (
    MotherWavelet,
    coefficients,
    inner,
    synthesize,
    synthesize_packets,
)

__all__ = [
    "FrequencyChoice",
    "MeasurableSet",
    "PeriodicFunction",
    "partial_sum",
    "partial_sum_by_convolution",
    "maximal_partial_sum",
    "frequency_pairs",
    "periodic_partial_sum",
    "periodic_maximal",
    "schatten_test_function",
    "convergence_errors",
    "model_carleson",
    "tree_operator",
    "signed_tree_operator",
    "signed_tree_ratio",
    "subfamily_cross_pairings",
    "hardy_littlewood",
    "OPERATORS",
    "get_operator",
]


@dataclass(frozen=True)
class FrequencyChoice:
    """A frequency `N(x)` per sample cell."""

    sampling: Sampling
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != (self.sampling.count,):
            raise PreconditionError(f"`values` must have shape ({self.sampling.count},)")
        if not np.all(np.isfinite(values)):
            raise PreconditionError("`values` must be finite.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @staticmethod
    def constant(sampling: Sampling, value: float) -> "FrequencyChoice":
        return FrequencyChoice(sampling, np.full(sampling.count, float(value)))

    def inside(self, left: float, right: float) -> np.ndarray:
        """Mask of the cells with `N(x)` in `[left, right)`."""
        return (self.values >= left) & (self.values < right)


def _expand(a: np.ndarray, ndim: int) -> np.ndarray:
    return a.reshape(a.shape + (1,) * (ndim - 1))


# Partial sums on the line


def _spectral_mask(sampling: Sampling, m: float, n: float) -> np.ndarray:
    """`1_[m, n]` on the discrete frequencies, both endpoints included."""
    xi = sampling.frequencies
    eps = 1e-9 / (2 * sampling.half_length)
    return (xi >= m - eps) & (xi <= n + eps)


def partial_sum(f: SampledFunction, m: float, n: float) -> SampledFunction:
    """
    `S_{m,n} f(x) = int_m^n f^(xi) exp(2 pi i x xi) dxi`.

    Multiplies the spectrum by `1_[m, n]` (closed), coordinatewise for vector values.
    """
    if not m < n:
        raise PreconditionError(f"`m` must be smaller than `n` but got: m={m}, n={n}")
    spec = f.spectrum() * _expand(_spectral_mask(f.sampling, m, n), f.samples.ndim)
    return SampledFunction.from_spectrum(f.sampling, spec, f.space)


def dirichlet_kernel(x: np.ndarray, m: float, n: float) -> np.ndarray:
    """`exp(i pi x (m + n)) sin(pi x (n - m)) / (pi x)`, equal to `n - m` at zero."""
    x = np.asarray(x, dtype=float)
    return np.exp(1j * np.pi * x * (m + n)) * (n - m) * np.sinc(x * (n - m))


def partial_sum_by_convolution(
    f: SampledFunction, m: float, n: float, indices: Sequence[int]
) -> np.ndarray:
    """
    `S_{m,n} f` at the samples `indices`, by direct quadrature of the
    convolution with the kernel of `[m, n]`.

    Returns
    -------
    ndarray
        Shape `(len(indices),) + f.space.shape`.
    """
    if not m < n:
        raise PreconditionError(f"`m` must be smaller than `n` but got: m={m}, n={n}")
    x = f.positions
    out = []
    for j in indices:
        kernel = dirichlet_kernel(x[j] - x, m, n)
        out.append(np.tensordot(kernel, f.samples, axes=(0, 0)) * f.step)
    return np.asarray(out)


def frequency_pairs(bound: float, level: int) -> List[Tuple[float, float]]:
    """All `(m, n)` with `m < n` on the grid `2^-level Z` inside `[-bound, bound]`."""
    step = 2.0 ** (-level)
    count = int(np.floor(bound / step))
    points = [j * step for j in range(-count, count + 1)]
    return [(a, b) for a, b in pairs(points)]


def maximal_partial_sum(
    f: SampledFunction, frequencies: Iterable[Tuple[float, float]]
) -> np.ndarray:
    """
    `S* f(x) = max_{(m, n) in frequencies} |S_{m,n} f(x)|_X` over a finite family.

    Each endpoint contributes two cumulative sums (`xi < m` and `xi <= n`),
    so the cost grows with the number of distinct endpoints only.
    """
    frequencies = list(frequencies)
    if not frequencies:
        raise PreconditionError("`frequencies` must not be empty")
    for m, n in frequencies:
        if not m < n:
            raise PreconditionError(f"`m` must be smaller than `n` but got: m={m}, n={n}")

    spec = f.spectrum()
    xi = f.sampling.frequencies
    eps = 1e-9 / (2 * f.sampling.half_length)

    def cumulative(mask: np.ndarray) -> np.ndarray:
        return SampledFunction.from_spectrum(
            f.sampling, spec * _expand(mask, spec.ndim), f.space
        ).samples

    below = {m: cumulative(xi < m - eps) for m in sorted({m for m, _ in frequencies})}
    upto = {n: cumulative(xi <= n + eps) for n in sorted({n for _, n in frequencies})}
    out = np.zeros(f.sampling.count)
    for m, n in frequencies:
        out = np.maximum(out, f.space.norm(upto[n] - below[m]))
    return out


# Periodic partial sums


@dataclass(frozen=True)
class PeriodicFunction:
    """Samples of a one-periodic function at `j / M`, `j = 0..M-1`."""

    samples: np.ndarray
    space: ValueSpace = field(default_factory=ComplexScalar)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape[1:] != self.space.shape:
            raise PreconditionError(
                f"`samples` must end in the {self.space.kind} shape {self.space.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise PreconditionError("`samples` must be finite.")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    @staticmethod
    def from_callable(fn, count: int, space: Optional[ValueSpace] = None) -> "PeriodicFunction":
        space = space or ComplexScalar()
        return PeriodicFunction(np.asarray(fn(np.arange(count) / count)), space)

    @property
    def count(self) -> int:
        return self.samples.shape[0]

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.count) / self.count

    def coefficients(self) -> Tuple[np.ndarray, np.ndarray]:
        """Integer frequencies and the Fourier coefficients `f^(k)` (periodic quadrature)."""
        k = np.rint(scipy.fft.fftfreq(self.count, d=1.0 / self.count)).astype(int)
        return k, scipy.fft.fft(self.samples, axis=0) / self.count

    def sup_distance(self, other: "PeriodicFunction") -> float:
        return float(np.max(self.space.norm(self.samples - other.samples)))


def periodic_partial_sum(f: PeriodicFunction, m: int, n: int) -> PeriodicFunction:
    """`s_{m,n} f(x) = sum_{k=m}^{n} f^(k) exp(2 pi i k x)`."""
    if m > n:
        raise PreconditionError(f"`m` must not exceed `n` but got: m={m}, n={n}")
    k, coef = f.coefficients()
    mask = _expand((k >= m) & (k <= n), coef.ndim)
    return PeriodicFunction(scipy.fft.ifft(coef * mask, axis=0) * f.count, f.space)


def periodic_maximal(f: PeriodicFunction, frequencies: Iterable[Tuple[int, int]]) -> np.ndarray:
    """`s* f(x) = max |s_{m,n} f(x)|_X` over a finite family of integer pairs."""
    frequencies = list(frequencies)
    if not frequencies:
        raise PreconditionError("`frequencies` must not be empty")
    out = np.zeros(f.count)
    for m, n in frequencies:
        out = np.maximum(out, f.space.norm(periodic_partial_sum(f, m, n).samples))
    return out


def _cusp(x: np.ndarray) -> np.ndarray:
    return np.abs(np.sin(np.pi * x)) ** 3


def schatten_test_function(count: int = 1024, p: float = 2.0) -> PeriodicFunction:
    """A 2 x 2 matrix-valued periodic function, twice differentiable with cusps at four points."""
    x = np.arange(count) / count
    samples = np.empty((count, 2, 2), dtype=complex)
    samples[:, 0, 0] = _cusp(x)
    samples[:, 0, 1] = _cusp(x - 1 / 3) * np.exp(2j * np.pi * x)
    samples[:, 1, 0] = np.cos(2 * np.pi * x)
    samples[:, 1, 1] = 1j * _cusp(x + 1 / 4) - _cusp(x - 1 / 8)
    return PeriodicFunction(samples, SchattenMatrix(p=p, d=2))


def convergence_errors(f: PeriodicFunction, degrees: Iterable[int]) -> Dict[int, float]:
    """`sup_x |s_{-n,n} f(x) - f(x)|_X` for each `n`."""
    return {int(n): periodic_partial_sum(f, -n, n).sup_distance(f) for n in degrees}


# Tile operators


def _check_in_universe(collection: TileCollection) -> None:
    for P in collection:
        if not collection.universe.contains(P):
            raise PreconditionError(f"{P} lies outside the tile universe")


def model_carleson(
    mw: MotherWavelet,
    f: SampledFunction,
    N: FrequencyChoice,
    collection: TileCollection,
) -> SampledFunction:
    """
    `C_N f(x) = sum_P <f, phi_P> phi_P(x) 1_{w_{P_u}}(N(x))`.

    Tiles are summed in the collection's order.
    """
    _check_in_universe(collection)
    tiles = list(collection)
    if not tiles:
        return SampledFunction.zeros(f.sampling, f.space)
    packets = synthesize_packets(mw, tiles)
    weights = np.stack([N.inside(P.w_u.left, P.w_u.right) for P in tiles]).astype(float)
    return synthesize(f.sampling, f.space, coefficients(f, packets), packets, weights)


def tree_operator(mw: MotherWavelet, tree: Tree, f: SampledFunction) -> SampledFunction:
    """`A_T f = sum_{P in T} <f, phi_P> phi_P`."""
    return signed_tree_operator(mw, tree, f, None)


def signed_tree_operator(
    mw: MotherWavelet,
    tree: Tree,
    f: SampledFunction,
    signs: Optional[Union[Mapping[Tile, complex], Sequence[complex]]],
) -> SampledFunction:
    """
    `B_T f = sum_{P in T} e_P <f, phi_P> phi_P` for unimodular `e_P`.

    Parameters
    ----------
    signs : dict or sequence or None
        Per-tile constants, keyed by tile or in `tree.sorted_tiles` order.
        `None` means all ones.
    """
    tiles = list(tree.sorted_tiles)
    packets = synthesize_packets(mw, tiles)
    coef = coefficients(f, packets)
    if signs is not None:
        if isinstance(signs, Mapping):
            eps = np.asarray([signs[P] for P in tiles], dtype=complex)
        else:
            eps = np.asarray(signs, dtype=complex)
        if eps.shape != (len(tiles),):
            raise PreconditionError(f"Need one sign per tile ({len(tiles)}) but got: {eps.shape}")
        if not np.allclose(np.abs(eps), 1.0, rtol=0, atol=1e-12):
            raise PreconditionError("`signs` must be unimodular")
        coef = coef * _expand(eps, coef.ndim)
    return synthesize(f.sampling, f.space, coef, packets)


def signed_tree_ratio(
    mw: MotherWavelet,
    tree: Tree,
    f: SampledFunction,
    q: float,
    rng: np.random.Generator,
    trials: int = 8,
) -> float:
    """
    Largest `||B_T f||_q / ||A_T f||_q` over random unimodular signs.

    Returns `0.0` when `A_T f` vanishes.
    """
    base = tree_operator(mw, tree, f).norm(q)
    if base == 0:
        return 0.0
    worst = 0.0
    for _ in range(trials):
        signs = np.exp(2j * np.pi * rng.random(len(tree)))
        worst = max(worst, signed_tree_operator(mw, tree, f, signs).norm(q) / base)
    return worst


def subfamily_cross_pairings(mw: MotherWavelet, tree: Tree) -> float:
    """
    Split a tree by time index modulo 20 and return the largest
    `|<phi_P, phi_P'>|` between distinct tiles of one part.

    For an up-tree each part is an orthogonal family.
    """
    groups: Dict[int, List[Tile]] = {}
    for P in tree.sorted_tiles:
        groups.setdefault(P.I.n % PACKET_SPACING, []).append(P)
    worst = 0.0
    for members in groups.values():
        packets = synthesize_packets(mw, members)
        for a, b in pairs(packets):
            worst = max(worst, abs(complex(inner(a.values, b.values))))
    return worst


# Maximal function


def hardy_littlewood(f: Union[SampledFunction, MeasurableSet]) -> np.ndarray:
    """
    `Mf(x)`: largest average of `|f|_X` over the dyadic and half-shifted
    dyadic blocks of samples that contain `x` and lie inside the window.
    """
    if isinstance(f, MeasurableSet):
        g = f.indicator
    else:
        g = np.asarray(f.pointwise_norm(), dtype=float)
    count = g.shape[0]
    cumulative = np.concatenate([[0.0], np.cumsum(g)])
    out = g.copy()
    index = np.arange(count)
    length = 2
    while length <= count:
        for offset in (0, length // 2):
            block = (index - offset) // length
            start = offset + block * length
            end = start + length
            inside = (index >= offset) & (end <= count)
            avg = (cumulative[end[inside]] - cumulative[start[inside]]) / length
            out[inside] = np.maximum(out[inside], avg)
        length *= 2
    return out


OPERATORS: Dict[str, Callable] = {
    "S": partial_sum,
    "Sstar": maximal_partial_sum,
    "s": periodic_partial_sum,
    "CN": model_carleson,
    "AT": tree_operator,
    "M": hardy_littlewood,
}


def get_operator(name: str) -> Callable:
    try:
        return OPERATORS[name]
    except KeyError:
        raise PreconditionError(
            f"`name` must be one of {tuple(OPERATORS)} but was: {name}"
        ) from None
