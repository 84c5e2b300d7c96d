"""
The mother wavelet and the wave packets of tiles.

The mother wavelet is built in the frequency domain from the bump
`b(xi) = exp(-1 / (1 - (20 xi)^2))` on `(-1/20, 1/20)`:

    phi^(xi) = b(xi) / sqrt(sum_n b(xi + n/20)^2)

so `phi^ >= 0`, `phi^` is even and the squares of its `1/20`-translates
sum to one. The packet of a tile `P = I x w` is

    phi_P = Mod_{c(w_d)} T_{c(I)} Dil^2_{|I|} phi

and is synthesized from its exact spectrum on the sample grid.
"""

import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, Hashable, Iterable, List, Optional, Tuple

import numpy as np

from phaseplane.geometry import PACKET_SPACING, Tile, weight_v_mass
from phaseplane.sampling import Sampling, SampledFunction
from phaseplane.utils import GridMismatchError, NumericalFloorError, PreconditionError

logger = logging.getLogger(__name__)

MIN_HALF_LENGTH = 40.0
MIN_SPECTRAL_SAMPLES = 64
MIN_PACKET_SAMPLES = 16
PERIODIZATION_TOLERANCE = 1e-9
ORTHOGONALITY_TOLERANCE = 1e-8


def _log_bump(s: np.ndarray) -> np.ndarray:
    """`log b` in the rescaled variable `s = 20 xi`; `-inf` off `(-1, 1)`."""
    out = np.full(s.shape, -np.inf)
    inside = np.abs(s) < 1
    out[inside] = -1.0 / (1.0 - s[inside] ** 2)
    return out


def mother_spectrum(xi) -> np.ndarray:
    """
    The mother wavelet's Fourier transform `phi^(xi)` (vectorized, exact).

    Inside the support exactly one other `1/20`-translate of the bump
    is nonzero, so the normalizer is evaluated as a ratio of the two.
    """
    s = PACKET_SPACING * np.atleast_1d(np.asarray(xi, dtype=float))
    partner = np.where(s >= 0, s - 1.0, s + 1.0)
    log_b, log_partner = _log_bump(s), _log_bump(partner)
    out = np.zeros(s.shape)
    inside = np.isfinite(log_b)
    with np.errstate(over="ignore"):
        ratio = np.exp(2.0 * (log_partner[inside] - log_b[inside]))
    out[inside] = 1.0 / np.sqrt(1.0 + ratio)
    return out if np.ndim(xi) else out[0]


def periodization(xi) -> np.ndarray:
    """`sum_n phi^(xi + n/20)^2`, which is identically one."""
    xi = np.asarray(xi, dtype=float)
    base = np.round(-PACKET_SPACING * xi)
    total = np.zeros(xi.shape)
    for offset in range(-2, 3):
        total = total + mother_spectrum(xi + (base + offset) / PACKET_SPACING) ** 2
    return total


@dataclass(frozen=True)
class MotherWavelet:
    """
    Samples of the mother wavelet `phi` and of its spectrum `phi^`
    (the latter on `sampling.frequencies`).
    """

    sampling: Sampling
    phi: SampledFunction
    phi_hat: np.ndarray

    @property
    def spacing(self) -> float:
        """Spectral step of the periodization identity."""
        return 1.0 / PACKET_SPACING

    @property
    def norm_squared(self) -> float:
        """`||phi||_2^2`, exactly `1/20`."""
        return 1.0 / PACKET_SPACING

    @staticmethod
    def spectrum(xi) -> np.ndarray:
        return mother_spectrum(xi)

    def periodization_error(self, n_points: int = 10_000) -> float:
        """Largest deviation of `sum_n phi^(xi + n/20)^2` from one on a grid of `xi`."""
        xi = np.linspace(-0.5, 0.5, n_points)
        return float(np.max(np.abs(periodization(xi) - 1.0)))

    def orthogonality_errors(self, shifts: Iterable[int] = range(1, 11)) -> Dict[int, float]:
        """`|<T_{20n} phi, phi>|` per shift count `n`."""
        return {
            int(n): abs(complex(inner(self.phi.translate(PACKET_SPACING * n), self.phi)))
            for n in shifts
        }

    def verify(self) -> dict:
        """
        Check the periodization identity and the orthogonality of translates.

        Raises
        ------
        NumericalFloorError
            When either exceeds its tolerance.
        """
        periodization_err = self.periodization_error()
        orthogonality = self.orthogonality_errors()
        if periodization_err > PERIODIZATION_TOLERANCE:
            raise NumericalFloorError(
                f"Periodization identity off by {periodization_err:.3e} "
                f"(tolerance {PERIODIZATION_TOLERANCE:g})"
            )
        worst = max(orthogonality.values())
        if worst > ORTHOGONALITY_TOLERANCE:
            raise NumericalFloorError(
                f"Translates by multiples of {PACKET_SPACING} not orthogonal: "
                f"{worst:.3e} (tolerance {ORTHOGONALITY_TOLERANCE:g})"
            )
        return {
            "periodization_error": periodization_err,
            "orthogonality": orthogonality,
            "norm_squared": self.phi.norm(2) ** 2,
            "imaginary_residue": float(np.max(np.abs(self.phi.samples.imag))),
        }


def build_mother_wavelet(N: int = 16384, L: float = 512.0) -> MotherWavelet:
    """
    Sample the mother wavelet with `N` samples on `[-L, L)`.

    Parameters
    ----------
    N : int
        Sample count (a power of two).
    L : float
        Window half-length. At least 40, and large enough that
        `[-1/20, 1/20]` holds 64 spectral samples (`L >= 320`).

    Returns
    -------
    MotherWavelet
    """
    sampling = Sampling(half_length=float(L), count=int(N))
    if L < MIN_HALF_LENGTH:
        raise PreconditionError(f"`L` must be at least {MIN_HALF_LENGTH:g} but was: {L}")
    across = np.count_nonzero(np.abs(sampling.frequencies) <= 1.0 / PACKET_SPACING)
    if across < MIN_SPECTRAL_SAMPLES:
        raise PreconditionError(
            f"Window too short to resolve [-1/20, 1/20]: {across} spectral samples "
            f"(at least {MIN_SPECTRAL_SAMPLES} needed, so `L` >= "
            f"{MIN_SPECTRAL_SAMPLES * PACKET_SPACING / 4:g})"
        )
    if sampling.nyquist <= 1.0 / PACKET_SPACING:
        raise PreconditionError(f"`N` ({N}) too small for the window `L` ({L})")
    phi_hat = mother_spectrum(sampling.frequencies)
    phi = SampledFunction.from_spectrum(sampling, phi_hat)
    return MotherWavelet(sampling=sampling, phi=phi, phi_hat=phi_hat)


@dataclass(frozen=True)
class WavePacket:
    tile: Tile
    values: SampledFunction

    @property
    def sampling(self) -> Sampling:
        return self.values.sampling

    def spectrum(self) -> np.ndarray:
        return self.values.spectrum()


def packet_spectrum(P: Tile, xi) -> np.ndarray:
    """
    `phi_P^(xi) = |I|^(1/2) phi^(|I| (xi - a)) exp(-2 pi i c(I) (xi - a))`
    with `a = c(w_d)`.
    """
    xi = np.asarray(xi, dtype=float)
    s, c, a = P.I.length, P.I.center, P.w_d.center
    return np.sqrt(s) * mother_spectrum(s * (xi - a)) * np.exp(-2j * np.pi * c * (xi - a))


def check_fits(sampling: Sampling, P: Tile) -> None:
    """
    Raises
    ------
    PreconditionError
        When `P`'s time interval leaves the window, its packet's spectrum
        reaches the Nyquist frequency, or the spectrum is under-resolved.
    """
    L = sampling.half_length
    if P.I.left < -L or P.I.right > L:
        raise PreconditionError(f"{P}: time interval {P.I} leaves the window [-{L:g}, {L:g})")
    half_width = 1.0 / (PACKET_SPACING * P.I.length)
    a = P.w_d.center
    if a - half_width <= -sampling.nyquist or a + half_width >= sampling.nyquist:
        raise PreconditionError(
            f"{P}: packet spectrum around {a:g} reaches the Nyquist frequency {sampling.nyquist:g}"
        )
    samples = 2 * half_width * 2 * L
    if samples < MIN_PACKET_SAMPLES:
        raise PreconditionError(
            f"{P}: scale {P.I.k} is too coarse for the window, "
            f"{samples:g} spectral samples across the packet spectrum"
        )


class PacketCache:
    """
    Packets keyed on `(sampling, grid, tile key)`.

    Lookups are lock-free; inserts and evictions hold a lock.
    """

    def __init__(self, maxsize: int = 2048):
        self.maxsize = maxsize
        self._items: "OrderedDict[Hashable, WavePacket]" = OrderedDict()
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._items)

    def get(self, key: Hashable) -> Optional[WavePacket]:
        return self._items.get(key)

    def insert(self, key: Hashable, packet: WavePacket) -> WavePacket:
        with self._lock:
            existing = self._items.get(key)
            if existing is not None:
                return existing
            self._items[key] = packet
            while len(self._items) > self.maxsize:
                self._items.popitem(last=False)
        return packet

    def clear(self) -> None:
        with self._lock:
            self._items.clear()


PACKETS = PacketCache()


def synthesize_packet(mw: MotherWavelet, P: Tile, cache: bool = True) -> WavePacket:
    """
    The wave packet `phi_P` of tile `P`, sampled like `mw`.

    Parameters
    ----------
    mw : MotherWavelet
        Fixes the sample grid.
    P : Tile
        Must fit the window (see `check_fits()`).
    cache : bool
        Whether to reuse / store the packet in the shared cache.
    """
    key = (mw.sampling, P.grid, P.key)
    if cache:
        packet = PACKETS.get(key)
        if packet is not None:
            return packet
    check_fits(mw.sampling, P)
    spectrum = packet_spectrum(P, mw.sampling.frequencies)
    packet = WavePacket(tile=P, values=SampledFunction.from_spectrum(mw.sampling, spectrum))
    return PACKETS.insert(key, packet) if cache else packet


def synthesize_packets(mw: MotherWavelet, tiles: Iterable[Tile]) -> List[WavePacket]:
    return [synthesize_packet(mw, P) for P in tiles]


def _check_same_sampling(a: Sampling, b: Sampling) -> None:
    if a != b:
        raise GridMismatchError(f"Sample grids differ: {a} vs {b}")


def inner(f: SampledFunction, g: SampledFunction) -> np.ndarray:
    """`int f(x) conj(g(x)) dx` for scalar `g` (midpoint rule)."""
    _check_same_sampling(f.sampling, g.sampling)
    weights = np.conj(g.samples)
    return np.tensordot(weights, f.samples, axes=(0, 0)) * f.step


def pair(f: SampledFunction, packet: WavePacket) -> np.ndarray:
    """`<f, phi_P>`, an element of `f`'s value space."""
    return inner(f, packet.values)


def coefficients(f: SampledFunction, packets: List[WavePacket]) -> np.ndarray:
    """
    All `<f, phi_P>` at once.

    Returns
    -------
    ndarray
        Shape `(len(packets),) + f.space.shape`.
    """
    if not packets:
        return np.zeros((0,) + f.space.shape, dtype=complex)
    for packet in packets:
        _check_same_sampling(f.sampling, packet.sampling)
    stacked = np.conj(np.stack([p.values.samples for p in packets]))
    return np.tensordot(stacked, f.samples, axes=(1, 0)) * f.step


def synthesize(
    sampling: Sampling,
    space,
    coefficients: np.ndarray,
    packets: List[WavePacket],
    weights: Optional[np.ndarray] = None,
) -> SampledFunction:
    """
    `sum_P c_P phi_P(x) w_P(x)` for coefficients `c_P` in the value space
    and optional scalar sample weights `w_P` (shape `(len(packets), N)`).
    """
    out = np.zeros((sampling.count,) + space.shape, dtype=complex)
    extra = (1,) * len(space.shape)
    for i, packet in enumerate(packets):
        values = packet.values.samples
        if weights is not None:
            values = values * weights[i]
        out += values.reshape(values.shape + extra) * coefficients[i]
    return SampledFunction(sampling, out, space)


def packet_overlap_bound(mw: MotherWavelet, P: Tile, P2: Tile) -> Tuple[float, float]:
    """
    Both sides of the packet overlap estimate for `|I_P2| <= |I_P|`:

        |<phi_P, phi_P2>|  <~  (|I_P| / |I_P2|)^(1/2) ||v_{I_P} 1_{I_P2}||_1

    Returns
    -------
    (lhs, rhs)
    """
    if P2.I.k > P.I.k:
        raise PreconditionError(
            f"`P2` must not be longer in time than `P` (scales {P2.I.k} > {P.I.k}); "
            "swap the arguments"
        )
    lhs = abs(complex(inner(synthesize_packet(mw, P).values, synthesize_packet(mw, P2).values)))
    rhs = np.sqrt(P.I.length / P2.I.length) * weight_v_mass(P.I, P2.I.left, P2.I.right)
    return lhs, float(rhs)
