"""
Uniformly sampled functions on the window `[-L, L)`.

Samples sit at `x_j = -L + j h` with `h = 2L / N`. The window is treated
as one period: transforms use the FFT on the `N` samples, scaled so that
`spectrum()` approximates the continuous Fourier transform
`f^(xi) = int f(x) exp(-2 pi i x xi) dx` on the frequencies `k / 2L`.
"""

import csv
import io
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.fft

from phaseplane.utils import PreconditionError, is_power_of_two
from phaseplane.values import KIND_TAGS, ComplexScalar, ValueSpace, lp_norm, make_space

# L (float64), N (uint32), kind tag (uint8), dim (uint32), exponent (float64)
HEADER = struct.Struct("<dIBId")


@dataclass(frozen=True)
class Sampling:
    """The sample grid: half-length `L` of the window and sample count `N`."""

    half_length: float = 512.0
    count: int = 16384

    def __post_init__(self):
        if not is_power_of_two(self.count):
            raise PreconditionError(f"`N` must be a power of two but was: {self.count}")
        if not self.half_length > 0:
            raise PreconditionError(f"`L` must be positive but was: {self.half_length}")

    @property
    def step(self) -> float:
        return 2.0 * self.half_length / self.count

    @property
    def positions(self) -> np.ndarray:
        # Left cell endpoints; integrals are rectangle sums over them
        return -self.half_length + self.step * np.arange(self.count)

    @property
    def frequencies(self) -> np.ndarray:
        return scipy.fft.fftfreq(self.count, d=self.step)

    @property
    def nyquist(self) -> float:
        return 0.5 / self.step

    def index_of(self, x: float) -> int:
        """Index of the sample cell `[x_j, x_j + h)` holding `x`."""
        return int(np.floor((x + self.half_length) / self.step))

    def mask(self, left: float, right: float) -> np.ndarray:
        """Sample mask of `[left, right)`."""
        x = self.positions
        return (x >= left) & (x < right)

    def _phase(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.half_length * self.frequencies)


def _expand(a: np.ndarray, ndim: int) -> np.ndarray:
    return a.reshape(a.shape + (1,) * (ndim - 1))


@dataclass(frozen=True)
class SampledFunction:
    """
    Samples of a function from R to a value space.

    Parameters
    ----------
    sampling : Sampling
        Window and sample count.
    samples : ndarray
        Array of shape `(N,) + space.shape`.
    space : ValueSpace
        Value space of the samples (complex scalars by default).
    """

    sampling: Sampling
    samples: np.ndarray
    space: ValueSpace = field(default_factory=ComplexScalar)

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape != (self.sampling.count,) + self.space.shape:
            raise PreconditionError(
                f"`samples` must have shape {(self.sampling.count,) + self.space.shape} "
                f"but had: {samples.shape}"
            )
        if not np.all(np.isfinite(samples)):
            raise PreconditionError("`samples` must be finite.")
        samples.setflags(write=False)
        object.__setattr__(self, "samples", samples)

    # Construction

    @staticmethod
    def zeros(sampling: Sampling, space: Optional[ValueSpace] = None) -> "SampledFunction":
        space = space or ComplexScalar()
        return SampledFunction(sampling, np.zeros((sampling.count,) + space.shape), space)

    @staticmethod
    def from_callable(sampling: Sampling, fn, space: Optional[ValueSpace] = None) -> "SampledFunction":
        """Sample `fn(x)` (vectorized over the positions)."""
        space = space or ComplexScalar()
        return SampledFunction(sampling, np.asarray(fn(sampling.positions)), space)

    @staticmethod
    def from_spectrum(
        sampling: Sampling, spectrum: np.ndarray, space: Optional[ValueSpace] = None
    ) -> "SampledFunction":
        """Inverse of `spectrum()`."""
        space = space or ComplexScalar()
        spectrum = np.asarray(spectrum, dtype=complex)
        phase = _expand(np.conj(sampling._phase()), spectrum.ndim)
        samples = scipy.fft.ifft(spectrum * phase, axis=0) / sampling.step
        return SampledFunction(sampling, samples, space)

    def with_samples(self, samples: np.ndarray) -> "SampledFunction":
        return SampledFunction(self.sampling, samples, self.space)

    # Views

    @property
    def step(self) -> float:
        return self.sampling.step

    @property
    def positions(self) -> np.ndarray:
        return self.sampling.positions

    def spectrum(self) -> np.ndarray:
        """Continuous Fourier transform approximated on `sampling.frequencies`."""
        phase = _expand(self.sampling._phase(), self.samples.ndim)
        return self.step * phase * scipy.fft.fft(self.samples, axis=0)

    def pointwise_norm(self) -> np.ndarray:
        return self.space.norm(self.samples)

    def norm(self, p: float = 2.0) -> float:
        return lp_norm(self.samples, self.step, self.space, p)

    # Arithmetic

    def __add__(self, other: "SampledFunction") -> "SampledFunction":
        self._check_compatible(other)
        return self.with_samples(self.samples + other.samples)

    def __sub__(self, other: "SampledFunction") -> "SampledFunction":
        self._check_compatible(other)
        return self.with_samples(self.samples - other.samples)

    def scale(self, c: complex) -> "SampledFunction":
        return self.with_samples(c * self.samples)

    def multiply(self, weights: np.ndarray) -> "SampledFunction":
        """Pointwise product with scalar weights (e.g. an indicator)."""
        return self.with_samples(_expand(np.asarray(weights), self.samples.ndim) * self.samples)

    def _check_compatible(self, other: "SampledFunction") -> None:
        if self.sampling != other.sampling:
            raise PreconditionError(
                f"Sample grids differ: {self.sampling} vs {other.sampling}"
            )
        if self.space != other.space:
            raise PreconditionError(f"Value spaces differ: {self.space} vs {other.space}")

    # Modulation, translation, dilation

    def modulate(self, lam: float) -> "SampledFunction":
        """`Mod_lam f(x) = exp(2 pi i x lam) f(x)`."""
        return self.multiply(np.exp(2j * np.pi * lam * self.positions))

    def translate(self, t: float) -> "SampledFunction":
        """
        `T_t f(x) = f(x - t)` on the periodic window.

        Grid-aligned shifts are exact rolls; other shifts act on the spectrum.
        """
        shift = t / self.step
        if np.isclose(shift, np.round(shift), rtol=0, atol=1e-12):
            return self.with_samples(np.roll(self.samples, int(np.round(shift)), axis=0))
        spec = self.spectrum()
        phase = _expand(np.exp(-2j * np.pi * t * self.sampling.frequencies), spec.ndim)
        return SampledFunction.from_spectrum(self.sampling, spec * phase, self.space)

    def dilate(self, delta: float, p: float = 2.0) -> "SampledFunction":
        """
        `Dil_delta^p f(x) = delta^(-1/p) f(x / delta)` for `delta` a power of two.

        Stretching interpolates with FFT zero padding (exact for band-limited
        samples); compressing subsamples and leaves zeros outside the image.
        """
        exponent = np.log2(delta)
        if not (delta > 0 and exponent == np.round(exponent)):
            raise PreconditionError(f"`delta` must be a power of two but was: {delta}")
        factor = int(2 ** abs(exponent))
        n = self.sampling.count
        center = n // 2  # index of x = 0
        out = np.zeros_like(self.samples)
        if exponent >= 0:
            fine = scipy.fft.ifft(
                _zero_pad_spectrum(scipy.fft.fft(self.samples, axis=0), factor), axis=0
            ) * factor
            # x_j / delta sits at fine index center * factor + (j - center)
            out[:] = fine[center * factor + (np.arange(n) - center)]
        else:
            j = np.arange(n)
            src = center + (j - center) * factor
            inside = (src >= 0) & (src < n)
            out[inside] = self.samples[src[inside]]
        return self.with_samples(out * delta ** (-1.0 / p))

    # Export

    def to_bytes(self) -> bytes:
        """Header `{L, N, kind tag, dim, exponent}` then interleaved little-endian (re, im) float64."""
        header = HEADER.pack(
            float(self.sampling.half_length),
            int(self.sampling.count),
            KIND_TAGS[self.space.kind],
            int(self.space.dim),
            float(self.space.exponent),
        )
        return header + np.ascontiguousarray(self.samples, dtype="<c16").tobytes()

    @staticmethod
    def from_bytes(blob: bytes) -> "SampledFunction":
        L, N, tag, dim, exponent = HEADER.unpack_from(blob)
        kind = {v: k for k, v in KIND_TAGS.items()}[tag]
        space = make_space(kind, dim=dim, p=exponent)
        sampling = Sampling(half_length=L, count=N)
        data = np.frombuffer(blob, dtype="<c16", offset=HEADER.size)
        return SampledFunction(sampling, data.reshape((N,) + space.shape), space)

    def to_csv(self) -> str:
        """Columns `index, x, re, im` (one re/im pair per value component)."""
        flat = self.samples.reshape(self.sampling.count, -1)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        if flat.shape[1] == 1:
            writer.writerow(["index", "x", "re", "im"])
        else:
            writer.writerow(
                ["index", "x"]
                + [f"{part}_{c}" for c in range(flat.shape[1]) for part in ("re", "im")]
            )
        for j, (x, row) in enumerate(zip(self.positions, flat)):
            values = []
            for v in row:
                values += [repr(float(v.real)), repr(float(v.imag))]
            writer.writerow([j, repr(float(x))] + values)
        return buffer.getvalue()


def _zero_pad_spectrum(spec: np.ndarray, factor: int) -> np.ndarray:
    """Embed an FFT spectrum of length `n` into length `n * factor` (Nyquist bin split)."""
    n = spec.shape[0]
    out = np.zeros((n * factor,) + spec.shape[1:], dtype=complex)
    half = n // 2
    out[:half] = spec[:half]
    out[-half + 1:] = spec[-half + 1:]
    out[half] = 0.5 * spec[half]
    out[-half] = 0.5 * spec[half]
    return out


@dataclass(frozen=True)
class MeasurableSet:
    """A set given by its indicator on the sample grid; measure = cell count * h."""

    sampling: Sampling
    mask: np.ndarray

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        if mask.shape != (self.sampling.count,):
            raise PreconditionError(f"`mask` must have shape ({self.sampling.count},)")
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)

    @staticmethod
    def empty(sampling: Sampling) -> "MeasurableSet":
        return MeasurableSet(sampling, np.zeros(sampling.count, dtype=bool))

    @staticmethod
    def interval(sampling: Sampling, left: float, right: float) -> "MeasurableSet":
        return MeasurableSet(sampling, sampling.mask(left, right))

    @property
    def measure(self) -> float:
        return float(np.count_nonzero(self.mask)) * self.sampling.step

    @property
    def indicator(self) -> np.ndarray:
        return self.mask.astype(float)

    def __and__(self, other: "MeasurableSet") -> "MeasurableSet":
        return MeasurableSet(self.sampling, self.mask & other.mask)

    def __or__(self, other: "MeasurableSet") -> "MeasurableSet":
        return MeasurableSet(self.sampling, self.mask | other.mask)

    def __sub__(self, other: "MeasurableSet") -> "MeasurableSet":
        return MeasurableSet(self.sampling, self.mask & ~other.mask)

    def issubset(self, other: "MeasurableSet") -> bool:
        return bool(np.all(~self.mask | other.mask))
