"""
Value spaces for sampled functions: complex scalars, finite-dimensional
Hilbert spaces and Schatten classes of small matrices.

A value space acts on arrays whose trailing axes are its `shape`;
every leading axis is treated as a batch (e.g. sample positions).
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from phaseplane.utils import PreconditionError

MAX_DIM = 8

KIND_TAGS = {"scalar": 0, "hilbert": 1, "schatten": 2}


def conjugate_exponent(p: float) -> float:
    """`p' = p / (p - 1)`, with `1' = inf` and `inf' = 1`."""
    if p == 1:
        return np.inf
    if np.isinf(p):
        return 1.0
    p = np.longdouble(p)
    return float(p / (p - 1))


def schatten_norm(A: np.ndarray, p: float) -> np.ndarray:
    r"""
    Schatten-`p` norm of a (batch of) square matrices.

    .. math::
      \| A \|_{C_p} = \Big(\sum_i \sigma_i^p\Big)^{1/p}

    where :math:`\sigma_i` are the singular values of `A`;
    `p = inf` gives the largest singular value.

    Parameters
    ----------
    A : array_like
        Matrix, or array of matrices in its last two axes.
    p : float
        Exponent in `[1, inf]`.

    Returns
    -------
    float or ndarray
        Norm per matrix.
    """
    A = np.asarray(A)
    if not p >= 1:
        raise PreconditionError(f"`p` must be at least 1 but was: {p}")
    if not np.all(np.isfinite(A)):
        raise PreconditionError("`A` has non-finite entries.")
    s = np.linalg.svd(A, compute_uv=False)
    if np.isinf(p):
        return s.max(axis=-1)
    if p == 2:
        return np.sqrt(np.sum(s**2, axis=-1))
    return np.sum(s**p, axis=-1) ** (1.0 / p)


@dataclass(frozen=True)
class ValueSpace:
    """Base class. Subclasses set `kind` and implement `norm`, `dual`."""

    @property
    def kind(self) -> str:
        raise NotImplementedError

    @property
    def shape(self) -> Tuple[int, ...]:
        raise NotImplementedError

    @property
    def dim(self) -> int:
        return 1

    @property
    def exponent(self) -> float:
        return 2.0

    def norm(self, values: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dual(self) -> "ValueSpace":
        raise NotImplementedError

    def dual_norm(self, values: np.ndarray) -> np.ndarray:
        return self.dual().norm(values)

    def pair(self, x: np.ndarray, xs: np.ndarray) -> np.ndarray:
        """
        Duality pairing `<x, x*>`: the entrywise sum of `x * conj(x*)`
        over the value axes (for matrices, `trace(x x*^H)`).
        """
        x, xs = np.asarray(x), np.asarray(xs)
        if x.shape[x.ndim - len(self.shape):] != self.shape or (
            xs.shape[xs.ndim - len(self.shape):] != self.shape
        ):
            raise PreconditionError(
                f"Values do not match the {self.kind} shape {self.shape}: "
                f"{x.shape} and {xs.shape}"
            )
        prod = x * np.conj(xs)
        axes = tuple(range(prod.ndim - len(self.shape), prod.ndim))
        return prod.sum(axis=axes) if axes else prod

    def zero(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=complex)

    def identity(self) -> np.ndarray:
        raise NotImplementedError

    def random(self, rng: np.random.Generator, size: Tuple[int, ...] = ()) -> np.ndarray:
        """Complex Gaussian values of the space's shape."""
        shape = tuple(size) + self.shape
        return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def validate(self, values: np.ndarray) -> None:
        values = np.asarray(values)
        if values.shape[values.ndim - len(self.shape):] != self.shape:
            raise PreconditionError(
                f"Values of shape {values.shape} do not end in the {self.kind} shape {self.shape}"
            )

    def to_json(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "p": self.exponent}


@dataclass(frozen=True)
class ComplexScalar(ValueSpace):
    @property
    def kind(self) -> str:
        return "scalar"

    @property
    def shape(self) -> Tuple[int, ...]:
        return ()

    def norm(self, values: np.ndarray) -> np.ndarray:
        return np.abs(values)

    def dual(self) -> "ComplexScalar":
        return self

    def identity(self) -> np.ndarray:
        return np.array(1.0 + 0j)


@dataclass(frozen=True)
class HilbertVector(ValueSpace):
    """`C^d` with the Euclidean norm."""

    d: int = 4

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DIM:
            raise PreconditionError(f"`d` must be in [1, {MAX_DIM}] but was: {self.d}")

    @property
    def kind(self) -> str:
        return "hilbert"

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.d,)

    @property
    def dim(self) -> int:
        return self.d

    def norm(self, values: np.ndarray) -> np.ndarray:
        return np.linalg.norm(values, axis=-1)

    def dual(self) -> "HilbertVector":
        return self

    def identity(self) -> np.ndarray:
        e = np.zeros(self.shape, dtype=complex)
        e[0] = 1.0
        return e


@dataclass(frozen=True)
class SchattenMatrix(ValueSpace):
    """`d x d` complex matrices with the Schatten-`p` norm."""

    p: float = 2.0
    d: int = 2

    def __post_init__(self):
        if not self.p >= 1:
            raise PreconditionError(f"`p` must be in (1, inf] but was: {self.p}")
        if not 1 <= self.d <= MAX_DIM:
            raise PreconditionError(f"`d` must be in [1, {MAX_DIM}] but was: {self.d}")

    @property
    def kind(self) -> str:
        return "schatten"

    @property
    def shape(self) -> Tuple[int, ...]:
        return (self.d, self.d)

    @property
    def dim(self) -> int:
        return self.d

    @property
    def exponent(self) -> float:
        return self.p

    def norm(self, values: np.ndarray) -> np.ndarray:
        return schatten_norm(values, self.p)

    def dual(self) -> "SchattenMatrix":
        return SchattenMatrix(p=conjugate_exponent(self.p), d=self.d)

    def identity(self) -> np.ndarray:
        return np.eye(self.d, dtype=complex)


def make_space(kind: str, dim: int = 1, p: Optional[float] = None) -> ValueSpace:
    """Value space from its kind name ('scalar', 'hilbert', 'schatten')."""
    if kind == "scalar":
        return ComplexScalar()
    if kind == "hilbert":
        return HilbertVector(d=int(dim))
    if kind == "schatten":
        p = 2.0 if p is None else float(p)
        if not p > 1:
            raise PreconditionError(f"`p` must be in (1, inf] but was: {p}")
        return SchattenMatrix(p=p, d=int(dim))
    raise PreconditionError(f"`kind` must be one of {tuple(KIND_TAGS)} but was: {kind}")


def dual_pair(space: ValueSpace, x: np.ndarray, xs: np.ndarray) -> complex:
    """`<x, x*>` for a value `x` of `space` and a dual value `x*`."""
    return space.pair(x, xs)


def lp_norm(values: np.ndarray, step: float, space: ValueSpace, p: float) -> float:
    """
    Quadrature `L^p(R; X)` norm of samples with uniform `step`.

    `(sum_j |f(x_j)|_X^p step)^(1/p)`; `p = inf` gives the largest sample norm.
    """
    if not p >= 1:
        raise PreconditionError(f"`p` must be in [1, inf] but was: {p}")
    norms = space.norm(np.asarray(values))
    if norms.size == 0:
        return 0.0
    if np.isinf(p):
        return float(norms.max())
    return float(np.sum(norms**p) * step) ** (1.0 / p)
