import operator
from dataclasses import dataclass
from typing import Any, Iterable, Iterator, Tuple


class PhasePlaneError(Exception):
    """Base class of every error raised by `phaseplane`."""


class GridMismatchError(PhasePlaneError, ValueError):
    pass


class EmptyTreeError(PhasePlaneError, ValueError):
    pass


class StandingAssumptionError(PhasePlaneError, ValueError):
    pass


class PreconditionError(PhasePlaneError, ValueError):
    pass


class NumericalFloorError(PhasePlaneError, ArithmeticError):
    pass


class DecompositionError(PhasePlaneError, RuntimeError):
    pass


class CapacityError(PhasePlaneError, ValueError):
    pass


class ConfigError(PhasePlaneError, ValueError):
    """
    Invalid experiment configuration.

    The offending (dot-separated) config field is kept in `.field`
    so the command line can name it.
    """

    def __init__(self, field: str, message: str):
        super().__init__(f"`{field}`: {message}")
        self.field = field


class Missing:
    """
    Sentinel for values that were not found.

    Example
    -------
    >>> if isinstance(x, Missing):
    >>>     continue
    """

    pass


@dataclass(frozen=True)
class Violation:
    """A failed pairwise check: the two tiles and the two trees involved."""

    __slots__ = ["tile", "tree_index", "other_tile", "other_tree_index", "reason"]
    tile: Any
    tree_index: int
    other_tile: Any
    other_tree_index: int
    reason: str

    def __bool__(self) -> bool:
        # A violation is a failed check
        return False


def is_power_of_two(n: Any) -> bool:
    try:
        n = operator.index(n)
    except TypeError:
        return False
    return n > 0 and (n & (n - 1)) == 0


def pairs(items: Iterable[Any]) -> Iterator[Tuple[Any, Any]]:
    """All unordered pairs of distinct positions, in order."""
    items = list(items)
    for i, a in enumerate(items):
        for b in items[i + 1 :]:
            yield a, b
