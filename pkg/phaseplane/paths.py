from collections.abc import Mapping, MutableMapping
from typing import Any, Union

from phaseplane.utils import ConfigError, Missing


def get_path(
    obj: Union[object, Mapping],
    path: str,
    default: Any = None,
) -> Any:
    """
    Get a config field / result entry by dot-separated names.

    Pass `path='grid.r'` to get member "r" of member "grid".
    Dicts and objects (e.g. the frozen config dataclasses)
    work interchangeably at every level.

    Parameters
    ----------
    obj : object or dict-like
        The config / result table to look in.
    path : str
        Dot-separated names. The most left name is a member of `obj`.
    default : Any
        Value to return when one of the names is not found.
        Pass `"raise"` to raise a `ConfigError` naming `path` instead.

    Examples
    --------
    >>> get_path({"grid": {"r": 1.0}}, "grid.r")
    1.0
    >>> get_path({"grid": {}}, "grid.t", default=0.0)
    0.0
    """
    value = _get_path(obj, path)
    if isinstance(value, Missing):
        if isinstance(default, str) and default == "raise":
            raise ConfigError(path, "required field is missing")
        return default
    return value


def _get_path(obj: Union[object, Mapping], path: str) -> Any:
    if obj is None or isinstance(obj, Missing):
        return Missing()
    try:
        left, right = path.split(".", 1)
    except ValueError:
        return _member(obj, path)
    return _get_path(_member(obj, left), right)


def _member(obj: Union[object, Mapping], name: str) -> Any:
    if isinstance(obj, Mapping):
        return obj.get(name, Missing())
    return getattr(obj, name, Missing())


def set_path(
    obj: MutableMapping,
    path: str,
    value: Any,
    make_missing: bool = True,
) -> None:
    """
    Set a member of a (raw, mutable) config mapping by dot-separated names.

    Used to apply command-line flags and `PHASEPLANE_*` environment
    overrides before the config is validated.

    Parameters
    ----------
    obj : dict-like
        The mutable mapping to set a nested member of.
    path : str
        Dot-separated names. The last name is the member to set.
    value : Any
        Value to assign.
    make_missing : bool
        Whether to create dicts for missing intermediate names.
        Otherwise a `ConfigError` naming `path` is raised.

    Examples
    --------
    >>> raw = {}
    >>> set_path(raw, "ensemble.seed", 7)
    >>> raw
    {'ensemble': {'seed': 7}}
    """
    try:
        left, right = path.split(".", 1)
    except ValueError:
        obj[path] = value
        return
    if left not in obj:
        if not make_missing:
            raise ConfigError(path, f"intermediate field '{left}' is missing")
        obj[left] = {}
    child = obj[left]
    if not isinstance(child, MutableMapping):
        raise ConfigError(path, f"'{left}' is not a section")
    set_path(child, right, value, make_missing=make_missing)
