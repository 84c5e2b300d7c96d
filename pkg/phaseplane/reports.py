"""
Artifact writing.

Every artifact name embeds the first twelve hex digits of the config digest,
and every run leaves a manifest beside its artifacts. Files are written once,
to a temporary file in the target directory that is then renamed into place.
"""

import json
import logging
import os
import platform
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from phaseplane.config import ExperimentConfig

logger = logging.getLogger(__name__)

DIGEST_LENGTH = 12


def _default(obj: Any) -> Any:
    # numpy scalars and arrays
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"Object of type {type(obj).__name__} is not JSON serializable")


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def write_atomic(path: Union[str, Path], text: str) -> Path:
    """Write `text` to `path` through a temporary sibling and `os.replace`."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.info("Wrote %s", path)
    return path


@dataclass
class ArtifactWriter:
    """
    Writes the artifacts of one command run into `config.output_dir`.

    Parameters
    ----------
    command : str
        The command name; prefixes every artifact.
    config : ExperimentConfig
        The validated config; its digest names the files and it is
        written next to them as `<command>-config-<digest>.json`.
    """

    command: str
    config: ExperimentConfig
    written: List[Path] = field(default_factory=list)
    started: float = field(default_factory=time.perf_counter)

    @property
    def directory(self) -> Path:
        return Path(self.config.output_dir)

    @property
    def digest(self) -> str:
        return self.config.digest()[:DIGEST_LENGTH]

    def path(self, stem: str, suffix: str) -> Path:
        return self.directory / f"{self.command}-{stem}-{self.digest}.{suffix}"

    def write_text(self, stem: str, suffix: str, text: str) -> Path:
        path = write_atomic(self.path(stem, suffix), text)
        self.written.append(path)
        return path

    def write_csv(self, stem: str, text: str) -> Path:
        return self.write_text(stem, "csv", text)

    def write_json(self, stem: str, obj: Any) -> Path:
        return self.write_text(stem, "json", dumps(obj))

    def manifest(self, extra: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
        from phaseplane import __version__

        return {
            "command": self.command,
            "config_digest": self.config.digest(),
            "version": __version__,
            "python": platform.python_version(),
            "runtime_seconds": round(time.perf_counter() - self.started, 3),
            "created": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
            "artifacts": sorted(p.name for p in self.written),
            **(extra or {}),
        }

    def finish(self, extra: Optional[Dict[str, Any]] = None) -> Path:
        """Write the config copy and the manifest; returns the manifest path."""
        self.write_text("config", "json", self.config.to_json() + "\n")
        return write_atomic(self.path("manifest", "json"), dumps(self.manifest(extra)))


def read_json(path: Union[str, Path]) -> Any:
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def collect_summaries(directory: Union[str, Path]) -> List[Dict[str, Any]]:
    """The `*-summary-*.json` artifacts of a directory, sorted by file name."""
    paths = sorted(Path(directory).glob("*-summary-*.json"))
    return [dict(read_json(p), file=p.name) for p in paths]
