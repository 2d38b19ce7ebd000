"""Path resolution and pluggable storage backends.

Two backends ship with the engine: the local filesystem and an in-memory
map used by tests. Cloud stores are a backend slot, not an implementation;
anything exposing the Storage protocol plugs in.
"""

from __future__ import annotations

import os
import string
import threading
from dataclasses import dataclass
from datetime import date as Date
from pathlib import Path
from typing import Mapping, Protocol

from .errors import FileMissing, IoError, UnboundPlaceholder

DATE_PATH_FORMAT = "%Y%m%d"


@dataclass(frozen=True)
class StoragePath:
    """A resolved location on a named backend.

    ``resolved`` never contains unexpanded ``{placeholder}`` fields.
    """

    backend: str
    template: str
    resolved: str


def resolve_path(template: str, date: Date | None, bindings: Mapping[str, str],
                 backend: str = "local") -> StoragePath:
    """Expand every placeholder in ``template``.

    ``{date}`` is bound to the run date formatted YYYYMMDD; all other
    placeholders come from ``bindings``. Substitution is deterministic:
    identical inputs produce identical resolved paths.
    """
    values = dict(bindings)
    if date is not None:
        values.setdefault("date", date.strftime(DATE_PATH_FORMAT))
    resolved = template
    for _, field, _, _ in string.Formatter().parse(template):
        if field is None:
            continue
        if field not in values:
            raise UnboundPlaceholder(f"no binding for placeholder {{{field}}} in {template!r}")
        resolved = resolved.replace("{%s}" % field, str(values[field]))
    return StoragePath(backend=backend, template=template, resolved=resolved)


class Storage(Protocol):
    def exists(self, path: str) -> bool: ...

    def read_text(self, path: str) -> str: ...

    def write_text(self, path: str, text: str) -> None: ...


class LocalStorage:
    """Filesystem backend. Writes go via temp-file rename so readers never
    observe a partially written artifact."""

    def exists(self, path: str) -> bool:
        return os.path.isfile(path)

    def read_text(self, path: str) -> str:
        if not os.path.isfile(path):
            raise FileMissing(f"no such file: {path}")
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()

    def write_text(self, path: str, text: str) -> None:
        target = Path(path)
        try:
            target.parent.mkdir(parents=True, exist_ok=True)
            tmp = target.with_name(target.name + ".tmp")
            with open(tmp, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.replace(tmp, target)
        except OSError as exc:
            raise IoError(f"cannot write {path}: {exc}") from exc


class MemoryStorage:
    """Dict-backed backend for tests; safe under concurrent access."""

    def __init__(self):
        self._files: dict[str, str] = {}
        self._lock = threading.Lock()

    def exists(self, path: str) -> bool:
        with self._lock:
            return path in self._files

    def read_text(self, path: str) -> str:
        with self._lock:
            if path not in self._files:
                raise FileMissing(f"no such file: {path}")
            return self._files[path]

    def write_text(self, path: str, text: str) -> None:
        with self._lock:
            self._files[path] = text


_LOCAL = LocalStorage()


def get_storage(backend: str) -> Storage:
    if backend == "local":
        return _LOCAL
    raise IoError(f"unknown storage backend: {backend}")
