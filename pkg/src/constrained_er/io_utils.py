"""File helpers: atomic writes and error-mapped reads."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Callable, IO, Union

from .errors import FileNotFound


def atomic_write(path, content: Union[bytes, str, Callable[[IO[str]], None]]) -> None:
    """Write via a temp file in the target directory, then rename over ``path``.

    ``content`` may be bytes, text, or a callback that writes text to the
    open handle.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        if isinstance(content, bytes):
            with os.fdopen(fd, "wb") as fh:
                fh.write(content)
        else:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                if isinstance(content, str):
                    fh.write(content)
                else:
                    content(fh)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except (FileNotFoundError, IsADirectoryError):
        raise FileNotFound(path) from None
