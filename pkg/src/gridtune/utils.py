"""Utility functions for gridtune."""

import os
import platform
import socket
import tempfile
import uuid
from pathlib import Path
from typing import Any, Dict


def generate_uuid() -> str:
    """Generate a UUID string."""
    return str(uuid.uuid4())


def get_runtime_info() -> Dict[str, Any]:
    """Host facts attached to telemetry resources."""
    try:
        hostname = socket.gethostname()
    except Exception:
        hostname = "unknown"

    return {"host.name": hostname, "os.type": platform.system().lower()}


def atomic_write_text(path: Path, text: str) -> None:
    """Write a file through a temporary sibling and rename it into place."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise
