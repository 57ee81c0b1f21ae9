"""
Reproducible artifact writing: atomic files, digest headers, fixed float format.
"""

import csv
import hashlib
import io
import json
import logging
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, List, Optional, Sequence, Union

import numpy as np

from . import __version__
from .settings import get_settings

logger = logging.getLogger(__name__)

TOOL_NAME = "balance-flux"
FLOAT_DIGITS = 17


def _json_default(value: Any):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    if isinstance(value, Path):
        return str(value)
    return repr(value)


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False, default=_json_default)


def stable_digest(value: Any) -> str:
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def format_float(x: float, digits: int = FLOAT_DIGITS) -> str:
    return f"{float(x):.{digits}g}"


@dataclass(frozen=True)
class OutputHeader:
    """Provenance echoed at the top of every artifact"""

    config_digest: str
    seed: int
    version: str = __version__

    def comment_lines(self) -> List[str]:
        return [
            f"# tool: {TOOL_NAME} {self.version}",
            f"# config_digest: sha256:{self.config_digest}",
            f"# seed: {self.seed}",
        ]

    def as_dict(self) -> dict:
        return {"tool": TOOL_NAME, "version": self.version, "config_digest": f"sha256:{self.config_digest}", "seed": self.seed}


def atomic_write(path: Union[str, Path], text: str) -> Path:
    """Write via a temp file in the target directory and rename over ``path``"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    logger.debug(f"Wrote {path}")
    return path


def _cell(value: Any, digits: int) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format_float(value, digits)
    if isinstance(value, (np.integer, np.bool_)):
        return str(value.item())
    return str(value)


def render_csv(header: OutputHeader, columns: Sequence[str], rows: Iterable[Sequence[Any]], digits: int = FLOAT_DIGITS) -> str:
    buffer = io.StringIO()
    for line in header.comment_lines():
        buffer.write(line + "\n")
    writer = csv.writer(buffer, delimiter=",", lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v, digits) for v in row])
    return buffer.getvalue()


def write_csv(
    path: Union[str, Path],
    header: OutputHeader,
    columns: Sequence[str],
    rows: Iterable[Sequence[Any]],
    digits: Optional[int] = None,
) -> Path:
    """Atomic CSV write; floats use the configured significant digits by default"""
    if digits is None:
        digits = get_settings().output.float_digits
    return atomic_write(path, render_csv(header, columns, rows, digits))


def write_json(path: Union[str, Path], header: OutputHeader, payload: Any) -> Path:
    document = {"header": header.as_dict(), "body": payload}
    return atomic_write(path, json.dumps(document, indent=2, sort_keys=True, default=_json_default) + "\n")
