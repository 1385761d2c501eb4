"""Deterministic CSV/JSON artifact writers.

Every artifact embeds the config hash, seed, dimension and library version
so a result file is traceable to the exact run that produced it.  Floats are
written with '.' decimal separator and 17 significant digits, which
round-trips IEEE doubles exactly; no locale is consulted.
"""

from __future__ import annotations

import hashlib
import json
from typing import Dict, Iterable, Mapping, Sequence

from . import __version__

__all__ = ["format_value", "config_hash", "header_lines", "write_csv", "write_json"]

#: Config keys that never enter the hash: they name artifacts rather than
#: parametrize the computation, and hashing them would break rerun identity.
_NON_SEMANTIC_KEYS = {"out", "fig_dir", "figures", "config", "threads"}


def format_value(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def config_hash(config: Mapping) -> str:
    """Stable short hash of the semantic part of a config mapping."""
    semantic = {k: v for k, v in config.items() if k not in _NON_SEMANTIC_KEYS and v is not None}
    canon = json.dumps(semantic, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(canon.encode("ascii")).hexdigest()[:12]


def header_lines(meta: Mapping) -> list:
    lines = [f"# version={__version__}"]
    for key in sorted(meta):
        lines.append(f"# {key}={format_value(meta[key])}")
    return lines


def write_csv(path, columns: Sequence[str], rows: Iterable[Sequence], meta: Mapping) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in header_lines(meta):
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")


def write_json(path, payload: Dict, meta: Mapping) -> None:
    document = {"meta": {"version": __version__, **dict(meta)}, **payload}
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(document, fh, indent=2, sort_keys=True, default=_jsonable)
        fh.write("\n")


def _jsonable(value):
    if hasattr(value, "tolist"):
        return value.tolist()
    if hasattr(value, "__dict__"):
        return vars(value)
    return str(value)
