"""
CSV and JSON writers for command output.

CSV files start with ``#`` metadata lines (``# key: value``), followed by a
header row and data rows; numbers carry 17 significant digits.
"""

import json
import logging
import os
import sys
from typing import IO, Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .version import __version__

logger = logging.getLogger(__name__)


def format_number(value: Any) -> str:
    """Lossless text form of a number"""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.17g}"


def run_metadata(command: str, seed: Optional[int], flags: Mapping[str, Any]) -> Dict[str, Any]:
    """Metadata block embedded in every output file"""
    return {
        "command": command,
        "version": __version__,
        "seed": seed,
        "flags": {k: flags[k] for k in sorted(flags)},
    }


def resolve_output_path(path: Optional[str], output_dir: Optional[str]) -> Optional[str]:
    """Place relative paths under output_dir; None means stdout"""
    if path is None or path == "-":
        return None
    if output_dir and not os.path.isabs(path):
        path = os.path.join(output_dir, path)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    return path


def _open(path: Optional[str]) -> Tuple[IO[str], bool]:
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline=""), True


def write_csv(
    path: Optional[str],
    columns: Mapping[str, Sequence],
    metadata: Mapping[str, Any],
    extra_metadata: Optional[Mapping[str, Any]] = None,
) -> None:
    """
    Write equal-length columns as CSV.

    Args:
        path: Output file, or None for stdout
        columns: Ordered mapping of column name to values
        metadata: Run metadata (command, version, seed, flags)
        extra_metadata: Additional ``# key: value`` lines
    """
    names = list(columns)
    arrays = [np.asarray(columns[name]) for name in names]
    lengths = {a.shape[0] for a in arrays}
    if len(lengths) > 1:
        raise ValueError(f"columns have different lengths: {sorted(lengths)}")

    stream, owned = _open(path)
    try:
        for key, value in list(metadata.items()) + list((extra_metadata or {}).items()):
            text = json.dumps(value, sort_keys=True) if isinstance(value, dict) else value
            stream.write(f"# {key}: {text}\n")
        stream.write(",".join(names) + "\n")
        for row in zip(*arrays):
            stream.write(",".join(format_number(v) for v in row) + "\n")
    finally:
        if owned:
            stream.close()
    if path:
        logger.info(f"Wrote {len(arrays[0]) if arrays else 0} rows to {path}")


def read_csv(path: str) -> Tuple[Dict[str, str], List[str], np.ndarray]:
    """
    Read a file written by write_csv (or any headed numeric CSV).

    Returns:
        (metadata, column names, data array of shape (rows, columns))
    """
    metadata: Dict[str, str] = {}
    header: Optional[List[str]] = None
    rows: List[List[float]] = []
    with open(path, "r") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
            elif header is None:
                header = [name.strip() for name in line.split(",")]
            else:
                rows.append([float(v) for v in line.split(",")])
    if header is None:
        raise ValueError(f"{path}: no header row")
    return metadata, header, np.array(rows, dtype=float).reshape(-1, len(header))


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        return value.item()
    return value


def write_json(path: Optional[str], payload: Mapping[str, Any], metadata: Mapping[str, Any]) -> None:
    """Write a JSON report with a "metadata" block"""
    document = {"metadata": _jsonable(dict(metadata)), **_jsonable(dict(payload))}
    stream, owned = _open(path)
    try:
        json.dump(document, stream, indent=2, sort_keys=True)
        stream.write("\n")
    finally:
        if owned:
            stream.close()
    if path:
        logger.info(f"Wrote JSON report to {path}")
