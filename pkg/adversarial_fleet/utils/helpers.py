"""
Helper functions shared by the simulator, the analysis engine and the CLI.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from adversarial_fleet.utils.errors import DataError

LOG_FORMAT = "%(levelname)s:%(name)s:%(message)s"


def configure_logging(verbosity: int = 0) -> None:
    """
    Install the package's stream handler.

    Args:
        verbosity: 0 for INFO, positive for DEBUG, negative for WARNING
    """
    if verbosity > 0:
        level = logging.DEBUG
    elif verbosity < 0:
        level = logging.WARNING
    else:
        level = logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def derive_run_seed(master_seed: int, run_index: int) -> int:
    """
    Derive the seed of one ensemble run.

    The derivation is sha256 over the ASCII text "<master>:<index>", keeping
    the first 8 bytes big-endian, so the same pair gives the same seed on
    every platform and Python version.

    Args:
        master_seed: Scenario master seed
        run_index: Zero-based run index

    Returns:
        Non-negative 64-bit integer seed
    """
    digest = hashlib.sha256(f"{int(master_seed)}:{int(run_index)}".encode("ascii")).digest()
    return int.from_bytes(digest[:8], "big")


def run_streams(seed: int, count: int) -> list[np.random.Generator]:
    """Split one run seed into `count` independent generators."""
    return [np.random.default_rng(child) for child in np.random.SeedSequence(seed).spawn(count)]


def read_json(path: str | Path) -> Any:
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError as e:
        raise DataError(f"file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: invalid JSON ({e.msg})", line=e.lineno) from e


def write_json(path: str | Path, document: Mapping[str, Any]) -> Path:
    """
    Write a document as indented, key-sorted JSON.

    Sorted keys and a trailing newline keep reruns byte-identical.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        json.dump(document, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def pmf_to_document(pmf: Mapping[int, float]) -> dict[str, float]:
    return {str(k): float(v) for k, v in sorted(pmf.items())}


def pmf_from_document(doc: Mapping[Any, Any], name: str) -> dict[int, float]:
    try:
        return {int(k): float(v) for k, v in doc.items()}
    except (TypeError, ValueError, AttributeError) as e:
        raise DataError(f"{name}: expected a map of integer keys to probabilities") from e
