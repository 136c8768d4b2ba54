"""Delimited output with '#'-prefixed metadata lines, and the matching reader."""
from __future__ import annotations

import csv
import hashlib
import json
import sys
from pathlib import Path

SCHEMA_VERSION = 1


def fmt(value) -> str:
    """Deterministic text form; floats keep 17 significant digits."""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=fmt)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def write_table(path, kind: str, meta: dict, columns: list[str], rows) -> None:
    """
    Write a CSV table preceded by ``# key: value`` metadata lines.

    The first metadata line is always the schema, ``dipole-entangle/<kind>/<version>``.
    """
    lines = [f"# schema: dipole-entangle/{kind}/{SCHEMA_VERSION}"]
    lines += [f"# {k}: {fmt(v)}" for k, v in meta.items()]
    if str(path) == "-":
        _dump(sys.stdout, lines, columns, rows)
        return
    with Path(path).open("w", newline="") as fh:
        _dump(fh, lines, columns, rows)


def _dump(fh, lines, columns, rows):
    fh.write("\n".join(lines) + "\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])


def read_table(path) -> tuple[dict, list[dict]]:
    """Read a table written by :func:`write_table`; values stay strings."""
    meta: dict = {}
    body = []
    with Path(path).open(newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                meta[key.strip()] = value.strip()
            else:
                body.append(line)
    if "schema" not in meta:
        raise ValueError(f"{path}: missing schema header")
    rows = list(csv.DictReader(body))
    return meta, rows


def parse_schema(meta: dict) -> tuple[str, int]:
    prefix, kind, version = meta["schema"].split("/")
    if prefix != "dipole-entangle":
        raise ValueError(f"unknown schema {meta['schema']!r}")
    return kind, int(version)
