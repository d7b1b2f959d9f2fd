"""CSV ingestion and emission.

Format: one row per position; a single column is one track, multiple columns
are replica tracks.  An empty cell or any spelling of "nan" marks a missing
value.  A first row that does not parse as numbers is treated as a header.
Positions are implicit row numbers starting at 1.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .exceptions import ConfigError, IngestError
from .model import ObservedSequence

__all__ = ["read_sequence_csv", "write_sequence_csv", "concat_sequences"]

_MISSING = {"", "nan", "na"}


def _parse_cell(cell: str) -> float:
    s = cell.strip()
    if s.lower() in _MISSING:
        return float("nan")
    return float(s)


def read_sequence_csv(path) -> ObservedSequence:
    """Read one sequence; raises IngestError with the offending line number."""
    path = Path(path)
    if not path.exists():
        raise IngestError(f"no such file: {path}")
    rows: list[list[float]] = []
    n_cols = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, raw in enumerate(reader, start=1):
            if not raw:
                continue  # physically blank line; empty cells are missing values
            try:
                row = [_parse_cell(c) for c in raw]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise IngestError(f"unparseable value in {path.name}: {raw}", line=lineno)
            if n_cols is None:
                n_cols = len(row)
            elif len(row) != n_cols:
                raise IngestError(
                    f"expected {n_cols} columns, found {len(row)} in {path.name}", line=lineno
                )
            rows.append(row)
    if not rows:
        raise IngestError(f"no data rows in {path.name}")
    data = np.asarray(rows, dtype=float)
    return ObservedSequence(tuple(data[:, j] for j in range(data.shape[1])))


def write_sequence_csv(path, seq: ObservedSequence) -> None:
    """Write a sequence in the same format ``read_sequence_csv`` ingests."""
    data = np.column_stack(seq.tracks)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        for row in data:
            writer.writerow(["" if np.isnan(x) else repr(float(x)) for x in row])


def concat_sequences(seqs) -> ObservedSequence:
    """Concatenate sequences position-wise (e.g. chromosomes into one run)."""
    seqs = list(seqs)
    if not seqs:
        raise ConfigError("nothing to concatenate")
    n_tracks = seqs[0].n_tracks
    if any(s.n_tracks != n_tracks for s in seqs):
        raise ConfigError("all sequences must have the same number of tracks")
    tracks = tuple(
        np.concatenate([s.tracks[j] for s in seqs]) for j in range(n_tracks)
    )
    return ObservedSequence(tracks)
