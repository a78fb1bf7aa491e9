"""Core data model: node rosters, similarity matrices, multiplexes.

Matrices are immutable once constructed: values are stored as read-only
float64 arrays and every constructor validates its invariants, so any
matrix reaching an algorithm is already well formed.  Two serialization
formats are provided, a CSV layout with node ids in the first row and
column, and a compact binary layout (magic ``NFSM1``).  Both round-trip
float64 values bit for bit.
"""

from __future__ import annotations

import csv
import hashlib
import io
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import FormatError, RosterMismatch, ValidationError
from .validation import (
    as_float_matrix,
    check_finite,
    check_in_range,
    check_nonempty,
    check_square,
    check_symmetric,
    check_unique,
    check_unit_diagonal,
    readonly,
)

SYMMETRY_TOL = 1e-12
RANGE_TOL = 1e-12


@dataclass(frozen=True)
class NodeRoster:
    """An ordered collection of unique node ids with positional lookup."""

    ids: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        check_nonempty(self.ids, "roster")
        check_unique(self.ids, "roster ids")
        object.__setattr__(self, "_index", {v: i for i, v in enumerate(self.ids)})

    @classmethod
    def from_ids(cls, ids: Iterable[str]) -> "NodeRoster":
        return cls(tuple(str(i) for i in ids))

    def __len__(self) -> int:
        return len(self.ids)

    def __contains__(self, node: str) -> bool:
        return node in self._index

    def __iter__(self) -> Iterator[str]:
        return iter(self.ids)

    def index(self, node: str) -> int:
        try:
            return self._index[node]
        except KeyError:
            raise ValidationError(f"node {node!r} not in roster") from None

    def indices(self, nodes: Iterable[str]) -> np.ndarray:
        return np.array([self.index(n) for n in nodes], dtype=np.intp)


def _validate_against_roster(values: np.ndarray, roster: NodeRoster, name: str) -> None:
    check_square(values, name)
    if values.shape[0] != len(roster):
        raise RosterMismatch(
            f"{name} has {values.shape[0]} rows for a roster of {len(roster)} nodes"
        )


@dataclass(frozen=True)
class SimilarityMatrix:
    """Symmetric similarity with unit diagonal and entries in [0, 1].

    Parameters
    ----------
    roster : NodeRoster
        Node identities, one per row/column.
    values : ndarray
        Square float64 array; validated on construction (symmetry and
        diagonal within 1e-12, range within 1e-12).
    """

    roster: NodeRoster
    values: np.ndarray

    def __post_init__(self):
        values = as_float_matrix(self.values, "similarity")
        _validate_against_roster(values, self.roster, "similarity")
        check_finite(values, "similarity")
        check_symmetric(values, "similarity", SYMMETRY_TOL)
        check_unit_diagonal(values, "similarity", RANGE_TOL)
        check_in_range(values, 0.0, 1.0, "similarity", RANGE_TOL)
        object.__setattr__(self, "values", readonly(values))

    def __len__(self) -> int:
        return len(self.roster)

    def restrict(self, nodes: Iterable[str]) -> "SimilarityMatrix":
        """Submatrix over the given nodes, in the given order."""
        idx = self.roster.indices(nodes)
        sub = self.values[np.ix_(idx, idx)]
        return SimilarityMatrix(NodeRoster.from_ids(self.roster.ids[i] for i in idx), sub)


@dataclass(frozen=True)
class CosineMatrix:
    """Raw pairwise cosine similarities, entries in [-1, 1].

    ``flagged`` lists nodes whose incidence row was all zero and was kept
    under the ``zero`` policy; their off-diagonal cosines are 0 by
    convention and the diagonal stays 1.
    """

    roster: NodeRoster
    values: np.ndarray
    flagged: tuple[str, ...] = ()

    def __post_init__(self):
        values = as_float_matrix(self.values, "cosine")
        _validate_against_roster(values, self.roster, "cosine")
        check_finite(values, "cosine")
        check_symmetric(values, "cosine", SYMMETRY_TOL)
        check_unit_diagonal(values, "cosine", RANGE_TOL)
        check_in_range(values, -1.0, 1.0, "cosine", RANGE_TOL)
        for node in self.flagged:
            self.roster.index(node)
        object.__setattr__(self, "values", readonly(values))

    def __len__(self) -> int:
        return len(self.roster)


@dataclass(frozen=True)
class Multiplex:
    """Named similarity layers over one shared roster."""

    roster: NodeRoster
    layers: tuple[tuple[str, SimilarityMatrix], ...]

    def __post_init__(self):
        validate_multiplex(self.roster, dict(self.layers))

    @classmethod
    def from_layers(cls, layers: Mapping[str, SimilarityMatrix]) -> "Multiplex":
        check_nonempty(tuple(layers), "multiplex layers")
        roster = next(iter(layers.values())).roster
        return cls(roster, tuple(layers.items()))

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.layers)

    def matrices(self) -> list[np.ndarray]:
        return [m.values for _, m in self.layers]

    def __getitem__(self, name: str) -> SimilarityMatrix:
        for key, m in self.layers:
            if key == name:
                return m
        raise KeyError(name)

    def __len__(self) -> int:
        return len(self.layers)


def validate_multiplex(roster: NodeRoster, layers: Mapping[str, SimilarityMatrix]) -> None:
    """Check that every layer is a SimilarityMatrix on exactly `roster`.

    Raises RosterMismatch naming the first layer whose roster differs.
    Layer-level invariants are enforced by the SimilarityMatrix
    constructor itself.
    """
    check_nonempty(tuple(layers), "multiplex layers")
    check_unique(tuple(layers), "layer names")
    for name, matrix in layers.items():
        if not isinstance(matrix, SimilarityMatrix):
            raise ValidationError(f"layer {name!r} is not a SimilarityMatrix")
        if matrix.roster.ids != roster.ids:
            raise RosterMismatch(
                f"layer {name!r} roster differs from the multiplex roster "
                f"({len(matrix.roster)} vs {len(roster)} nodes)"
            )


# ---------------------------------------------------------------------------
# CSV format: first row and first column carry node ids, body is the full
# square matrix.  Floats are written with repr() so parsing returns the
# identical float64.  An optional trailing checksum row guards transport.

_CHECKSUM_PREFIX = "#checksum"


def write_matrix_csv(path, roster: NodeRoster, values: np.ndarray, checksum: bool = False) -> None:
    values = as_float_matrix(values)
    _validate_against_roster(values, roster, "matrix")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([""] + list(roster.ids))
    for i, node in enumerate(roster.ids):
        writer.writerow([node] + [repr(float(v)) for v in values[i]])
    data = buf.getvalue()
    if checksum:
        digest = hashlib.sha256(data.encode("utf-8")).hexdigest()
        data += f"{_CHECKSUM_PREFIX},sha256:{digest}\n"
    Path(path).write_text(data, encoding="utf-8")


def read_matrix_csv(path) -> tuple[NodeRoster, np.ndarray]:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines(keepends=True)
    if lines and lines[-1].startswith(_CHECKSUM_PREFIX):
        body = "".join(lines[:-1])
        row = next(csv.reader([lines[-1]]))
        stated = row[1] if len(row) > 1 else ""
        actual = "sha256:" + hashlib.sha256(body.encode("utf-8")).hexdigest()
        if stated != actual:
            raise FormatError(f"{path}: checksum mismatch ({stated} vs {actual})")
        lines = lines[:-1]
    rows = list(csv.reader(lines))
    if not rows or len(rows[0]) < 2:
        raise FormatError(f"{path}: missing id header row")
    header = rows[0][1:]
    n = len(header)
    if len(rows) != n + 1:
        raise FormatError(f"{path}: expected {n} data rows, found {len(rows) - 1}")
    values = np.empty((n, n), dtype=np.float64)
    for i, row in enumerate(rows[1:]):
        if len(row) != n + 1:
            raise FormatError(f"{path}: row {i + 1} has {len(row)} fields, expected {n + 1}")
        if row[0] != header[i]:
            raise FormatError(
                f"{path}: row id {row[0]!r} at line {i + 2} does not match header id {header[i]!r}"
            )
        try:
            values[i] = [float(v) for v in row[1:]]
        except ValueError as exc:
            raise FormatError(f"{path}: row {i + 1}: {exc}") from None
    return NodeRoster.from_ids(header), values


def load_similarity_csv(path) -> SimilarityMatrix:
    roster, values = read_matrix_csv(path)
    return SimilarityMatrix(roster, values)


# ---------------------------------------------------------------------------
# Binary format NFSM1: magic, uint32 node count, length-prefixed UTF-8 ids,
# then the row-major float64 body, all little-endian.

_MAGIC = b"NFSM1"


def write_matrix_binary(path, roster: NodeRoster, values: np.ndarray) -> None:
    values = as_float_matrix(values)
    _validate_against_roster(values, roster, "matrix")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(roster)))
        for node in roster.ids:
            raw = node.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_matrix_binary(path) -> tuple[NodeRoster, np.ndarray]:
    blob = Path(path).read_bytes()
    if blob[: len(_MAGIC)] != _MAGIC:
        raise FormatError(f"{path}: bad magic {blob[:5]!r}, expected {_MAGIC!r}")
    off = len(_MAGIC)
    (n,) = struct.unpack_from("<I", blob, off)
    off += 4
    ids = []
    for _ in range(n):
        (ln,) = struct.unpack_from("<I", blob, off)
        off += 4
        ids.append(blob[off : off + ln].decode("utf-8"))
        off += ln
    body = blob[off : off + 8 * n * n]
    if len(body) != 8 * n * n:
        raise FormatError(f"{path}: truncated body ({len(body)} of {8 * n * n} bytes)")
    values = np.frombuffer(body, dtype="<f8").reshape(n, n).astype(np.float64)
    return NodeRoster.from_ids(ids), values


def sha256_file(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
