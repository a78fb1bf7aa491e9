"""Parsing of raw corpus files and construction of incidence matrices.

Three inputs describe a period: a JSONL file of works, a CSV of
(journal, editor) pairs, and a JSONL file of document embedding vectors.
Works are filtered to research articles that cite at least one
reference; the three weighting schemes are binary for editors,
fractional (1/m per author over m coauthors) for authors, and raw
occurrence counts for references.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import NodeRoster
from .errors import EmptyInput, NonFiniteEntry, ValidationError, ZeroAuthors
from .validation import check_nonempty, readonly

logger = logging.getLogger("netfuse.ingest")

_RESEARCH_TYPES = {"article", "research-article", "journal-article"}
_ISSN_RE = re.compile(r"^\d{4}-\d{3}[\dXx]$")

API_TOKEN_ENV = "NETFUSE_API_TOKEN"
DEFAULT_API_BASE = "https://api.openalex.org"


@dataclass(frozen=True)
class WorkRecord:
    """One published work with the fields the layers need."""

    id: str
    journal: str
    authors: tuple[str, ...]
    references: tuple[str, ...]
    type: str

    @property
    def is_research_article(self) -> bool:
        return self.type.lower().replace("_", "-") in _RESEARCH_TYPES

    @property
    def has_references(self) -> bool:
        return len(self.references) > 0


@dataclass(frozen=True)
class EmbeddingSet:
    """Document vectors grouped by journal; all vectors share one dimension."""

    vectors: Mapping[str, np.ndarray]
    dim: int

    def __post_init__(self):
        check_nonempty(tuple(self.vectors), "embedding set")
        for journal, arr in self.vectors.items():
            if arr.ndim != 2 or arr.shape[1] != self.dim:
                raise ValidationError(
                    f"journal {journal!r} has vectors of shape {arr.shape}, "
                    f"expected (*, {self.dim})"
                )
            if arr.shape[0] == 0:
                raise EmptyInput(f"journal {journal!r} has no document vectors")
            if not np.isfinite(arr).all():
                raise NonFiniteEntry(f"journal {journal!r} has a non-finite embedding entry")

    @property
    def journals(self) -> tuple[str, ...]:
        return tuple(self.vectors)


@dataclass(frozen=True)
class IncidenceMatrix:
    """Journals-by-entities weight matrix for one layer kind."""

    kind: str
    roster: NodeRoster
    columns: tuple[str, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.shape != (len(self.roster), len(self.columns)):
            raise ValidationError(
                f"{self.kind} incidence shape {arr.shape} does not match "
                f"{len(self.roster)} journals x {len(self.columns)} columns"
            )
        if not np.isfinite(arr).all():
            raise NonFiniteEntry(f"{self.kind} incidence has a non-finite entry")
        if (arr < 0).any():
            i, j = np.argwhere(arr < 0)[0]
            raise ValidationError(
                f"{self.kind} incidence is negative at "
                f"({self.roster.ids[i]!r}, {self.columns[j]!r})"
            )
        object.__setattr__(self, "values", readonly(arr))


# ---------------------------------------------------------------------------
# File parsing


def parse_work(obj: Mapping, where: str = "work") -> WorkRecord:
    try:
        work_id = str(obj["id"])
        journal = str(obj["journal"])
        authors = tuple(str(a) for a in obj.get("authors", []))
        references = tuple(str(r) for r in obj.get("references", []))
        wtype = str(obj.get("type", ""))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"{where}: missing or malformed field: {exc}") from None
    if not work_id or not journal:
        raise ValidationError(f"{where}: empty id or journal")
    return WorkRecord(work_id, journal, authors, references, wtype)


def read_works_jsonl(path) -> list[WorkRecord]:
    """Parse a JSONL file of works; line numbers appear in error messages."""
    works = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            works.append(parse_work(obj, where=f"{path}:{lineno}"))
    return works


def filter_works(works: Iterable[WorkRecord]) -> list[WorkRecord]:
    """Keep research articles that cite at least one reference."""
    return [w for w in works if w.is_research_article and w.has_references]


def read_editor_pairs_csv(path) -> list[tuple[str, str]]:
    """Parse (journal_id, editor_id) rows; a matching header row is skipped."""
    pairs = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if lineno == 1 and [c.strip().lower() for c in row[:2]] == ["journal_id", "editor_id"]:
                continue
            if len(row) < 2 or not row[0].strip() or not row[1].strip():
                raise ValidationError(f"{path}:{lineno}: expected journal_id,editor_id")
            pairs.append((row[0].strip(), row[1].strip()))
    return pairs


def read_embeddings_jsonl(path) -> EmbeddingSet:
    """Parse {"journal", "doc", "vec"} lines into an EmbeddingSet."""
    by_journal: dict[str, list[np.ndarray]] = {}
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                journal = str(obj["journal"])
                vec = np.asarray(obj["vec"], dtype=np.float64)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise ValidationError(f"{path}:{lineno}: {exc}") from None
            if vec.ndim != 1 or vec.size == 0:
                raise ValidationError(f"{path}:{lineno}: vec must be a non-empty flat list")
            if dim is None:
                dim = int(vec.size)
            elif vec.size != dim:
                raise ValidationError(
                    f"{path}:{lineno}: vector dimension {vec.size} differs from {dim}"
                )
            by_journal.setdefault(journal, []).append(vec)
    if dim is None:
        raise EmptyInput(f"{path}: no embedding lines")
    stacked = {j: np.vstack(vs) for j, vs in by_journal.items()}
    return EmbeddingSet(stacked, dim)


# ---------------------------------------------------------------------------
# Incidence construction


def _resolve_roster(journals: Iterable[str], roster: NodeRoster | None) -> NodeRoster:
    if roster is not None:
        return roster
    return NodeRoster.from_ids(sorted(set(journals)))


def build_editor_incidence(
    pairs: Sequence[tuple[str, str]], roster: NodeRoster | None = None
) -> IncidenceMatrix:
    """Binary journal-by-editor matrix; duplicate pairs collapse to 1."""
    roster = _resolve_roster((j for j, _ in pairs), roster)
    kept = [(j, e) for j, e in pairs if j in roster]
    columns = tuple(sorted({e for _, e in kept}))
    col_index = {e: i for i, e in enumerate(columns)}
    values = np.zeros((len(roster), len(columns)), dtype=np.float64)
    for j, e in kept:
        values[roster.index(j), col_index[e]] = 1.0
    return IncidenceMatrix("editors", roster, columns, values)


def build_author_incidence(
    works: Sequence[WorkRecord], roster: NodeRoster | None = None
) -> IncidenceMatrix:
    """Fractional journal-by-author matrix: each work spreads mass 1 over
    its m coauthors (1/m each), so row sums equal per-journal work counts."""
    roster = _resolve_roster((w.journal for w in works), roster)
    kept = [w for w in works if w.journal in roster]
    for w in kept:
        if len(w.authors) == 0:
            raise ZeroAuthors(f"work {w.id!r} has no authors to share fractional credit")
    columns = tuple(sorted({a for w in kept for a in w.authors}))
    col_index = {a: i for i, a in enumerate(columns)}
    values = np.zeros((len(roster), len(columns)), dtype=np.float64)
    for w in kept:
        share = 1.0 / len(w.authors)
        row = roster.index(w.journal)
        for a in w.authors:
            values[row, col_index[a]] += share
    return IncidenceMatrix("authors", roster, columns, values)


def build_reference_incidence(
    works: Sequence[WorkRecord], roster: NodeRoster | None = None
) -> IncidenceMatrix:
    """Count journal-by-reference matrix; repeat citations accumulate."""
    roster = _resolve_roster((w.journal for w in works), roster)
    kept = [w for w in works if w.journal in roster]
    columns = tuple(sorted({r for w in kept for r in w.references}))
    col_index = {r: i for i, r in enumerate(columns)}
    values = np.zeros((len(roster), len(columns)), dtype=np.float64)
    for w in kept:
        row = roster.index(w.journal)
        for r in w.references:
            values[row, col_index[r]] += 1.0
    return IncidenceMatrix("references", roster, columns, values)


# ---------------------------------------------------------------------------
# Remote fetching (OpenAlex-compatible endpoint)


def _work_from_api(obj: Mapping, journal: str) -> WorkRecord:
    authors = tuple(
        str(a.get("author", {}).get("id", "")) for a in obj.get("authorships", [])
    )
    authors = tuple(a for a in authors if a)
    references = tuple(str(r) for r in obj.get("referenced_works", []))
    return WorkRecord(
        id=str(obj.get("id", "")),
        journal=journal,
        authors=authors,
        references=references,
        type=str(obj.get("type", "")),
    )


def fetch_works(
    issns: Sequence[str],
    from_year: int,
    to_year: int,
    api_base: str = DEFAULT_API_BASE,
    token: str | None = None,
    session=None,
    per_page: int = 200,
    min_interval: float = 0.1,
) -> list[WorkRecord]:
    """Fetch works for a list of journal ISSNs from a paginated works API.

    Pagination follows the cursor protocol: request ``cursor=*`` first,
    then the ``meta.next_cursor`` of each page until it is absent, so an
    interrupted fetch can resume from the last cursor seen.  Requests are
    spaced at least ``min_interval`` seconds apart.  Malformed ISSNs are
    logged and skipped.  The bearer token is read from the
    ``NETFUSE_API_TOKEN`` environment variable unless given explicitly.
    """
    if session is None:
        import requests

        session = requests.Session()
    if token is None:
        token = os.environ.get(API_TOKEN_ENV)
    headers = {"Authorization": f"Bearer {token}"} if token else {}

    works: list[WorkRecord] = []
    last_request = 0.0
    for issn in issns:
        if not _ISSN_RE.match(issn):
            logger.warning("skipping malformed ISSN %r", issn)
            continue
        cursor = "*"
        while cursor:
            wait = min_interval - (time.monotonic() - last_request)
            if wait > 0:
                time.sleep(wait)
            params = {
                "filter": (
                    f"primary_location.source.issn:{issn},"
                    f"from_publication_date:{from_year}-01-01,"
                    f"to_publication_date:{to_year}-12-31"
                ),
                "per-page": str(per_page),
                "cursor": cursor,
            }
            response = session.get(f"{api_base}/works", params=params, headers=headers)
            last_request = time.monotonic()
            response.raise_for_status()
            payload = response.json()
            for obj in payload.get("results", []):
                works.append(_work_from_api(obj, journal=issn))
            cursor = payload.get("meta", {}).get("next_cursor")
        logger.info("fetched ISSN %s: %d works so far", issn, len(works))
    return works
