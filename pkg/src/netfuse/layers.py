"""Similarity layers from incidence matrices and document embeddings.

Each layer is the row-wise cosine similarity of an incidence matrix
(editors, authors, references) or of per-journal medoid embeddings
(abstracts), mapped onto a proper similarity scale by

    s = 1 - sqrt(2 * (1 - c)) / 2

which sends cosine 1 to 1, cosine -1 to 0, and cosine 0 to
1 - sqrt(2)/2.  On unit vectors sqrt(2 * (1 - c)) is the Euclidean
distance, so 1 - s is a metric and downstream kernels may treat
dissimilarities as distances.  Raw cosines of nonnegative incidence
data already live in [0, 1] and may be kept with ``transform=False``.
"""

from __future__ import annotations

from typing import Literal, Sequence

import numpy as np

from .core import CosineMatrix, Multiplex, NodeRoster, SimilarityMatrix
from .errors import RangeError, ValidationError, ZeroVector
from .ingest import EmbeddingSet, IncidenceMatrix, WorkRecord
from .ingest import (
    build_author_incidence,
    build_editor_incidence,
    build_reference_incidence,
)

LAYER_KINDS = ("editors", "authors", "references", "abstracts")

ZeroRowPolicy = Literal["drop", "zero"]

COSINE_TOL = 1e-12


def _cosine_from_rows(rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pairwise cosine of the rows; returns (matrix, zero-row mask).

    Zero rows get 0 off-diagonal and 1 on the diagonal; the caller
    applies its policy.  The product is symmetrized and clamped to
    [-1, 1] to absorb floating-point drift.
    """
    norms = np.linalg.norm(rows, axis=1)
    zero = norms == 0.0
    safe = np.where(zero, 1.0, norms)
    unit = rows / safe[:, None]
    values = unit @ unit.T
    values = (values + values.T) / 2.0
    np.clip(values, -1.0, 1.0, out=values)
    values[zero, :] = 0.0
    values[:, zero] = 0.0
    np.fill_diagonal(values, 1.0)
    return values, zero


def cosine_rows(
    incidence: IncidenceMatrix, zero_rows: ZeroRowPolicy = "drop"
) -> CosineMatrix:
    """Cosine similarity between the rows of an incidence matrix.

    Rows whose weights are all zero have no direction; the ``drop``
    policy removes those journals from the roster, ``zero`` keeps them
    with all off-diagonal cosines 0 and records them as flagged.
    """
    values, zero = _cosine_from_rows(incidence.values)
    if not zero.any():
        return CosineMatrix(incidence.roster, values)
    flagged = tuple(incidence.roster.ids[i] for i in np.flatnonzero(zero))
    if zero_rows == "zero":
        return CosineMatrix(incidence.roster, values, flagged=flagged)
    if zero_rows != "drop":
        raise ValidationError(f"unknown zero-row policy {zero_rows!r}")
    keep = np.flatnonzero(~zero)
    if keep.size == 0:
        raise ValidationError(f"{incidence.kind}: every incidence row is zero")
    roster = NodeRoster.from_ids(incidence.roster.ids[i] for i in keep)
    return CosineMatrix(roster, values[np.ix_(keep, keep)])


def similarity_from_cosine(values: np.ndarray, tol: float = COSINE_TOL) -> np.ndarray:
    """Map cosine values through s = 1 - sqrt(2 * (1 - c)) / 2.

    Values outside [-1, 1] by more than ``tol`` raise RangeError; values
    inside the tolerance band are clamped before the square root.
    """
    arr = np.asarray(values, dtype=np.float64)
    if (np.abs(arr) > 1.0 + tol).any():
        bad = np.argwhere(np.abs(arr) > 1.0 + tol)[0]
        raise RangeError(
            f"cosine value {arr[tuple(bad)]!r} at {tuple(int(i) for i in bad)} "
            f"outside [-1, 1] beyond tolerance {tol}"
        )
    clamped = np.clip(arr, -1.0, 1.0)
    return 1.0 - np.sqrt(2.0 * (1.0 - clamped)) / 2.0


def to_proper_similarity(cosine: CosineMatrix) -> SimilarityMatrix:
    """Apply the cosine-to-similarity map entrywise; diagonal stays 1."""
    values = similarity_from_cosine(cosine.values)
    np.fill_diagonal(values, 1.0)
    return SimilarityMatrix(cosine.roster, values)


def _similarity_from_nonnegative(cosine: CosineMatrix) -> SimilarityMatrix:
    if (cosine.values < -COSINE_TOL).any():
        raise RangeError(
            "raw cosine layer has negative entries; keep the transform enabled"
        )
    return SimilarityMatrix(cosine.roster, np.clip(cosine.values, 0.0, 1.0))


def medoid(vectors: np.ndarray) -> int:
    """Index of the vector with the lowest total cosine distance to the rest.

    Ties resolve to the lowest index.  A single vector is its own medoid.
    Zero vectors are rejected: they have no cosine direction.
    """
    arr = np.asarray(vectors, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValidationError(f"medoid needs a non-empty 2-D array, got shape {arr.shape}")
    norms = np.linalg.norm(arr, axis=1)
    if (norms == 0.0).any():
        raise ZeroVector(f"zero vector at row {int(np.flatnonzero(norms == 0.0)[0])}")
    unit = arr / norms[:, None]
    cos = np.clip(unit @ unit.T, -1.0, 1.0)
    totals = (1.0 - cos).sum(axis=1)
    return int(np.argmin(totals))


def journal_medoids(embeddings: EmbeddingSet, roster: NodeRoster | None = None) -> tuple[NodeRoster, np.ndarray]:
    """Per-journal medoid vectors, rows ordered by the roster."""
    if roster is None:
        roster = NodeRoster.from_ids(sorted(embeddings.journals))
    rows = np.empty((len(roster), embeddings.dim), dtype=np.float64)
    for i, journal in enumerate(roster.ids):
        if journal not in embeddings.vectors:
            raise ValidationError(f"journal {journal!r} has no embeddings")
        vecs = embeddings.vectors[journal]
        rows[i] = vecs[medoid(vecs)]
    return roster, rows


def abstract_layer(embeddings: EmbeddingSet, roster: NodeRoster | None = None) -> SimilarityMatrix:
    """Text layer: cosine among per-journal medoid vectors, transformed.

    The transform is not optional here; medoid cosines of real text
    embeddings can be negative and a similarity layer must not be.
    """
    roster, rows = journal_medoids(embeddings, roster)
    values, zero = _cosine_from_rows(rows)
    if zero.any():
        raise ZeroVector(
            f"journal {roster.ids[int(np.flatnonzero(zero)[0])]!r} has a zero medoid vector"
        )
    cosine = CosineMatrix(roster, values)
    return to_proper_similarity(cosine)


def build_layer(
    kind: str,
    source,
    roster: NodeRoster | None = None,
    zero_rows: ZeroRowPolicy = "drop",
    transform: bool = True,
) -> SimilarityMatrix:
    """Build one named layer from its raw source.

    ``source`` is a pair list for ``editors``, a WorkRecord sequence for
    ``authors`` and ``references``, an EmbeddingSet for ``abstracts``, or
    a prebuilt IncidenceMatrix for any incidence kind.
    """
    if kind == "abstracts":
        if not isinstance(source, EmbeddingSet):
            raise ValidationError("abstracts layer needs an EmbeddingSet")
        return abstract_layer(source, roster)
    if isinstance(source, IncidenceMatrix):
        incidence = source
    elif kind == "editors":
        incidence = build_editor_incidence(source, roster)
    elif kind == "authors":
        incidence = build_author_incidence(source, roster)
    elif kind == "references":
        incidence = build_reference_incidence(source, roster)
    else:
        raise ValidationError(f"unknown layer kind {kind!r}")
    cosine = cosine_rows(incidence, zero_rows=zero_rows)
    if transform:
        return to_proper_similarity(cosine)
    return _similarity_from_nonnegative(cosine)


def build_period_layers(
    works: Sequence[WorkRecord],
    editor_pairs: Sequence[tuple[str, str]],
    embeddings: EmbeddingSet,
    transform: bool = True,
) -> Multiplex:
    """All four layers for one period on the common journal roster.

    The roster is the lexicographic intersection of journals present in
    the editor pairs, the filtered works, and the embedding set; on that
    roster no incidence row can be zero, so the layers always share
    identical node sets.
    """
    from .ingest import filter_works

    kept = filter_works(works)
    common = (
        {j for j, _ in editor_pairs}
        & {w.journal for w in kept}
        & set(embeddings.journals)
    )
    if not common:
        raise ValidationError("no journal appears in all of editors, works, embeddings")
    roster = NodeRoster.from_ids(sorted(common))
    layers = {
        "editors": build_layer("editors", editor_pairs, roster, transform=transform),
        "authors": build_layer("authors", kept, roster, transform=transform),
        "references": build_layer("references", kept, roster, transform=transform),
        "abstracts": build_layer("abstracts", embeddings, roster),
    }
    return Multiplex.from_layers(layers)
