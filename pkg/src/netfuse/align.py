"""Alignment of similarity matrices across time periods.

Two roster policies: ``intersect`` keeps only nodes present in every
period, ``impute`` expands every period to the union roster.  Imputed
entries follow a flanking rule: a pair missing in period t gets the
mean of its values from the nearest earlier and nearest later periods
where both nodes are present, and 0 when no such flanking pair exists
(including every node that only ever enters or only ever leaves).
Diagonals stay 1 and entries present in a period are never touched.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .core import NodeRoster, SimilarityMatrix
from .errors import EmptyInput, EmptyIntersection, ValidationError


def intersect(matrices: Sequence[SimilarityMatrix]) -> list[SimilarityMatrix]:
    """Restrict every period to the common roster, lexicographic order."""
    if len(matrices) == 0:
        raise EmptyInput("no matrices to align")
    common = set(matrices[0].roster.ids)
    for m in matrices[1:]:
        common &= set(m.roster.ids)
    if not common:
        raise EmptyIntersection("periods share no nodes")
    order = sorted(common)
    return [m.restrict(order) for m in matrices]


def impute(matrices: Sequence[SimilarityMatrix]) -> list[SimilarityMatrix]:
    """Expand every period to the union roster with flanking-mean fills."""
    if len(matrices) == 0:
        raise EmptyInput("no matrices to align")
    union = sorted(set().union(*(m.roster.ids for m in matrices)))
    roster = NodeRoster.from_ids(union)
    n = len(roster)
    t_count = len(matrices)

    # expand each period onto the union roster; absent nodes hold NaN
    expanded = np.full((t_count, n, n), np.nan, dtype=np.float64)
    present = np.zeros((t_count, n), dtype=bool)
    for t, m in enumerate(matrices):
        idx = roster.indices(m.roster.ids)
        present[t, idx] = True
        expanded[t][np.ix_(idx, idx)] = m.values

    pair_present = present[:, :, None] & present[:, None, :]

    out = []
    for t in range(t_count):
        values = np.where(pair_present[t], expanded[t], 0.0)
        missing = ~pair_present[t]
        if missing.any():
            before = np.full((n, n), -1, dtype=np.int64)
            for t0 in range(t - 1, -1, -1):
                unset = before < 0
                before[unset & pair_present[t0]] = t0
            after = np.full((n, n), -1, dtype=np.int64)
            for t1 in range(t + 1, t_count):
                unset = after < 0
                after[unset & pair_present[t1]] = t1
            flanked = missing & (before >= 0) & (after >= 0)
            if flanked.any():
                ii, jj = np.nonzero(flanked)
                lo = expanded[before[ii, jj], ii, jj]
                hi = expanded[after[ii, jj], ii, jj]
                values[ii, jj] = (lo + hi) / 2.0
        np.fill_diagonal(values, 1.0)
        out.append(SimilarityMatrix(roster, values))
    return out


def align(matrices: Sequence[SimilarityMatrix], mode: str = "intersect") -> list[SimilarityMatrix]:
    if mode == "intersect":
        return intersect(matrices)
    if mode == "impute":
        return impute(matrices)
    raise ValidationError(f"unknown alignment mode {mode!r}")
