"""Cross-period alignment: roster intersection and flanking-mean imputation.

impute_oracle recomputes every imputed entry with a plain triple loop
over (period, i, j): find the nearest earlier and nearest later period
where both nodes are present; the fill is the mean of those two values,
or 0 when either side is missing.
"""

import numpy as np
import pytest

from netfuse.align import align, impute, intersect
from netfuse.core import NodeRoster, SimilarityMatrix
from netfuse.errors import EmptyInput, EmptyIntersection, ValidationError

from conftest import random_similarity


def sim_over(ids, seed):
    n = len(ids)
    rng = np.random.default_rng(seed)
    v = rng.random((n, n))
    v = (v + v.T) / 2
    np.fill_diagonal(v, 1.0)
    return SimilarityMatrix(NodeRoster.from_ids(ids), v)


def impute_oracle(matrices):
    union = sorted(set().union(*(m.roster.ids for m in matrices)))
    t_count, n = len(matrices), len(union)
    out = []
    for t in range(t_count):
        values = np.zeros((n, n))
        for i, a in enumerate(union):
            for j, b in enumerate(union):
                if i == j:
                    values[i, j] = 1.0
                    continue
                here = matrices[t]
                if a in here.roster.ids and b in here.roster.ids:
                    values[i, j] = here.values[here.roster.index(a), here.roster.index(b)]
                    continue
                lo = hi = None
                for t0 in range(t - 1, -1, -1):
                    m = matrices[t0]
                    if a in m.roster.ids and b in m.roster.ids:
                        lo = m.values[m.roster.index(a), m.roster.index(b)]
                        break
                for t1 in range(t + 1, t_count):
                    m = matrices[t1]
                    if a in m.roster.ids and b in m.roster.ids:
                        hi = m.values[m.roster.index(a), m.roster.index(b)]
                        break
                values[i, j] = 0.0 if lo is None or hi is None else (lo + hi) / 2.0
        out.append(values)
    return union, out


class TestIntersect:
    def test_common_nodes_lexicographic(self):
        mats = [sim_over(["C", "A", "B"], 1), sim_over(["B", "D", "C"], 2)]
        aligned = intersect(mats)
        assert all(m.roster.ids == ("B", "C") for m in aligned)
        # values are carried over, not recomputed
        src = mats[0]
        assert aligned[0].values[0, 1] == src.values[src.roster.index("B"), src.roster.index("C")]

    def test_identical_rosters_already_sorted_unchanged(self):
        mats = [random_similarity(6, seed=s) for s in (1, 2, 3)]
        aligned = intersect(mats)
        for before, after in zip(mats, aligned):
            assert after.roster.ids == before.roster.ids
            assert np.array_equal(after.values, before.values)

    def test_disjoint_rosters_rejected(self):
        with pytest.raises(EmptyIntersection, match="no nodes"):
            intersect([sim_over(["a", "b"], 1), sim_over(["c", "d"], 2)])

    def test_empty_input(self):
        with pytest.raises(EmptyInput):
            intersect([])


class TestImpute:
    def test_matches_triple_loop_oracle(self):
        # churn: b leaves after t0, e enters at t1, f only in t2, a skips t1
        rosters = [
            ["a", "b", "c", "d"],
            ["c", "d", "e"],
            ["a", "c", "e", "f"],
        ]
        mats = [sim_over(ids, seed=t) for t, ids in enumerate(rosters)]
        aligned = impute(mats)
        union, expected = impute_oracle(mats)
        assert all(m.roster.ids == tuple(union) for m in aligned)
        for got, want in zip(aligned, expected):
            assert np.array_equal(got.values, want)

    def test_flanked_absence_gets_mean_of_neighbors(self):
        # pair (a, b) present in t0 and t2, absent in t1
        mats = [sim_over(["a", "b"], 1), sim_over(["a", "c"], 2), sim_over(["a", "b"], 3)]
        aligned = impute(mats)
        i, j = 0, 1  # union roster is (a, b, c)
        v0 = mats[0].values[0, 1]
        v2 = mats[2].values[0, 1]
        assert aligned[1].values[i, j] == (v0 + v2) / 2.0

    def test_unflanked_absences_get_zero(self):
        # b exists only in the middle period: zero before and after
        mats = [sim_over(["a", "c"], 1), sim_over(["a", "b", "c"], 2), sim_over(["a", "c"], 3)]
        aligned = impute(mats)
        union_index = {node: k for k, node in enumerate(aligned[0].roster.ids)}
        b = union_index["b"]
        for t in (0, 2):
            row = aligned[t].values[b].copy()
            row[b] = 0.0
            assert np.all(row == 0.0)
        assert aligned[0].values[b, b] == 1.0

    def test_present_entries_never_touched(self):
        mats = [sim_over(["a", "b", "c"], 1), sim_over(["b", "c", "d"], 2)]
        aligned = impute(mats)
        src = mats[1]
        got = aligned[1]
        for a in ("b", "c", "d"):
            for b in ("b", "c", "d"):
                assert (
                    got.values[got.roster.index(a), got.roster.index(b)]
                    == src.values[src.roster.index(a), src.roster.index(b)]
                )

    def test_single_period_round_trips(self):
        m = random_similarity(5, seed=4)
        (out,) = impute([m])
        assert out.roster.ids == m.roster.ids
        assert np.array_equal(out.values, m.values)

    def test_nearest_flank_wins_over_farther_one(self):
        # pair (a, b) present in t0, t1, t4; absent in t2, t3.
        # t2's fill must use t1 (nearest earlier), not t0.
        mats = [
            sim_over(["a", "b"], 1),
            sim_over(["a", "b"], 2),
            sim_over(["a", "c"], 3),
            sim_over(["a", "c"], 4),
            sim_over(["a", "b"], 5),
        ]
        aligned = impute(mats)
        v1 = mats[1].values[0, 1]
        v4 = mats[4].values[0, 1]
        expect = (v1 + v4) / 2.0
        assert aligned[2].values[0, 1] == expect
        assert aligned[3].values[0, 1] == expect


class TestAlignDispatch:
    def test_modes(self):
        mats = [sim_over(["a", "b", "c"], 1), sim_over(["b", "c", "d"], 2)]
        assert [m.roster.ids for m in align(mats, "intersect")] == [("b", "c")] * 2
        assert [m.roster.ids for m in align(mats, "impute")] == [("a", "b", "c", "d")] * 2

    def test_unknown_mode(self):
        with pytest.raises(ValidationError, match="alignment mode"):
            align([random_similarity(3, seed=1)], mode="stretch")
