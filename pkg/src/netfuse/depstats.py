"""Distance correlation statistics between sample matrices.

Implements the classical distance correlation (double centering, biased
V-statistic), its bias-corrected variant (U-centering), the partial
distance correlation for one conditioning sample, and a recursive
extension to several conditioning samples that peels conditioning
matrices off one at a time from the end of the list.

Similarity matrices enter either as rows-as-features samples (each node
is an observation, its similarity profile the feature vector) or, with
``representation="distance"``, as ready-made distance matrices 1 - S.

:class:`DependenceCache` shares distance matrices, centered forms and
recursion intermediates across many statistics over the same inputs;
the module-level functions are one-shot wrappers around it.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import SimilarityMatrix
from .errors import DegenerateConditioning, DegenerateSample, SampleTooSmall, ValidationError
from .validation import check_finite

DENOMINATOR_GUARD = 1e-12


@dataclass(frozen=True)
class DcorReport:
    """One computed statistic, ready for a report table."""

    kind: str
    x: str
    y: str
    value: float
    conditioned_on: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "x": self.x,
            "y": self.y,
            "value": self.value,
            "conditioned_on": list(self.conditioned_on),
        }


def _sample_rows(x, name: str = "sample") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise ValidationError(f"{name} must be 1-D or 2-D, got ndim={arr.ndim}")
    check_finite(arr, name)
    return arr


def pairwise_distances(x) -> np.ndarray:
    """Euclidean distances between the rows of a sample matrix.

    Goes through the Gram matrix so large inputs run on BLAS; tiny
    negative squared distances caused by cancellation are clamped to
    zero and the result is symmetrized with a zero diagonal.
    """
    rows = _sample_rows(x)
    sq = np.einsum("ij,ij->i", rows, rows)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (rows @ rows.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2, out=d2)
    d = 0.5 * (d + d.T)
    np.fill_diagonal(d, 0.0)
    return d


def double_centered(d: np.ndarray) -> np.ndarray:
    """Classical double centering: subtract row and column means, add the
    grand mean."""
    d = np.asarray(d, dtype=np.float64)
    row = d.mean(axis=1, keepdims=True)
    col = d.mean(axis=0, keepdims=True)
    return d - row - col + d.mean()


def u_centered(d: np.ndarray) -> np.ndarray:
    """U-centering with a zero diagonal.

    Off-diagonal entries are
    d[i, j] - rowsum_i / (n - 2) - colsum_j / (n - 2)
    + total / ((n - 1) * (n - 2)).
    Needs n >= 4 observations.
    """
    d = np.asarray(d, dtype=np.float64)
    n = d.shape[0]
    if n < 4:
        raise SampleTooSmall(f"u-centering needs n >= 4 observations, got {n}")
    row = d.sum(axis=1, keepdims=True) / (n - 2)
    col = d.sum(axis=0, keepdims=True) / (n - 2)
    total = d.sum() / ((n - 1) * (n - 2))
    out = d - row - col + total
    np.fill_diagonal(out, 0.0)
    return out


def u_product(a: np.ndarray, b: np.ndarray) -> float:
    """Inner product in the space of U-centered matrices."""
    n = a.shape[0]
    return float((a * b).sum() / (n * (n - 3)))


def _dcor_centered(a: np.ndarray, b: np.ndarray) -> float:
    n = a.shape[0]
    cov2 = (a * b).sum() / (n * n)
    varx2 = (a * a).sum() / (n * n)
    vary2 = (b * b).sum() / (n * n)
    if varx2 <= 0.0 or vary2 <= 0.0:
        raise DegenerateSample("a sample has zero distance variance")
    value = np.sqrt(max(cov2, 0.0) / np.sqrt(varx2 * vary2))
    return float(min(value, 1.0))


def _star_from_centered(a: np.ndarray, b: np.ndarray) -> float:
    cov = u_product(a, b)
    varx = u_product(a, a)
    vary = u_product(b, b)
    if varx <= 0.0 or vary <= 0.0:
        raise DegenerateSample("a sample has zero distance variance")
    return float(cov / np.sqrt(varx * vary))


def _partial_from_stars(rxy: float, rxz: float, ryz: float, depth: int) -> float:
    fx = 1.0 - rxz * rxz
    fy = 1.0 - ryz * ryz
    if fx < DENOMINATOR_GUARD or fy < DENOMINATOR_GUARD:
        raise DegenerateConditioning(
            f"conditioning sample explains an argument almost fully "
            f"(1 - r^2 = {min(fx, fy):.3e} < {DENOMINATOR_GUARD} "
            f"with {depth} conditioners left on the stack)"
        )
    return float((rxy - rxz * ryz) / (np.sqrt(fx) * np.sqrt(fy)))


def _distance_input(s, representation: str) -> np.ndarray:
    if representation == "features":
        values = s.values if isinstance(s, SimilarityMatrix) else s
        return pairwise_distances(values)
    if representation == "distance":
        if not isinstance(s, SimilarityMatrix):
            raise ValidationError("distance representation needs SimilarityMatrix inputs")
        return 1.0 - s.values
    raise ValidationError(f"unknown representation {representation!r}")


class DependenceCache:
    """Memoized dependence statistics over a fixed pool of matrices.

    Each input matrix is registered by object identity the first time it
    appears, and its distance matrix, centered forms, and every level of
    the partial-correlation recursion are computed exactly once.  A
    pipeline that compares one fused matrix against each of its layers,
    unconditionally and conditionally, therefore pays for one distance
    matrix per input rather than one per statistic.
    """

    def __init__(self, representation: str = "features"):
        if representation not in ("features", "distance"):
            raise ValidationError(f"unknown representation {representation!r}")
        self.representation = representation
        self._inputs: list = []
        self._dist: dict[int, np.ndarray] = {}
        self._vcent: dict[int, np.ndarray] = {}
        self._ucent: dict[int, np.ndarray] = {}
        self._stars: dict[tuple, float] = {}

    def _key(self, s) -> int:
        k = id(s)
        if k not in self._dist:
            # holding the object pins its id for the cache's lifetime
            self._inputs.append(s)
            self._dist[k] = _distance_input(s, self.representation)
        return k

    def _check_sizes(self, keys: Sequence[int]) -> int:
        n = self._dist[keys[0]].shape[0]
        for k in keys[1:]:
            m = self._dist[k].shape[0]
            if m != n:
                raise ValidationError(f"sample sizes differ: {n} vs {m}")
        return n

    def _vcentered(self, k: int) -> np.ndarray:
        if k not in self._vcent:
            self._vcent[k] = double_centered(self._dist[k])
        return self._vcent[k]

    def _ucentered(self, k: int) -> np.ndarray:
        if k not in self._ucent:
            self._ucent[k] = u_centered(self._dist[k])
        return self._ucent[k]

    def dcor(self, a, b) -> float:
        ka, kb = self._key(a), self._key(b)
        n = self._check_sizes((ka, kb))
        if n < 2:
            raise SampleTooSmall(f"distance correlation needs n >= 2, got {n}")
        return _dcor_centered(self._vcentered(ka), self._vcentered(kb))

    def star(self, a, b) -> float:
        ka, kb = self._key(a), self._key(b)
        self._check_sizes((ka, kb))
        return self._star_by_key(ka, kb, ())

    def partial(self, a, b, given: Sequence) -> float:
        keys = [self._key(s) for s in (a, b, *given)]
        self._check_sizes(keys)
        return self._star_by_key(keys[0], keys[1], tuple(keys[2:]))

    def _star_by_key(self, i: int, j: int, given: tuple[int, ...]) -> float:
        key = (min(i, j), max(i, j), given)
        if key in self._stars:
            return self._stars[key]
        if not given:
            value = _star_from_centered(self._ucentered(i), self._ucentered(j))
        else:
            # peel the last conditioner first, as in the closed forms
            rest, k = given[:-1], given[-1]
            value = _partial_from_stars(
                self._star_by_key(i, j, rest),
                self._star_by_key(i, k, rest),
                self._star_by_key(j, k, rest),
                depth=len(given),
            )
        self._stars[key] = value
        return value


def dcor(x, y) -> float:
    """Distance correlation of two samples (rows are observations).

    Biased V-statistic form; the value lies in [0, 1] and equals 1 for
    samples related by a full-rank affine map.
    """
    cache = DependenceCache("features")
    return cache.dcor(_sample_rows(x), _sample_rows(y))


def dcor_star(x, y) -> float:
    """Bias-corrected distance correlation (U-centered inner product).

    Unlike :func:`dcor` the value may be negative; it is bounded by 1 in
    absolute value and needs n >= 4.
    """
    cache = DependenceCache("features")
    return cache.star(_sample_rows(x), _sample_rows(y))


def pdcor(x, y, z) -> float:
    """Partial distance correlation of x and y given one sample z."""
    return pdcor_multi(x, y, [z])


def pdcor_multi(x, y, given: Sequence) -> float:
    """Partial distance correlation with several conditioning samples.

    The conditioning list is eliminated back to front: with
    given = [z, v], first v is removed via the single-condition formula
    applied to values already conditioned on z.  The result therefore
    depends on the stated order of ``given``; callers fix that order.
    """
    cache = DependenceCache("features")
    return cache.partial(_sample_rows(x), _sample_rows(y), [_sample_rows(g) for g in given])


# ---------------------------------------------------------------------------
# Similarity-matrix front end


def gdc(
    a: SimilarityMatrix | np.ndarray,
    b: SimilarityMatrix | np.ndarray,
    representation: str = "features",
    bias_corrected: bool = False,
) -> float:
    """Distance correlation between two similarity matrices.

    By default each matrix is treated as a sample whose observations are
    nodes and whose features are the node's similarity profile (rows as
    features).  ``representation="distance"`` instead feeds 1 - S
    directly as the distance matrix.
    """
    cache = DependenceCache(representation)
    if bias_corrected:
        return cache.star(a, b)
    return cache.dcor(a, b)


def pdc(
    a: SimilarityMatrix | np.ndarray,
    b: SimilarityMatrix | np.ndarray,
    given: Sequence[SimilarityMatrix | np.ndarray],
    representation: str = "features",
) -> float:
    """Partial distance correlation between similarity matrices."""
    cache = DependenceCache(representation)
    return cache.partial(a, b, list(given))
