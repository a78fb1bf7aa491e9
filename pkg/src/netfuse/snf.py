"""Similarity network fusion across layers.

Each layer becomes a transition matrix and a sparse local kernel; the
layers then exchange information by cross diffusion until they agree.
The affinity kernel, normalization and local kernel follow the fusion
scheme of Wang et al. (2014):

* ``affinity_kernel``: W(i, j) = exp(-d(i, j)^2 / (alpha * eps(i, j)))
  with eps(i, j) the mean of three terms: the average distance from i to
  its k nearest neighbors, the same for j, and d(i, j) itself.
* ``normalize_p``: off-diagonal mass halved and row-normalized, diagonal
  set to 1/2, so each row sums to one without swamping the diagonal.
* ``local_kernel``: row-stochastic restriction to each node's k nearest
  neighbors, ties at the k-th place broken by node index.

One diffusion round updates every layer synchronously:
P_v <- S_v @ mean(P_u, u != v) @ S_v.T, then re-normalizes the
symmetrized result.  The fused output is the symmetrized mean of the
final transition matrices, rescaled off-diagonal to [0, 1] with unit
diagonal.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .core import Multiplex, NodeRoster, SimilarityMatrix
from .errors import EmptyInput, IsolatedNode, ValidationError

EPS_FLOOR = 1e-12


def _check_k(k: int, n: int) -> int:
    k = int(k)
    if not 1 <= k <= n - 1:
        raise ValidationError(f"k must be in [1, n-1] = [1, {n - 1}], got {k}")
    return k


def affinity_kernel(distances: np.ndarray, k: int = 20, alpha: float = 0.5) -> np.ndarray:
    """Gaussian-style affinity from a symmetric distance matrix.

    The bandwidth eps(i, j) averages the two local k-NN mean distances
    and d(i, j); it is floored at 1e-12 so an all-zero neighborhood
    degenerates to affinity 1 instead of dividing by zero.
    """
    d = np.asarray(distances, dtype=np.float64)
    n = d.shape[0]
    k = _check_k(k, n)
    if alpha <= 0:
        raise ValidationError(f"alpha must be positive, got {alpha}")
    masked = d.copy()
    np.fill_diagonal(masked, np.inf)
    knn_mean = np.sort(masked, axis=1)[:, :k].mean(axis=1)
    eps = (knn_mean[:, None] + knn_mean[None, :] + d) / 3.0
    eps = np.maximum(eps, EPS_FLOOR)
    return np.exp(-(d * d) / (alpha * eps))


def normalize_p(affinity: np.ndarray) -> np.ndarray:
    """Relative-weight transition matrix: P(i, i) = 1/2 and the
    off-diagonal of each row carries the remaining 1/2 proportionally."""
    w = np.asarray(affinity, dtype=np.float64)
    masked = w.copy()
    np.fill_diagonal(masked, 0.0)
    off_sums = masked.sum(axis=1)
    if (off_sums <= 0.0).any():
        i = int(np.flatnonzero(off_sums <= 0.0)[0])
        raise IsolatedNode(f"node {i} has zero affinity to every other node")
    p = w / (2.0 * off_sums[:, None])
    np.fill_diagonal(p, 0.5)
    return p


def local_kernel(affinity: np.ndarray, k: int = 20) -> np.ndarray:
    """Row-stochastic k-nearest-neighbor mask of an affinity matrix.

    Each row keeps its k strongest off-diagonal entries (ties at the
    boundary resolved toward the lower node index) and renormalizes
    them to sum to one; everything else, including the diagonal, is 0.
    """
    w = np.asarray(affinity, dtype=np.float64)
    n = w.shape[0]
    k = _check_k(k, n)
    masked = w.copy()
    np.fill_diagonal(masked, -np.inf)
    # stable argsort on the negated row: equal affinities keep index order
    order = np.argsort(-masked, axis=1, kind="stable")[:, :k]
    s = np.zeros_like(w)
    rows = np.repeat(np.arange(n), k)
    s[rows, order.ravel()] = w[rows, order.ravel()]
    sums = s.sum(axis=1)
    if (sums <= 0.0).any():
        i = int(np.flatnonzero(sums <= 0.0)[0])
        raise IsolatedNode(f"node {i} has zero affinity to all of its {k} nearest neighbors")
    return s / sums[:, None]


def _prepare_affinities(
    multiplex: Multiplex, k: int, alpha: float, mode: str
) -> list[np.ndarray]:
    if mode == "kernel":
        return [affinity_kernel(1.0 - m, k=k, alpha=alpha) for m in multiplex.matrices()]
    if mode == "direct":
        return [np.array(m, dtype=np.float64) for m in multiplex.matrices()]
    raise ValidationError(f"unknown fusion mode {mode!r}, expected 'kernel' or 'direct'")


def _diffusion_rounds(
    transitions: list[np.ndarray], locals_: list[np.ndarray], iterations: int
) -> list[np.ndarray]:
    v = len(transitions)
    ps = [p.copy() for p in transitions]
    for _ in range(iterations):
        total = np.sum(ps, axis=0)
        nxt = []
        for i in range(v):
            cross = (total - ps[i]) / (v - 1)
            p = locals_[i] @ cross @ locals_[i].T
            nxt.append(normalize_p((p + p.T) / 2.0))
        ps = nxt
    return ps


def _finalize(ps: Sequence[np.ndarray], roster: NodeRoster) -> SimilarityMatrix:
    fused = np.mean(ps, axis=0)
    fused = (fused + fused.T) / 2.0
    np.fill_diagonal(fused, 0.0)
    peak = fused.max()
    if peak > 0.0:
        fused = fused / peak
    np.fill_diagonal(fused, 1.0)
    np.clip(fused, 0.0, 1.0, out=fused)
    return SimilarityMatrix(roster, fused)


def fuse(
    layers,
    k: int = 20,
    alpha: float = 0.5,
    iterations: int = 20,
    mode: str = "kernel",
) -> SimilarityMatrix:
    """Fuse the layers of a multiplex into one similarity matrix.

    Parameters
    ----------
    layers : Multiplex, mapping, or sequence
        At least two similarity layers on a shared roster.
    k : int
        Neighborhood size for both the affinity bandwidth and the local
        kernel.
    alpha : float
        Bandwidth multiplier of the affinity kernel.
    iterations : int
        Number of cross-diffusion rounds.
    mode : str
        ``kernel`` turns each layer into distances 1 - s and applies the
        affinity kernel; ``direct`` uses the layer values as affinities.
    """
    multiplex = as_multiplex(layers)
    if len(multiplex) < 2:
        raise ValidationError("fusion needs at least two layers")
    if iterations < 1:
        raise ValidationError(f"iterations must be >= 1, got {iterations}")
    affinities = _prepare_affinities(multiplex, k, alpha, mode)
    transitions = [normalize_p(w) for w in affinities]
    locals_ = [local_kernel(w, k=k) for w in affinities]
    ps = _diffusion_rounds(transitions, locals_, iterations)
    return _finalize(ps, multiplex.roster)


def as_multiplex(layers) -> Multiplex:
    """Coerce fusion input to a Multiplex.

    Accepts a Multiplex, a mapping of name -> SimilarityMatrix, or a
    sequence of SimilarityMatrix / square arrays.  Plain arrays must
    already satisfy the similarity invariants and share one shape; they
    get a generated roster and positional layer names.
    """
    if isinstance(layers, Multiplex):
        return layers
    if isinstance(layers, Mapping):
        return Multiplex.from_layers(layers)
    items = list(layers)
    if not items:
        raise EmptyInput("no layers given")
    named: dict[str, SimilarityMatrix] = {}
    roster: NodeRoster | None = None
    for pos, item in enumerate(items):
        if isinstance(item, SimilarityMatrix):
            matrix = item
            if roster is None:
                roster = matrix.roster
        else:
            arr = np.asarray(item, dtype=np.float64)
            if roster is None:
                width = len(str(max(arr.shape[0] - 1, 0)))
                roster = NodeRoster.from_ids(f"n{i:0{width}d}" for i in range(arr.shape[0]))
            matrix = SimilarityMatrix(roster, arr)
        named[f"layer{pos}"] = matrix
    return Multiplex.from_layers(named)


class SimilarityNetworkFusion(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`fuse`.

    Not inductive: like other non-parametric embeddings, it only
    provides ``fit`` / ``fit_transform`` on the full multiplex.

    Attributes set by fit: ``fused_`` (ndarray), ``fused_matrix_``
    (SimilarityMatrix), ``roster_``.
    """

    def __init__(self, k: int = 20, alpha: float = 0.5, iterations: int = 20, mode: str = "kernel"):
        self.k = k
        self.alpha = alpha
        self.iterations = iterations
        self.mode = mode

    def fit(self, X, y=None):
        fused = fuse(X, k=self.k, alpha=self.alpha, iterations=self.iterations, mode=self.mode)
        self.fused_matrix_ = fused
        self.fused_ = fused.values
        self.roster_ = fused.roster
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).fused_

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "roster_")
        return np.asarray(self.roster_.ids, dtype=object)
