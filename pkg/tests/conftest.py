"""Shared helpers for the test suite.

Builders here construct inputs only; every expected value in the tests
comes from an oracle implemented next to the test that uses it.
"""

from __future__ import annotations

import numpy as np
import pytest

from netfuse.core import NodeRoster, SimilarityMatrix


def random_similarity(n: int, seed: int, roster: NodeRoster | None = None) -> SimilarityMatrix:
    """Random valid similarity matrix: symmetric, [0, 1], unit diagonal."""
    rng = np.random.default_rng(seed)
    m = rng.random((n, n))
    m = (m + m.T) / 2.0
    np.fill_diagonal(m, 1.0)
    if roster is None:
        roster = NodeRoster.from_ids([f"j{i:03d}" for i in range(n)])
    return SimilarityMatrix(roster, m)


def block_similarity(
    sizes: list[int],
    within: float = 0.9,
    between: float = 0.1,
    noise: float = 0.0,
    seed: int = 0,
    prefix: str = "j",
) -> SimilarityMatrix:
    """Planted block-diagonal similarity structure with optional noise."""
    n = sum(sizes)
    labels = np.repeat(np.arange(len(sizes)), sizes)
    m = np.where(labels[:, None] == labels[None, :], within, between).astype(float)
    if noise:
        rng = np.random.default_rng(seed)
        jitter = rng.uniform(-noise, noise, size=(n, n))
        jitter = (jitter + jitter.T) / 2.0
        m = np.clip(m + jitter, 0.0, 1.0)
    np.fill_diagonal(m, 1.0)
    roster = NodeRoster.from_ids([f"{prefix}{i:03d}" for i in range(n)])
    return SimilarityMatrix(roster, m)


def adjusted_rand_index(a, b) -> float:
    """Adjusted Rand Index between two label vectors (contingency form)."""
    a = np.asarray(a)
    b = np.asarray(b)
    n = a.size
    _, ai = np.unique(a, return_inverse=True)
    _, bi = np.unique(b, return_inverse=True)
    contingency = np.zeros((ai.max() + 1, bi.max() + 1), dtype=np.int64)
    np.add.at(contingency, (ai, bi), 1)

    def comb2(x):
        return x * (x - 1) / 2.0

    sum_ij = comb2(contingency).sum()
    sum_a = comb2(contingency.sum(axis=1)).sum()
    sum_b = comb2(contingency.sum(axis=0)).sum()
    total = comb2(np.array(n))
    expected = sum_a * sum_b / total
    maximum = (sum_a + sum_b) / 2.0
    if maximum == expected:
        return 1.0
    return float((sum_ij - expected) / (maximum - expected))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
