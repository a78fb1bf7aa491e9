"""Estimator-protocol conformance for the three fit-style wrappers.

Checks the conventions downstream tooling relies on: get_params /
set_params round trips, clone independence, fit returning self, learned
state only in trailing-underscore attributes, and agreement between the
estimators and the underlying functions.
"""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from netfuse.community import LouvainCommunities, graph_from_similarity, louvain
from netfuse.consensus import ConsensusClustering, consensus_communities
from netfuse.snf import SimilarityNetworkFusion, fuse

from conftest import block_similarity, random_similarity

ESTIMATORS = [
    SimilarityNetworkFusion(),
    LouvainCommunities(),
    ConsensusClustering(),
]


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
class TestProtocol:
    def test_get_set_params_round_trip(self, est):
        params = est.get_params()
        assert params  # every estimator is configurable
        rebuilt = type(est)(**params)
        assert rebuilt.get_params() == params
        est2 = clone(est)
        est2.set_params(**params)
        assert est2.get_params() == params

    def test_clone_is_unfitted_copy(self, est):
        twin = clone(est)
        assert twin is not est
        assert twin.get_params() == est.get_params()
        fitted_attrs = [a for a in vars(twin) if a.endswith("_") and not a.endswith("__")]
        assert fitted_attrs == []

    def test_no_state_mutated_by_init(self, est):
        # all constructor args stored verbatim, nothing learned yet
        for name, value in est.get_params().items():
            assert getattr(est, name) == value


class TestFusionEstimator:
    def test_fit_returns_self_and_matches_function(self):
        layers = [random_similarity(10, seed=s) for s in (1, 2)]
        est = SimilarityNetworkFusion(k=3, iterations=5)
        assert est.fit(layers) is est
        direct = fuse(layers, k=3, alpha=0.5, iterations=5)
        assert np.array_equal(est.fused_, direct.values)
        assert est.fused_matrix_.roster.ids == direct.roster.ids

    def test_fit_transform_returns_fused_array(self):
        layers = [random_similarity(8, seed=s) for s in (3, 4)]
        out = SimilarityNetworkFusion(k=3, iterations=4).fit_transform(layers)
        assert out.shape == (8, 8)
        assert np.all(np.diag(out) == 1.0)

    def test_feature_names_need_fit(self):
        est = SimilarityNetworkFusion(k=3)
        with pytest.raises(NotFittedError):
            est.get_feature_names_out()
        layers = [random_similarity(6, seed=s) for s in (5, 6)]
        names = est.fit(layers).get_feature_names_out()
        assert list(names) == list(layers[0].roster.ids)


class TestLouvainEstimatorProtocol:
    def test_fit_returns_self_and_matches_function(self):
        sim = block_similarity([6, 6], seed=1)
        est = LouvainCommunities(seed=5)
        assert est.fit(sim) is est
        direct = louvain(graph_from_similarity(sim), seed=5)
        assert np.array_equal(est.labels_, direct.labels)
        assert est.modularity_ == direct.modularity

    def test_threshold_param_changes_graph(self):
        sim = block_similarity([5, 5], within=0.9, between=0.2, seed=2)
        loose = LouvainCommunities(seed=0, threshold=0.0).fit(sim)
        tight = LouvainCommunities(seed=0, threshold=0.5).fit(sim)
        assert tight.partition_.n_communities >= loose.partition_.n_communities


class TestConsensusEstimatorProtocol:
    def test_fit_returns_self_and_matches_function(self):
        mats = [block_similarity([4, 4], seed=s) for s in (1, 2)]
        est = ConsensusClustering(runs_per_matrix=10, master_seed=3)
        assert est.fit(mats) is est
        direct = consensus_communities(mats, runs_per_matrix=10, master_seed=3)
        assert np.array_equal(est.labels_, direct.labels_over_roster())
        assert est.isolates_ == direct.isolates

    def test_fit_predict_is_labels(self):
        mats = [block_similarity([4, 4], seed=s) for s in (5, 6)]
        est = ConsensusClustering(runs_per_matrix=10)
        labels = est.fit_predict(mats)
        assert np.array_equal(labels, est.labels_)
