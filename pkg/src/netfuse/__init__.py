"""netfuse: multilayer similarity networks for journal portfolios.

Build similarity layers from who edits, who writes, what is cited, and
what the text says; fuse them into one network; measure every layer's
contribution with distance correlation statistics; extract stable
communities by seeded consensus clustering; and align, aggregate, and
export the results.
"""

from ._rng import PRNG_ID, derive_seed
from ._version import __version__
from .aggregate import GroupMatrix, community_graph, export_graph, shrink, top_edges
from .align import align, impute, intersect
from .community import (
    LouvainCommunities,
    Partition,
    WeightedGraph,
    graph_from_similarity,
    louvain,
    modularity,
)
from .consensus import (
    ConsensusClustering,
    ConsensusResult,
    CooccurrenceGraph,
    consensus_communities,
    final_partition,
    run_ensemble,
    threshold_graph,
)
from .core import (
    CosineMatrix,
    Multiplex,
    NodeRoster,
    SimilarityMatrix,
    load_similarity_csv,
    read_matrix_binary,
    read_matrix_csv,
    validate_multiplex,
    write_matrix_binary,
    write_matrix_csv,
)
from .depstats import (
    DcorReport,
    DependenceCache,
    dcor,
    dcor_star,
    gdc,
    pdc,
    pdcor,
    pdcor_multi,
)
from .ingest import (
    EmbeddingSet,
    IncidenceMatrix,
    WorkRecord,
    build_author_incidence,
    build_editor_incidence,
    build_reference_incidence,
    fetch_works,
    filter_works,
    read_editor_pairs_csv,
    read_embeddings_jsonl,
    read_works_jsonl,
)
from .layers import (
    abstract_layer,
    build_layer,
    build_period_layers,
    cosine_rows,
    medoid,
    similarity_from_cosine,
    to_proper_similarity,
)
from .pipeline import PipelineConfig, run_pipeline
from .snf import (
    SimilarityNetworkFusion,
    affinity_kernel,
    as_multiplex,
    fuse,
    local_kernel,
    normalize_p,
)
from .synthetic import make_corpus

__all__ = [
    "PRNG_ID",
    "__version__",
    "derive_seed",
    "GroupMatrix",
    "community_graph",
    "export_graph",
    "shrink",
    "top_edges",
    "align",
    "impute",
    "intersect",
    "LouvainCommunities",
    "Partition",
    "WeightedGraph",
    "graph_from_similarity",
    "louvain",
    "modularity",
    "ConsensusClustering",
    "ConsensusResult",
    "CooccurrenceGraph",
    "consensus_communities",
    "final_partition",
    "run_ensemble",
    "threshold_graph",
    "CosineMatrix",
    "Multiplex",
    "NodeRoster",
    "SimilarityMatrix",
    "load_similarity_csv",
    "read_matrix_binary",
    "read_matrix_csv",
    "validate_multiplex",
    "write_matrix_binary",
    "write_matrix_csv",
    "DcorReport",
    "DependenceCache",
    "dcor",
    "dcor_star",
    "gdc",
    "pdc",
    "pdcor",
    "pdcor_multi",
    "EmbeddingSet",
    "IncidenceMatrix",
    "WorkRecord",
    "build_author_incidence",
    "build_editor_incidence",
    "build_reference_incidence",
    "fetch_works",
    "filter_works",
    "read_editor_pairs_csv",
    "read_embeddings_jsonl",
    "read_works_jsonl",
    "abstract_layer",
    "build_layer",
    "build_period_layers",
    "cosine_rows",
    "medoid",
    "similarity_from_cosine",
    "to_proper_similarity",
    "PipelineConfig",
    "run_pipeline",
    "SimilarityNetworkFusion",
    "affinity_kernel",
    "as_multiplex",
    "fuse",
    "local_kernel",
    "normalize_p",
    "make_corpus",
]
