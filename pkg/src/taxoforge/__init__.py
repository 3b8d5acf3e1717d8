"""taxoforge: build, prune, evaluate and serve a taxonomy of real-estate
attribute phrases for hierarchical candidate recommendation."""

from taxoforge.embedding import (
    EmbeddingConfig,
    EmbeddingModel,
    NNIndex,
    PhraseVector,
    SkipGramEmbedding,
    cosine,
    nearest_neighbor,
    subword_ids,
    train,
)
from taxoforge.errors import TaxoforgeError
from taxoforge.evaluation import (
    PrecisionStrategy,
    ReferenceOntology,
    export_projection,
    random_tree_similarity_baseline,
    reference_precision,
    subtree_similarity,
)
from taxoforge.expansion import AttachmentReport, SeedRecord, attach_by_embedding, bootstrap_seed
from taxoforge.link_pruning import (
    EdgeSuggestion,
    FeatureVector,
    LinkSample,
    LinkScorer,
    LogisticLinkScorer,
    PruneReport,
    apply_decision,
    compute_features,
    fit_reference_scorer,
    generate_pairs,
    prune_and_reattach,
    suggest_edges,
)
from taxoforge.recommender import (
    Listing,
    RecommendationResult,
    baseline_candidates,
    load_listings,
    map_to_categories,
    taxonomy_candidates,
)
from taxoforge.taxonomy import (
    ROOT_ID,
    NodeId,
    NodeKind,
    Taxonomy,
    TaxonomyNode,
    TaxonomyStats,
)
from taxoforge.text import normalize_phrase, tokenize
from taxoforge.workspace import Workspace, WorkspaceConfig

__version__ = "0.1.0"
