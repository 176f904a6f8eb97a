"""crossid: cross-domain social-media entity resolution.

Scores candidate cross-platform user pairs with profile string similarity,
content-based author identification, and aligned-graph features; fuses the
scores with missingness-aware models; and evaluates with DET curves and EER.
"""

__version__ = "0.1.0"

from .content import AuthorIdentifier, Vocabulary, build_content_vector, tokenize_posts
from .evaluation import (
    DetCurve,
    EvalReport,
    Trial,
    build_trials,
    compute_eer,
    evaluate_system,
    filter_nontrivial,
    kfold_split,
    sweep_det,
)
from .fusion import (
    FEATURE_BUNDLES,
    FEATURE_COLUMNS,
    ScoreFusion,
    ScoreRow,
    assemble_score_table,
)
from .graph import (
    AlignedGraph,
    DomainGraph,
    GraphFeature,
    PairProductSVM,
    SeedSet,
    align_graphs,
    build_graph,
    community_feature,
    detect_communities,
    dp_similarity,
    neighborhood_feature,
    select_seeds,
)
from .learners import (
    LinearSVM,
    LogisticRegression,
    RandomForest,
    finite_check,
    load_model,
    save_model,
)
from .normalize import NormalizationConfig, normalize_text, reorder_full_name
from .pipeline import RunConfig, run_pipeline
from .records import Post
from .strsim import (
    CorpusStats,
    PipelineSpec,
    SimilarityScore,
    damerau_levenshtein,
    jaro,
    jaro_winkler,
    levenshtein,
    lossy_bw_transform,
    normalized_edit_similarity,
    profile_similarity,
    soft_tfidf,
)
from .synth import SynthConfig, synth_corpus, write_synth_corpus

__all__ = [
    "__version__",
    "AlignedGraph",
    "AuthorIdentifier",
    "CorpusStats",
    "DetCurve",
    "DomainGraph",
    "EvalReport",
    "FEATURE_BUNDLES",
    "FEATURE_COLUMNS",
    "GraphFeature",
    "LinearSVM",
    "LogisticRegression",
    "NormalizationConfig",
    "PairProductSVM",
    "PipelineSpec",
    "Post",
    "RandomForest",
    "RunConfig",
    "ScoreFusion",
    "ScoreRow",
    "SeedSet",
    "SimilarityScore",
    "SynthConfig",
    "Trial",
    "Vocabulary",
    "align_graphs",
    "assemble_score_table",
    "build_content_vector",
    "build_graph",
    "build_trials",
    "community_feature",
    "compute_eer",
    "damerau_levenshtein",
    "detect_communities",
    "dp_similarity",
    "evaluate_system",
    "filter_nontrivial",
    "finite_check",
    "jaro",
    "jaro_winkler",
    "kfold_split",
    "levenshtein",
    "load_model",
    "lossy_bw_transform",
    "neighborhood_feature",
    "normalize_text",
    "normalized_edit_similarity",
    "profile_similarity",
    "reorder_full_name",
    "run_pipeline",
    "save_model",
    "select_seeds",
    "soft_tfidf",
    "sweep_det",
    "synth_corpus",
    "tokenize_posts",
    "write_synth_corpus",
]
