"""divergo: diverse prompt selection and diversity metrics for embedded text.

Pipeline: chunk tagged sentences into phrases (corpus), embed them onto the
unit hypersphere (embedding), select maximally diverse subsets and grouped
prompts while repelling prior ideas (selection), score the result with a
collective-diversity metric suite (metrics), and characterize technique
trade-offs with seed-reproducible sweeps (simulation).
"""

__version__ = "0.1.0"

from .corpus import (
    PHRASE_KINDS,
    TAGS,
    FilterConfig,
    Phrase,
    TaggedSentence,
    TaggedToken,
    chunk_phrases,
    filter_phrases,
    load_corpus,
    load_tagged_sentences,
    load_wordlist,
    store_corpus,
)
from .embedding import (
    DistanceMatrix,
    EmbeddingMatrix,
    EmbeddingVector,
    angular_distance,
    angular_mean,
    fetch_embeddings,
    load_vectors,
    pairwise_distances,
    row_distances,
    store_vectors,
)
from .errors import (
    CorpusFormatError,
    DegenerateMeanError,
    DimensionMismatchError,
    DivergoError,
    DuplicateIdError,
    EmbedCountError,
    EmbedDimensionError,
    EmbedServiceError,
    EmbedStatusError,
    EmbedTransportError,
    InsufficientSurvivorsError,
    UndefinedRatioError,
    UnknownIdError,
    VectorFormatError,
)
from .metrics import (
    COLLECTIVE_METRICS,
    AdoptionScores,
    CategoryLabeling,
    ItemMetrics,
    MetricsReport,
    ThematicScores,
    adoption,
    bootstrap,
    collective_diversity,
    collective_from_distances,
    flexibility_originality,
    fscore,
    intra_prompt_metrics,
    load_labels,
)
from .selection import (
    DEFAULT_REPEL_DELTA,
    Dendrogram,
    Prompt,
    RepelConfig,
    SelectionResult,
    build_mst,
    group_prompts,
    load_prompts,
    mst_weight,
    prior_distances,
    prompt_matrix,
    select_diverse,
    select_repelled,
    store_prompts,
)
from .simulation import (
    SimulationConfig,
    SimulationReport,
    SimulationRow,
    SyntheticSpec,
    generate_synthetic,
    load_config,
    run_characterization,
    run_repeller_sweep,
)

__all__ = [
    "__version__",
    # corpus
    "TAGS",
    "PHRASE_KINDS",
    "TaggedToken",
    "TaggedSentence",
    "Phrase",
    "FilterConfig",
    "chunk_phrases",
    "filter_phrases",
    "load_corpus",
    "store_corpus",
    "load_tagged_sentences",
    "load_wordlist",
    # embedding
    "EmbeddingVector",
    "EmbeddingMatrix",
    "DistanceMatrix",
    "angular_distance",
    "angular_mean",
    "pairwise_distances",
    "row_distances",
    "load_vectors",
    "store_vectors",
    "fetch_embeddings",
    # selection
    "DEFAULT_REPEL_DELTA",
    "Dendrogram",
    "SelectionResult",
    "Prompt",
    "RepelConfig",
    "build_mst",
    "mst_weight",
    "select_diverse",
    "select_repelled",
    "prior_distances",
    "group_prompts",
    "prompt_matrix",
    "store_prompts",
    "load_prompts",
    # metrics
    "COLLECTIVE_METRICS",
    "ItemMetrics",
    "MetricsReport",
    "AdoptionScores",
    "CategoryLabeling",
    "ThematicScores",
    "collective_diversity",
    "collective_from_distances",
    "bootstrap",
    "intra_prompt_metrics",
    "adoption",
    "flexibility_originality",
    "fscore",
    "load_labels",
    # simulation
    "SyntheticSpec",
    "SimulationConfig",
    "SimulationRow",
    "SimulationReport",
    "generate_synthetic",
    "run_characterization",
    "run_repeller_sweep",
    "load_config",
    # errors
    "DivergoError",
    "CorpusFormatError",
    "DuplicateIdError",
    "DimensionMismatchError",
    "VectorFormatError",
    "DegenerateMeanError",
    "EmbedServiceError",
    "EmbedTransportError",
    "EmbedStatusError",
    "EmbedCountError",
    "EmbedDimensionError",
    "InsufficientSurvivorsError",
    "UnknownIdError",
    "UndefinedRatioError",
]
