"""Behavioral pair tests for ad-hoc ranking functions.

Three builders produce test sets of ordered document pairs per query
(measure-and-match, textual manipulation, dataset transfer); a scorer
assigns each document a relevance score; effects in {-1, 0, +1} summarize
which side the scorer preferred beyond a calibrated margin delta.
"""

__version__ = "0.1.0"

from .corpus import (
    CollectionStats,
    Doc,
    Judgment,
    Query,
    RunEntry,
    compute_stats,
    load_collection,
    load_qrels,
    load_queries,
    load_run,
    load_stats,
    save_stats,
)
from .dtt import (
    TextPairRecord,
    build_fluency,
    build_formality,
    build_summarization,
    load_l6_index,
    load_pair_records,
)
from .errors import (
    AbnirmlError,
    CacheError,
    ConfigError,
    EvaluationError,
    ParseError,
    ScorerProtocolError,
    ScorerTimeoutError,
    ValidationError,
)
from .measures import doc_length, overlap, query_terms, sum_tf, tf_dominates, tf_vector
from .mmt import CHARACTERISTICS, MmtSpec, build_mmt
from .pairtest import (
    EffectRecord,
    PairSample,
    TestSet,
    effect,
    evaluate,
    load_effects,
    load_test_set,
    save_effects,
    save_test_set,
    summary_score,
)
from .scorers import (
    Bm25Scorer,
    CachedScorer,
    CallableScorer,
    DeltaConfig,
    ExternalScorer,
    Scorer,
    calibrate_delta,
    load_delta,
    save_delta,
)
from .stats_report import (
    TestResult,
    apply_correction,
    bonferroni,
    paired_t_test,
    render_report,
    summarize_test,
    t_cdf,
)
from .textproc import (
    PipelineConfig,
    Rng,
    default_pipeline,
    default_stopwords,
    derive_rng,
    lemmatize,
    noun_chunks,
    porter_stem,
    seeded_shuffle,
    split_sentences,
    terms,
    tokenize,
)
from .tmt import MANIPULATION_KINDS, ManipulationContext, Skip, build_tmt, manipulate

__all__ = [name for name in dir() if not name.startswith("_")]
