"""Align full book texts to short summaries and train an extractive summarizer.

Two alignment models share an HMM core: one treats contiguous source spans
as states and samples their boundaries during training, the other works at
token level with distance-binned jumps, null states, and an optional synonym
lexicon.  Alignments supervise a logistic-regression sentence extractor
evaluated by n-gram recall against the reference summaries.
"""

from .alignment import AlignmentResult, SentenceAlignment, TokenAlignment, read_alignment
from .corpus import (
    BookSummaryPair,
    Token,
    TokenizedDocument,
    admit_pair,
    corpus_ratio_stats,
    default_stopwords,
    parse_manifest,
    read_document,
    tokenize,
    write_document,
)
from .errors import (
    BookalignError,
    ConfigError,
    CorpusError,
    InferenceError,
    LexiconError,
    PairRejected,
)
from .extractor import ExtractorModel, load_model, train_extractor
from .features import CorpusStats, feature_names, featurize
from .hmm import HmmSpec, PosteriorTable, forward_backward, viterbi
from .passage import EmissionCache, PassageModel, PassageSpan, emission_logprob
from .pipeline import FoldPlan, RunConfig
from .rouge import RougeScore, rouge_n, rouge_tokenize, score_texts, score_tokens
from .summarize import (
    extract_summary,
    first_n_baseline,
    label_from_alignment,
    report_top_features,
)
from .synth import make_synthetic_corpus
from .token_align import (
    BinningScheme,
    SynonymLexicon,
    TokenAlignModel,
    jing_baseline_align,
    load_thesaurus,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentResult",
    "BinningScheme",
    "BookSummaryPair",
    "BookalignError",
    "ConfigError",
    "CorpusError",
    "CorpusStats",
    "EmissionCache",
    "ExtractorModel",
    "FoldPlan",
    "HmmSpec",
    "InferenceError",
    "LexiconError",
    "PairRejected",
    "PassageModel",
    "PassageSpan",
    "PosteriorTable",
    "RougeScore",
    "RunConfig",
    "SentenceAlignment",
    "SynonymLexicon",
    "Token",
    "TokenAlignModel",
    "TokenAlignment",
    "TokenizedDocument",
    "admit_pair",
    "corpus_ratio_stats",
    "default_stopwords",
    "emission_logprob",
    "extract_summary",
    "feature_names",
    "featurize",
    "first_n_baseline",
    "forward_backward",
    "jing_baseline_align",
    "label_from_alignment",
    "load_model",
    "load_thesaurus",
    "make_synthetic_corpus",
    "parse_manifest",
    "read_alignment",
    "read_document",
    "report_top_features",
    "rouge_n",
    "rouge_tokenize",
    "score_texts",
    "score_tokens",
    "tokenize",
    "train_extractor",
    "viterbi",
    "write_document",
]
