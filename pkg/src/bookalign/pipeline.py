"""End-to-end orchestration: ingest, align, evaluate, summarize, report.

Every command is deterministic for a fixed config and seed: pair-level work
derives an independent RNG stream from the pair id, iteration order is
sorted, and report files carry no timestamps, so repeated runs are
byte-identical.  Timing appears only in log output.
"""

from __future__ import annotations

import hashlib
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import sparse

from .alignment import read_alignment
from .corpus import (
    BookSummaryPair,
    PairRejected,
    admit_pair,
    corpus_ratio_stats,
    parse_manifest,
    read_text_file,
    tokenize,
    write_document,
)
from .errors import BookalignError, ConfigError
from .extractor import BIAS_NAME, ExtractorModel, train_extractor
from .features import CorpusStats, feature_names, featurize, write_feature_matrix
from .passage import PassageModel
from .rouge import RougeScore, format_percent, mean_rouge, score_tokens
from .summarize import (
    extract_summary,
    first_n_baseline,
    label_from_alignment,
    report_top_features,
    selection_tokens,
    write_summary,
)
from .token_align import BinningScheme, TokenAlignModel, jing_baseline_align, load_thesaurus

log = logging.getLogger(__name__)

MODELS = ("passage", "token", "jing")
BASELINE_NAME = "first1000"


@dataclass
class RunConfig:
    """Flag-level configuration shared by the pipeline commands."""

    manifest: Path | None = None
    out: Path = Path("out")
    model: str = "passage"
    k: int = 100
    iters: int = 500
    alpha: float = 0.01
    tau: int = 1000
    bins: str = "1,10,100,1000"
    null_bins: int = 9
    lam: float = 1.0
    folds: int = 10
    seed: int = 0
    workers: int = 1
    min_book_words: int = 10_000
    min_summary_words: int = 100
    burn_in: float = 0.2
    decode: str = "modal"
    thesaurus: Path | None = None
    label_mode: str = "auto"
    alignments: Path | None = None
    budget: int = 1000
    export_features: bool = False

    def validate(self) -> None:
        if self.model not in (*MODELS, "all"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.k < 1 or self.iters < 0 or self.tau < 1 or self.null_bins < 0:
            raise ConfigError("k/iters/tau/null-bins out of range")
        if not 0.0 <= self.burn_in < 1.0:
            raise ConfigError("burn-in fraction must be in [0, 1)")
        if self.decode not in ("modal", "last"):
            raise ConfigError(f"unknown decode mode {self.decode!r}")
        BinningScheme.from_string(self.bins)

    @property
    def models(self) -> tuple[str, ...]:
        return MODELS if self.model == "all" else (self.model,)


def pair_rng_seed(seed: int, pair_id: str) -> list[int]:
    """Independent per-pair RNG stream, stable across runs and worker counts."""
    digest = hashlib.sha256(pair_id.encode("utf-8")).digest()
    return [seed, int.from_bytes(digest[:8], "big")]


def alignment_path(directory: Path, pair_id: str, model: str) -> Path:
    return Path(directory) / f"{pair_id}.{model}.align.tsv"


def samples_path(directory: Path, pair_id: str) -> Path:
    return Path(directory) / f"{pair_id}.passage.samples.tsv"


def load_pairs(config: RunConfig) -> tuple[list[BookSummaryPair], list[tuple[str, str]]]:
    """Tokenize and admit every manifest pair; rejections are returned, not raised."""
    if config.manifest is None:
        raise ConfigError("a manifest is required")
    pairs, failures = [], []
    for pair_id, book_path, summary_path in sorted(parse_manifest(config.manifest)):
        try:
            book = tokenize(read_text_file(book_path), doc_id=pair_id)
            summary = tokenize(read_text_file(summary_path), doc_id=pair_id)
            pairs.append(
                admit_pair(book, summary, config.min_book_words,
                           config.min_summary_words, pair_id=pair_id)
            )
        except PairRejected as exc:
            failures.append((pair_id, f"{exc.reason}: {exc}"))
        except BookalignError as exc:
            failures.append((pair_id, str(exc)))
    return pairs, failures


# ---------------------------------------------------------------------------
# ingest


def cmd_ingest(config: RunConfig) -> int:
    """Tokenize the corpus, export documents, and report length statistics."""
    config.validate()
    pairs, failures = load_pairs(config)
    out = Path(config.out)
    docs = out / "docs"
    docs.mkdir(parents=True, exist_ok=True)
    for pair in pairs:
        write_document(pair.book, docs / f"{pair.pair_id}.book.tsv")
        write_document(pair.summary, docs / f"{pair.pair_id}.summary.tsv")
    lines = ["#corpus-stats", f"pairs\t{len(pairs)}", f"rejected\t{len(failures)}"]
    if pairs:
        mean, p05, p95 = corpus_ratio_stats(pairs)
        lines += [
            f"ratio_mean\t{mean:.6f}",
            f"ratio_p05\t{p05:.6f}",
            f"ratio_p95\t{p95:.6f}",
        ]
    for pair_id, reason in failures:
        lines.append(f"rejected_pair\t{pair_id}\t{reason}")
        log.error("rejected pair=%s (%s)", pair_id, reason)
    (out / "corpus_stats.tsv").write_text("\n".join(lines) + "\n", "utf-8")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# align


def align_pair(pair: BookSummaryPair, config: RunConfig, model: str):
    """Train one aligner on one pair; returns the result and, for the
    passage model, its boundary sample log."""
    started = time.perf_counter()
    if model == "passage":
        pm = PassageModel(pair.book, pair.summary, k=config.k, alpha=config.alpha,
                          seed=pair_rng_seed(config.seed, pair.pair_id))
        history = pm.train(config.iters)
        result = pm.decode(config.decode, config.burn_in)
        extra = pm.sample_log
    elif model == "token":
        lexicon = load_thesaurus(config.thesaurus) if config.thesaurus else None
        tm = TokenAlignModel(pair.book, pair.summary,
                             scheme=BinningScheme.from_string(config.bins),
                             tau=config.tau, lexicon=lexicon,
                             null_states=config.null_bins)
        history = tm.em_train(max_iters=config.iters)
        result = tm.viterbi_align()
        extra = None
    elif model == "jing":
        result = jing_baseline_align(pair.book, pair.summary)
        history, extra = [], None
    else:
        raise ConfigError(f"unknown model {model!r}")
    log.info(
        "aligned pair=%s model=%s iters=%d loglik=%s seconds=%.2f",
        pair.pair_id, model, len(history),
        f"{history[-1]:.4f}" if history else "n/a",
        time.perf_counter() - started,
    )
    return result, extra


def write_samples(path, pair_id: str, sample_log) -> None:
    lines = [f"#samples\t{pair_id}\tk={len(sample_log.samples)}"]
    for state, entries in enumerate(sample_log.samples):
        for iteration, (start, end) in enumerate(entries):
            lines.append(f"{iteration}\t{state}\t{start}\t{end}")
    Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def read_samples(path) -> tuple[str, list[list[tuple[int, int]]]]:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or not lines[0].startswith("#samples\t"):
        raise ConfigError(f"{path}: not a samples file")
    _, pair_id, kpart = lines[0].split("\t")
    k = int(kpart.removeprefix("k="))
    samples: list[list[tuple[int, int]]] = [[] for _ in range(k)]
    for line in lines[1:]:
        if not line:
            continue
        _, state, start, end = line.split("\t")
        samples[int(state)].append((int(start), int(end)))
    return pair_id, samples


def _align_one(args) -> tuple[str, str | None]:
    pair, config, model = args
    try:
        result, extra = align_pair(pair, config, model)
        result.write(alignment_path(config.out, pair.pair_id, model))
        if extra is not None:
            write_samples(samples_path(config.out, pair.pair_id), pair.pair_id, extra)
        return pair.pair_id, None
    except Exception as exc:  # per-pair isolation: a bad pair must not stop the run
        return pair.pair_id, f"{type(exc).__name__}: {exc}"


def cmd_align(config: RunConfig) -> int:
    config.validate()
    pairs, failures = load_pairs(config)
    Path(config.out).mkdir(parents=True, exist_ok=True)
    tasks = [(pair, config, model) for pair in pairs for model in config.models]
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(_align_one, tasks))
    else:
        outcomes = [_align_one(t) for t in tasks]
    errors = list(failures)
    for pair_id, err in outcomes:
        if err is not None:
            errors.append((pair_id, err))
            log.error("alignment failed pair=%s: %s", pair_id, err)
    return 1 if errors else 0


# ---------------------------------------------------------------------------
# folds


@dataclass(frozen=True)
class FoldPlan:
    """Seed-deterministic partition of pair ids into disjoint folds."""

    folds: int
    assignment: dict[str, int]

    @classmethod
    def build(cls, pair_ids, folds: int, seed: int) -> "FoldPlan":
        ids = sorted(pair_ids)
        if folds < 2:
            raise ConfigError("need at least 2 folds to hold data out")
        if folds > len(ids):
            raise ConfigError(f"{folds} folds but only {len(ids)} pairs")
        rng = np.random.default_rng([seed, 0x666F6C64])
        perm = rng.permutation(len(ids))
        return cls(folds, {ids[p]: i % folds for i, p in enumerate(perm)})

    def test_ids(self, fold: int) -> list[str]:
        return sorted(p for p, f in self.assignment.items() if f == fold)

    def train_ids(self, fold: int) -> list[str]:
        return sorted(p for p, f in self.assignment.items() if f != fold)


def _guard_fold_separation(train_pairs, test_ids) -> None:
    leaked = {p.pair_id for p in train_pairs} & set(test_ids)
    if leaked:
        raise RuntimeError(f"test pairs leaked into training: {sorted(leaked)}")


# ---------------------------------------------------------------------------
# evaluate


def _reference_tokens(pair: BookSummaryPair) -> list[str]:
    return [t.lower for t in pair.summary.tokens if not t.is_punct]


def _check_alignments(pairs, align_dir: Path, models) -> None:
    missing = [
        f"{pair.pair_id}/{model}"
        for model in models
        for pair in pairs
        if not alignment_path(align_dir, pair.pair_id, model).exists()
    ]
    if missing:
        raise ConfigError("missing alignments for: " + ", ".join(missing))


def _train_fold_model(train_pairs, alignments, config: RunConfig):
    """Fit fold statistics and the extractor from training pairs only."""
    stats = CorpusStats.from_documents([p.book for p in train_pairs])
    names = feature_names(stats)
    blocks, labels = [], []
    for pair in train_pairs:
        blocks.append(featurize(pair.book, stats))
        labels.append(
            label_from_alignment(pair.book, pair.summary, alignments[pair.pair_id],
                                 rule=config.label_mode, alpha=config.alpha)
        )
    matrix = sparse.vstack(blocks, format="csr")
    y = np.concatenate(labels)
    model = train_extractor(matrix, y, names, lam=config.lam)
    return stats, model


def cmd_evaluate(config: RunConfig) -> int:
    """Cross-validated extractor training and ROUGE scoring.

    Test-fold summaries are consulted only when scoring; the guard raises if
    a test pair ever enters a training set.
    """
    config.validate()
    pairs, failures = load_pairs(config)
    for pair_id, reason in failures:
        log.error("rejected pair=%s (%s)", pair_id, reason)
    align_dir = Path(config.alignments or config.out)
    _check_alignments(pairs, align_dir, config.models)
    plan = FoldPlan.build([p.pair_id for p in pairs], config.folds, config.seed)
    by_id = {p.pair_id: p for p in pairs}

    out = Path(config.out)
    (out / "models").mkdir(parents=True, exist_ok=True)
    (out / "extracts").mkdir(parents=True, exist_ok=True)

    table: list[tuple[str, float, float]] = []
    per_pair: list[tuple[str, str, RougeScore]] = []
    for model_name in config.models:
        scores: dict[str, RougeScore] = {}
        for fold in range(config.folds):
            train_pairs = [by_id[i] for i in plan.train_ids(fold)]
            test_ids = plan.test_ids(fold)
            _guard_fold_separation(train_pairs, test_ids)
            alignments = {
                p.pair_id: read_alignment(alignment_path(align_dir, p.pair_id, model_name))
                for p in train_pairs
            }
            stats, model = _train_fold_model(train_pairs, alignments, config)
            model.save(out / "models" / f"fold{fold}.{model_name}.tsv")
            for pair_id in test_ids:
                pair = by_id[pair_id]
                probs = model.predict_proba(featurize(pair.book, stats))
                chosen = extract_summary(pair.book, probs, config.budget)
                write_summary(out / "extracts" / f"{pair_id}.{model_name}.txt",
                              pair.book, chosen)
                scores[pair_id] = score_tokens(
                    _reference_tokens(pair), selection_tokens(pair.book, chosen)
                )
        r1, r2 = mean_rouge(scores.values())
        table.append((model_name, r1, r2))
        per_pair.extend((model_name, pid, s) for pid, s in sorted(scores.items()))

    baseline_scores: dict[str, RougeScore] = {}
    for pair in pairs:
        chosen = first_n_baseline(pair.book, config.budget)
        write_summary(out / "extracts" / f"{pair.pair_id}.{BASELINE_NAME}.txt",
                      pair.book, chosen)
        baseline_scores[pair.pair_id] = score_tokens(
            _reference_tokens(pair), selection_tokens(pair.book, chosen)
        )
    r1, r2 = mean_rouge(baseline_scores.values())
    table.append((BASELINE_NAME, r1, r2))
    per_pair.extend(
        (BASELINE_NAME, pid, s) for pid, s in sorted(baseline_scores.items())
    )

    lines = [
        f"#evaluate-report\tfolds={config.folds}\tseed={config.seed}",
        "model\trouge1\trouge2",
    ]
    lines += [f"{m}\t{format_percent(a)}\t{format_percent(b)}" for m, a, b in table]
    lines.append("#per-pair")
    lines += [
        f"{m}\t{pid}\t{format_percent(s.rouge1)}\t{format_percent(s.rouge2)}"
        for m, pid, s in per_pair
    ]
    (out / "report.tsv").write_text("\n".join(lines) + "\n", "utf-8")
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# summarize


def cmd_summarize(config: RunConfig) -> int:
    """Train one extractor on the whole corpus and emit its extracts."""
    config.validate()
    if config.model == "all":
        raise ConfigError("summarize expects a single model")
    pairs, failures = load_pairs(config)
    for pair_id, reason in failures:
        log.error("rejected pair=%s (%s)", pair_id, reason)
    align_dir = Path(config.alignments or config.out)
    _check_alignments(pairs, align_dir, [config.model])

    out = Path(config.out)
    (out / "models").mkdir(parents=True, exist_ok=True)
    (out / "extracts").mkdir(parents=True, exist_ok=True)

    alignments = {
        p.pair_id: read_alignment(alignment_path(align_dir, p.pair_id, config.model))
        for p in pairs
    }
    stats, model = _train_fold_model(pairs, alignments, config)
    model.save(out / "models" / f"full.{config.model}.tsv")
    names = feature_names(stats)
    for pair in pairs:
        matrix = featurize(pair.book, stats)
        probs = model.predict_proba(matrix)
        chosen = extract_summary(pair.book, probs, config.budget)
        write_summary(out / "extracts" / f"{pair.pair_id}.{config.model}.txt",
                      pair.book, chosen)
        if config.export_features:
            labels = label_from_alignment(pair.book, pair.summary,
                                          alignments[pair.pair_id],
                                          rule=config.label_mode, alpha=config.alpha)
            write_feature_matrix(
                out / "extracts" / f"{pair.pair_id}.{config.model}.features.tsv",
                matrix, names, labels, pair.pair_id,
            )
    return 1 if failures else 0


# ---------------------------------------------------------------------------
# report


def _read_model_weights(path) -> dict[str, float]:
    weights: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#model\tlogistic"):
            raise ConfigError(f"{path}: not a model file")
        for line in fh:
            name, _, value = line.rstrip("\n").partition("\t")
            weights[name] = float(value)
    return weights


def cmd_report(config: RunConfig) -> int:
    """Feature ranking across fold models plus boundary sample histograms.

    Fold model files store only nonzero weights, so ranking runs over the
    union of named features with absences counted as zero.
    """
    config.validate()
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    model_name = config.models[0]

    fold_files = sorted((out / "models").glob(f"fold*.{model_name}.tsv"))
    lines = [f"#feature-report\tmodel={model_name}\tfolds={len(fold_files)}"]
    if fold_files:
        weight_maps = [_read_model_weights(p) for p in fold_files]
        names = sorted(
            {n for m in weight_maps for n in m if n != BIAS_NAME}
        )
        models = [
            ExtractorModel(
                weights=np.array([m.get(n, 0.0) for n in names]),
                bias=m.get(BIAS_NAME, 0.0), lam=config.lam, feature_names=names,
            )
            for m in weight_maps
        ]
        lines.append("rank\tfeature\tmean_rank")
        for rank, (name, mean_rank) in enumerate(report_top_features(models), start=1):
            lines.append(f"{rank}\t{name}\t{mean_rank:.2f}")
    (out / "feature_report.tsv").write_text("\n".join(lines) + "\n", "utf-8")

    align_dir = Path(config.alignments or config.out)
    for sample_file in sorted(align_dir.glob("*.passage.samples.tsv")):
        pair_id, samples = read_samples(sample_file)
        iterations = len(samples[0]) if samples else 0
        burn = int(iterations * config.burn_in)
        lines = [f"#boundary-histogram\t{pair_id}\tkept={max(iterations - burn, 0)}"]
        for state, entries in enumerate(samples):
            kept = entries[burn:]
            for label, idx in (("start", 0), ("end", 1)):
                counts: dict[int, int] = {}
                for entry in kept:
                    counts[entry[idx]] = counts.get(entry[idx], 0) + 1
                for position in sorted(counts):
                    lines.append(f"{state}\t{label}\t{position}\t{counts[position]}")
        (out / f"boundary_hist.{pair_id}.tsv").write_text(
            "\n".join(lines) + "\n", "utf-8"
        )
    return 0
