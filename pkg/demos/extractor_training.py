"""Train the sentence extractor on alignment-derived labels.

Uses a small synthetic corpus with summary content planted mid-book, labels
sentences from passage alignments, fits the regularized logistic model, and
contrasts its extraction with a lead-sentences baseline.

Run: python3 demos/extractor_training.py
"""

import tempfile
from pathlib import Path

import numpy as np
from scipy import sparse

from bookalign.corpus import tokenize
from bookalign.extractor import train_extractor
from bookalign.features import CorpusStats, feature_names, featurize
from bookalign.passage import PassageModel
from bookalign.pipeline import pair_rng_seed
from bookalign.rouge import score_tokens
from bookalign.summarize import (
    extract_summary,
    first_n_baseline,
    label_from_alignment,
    selection_tokens,
)
from bookalign.synth import make_synthetic_corpus


def load_pairs(corpus):
    out = []
    for pair_id in corpus.pair_ids:
        book = tokenize(
            (corpus.root / "books" / f"{pair_id}.txt").read_text("utf-8"),
            doc_id=pair_id)
        summary = tokenize(
            (corpus.root / "summaries" / f"{pair_id}.txt").read_text("utf-8"),
            doc_id=pair_id)
        out.append((pair_id, book, summary))
    return out


def main():
    with tempfile.TemporaryDirectory() as tmp:
        corpus = make_synthetic_corpus(
            Path(tmp), num_pairs=8, num_passages=3, vocab_per_passage=15,
            seed=42, mode="middle", background_prefix=250, background_suffix=80)
        pairs = load_pairs(corpus)

    print(f"{len(pairs)} pairs; each book has "
          f"{pairs[0][1].num_sentences} sentences\n")

    # supervision: align each pair, then mark the best sentence in each span
    stats = CorpusStats.from_documents([book for _, book, _ in pairs])
    names = feature_names(stats)
    blocks, labels = [], []
    for pair_id, book, summary in pairs:
        model = PassageModel(book, summary, k=3, alpha=0.01,
                             seed=pair_rng_seed(0, pair_id))
        model.train(30)
        alignment = model.decode("modal", 0.2)
        blocks.append(featurize(book, stats))
        labels.append(label_from_alignment(book, summary, alignment))
    y = np.concatenate(labels)
    print(f"labels: {int(y.sum())} positive / {y.size} sentences")

    extractor = train_extractor(sparse.vstack(blocks, format="csr"), y,
                                names, lam=1.0)
    ranked = sorted(zip(extractor.weights, names), reverse=True)
    print("strongest features:")
    for weight, name in ranked[:5]:
        print(f"  {weight:+.3f}  {name}")
    print()

    # extract from the first book and score both selections against its summary
    pair_id, book, summary = pairs[0]
    probs = extractor.predict_proba(featurize(book, stats))
    budget = 60
    learned = extract_summary(book, probs, budget)
    lead = first_n_baseline(book, budget)
    reference = [t.lower for t in summary.tokens if not t.is_punct]

    for title, chosen in (("extractor", learned), ("lead baseline", lead)):
        score = score_tokens(reference, selection_tokens(book, chosen))
        print(f"{title}: sentences {chosen}")
        print(f"  ROUGE-1 {score.rouge1:.3f}  ROUGE-2 {score.rouge2:.3f}")


if __name__ == "__main__":
    main()
