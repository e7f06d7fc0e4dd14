"""Token-level alignment: trained binned-jump model vs. the fixed-weight baseline.

The book repeats a few words so alignment is ambiguous; the summary also
contains a synonym ("auto" for "car") and a word with no source match at
all, which must land on a null state.

Run: python3 demos/token_alignment.py
"""

from bookalign.corpus import tokenize
from bookalign.token_align import SynonymLexicon, TokenAlignModel, jing_baseline_align

BOOK = (
    "The storm hit the coast at night. People fled the coast roads. "
    "One old car stalled on the bridge. The storm passed before dawn."
)
SUMMARY = "A storm hit the coast. People fled. An auto stalled somewhere."


def show(title, doc, result):
    print(title)
    for rec in result.token_alignments:
        word = doc.tokens[rec.token_position].surface
        if rec.source_position is None:
            target = "NULL"
        else:
            target = f"{rec.source_position} ({BOOK_DOC.tokens[rec.source_position].surface})"
        print(f"  {rec.token_position:3d} {word:10} -> {target:18} "
              f"posterior {rec.posterior:.3f}")
    print()


BOOK_DOC = tokenize(BOOK, doc_id="book")
SUMMARY_DOC = tokenize(SUMMARY, doc_id="summary")


def main():
    print(f"book {len(BOOK_DOC.tokens)} tokens / summary "
          f"{len(SUMMARY_DOC.tokens)} tokens\n")

    lexicon = SynonymLexicon({"car": {"auto"}})
    model = TokenAlignModel(BOOK_DOC, SUMMARY_DOC, lexicon=lexicon)
    history = model.em_train(max_iters=20)
    print(f"EM ran {len(history)} iterations, log likelihood "
          f"{history[0]:.2f} -> {history[-1]:.2f}")
    bins = ", ".join(model.scheme.describe(b) for b in range(model.scheme.num_bins))
    print(f"transition bins: {bins}\n")

    show("trained model Viterbi alignment:", SUMMARY_DOC, model.viterbi_align())

    # the fixed-weight baseline skips tokens without an exact match
    # ("a", "an", "auto", "somewhere") instead of explaining them with nulls
    show("fixed-weight baseline alignment:", SUMMARY_DOC,
         jing_baseline_align(BOOK_DOC, SUMMARY_DOC))


if __name__ == "__main__":
    main()
