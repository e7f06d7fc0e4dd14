"""Walk through tokenization: sentence splitting, flags, and the document format.

Run: python3 demos/tokenize_and_ingest.py
"""

import tempfile
from pathlib import Path

from bookalign.corpus import read_document, tokenize, write_document

TEXT = (
    'Mr. Brown fled the storm. "It came fast," he said. '
    "People on the coast--nearly all of them--hid until dawn."
)


def main():
    doc = tokenize(TEXT, doc_id="demo")
    print(f"{len(doc.tokens)} tokens in {doc.num_sentences} sentences "
          f"({doc.content_word_count} content words)\n")

    for s in range(doc.num_sentences):
        words = " ".join(t.surface for t in doc.sentence_tokens(s))
        print(f"  sentence {s}: {words}")
    print()

    # 'Mr.' did not end a sentence, punctuation is separated, stopwords are
    # flagged but kept
    header = f"{'surface':12} {'punct':>5} {'stop':>5} {'initial':>7} {'cap':>4}"
    print(header)
    for t in doc.tokens[:10]:
        print(f"{t.surface:12} {str(t.is_punct):>5} {str(t.is_stopword):>5} "
              f"{str(t.is_sentence_initial):>7} {str(t.is_capitalized):>4}")
    print()

    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "demo.tsv"
        write_document(doc, path)
        print("document file round trip:")
        print("  " + path.read_text("utf-8").splitlines()[0])
        again = read_document(path)
        assert [t.surface for t in again.tokens] == [t.surface for t in doc.tokens]
        print(f"  {len(again.tokens)} tokens read back, surfaces identical")


if __name__ == "__main__":
    main()
