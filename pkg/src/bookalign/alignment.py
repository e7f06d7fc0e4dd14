"""Alignment results shared by all aligners, plus their on-disk record format.

Passage alignments map each summary sentence to a source span; token
alignments map each observed summary token to a source position or to a
null state.  Files are tab-separated with a one-line ``#alignment`` header.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError

NULL_LABEL = "NULL"


@dataclass(frozen=True)
class SentenceAlignment:
    sentence_index: int
    state_rank: int
    span_start: int
    span_end: int  # inclusive token position
    posterior: float


@dataclass(frozen=True)
class TokenAlignment:
    token_position: int
    source_position: int | None  # None for a null alignment
    bin_id: int
    posterior: float

    @property
    def is_null(self) -> bool:
        return self.source_position is None


@dataclass
class AlignmentResult:
    pair_id: str
    mode: str  # "passage", "token", or "jing"
    sentence_alignments: list[SentenceAlignment] = field(default_factory=list)
    token_alignments: list[TokenAlignment] = field(default_factory=list)

    def write(self, path) -> None:
        lines = [f"#alignment\t{self.pair_id}\t{self.mode}"]
        if self.mode == "passage":
            for a in self.sentence_alignments:
                lines.append(
                    f"{self.pair_id}\t{a.sentence_index}\t{a.state_rank}"
                    f"\t{a.span_start}\t{a.span_end}\t{a.posterior:.6f}"
                )
        else:
            for a in self.token_alignments:
                src = NULL_LABEL if a.source_position is None else str(a.source_position)
                lines.append(
                    f"{self.pair_id}\t{a.token_position}\t{src}"
                    f"\t{a.bin_id}\t{a.posterior:.6f}"
                )
        Path(path).write_text("\n".join(lines) + "\n", "utf-8")


def read_alignment(path) -> AlignmentResult:
    lines = Path(path).read_text("utf-8").splitlines()
    if not lines or not lines[0].startswith("#alignment\t"):
        raise CorpusError(f"{path}: missing #alignment header")
    _, pair_id, mode = lines[0].split("\t")
    result = AlignmentResult(pair_id=pair_id, mode=mode)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if mode == "passage":
            if len(parts) != 6:
                raise CorpusError(f"{path}:{lineno}: expected 6 fields")
            result.sentence_alignments.append(
                SentenceAlignment(
                    sentence_index=int(parts[1]),
                    state_rank=int(parts[2]),
                    span_start=int(parts[3]),
                    span_end=int(parts[4]),
                    posterior=float(parts[5]),
                )
            )
        else:
            if len(parts) != 5:
                raise CorpusError(f"{path}:{lineno}: expected 5 fields")
            src = None if parts[2] == NULL_LABEL else int(parts[2])
            result.token_alignments.append(
                TokenAlignment(
                    token_position=int(parts[1]),
                    source_position=src,
                    bin_id=int(parts[3]),
                    posterior=float(parts[4]),
                )
            )
    return result
