"""Character-span algebra and BIO tag conversions.

Spans are half-open ``[start, end)`` ranges of character offsets into the
original, untransformed document text. The canonical working representation
of an annotation is a plain ``set`` of integer offsets; conversion to
``CharSpan`` runs always yields maximal contiguous, sorted, non-overlapping
spans.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import Iterable, Sequence


class BioTag(IntEnum):
    """Per-token label: outside a span, span begin, span continuation."""

    O = 0
    B = 1
    I = 2


#: Fixed tag inventory used by the CRF layer.
TAGSET = (BioTag.O, BioTag.B, BioTag.I)
NUM_TAGS = len(TAGSET)


@dataclass(frozen=True, order=True)
class CharSpan:
    """Half-open character range ``[start, end)`` on the original text."""

    start: int
    end: int

    def __post_init__(self) -> None:
        if not 0 <= self.start < self.end:
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    def __len__(self) -> int:
        return self.end - self.start

    def offsets(self) -> range:
        return range(self.start, self.end)


def spans_from_offsets(offsets: Iterable[int]) -> list[CharSpan]:
    """Group a set of character offsets into maximal contiguous spans.

    Returns spans sorted by start; round-trips with ``offsets_from_spans``.
    """
    ordered = sorted(set(offsets))
    spans: list[CharSpan] = []
    run_start: int | None = None
    prev = None
    for off in ordered:
        if run_start is None:
            run_start = off
        elif off != prev + 1:
            spans.append(CharSpan(run_start, prev + 1))
            run_start = off
        prev = off
    if run_start is not None:
        spans.append(CharSpan(run_start, prev + 1))
    return spans


def offsets_from_spans(spans: Iterable[CharSpan]) -> set[int]:
    """Union of all ``[start, end)`` ranges; overlapping spans merge silently."""
    offsets: set[int] = set()
    for span in spans:
        offsets.update(span.offsets())
    return offsets


def bio_encode(tokens: Sequence, gold: set[int]) -> list[BioTag]:
    """Tag each token against a gold offset set.

    A token is toxic iff any of its characters is in ``gold``. Toxic tokens
    get B at the start of a run and I while the previous token is also
    toxic; everything else is O. ``tokens`` need ``start``/``end`` character
    offsets (``Token`` and ``CharSpan`` both qualify).
    """
    tags: list[BioTag] = []
    prev_toxic = False
    for tok in tokens:
        toxic = any(c in gold for c in range(tok.start, tok.end))
        if not toxic:
            tags.append(BioTag.O)
        elif prev_toxic:
            tags.append(BioTag.I)
        else:
            tags.append(BioTag.B)
        prev_toxic = toxic
    return tags


def bio_decode(tags: Sequence[BioTag | int], tokens: Sequence) -> set[int]:
    """Recover character offsets from a BIO tag sequence.

    Every character of a toxic-tagged token is included, plus the characters
    strictly between two consecutive toxic tokens of the same run (the
    inter-word gaps inside a toxic phrase). Decoding is lenient: an I with no
    preceding toxic token is treated as B, so any tag sequence is accepted.
    """
    if len(tags) != len(tokens):
        raise ValueError(f"got {len(tags)} tags for {len(tokens)} tokens")
    offsets: set[int] = set()
    prev_toxic_end: int | None = None
    for tag, tok in zip(tags, tokens):
        tag = BioTag(tag)
        if tag == BioTag.O:
            prev_toxic_end = None
            continue
        if tag == BioTag.I and prev_toxic_end is not None:
            offsets.update(range(prev_toxic_end, tok.start))
        offsets.update(range(tok.start, tok.end))
        prev_toxic_end = tok.end
    return offsets
