"""Corpus ingestion, offset-preserving tokenization, sentence splitting,
vocabulary construction, and labeled/unlabeled batch assembly.

Normalization (lowercasing, URL replacement) happens at vocabulary-lookup
time only; the raw text and all character offsets are never rewritten, so
predictions always live in original-document coordinates.
"""

from __future__ import annotations

import ast
import csv
import random
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .spans import BioTag, spans_from_offsets

PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
URL_TOKEN = "<url>"

_PUNCT = set(string.punctuation)
_SENTENCE_FINAL = {".", "!", "?"}
_URL_RE = re.compile(r"^(?:[a-z][a-z0-9+.-]*://|www\.)", re.IGNORECASE)


class CorpusError(ValueError):
    """A corpus file failed to parse; the message names the offending row."""


@dataclass(frozen=True)
class Token:
    """A surface string with exact offsets into the original text."""

    surface: str
    start: int
    end: int


@dataclass
class RawRecord:
    id: str
    text: str
    gold: set[int] = field(default_factory=set)
    toxicity: float | None = None


@dataclass
class TokenizedSentence:
    record_id: str
    tokens: list[Token]
    tags: list[BioTag] | None = None


@dataclass
class BatchPair:
    """One labeled batch plus one unlabeled batch for a training step."""

    labeled: list[TokenizedSentence]
    unlabeled: list[TokenizedSentence]


def normalize_token(surface: str) -> str:
    """Lookup form of a token: URL sentinel or lowercased surface.

    Offsets are never touched; this affects vocabulary lookup only.
    """
    if _URL_RE.match(surface):
        return URL_TOKEN
    return surface.lower()


def tokenize(text: str) -> list[Token]:
    """Whitespace split, then peel leading/trailing punctuation into
    separate single-character tokens. Every non-whitespace character
    belongs to exactly one token and ``text[start:end] == surface``.
    """
    tokens: list[Token] = []
    for m in re.finditer(r"\S+", text):
        start, end = m.start(), m.end()
        while end - start > 1 and text[start] in _PUNCT:
            tokens.append(Token(text[start], start, start + 1))
            start += 1
        trailing: list[Token] = []
        while end - start > 1 and text[end - 1] in _PUNCT:
            trailing.append(Token(text[end - 1], end - 1, end))
            end -= 1
        tokens.append(Token(text[start:end], start, end))
        tokens.extend(reversed(trailing))
    return tokens


def split_sentences(record: RawRecord) -> list[TokenizedSentence]:
    """Tokenize and split into sentences, never cutting a gold span.

    Candidate boundaries follow sentence-final punctuation tokens and
    newlines; a boundary crossed by any gold span run is suppressed;
    fragments shorter than three tokens merge with their successor (the
    last one merges backward). A document with fewer than three tokens
    comes back as a single sentence.
    """
    tokens = tokenize(record.text)
    if not tokens:
        return []
    runs = spans_from_offsets(record.gold)

    def crossed(boundary: int) -> bool:
        return any(r.start < boundary < r.end for r in runs)

    fragments: list[list[Token]] = []
    current: list[Token] = [tokens[0]]
    for prev, tok in zip(tokens, tokens[1:]):
        boundary = (
            prev.surface in _SENTENCE_FINAL
            or "\n" in record.text[prev.end : tok.start]
        )
        if boundary and not crossed(tok.start):
            fragments.append(current)
            current = []
        current.append(tok)
    fragments.append(current)

    i = 0
    while i < len(fragments):
        if len(fragments[i]) >= 3:
            i += 1
        elif i + 1 < len(fragments):
            fragments[i : i + 2] = [fragments[i] + fragments[i + 1]]
        elif i > 0:
            fragments[i - 1 : i + 1] = [fragments[i - 1] + fragments[i]]
        else:
            break  # the whole document has fewer than three tokens

    return [TokenizedSentence(record.id, frag) for frag in fragments]


def parse_span_literal(cell: str) -> set[int]:
    """Parse a bracketed integer-list literal like ``"[3, 4, 5]"``."""
    try:
        parsed = ast.literal_eval(cell.strip())
    except (ValueError, SyntaxError) as exc:
        raise ValueError(f"malformed span literal {cell!r}") from exc
    if not isinstance(parsed, (list, tuple)) or not all(
        isinstance(x, int) and not isinstance(x, bool) for x in parsed
    ):
        raise ValueError(f"span literal must be a list of integers, got {cell!r}")
    return set(parsed)


def parse_corpus(path: str, has_labels: bool = True) -> list[RawRecord]:
    """Read a UTF-8 CSV corpus with a header row.

    Labeled files need ``spans`` and ``text`` columns (any order);
    unlabeled files need only ``text``. Optional ``id`` and ``toxicity``
    columns are consumed when present. Records keep file order.
    """
    records: list[RawRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CorpusError(f"{path}: empty file, expected a CSV header")
        cols = {name.strip().lower(): name for name in reader.fieldnames}
        if "text" not in cols:
            raise CorpusError(f"{path}: missing required 'text' column")
        if has_labels and "spans" not in cols:
            raise CorpusError(f"{path}: missing required 'spans' column")
        for row_idx, row in enumerate(reader):
            text = row[cols["text"]]
            rec_id = row[cols["id"]] if "id" in cols else str(row_idx)
            gold: set[int] = set()
            if has_labels:
                try:
                    gold = parse_span_literal(row[cols["spans"]])
                except ValueError as exc:
                    raise CorpusError(f"{path} row {row_idx}: {exc}") from exc
                bad = [o for o in gold if o < 0 or o >= len(text)]
                if bad:
                    raise CorpusError(
                        f"{path} row {row_idx}: span offset {min(bad)} outside "
                        f"text of length {len(text)}"
                    )
            toxicity = None
            if "toxicity" in cols and row[cols["toxicity"]] not in (None, ""):
                try:
                    toxicity = float(row[cols["toxicity"]])
                except ValueError as exc:
                    raise CorpusError(
                        f"{path} row {row_idx}: bad toxicity value "
                        f"{row[cols['toxicity']]!r}"
                    ) from exc
            records.append(RawRecord(rec_id, text, gold, toxicity))
    return records


def write_predictions(path: str, rows: Iterable[tuple[str, set[int]]]) -> None:
    """One line per record: id, tab, bracketed sorted offset list."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec_id, offsets in rows:
            fh.write(f"{rec_id}\t{sorted(offsets)}\n")


def read_predictions(path: str) -> list[tuple[str, set[int]]]:
    """Inverse of ``write_predictions``; span cells reuse the corpus parser."""
    rows: list[tuple[str, set[int]]] = []
    with open(path, encoding="utf-8") as fh:
        for line_idx, line in enumerate(fh):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                rec_id, cell = line.split("\t", 1)
                rows.append((rec_id, parse_span_literal(cell)))
            except ValueError as exc:
                raise CorpusError(f"{path} line {line_idx}: {exc}") from exc
    return rows


class Vocabulary:
    """Dense token-to-index map with ``<pad>``, ``<unk>``, ``<url>`` specials."""

    def __init__(self, tokens: Sequence[str] = ()):
        self._tokens = [PAD_TOKEN, UNK_TOKEN, URL_TOKEN]
        for tok in tokens:
            if tok not in (PAD_TOKEN, UNK_TOKEN, URL_TOKEN):
                self._tokens.append(tok)
        self._index = {tok: i for i, tok in enumerate(self._tokens)}

    def __len__(self) -> int:
        return len(self._tokens)

    @property
    def pad_id(self) -> int:
        return 0

    @property
    def unk_id(self) -> int:
        return 1

    @property
    def tokens(self) -> list[str]:
        return list(self._tokens)

    def index(self, normalized: str) -> int:
        return self._index.get(normalized, self.unk_id)

    def encode(self, sentence: TokenizedSentence) -> list[int]:
        return [self.index(normalize_token(t.surface)) for t in sentence.tokens]


def build_vocab(
    sentences: Iterable[TokenizedSentence], min_freq: int = 1
) -> Vocabulary:
    """Index normalized tokens with frequency >= ``min_freq``."""
    if min_freq < 1:
        raise ValueError("min_freq must be at least 1")
    counts: Counter[str] = Counter()
    for sentence in sentences:
        counts.update(normalize_token(t.surface) for t in sentence.tokens)
    kept = sorted(
        (tok for tok, n in counts.items() if n >= min_freq),
        key=lambda tok: (-counts[tok], tok),
    )
    return Vocabulary(kept)


def train_val_split(
    records: Sequence[RawRecord], val_fraction: float, seed: int
) -> tuple[list[RawRecord], list[RawRecord]]:
    """Deterministic document-level split; no record leaks across sides."""
    if not 0 < val_fraction < 1:
        raise ValueError(f"val_fraction must be in (0, 1), got {val_fraction}")
    shuffled = list(records)
    random.Random(seed).shuffle(shuffled)
    n_val = int(round(len(shuffled) * val_fraction))
    return shuffled[n_val:], shuffled[:n_val]


def make_batches(
    labeled: Sequence[TokenizedSentence],
    unlabeled: Sequence[TokenizedSentence],
    batch_size: int,
    seed: int,
    epochs: int = 1,
) -> Iterator[BatchPair]:
    """Pair labeled batches with same-nominal-size unlabeled batches.

    The labeled pool reshuffles per epoch under ``seed``; the unlabeled pool
    cycles and reshuffles independently (its own RNG), so labeled batch
    order does not depend on whether a pool is present. An empty unlabeled
    pool degrades to pairs with an empty unlabeled half.
    """
    if batch_size < 1:
        raise ValueError("batch_size must be at least 1")
    if not labeled:
        raise ValueError("labeled set must not be empty")
    labeled_rng = random.Random(seed)
    pool_rng = random.Random(seed + 1)
    pool: list[TokenizedSentence] = []

    def draw_pool(k: int) -> list[TokenizedSentence]:
        drawn: list[TokenizedSentence] = []
        while len(drawn) < k:
            if not pool:
                pool.extend(unlabeled)
                pool_rng.shuffle(pool)
            drawn.append(pool.pop())
        return drawn

    for _ in range(epochs):
        order = list(labeled)
        labeled_rng.shuffle(order)
        for i in range(0, len(order), batch_size):
            batch = order[i : i + batch_size]
            extra = draw_pool(batch_size) if unlabeled else []
            yield BatchPair(batch, extra)
