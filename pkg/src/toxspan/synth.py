"""Synthetic span-annotated corpora for demos, benchmarks, and tests.

Sentences come from small templates over a benign vocabulary with toxic
words planted from a fixed 30-word lexicon; the gold annotation is the
character extent of the planted words (runs of adjacent planted words
include the space between them). An optional noise rate corrupts labels to
make the task non-trivial for regularization experiments.
"""

from __future__ import annotations

import csv
import random

from .data import RawRecord

TOXIC_LEXICON = [
    "idiot", "moron", "fool", "stupid", "dumb", "pathetic", "loser", "troll",
    "clown", "jerk", "scum", "trash", "garbage", "worthless", "nasty",
    "vile", "crap", "coward", "liar", "creep", "dope", "twit", "buffoon",
    "nitwit", "dimwit", "blockhead", "numbskull", "imbecile", "dunce", "oaf",
]

BENIGN_WORDS = [
    "the", "weather", "report", "was", "fine", "today", "we", "went", "to",
    "market", "and", "bought", "apples", "my", "neighbor", "plays", "piano",
    "every", "evening", "this", "article", "covers", "local", "news",
    "please", "review", "budget", "before", "meeting", "garden", "needs",
    "water", "train", "arrives", "at", "noon", "she", "wrote", "letter",
    "about", "library", "hours", "new", "bridge", "opens", "soon", "they",
    "painted", "house", "green",
]

# slots: T = toxic word, B = benign word
TEMPLATES = [
    ("you", "are", "a", "T"),
    ("you", "are", "a", "T", "T"),
    ("what", "a", "T", "idea", "that", "was"),
    ("only", "a", "T", "would", "say", "that"),
    ("stop", "being", "such", "a", "T", "about", "B"),
    ("that", "B", "guy", "is", "a", "total", "T"),
    ("B", "B", "and", "B", "again"),
    ("the", "B", "was", "B", "this", "morning"),
    ("i", "read", "the", "B", "about", "B", "yesterday"),
    ("T", "comments", "like", "this", "ruin", "the", "B"),
    ("honestly", "the", "plan", "sounds", "B", "to", "me"),
    ("he", "called", "her", "a", "T", "during", "the", "B"),
]


def generate_corpus(
    n_records: int, seed: int = 0, noise: float = 0.0
) -> list[RawRecord]:
    """Template-sampled single-sentence records with planted toxic spans.

    ``noise`` in [0, 1) corrupts that fraction of records: either a planted
    span is dropped from the gold annotation or a benign word is marked
    toxic, keeping the text unchanged.
    """
    rng = random.Random(seed)
    records: list[RawRecord] = []
    for i in range(n_records):
        template = rng.choice(TEMPLATES)
        words: list[str] = []
        toxic_flags: list[bool] = []
        for slot in template:
            if slot == "T":
                words.append(rng.choice(TOXIC_LEXICON))
                toxic_flags.append(True)
            elif slot == "B":
                words.append(rng.choice(BENIGN_WORDS))
                toxic_flags.append(False)
            else:
                words.append(slot)
                toxic_flags.append(False)
        text = " ".join(words) + rng.choice(".!")

        gold: set[int] = set()
        pos = 0
        prev_toxic_end: int | None = None
        starts_ends: list[tuple[int, int, bool]] = []
        for word, toxic in zip(words, toxic_flags):
            start, end = pos, pos + len(word)
            starts_ends.append((start, end, toxic))
            if toxic:
                gold.update(range(start, end))
                if prev_toxic_end is not None:
                    gold.update(range(prev_toxic_end, start))
                prev_toxic_end = end
            else:
                prev_toxic_end = None
            pos = end + 1

        if noise > 0 and rng.random() < noise:
            toxic_words = [(s, e) for s, e, t in starts_ends if t]
            benign_words = [(s, e) for s, e, t in starts_ends if not t]
            if toxic_words and (not benign_words or rng.random() < 0.5):
                s, e = rng.choice(toxic_words)
                gold.difference_update(range(s, e))
            elif benign_words:
                s, e = rng.choice(benign_words)
                gold.update(range(s, e))

        toxicity = rng.uniform(0.75, 1.0) if gold else rng.uniform(0.0, 0.4)
        records.append(RawRecord(str(i), text, gold, toxicity))
    return records


def write_corpus_csv(path: str, records: list[RawRecord]) -> None:
    """Write records in the labeled-corpus CSV schema."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "spans", "text", "toxicity"])
        for r in records:
            toxicity = "" if r.toxicity is None else repr(r.toxicity)
            writer.writerow([r.id, str(sorted(r.gold)), r.text, toxicity])
