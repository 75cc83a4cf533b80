"""Scikit-learn-style estimator facade over the span tagger.

``X`` is a sequence of document strings and ``y`` a same-length sequence of
character-offset collections (any iterable of ints per document). ``fit``
accepts an optional unlabeled text pool for the adversarial loss;
``predict`` returns one sorted offset list per document and ``score`` the
corpus overlap F1, so the tagger drops into pipelines, ``clone`` and
parameter search like any other estimator.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .config import TrainConfig
from .data import RawRecord
from .model import predict_spans
from .train import run_training


def _check_texts(X, name: str = "X") -> list[str]:
    if isinstance(X, str):
        raise ValueError(f"{name} must be a sequence of strings, not one string")
    texts = list(X)
    for i, text in enumerate(texts):
        if not isinstance(text, str):
            raise ValueError(f"{name}[{i}] is {type(text).__name__}, expected str")
    return texts


def _check_spans(y, texts: Sequence[str]) -> list[set[int]]:
    spans = list(y)
    if len(spans) != len(texts):
        raise ValueError(f"X and y length mismatch: {len(texts)} vs {len(spans)}")
    out: list[set[int]] = []
    for i, (offsets, text) in enumerate(zip(spans, texts)):
        offset_set = {int(o) for o in offsets}
        bad = [o for o in offset_set if o < 0 or o >= len(text)]
        if bad:
            raise ValueError(
                f"y[{i}]: offset {min(bad)} outside text of length {len(text)}"
            )
        out.append(offset_set)
    return out


class ToxicSpanTagger(BaseEstimator):
    """BiGRU-CRF character-span tagger trained with virtual adversarial
    training.

    Parameters mirror the training configuration; see ``TrainConfig`` for
    semantics. ``gamma=1.0`` disables the adversarial term (pure supervised
    training).
    """

    def __init__(
        self,
        embed_dim: int = 50,
        hidden_dim: int = 64,
        max_seq_len: int = 96,
        use_chars: bool = False,
        epsilon: float = 2.0,
        eta: float = 0.1,
        power_iterations: int = 2,
        gamma: float = 0.5,
        kl_mode: str = "emission-softmax",
        learning_rate: float = 1e-3,
        epochs: int = 3,
        batch_size: int = 32,
        clip_norm: float = 5.0,
        val_fraction: float = 0.15,
        min_freq: int = 1,
        seed: int = 0,
    ):
        self.embed_dim = embed_dim
        self.hidden_dim = hidden_dim
        self.max_seq_len = max_seq_len
        self.use_chars = use_chars
        self.epsilon = epsilon
        self.eta = eta
        self.power_iterations = power_iterations
        self.gamma = gamma
        self.kl_mode = kl_mode
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.batch_size = batch_size
        self.clip_norm = clip_norm
        self.val_fraction = val_fraction
        self.min_freq = min_freq
        self.seed = seed

    def _train_config(self) -> TrainConfig:
        cfg = TrainConfig()
        cfg.model.embed_dim = self.embed_dim
        cfg.model.hidden_dim = self.hidden_dim
        cfg.model.max_seq_len = self.max_seq_len
        cfg.model.use_chars = self.use_chars
        cfg.vat.epsilon = self.epsilon
        cfg.vat.eta = self.eta
        cfg.vat.power_iterations = self.power_iterations
        cfg.vat.gamma = self.gamma
        cfg.vat.kl_mode = self.kl_mode
        cfg.learning_rate = self.learning_rate
        cfg.epochs = self.epochs
        cfg.batch_size = self.batch_size
        cfg.clip_norm = self.clip_norm
        cfg.val_fraction = self.val_fraction
        cfg.min_freq = self.min_freq
        cfg.seed = self.seed
        return cfg

    def fit(self, X, y, unlabeled: Iterable[str] | None = None):
        """Train on documents ``X`` with gold offset collections ``y``.

        ``unlabeled`` feeds the label-free adversarial loss only.
        """
        texts = _check_texts(X)
        if not texts:
            raise ValueError("X must contain at least one document")
        gold = _check_spans(y, texts)
        records = [
            RawRecord(str(i), text, offsets)
            for i, (text, offsets) in enumerate(zip(texts, gold))
        ]
        pool = [
            RawRecord(f"u{i}", text)
            for i, text in enumerate(_check_texts(unlabeled, "unlabeled"))
        ] if unlabeled is not None else []
        result = run_training(self._train_config(), records, pool)
        self.model_ = result.model
        self.vocab_ = result.vocab
        self.report_ = result.report
        return self

    def predict(self, X) -> list[list[int]]:
        """Sorted toxic character offsets for each document."""
        if not hasattr(self, "model_"):
            raise NotFittedError("fit this ToxicSpanTagger before predicting")
        texts = _check_texts(X)
        return [
            sorted(predict_spans(self.model_, self.vocab_, RawRecord(str(i), text)))
            for i, text in enumerate(texts)
        ]

    def score(self, X, y) -> float:
        """Mean per-document character-overlap F1 against gold offsets."""
        from .metrics import score_corpus

        texts = _check_texts(X)
        gold = _check_spans(y, texts)
        preds = self.predict(texts)
        return score_corpus(
            (set(pred), gold_set) for pred, gold_set in zip(preds, gold)
        ).f1
