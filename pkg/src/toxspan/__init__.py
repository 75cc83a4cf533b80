"""toxspan: toxic-span detection as sequence labeling.

A BiGRU-CRF character-span tagger trained with virtual adversarial
training, plus exact character-overlap evaluation and corpus tooling.
"""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import TrainConfig, load_config
from .data import (
    BatchPair,
    CorpusError,
    RawRecord,
    Token,
    TokenizedSentence,
    Vocabulary,
    build_vocab,
    make_batches,
    normalize_token,
    parse_corpus,
    read_predictions,
    split_sentences,
    tokenize,
    train_val_split,
    write_predictions,
)
from .estimator import ToxicSpanTagger
from .metrics import ScoreTriple, gaussian_kde, score_corpus, score_document
from .model import ModelConfig, SequenceModel, predict_spans, truncate
from .spans import (
    BioTag,
    CharSpan,
    bio_decode,
    bio_encode,
    offsets_from_spans,
    spans_from_offsets,
)
from .train import RunReport, TrainingError, evaluate, run_training, train
from .vat import (
    VatConfig,
    adversarial_loss,
    adversarial_perturbation,
    kl_sequence,
    token_distributions,
    total_loss,
)

__version__ = "0.1.0"

__all__ = [
    "BatchPair",
    "BioTag",
    "CharSpan",
    "CheckpointError",
    "CorpusError",
    "ModelConfig",
    "RawRecord",
    "RunReport",
    "ScoreTriple",
    "SequenceModel",
    "Token",
    "TokenizedSentence",
    "ToxicSpanTagger",
    "TrainConfig",
    "TrainingError",
    "VatConfig",
    "Vocabulary",
    "adversarial_loss",
    "adversarial_perturbation",
    "bio_decode",
    "bio_encode",
    "build_vocab",
    "evaluate",
    "gaussian_kde",
    "kl_sequence",
    "load_checkpoint",
    "load_config",
    "make_batches",
    "normalize_token",
    "offsets_from_spans",
    "parse_corpus",
    "predict_spans",
    "read_predictions",
    "run_training",
    "save_checkpoint",
    "score_corpus",
    "score_document",
    "spans_from_offsets",
    "split_sentences",
    "token_distributions",
    "tokenize",
    "total_loss",
    "train",
    "train_val_split",
    "truncate",
    "write_predictions",
]
