"""Training loop, evaluation harness, epsilon sweep, corpus statistics,
and prediction export.

Each optimizer step pairs one labeled batch with one unlabeled batch: the
supervised loss is the mean CRF negative log-likelihood on the labeled
half, the adversarial loss is computed over the union of both halves, and
the two are mixed by the ``gamma`` weight. With ``gamma == 1`` the
adversarial branch is skipped entirely (no forward passes, no random
draws), so a run is bit-identical to pure supervised training.
"""

from __future__ import annotations

import copy
import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .checkpoint import load_checkpoint, save_checkpoint
from .config import TrainConfig, dump_config
from .data import (
    RawRecord,
    TokenizedSentence,
    Vocabulary,
    build_vocab,
    make_batches,
    parse_corpus,
    split_sentences,
    train_val_split,
    write_predictions,
)
from .metrics import ScoreTriple, gaussian_kde, score_corpus
from .model import SequenceModel, predict_spans, truncate
from .optim import Adam, clip_gradients
from .spans import bio_encode
from .vat import adversarial_loss, total_loss

logger = logging.getLogger("toxspan")


class TrainingError(RuntimeError):
    """Training aborted (non-finite loss or inconsistent inputs)."""


@dataclass
class StepLog:
    epoch: int
    step: int
    l_sup: float
    l_adv: float
    l_total: float


@dataclass
class EpochLog:
    epoch: int
    l_sup: float
    l_adv: float
    l_total: float
    val: ScoreTriple
    seconds: float


@dataclass
class RunReport:
    config_echo: str
    epochs: list[EpochLog] = field(default_factory=list)
    steps: list[StepLog] = field(default_factory=list)
    best_epoch: int = -1
    best_val_f1: float = 0.0
    test: ScoreTriple | None = None

    def to_tsv(self) -> str:
        """Machine-readable report. Wall-clock is deliberately left out so
        identical runs serialize to identical bytes; it stays in the log."""
        lines = [f"# {line}" for line in self.config_echo.splitlines()]
        lines.append("kind\tepoch\tl_sup\tl_adv\tl_total\tf1\tprecision\trecall")
        for e in self.epochs:
            lines.append(
                f"epoch\t{e.epoch}\t{e.l_sup!r}\t{e.l_adv!r}\t{e.l_total!r}"
                f"\t{e.val.f1!r}\t{e.val.precision!r}\t{e.val.recall!r}"
            )
        lines.append(f"best\t{self.best_epoch}\t\t\t\t{self.best_val_f1!r}\t\t")
        if self.test is not None:
            lines.append(
                f"test\t\t\t\t\t{self.test.f1!r}\t{self.test.precision!r}"
                f"\t{self.test.recall!r}"
            )
        return "\n".join(lines) + "\n"


@dataclass
class TrainResult:
    model: SequenceModel
    vocab: Vocabulary
    report: RunReport


def prepare_sentences(
    records: list[RawRecord], attach_tags: bool
) -> list[TokenizedSentence]:
    """Split records into sentences, BIO-tagging them when labeled."""
    sentences: list[TokenizedSentence] = []
    for record in records:
        for sentence in split_sentences(record):
            if attach_tags:
                sentence.tags = bio_encode(sentence.tokens, record.gold)
            sentences.append(sentence)
    return sentences


def _mean_scalar(terms: list[ad.Variable]) -> ad.Variable:
    total = terms[0]
    for term in terms[1:]:
        total = ad.add(total, term)
    return ad.scale(total, 1.0 / len(terms))


def _evaluate_records(
    model: SequenceModel, vocab: Vocabulary, records: list[RawRecord]
) -> ScoreTriple:
    return score_corpus(
        (predict_spans(model, vocab, record), record.gold) for record in records
    )


def run_training(
    cfg: TrainConfig,
    train_records: list[RawRecord],
    unlabeled_records: list[RawRecord] | None = None,
    val_records: list[RawRecord] | None = None,
    test_records: list[RawRecord] | None = None,
) -> TrainResult:
    """Train on pre-parsed records and return the best-by-val-F1 model."""
    cfg.validate()
    if val_records is None:
        train_records, val_records = train_val_split(
            train_records, cfg.val_fraction, cfg.seed
        )
    train_sents = prepare_sentences(train_records, attach_tags=True)
    if not train_sents:
        raise TrainingError("no training sentences after splitting")
    pool_sents = prepare_sentences(unlabeled_records or [], attach_tags=False)

    vocab = build_vocab(train_sents + pool_sents, cfg.min_freq)
    model_cfg = copy.deepcopy(cfg.model)
    model_cfg.vocab_size = len(vocab)
    model_cfg.seed = cfg.seed
    model = SequenceModel(model_cfg)
    params = model.parameters()
    optimizer = Adam(
        params, lr=cfg.learning_rate, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.adam_eps
    )

    use_vat = cfg.vat.gamma < 1.0
    noise_rng = (
        np.random.default_rng([cfg.seed, cfg.vat.noise_seed]) if use_vat else None
    )

    report = RunReport(config_echo=dump_config(cfg))
    best_params: dict[str, np.ndarray] | None = None
    steps_per_epoch = (len(train_sents) + cfg.batch_size - 1) // cfg.batch_size
    batches = make_batches(
        train_sents, pool_sents, cfg.batch_size, cfg.seed, epochs=cfg.epochs
    )

    step_in_epoch = 0
    epoch = 0
    epoch_start = time.perf_counter()
    epoch_steps: list[StepLog] = []
    for pair in batches:
        sup_terms: list[ad.Variable] = []
        embeddings: list[ad.Variable] = []
        for sentence in pair.labeled:
            clipped = truncate(sentence, model_cfg.max_seq_len)
            ids, chars = model.sentence_inputs(clipped, vocab)
            embedded = model.embed(ids, chars)
            emissions = model.encode_emissions(embedded)
            sup_terms.append(ad.scale(model.log_likelihood(emissions, clipped.tags), -1.0))
            embeddings.append(embedded)
        l_sup = _mean_scalar(sup_terms)

        l_adv = None
        if use_vat:
            for sentence in pair.unlabeled:
                clipped = truncate(sentence, model_cfg.max_seq_len)
                ids, chars = model.sentence_inputs(clipped, vocab)
                embeddings.append(model.embed(ids, chars))
            l_adv = adversarial_loss(model, embeddings, cfg.vat, noise_rng)

        loss = total_loss(l_sup, l_adv, cfg.vat.gamma)
        l_sup_val = float(l_sup.value)
        l_adv_val = float(l_adv.value) if l_adv is not None else 0.0
        l_total_val = float(loss.value)
        if not (
            np.isfinite(l_sup_val) and np.isfinite(l_adv_val) and np.isfinite(l_total_val)
        ):
            raise TrainingError(
                f"non-finite loss at epoch {epoch} step {step_in_epoch}: "
                f"L_sup={l_sup_val} L_adv={l_adv_val} L_total={l_total_val}"
            )

        ad.backward(loss)
        clip_gradients(params, cfg.clip_norm)
        optimizer.step()

        entry = StepLog(epoch, step_in_epoch, l_sup_val, l_adv_val, l_total_val)
        report.steps.append(entry)
        epoch_steps.append(entry)
        step_in_epoch += 1

        if step_in_epoch == steps_per_epoch:
            val_score = _evaluate_records(model, vocab, val_records)
            epoch_log = EpochLog(
                epoch,
                float(np.mean([s.l_sup for s in epoch_steps])),
                float(np.mean([s.l_adv for s in epoch_steps])),
                float(np.mean([s.l_total for s in epoch_steps])),
                val_score,
                time.perf_counter() - epoch_start,
            )
            report.epochs.append(epoch_log)
            logger.info(
                "epoch %d: L_sup=%.4f L_adv=%.4f L_total=%.4f val F1=%.4f "
                "P=%.4f R=%.4f (%.1fs)",
                epoch, epoch_log.l_sup, epoch_log.l_adv, epoch_log.l_total,
                val_score.f1, val_score.precision, val_score.recall, epoch_log.seconds,
            )
            if best_params is None or val_score.f1 > report.best_val_f1:
                report.best_val_f1 = val_score.f1
                report.best_epoch = epoch
                best_params = {k: v.value.copy() for k, v in model.params.items()}
            epoch += 1
            step_in_epoch = 0
            epoch_steps = []
            epoch_start = time.perf_counter()

    for name, value in best_params.items():
        model.params[name].value = value

    if test_records is not None:
        report.test = _evaluate_records(model, vocab, test_records)
        logger.info(
            "test: F1=%.4f P=%.4f R=%.4f",
            report.test.f1, report.test.precision, report.test.recall,
        )
    return TrainResult(model, vocab, report)


def train(cfg: TrainConfig) -> tuple[str, RunReport]:
    """File-driven entry point: parse corpora, train, save checkpoint+report."""
    if not cfg.train_path:
        raise TrainingError("no training file configured (data.train)")
    train_records = parse_corpus(cfg.train_path, has_labels=True)
    unlabeled = (
        parse_corpus(cfg.unlabeled_path, has_labels=False) if cfg.unlabeled_path else []
    )
    val_records = parse_corpus(cfg.val_path, has_labels=True) if cfg.val_path else None
    test_records = (
        parse_corpus(cfg.test_path, has_labels=True) if cfg.test_path else None
    )
    result = run_training(cfg, train_records, unlabeled, val_records, test_records)
    save_checkpoint(cfg.checkpoint_path, result.model, result.vocab)
    report_path = cfg.report_path or cfg.checkpoint_path + ".report.tsv"
    with open(report_path, "w", encoding="utf-8") as fh:
        fh.write(result.report.to_tsv())
    logger.info("checkpoint: %s, report: %s", cfg.checkpoint_path, report_path)
    return cfg.checkpoint_path, result.report


def evaluate(checkpoint_path: str, labeled_path: str) -> ScoreTriple:
    """Score a checkpoint against a labeled corpus file."""
    model, vocab = load_checkpoint(checkpoint_path)
    records = parse_corpus(labeled_path, has_labels=True)
    score = _evaluate_records(model, vocab, records)
    logger.info(
        "eval %s: F1=%.4f P=%.4f R=%.4f",
        labeled_path, score.f1, score.precision, score.recall,
    )
    return score


def predict_file(checkpoint_path: str, input_path: str, output_path: str) -> None:
    """Export predictions: one ``id<TAB>[sorted offsets]`` line per record."""
    model, vocab = load_checkpoint(checkpoint_path)
    records = parse_corpus(input_path, has_labels=False)
    write_predictions(
        output_path,
        ((record.id, predict_spans(model, vocab, record)) for record in records),
    )


def sweep_epsilon(
    cfg: TrainConfig, epsilons: list[float], output_path: str
) -> list[tuple[float, float, float | None]]:
    """One full training run per perturbation magnitude, all else fixed.

    Rows are written (and flushed) as they complete so a failing run leaves
    partial results behind; the failure still aborts the sweep.
    """
    if len(epsilons) < 2:
        raise ValueError("sweep needs at least two epsilon values")
    if not cfg.train_path:
        raise TrainingError("no training file configured (data.train)")
    train_records = parse_corpus(cfg.train_path, has_labels=True)
    unlabeled = (
        parse_corpus(cfg.unlabeled_path, has_labels=False) if cfg.unlabeled_path else []
    )
    val_records = parse_corpus(cfg.val_path, has_labels=True) if cfg.val_path else None
    test_records = (
        parse_corpus(cfg.test_path, has_labels=True) if cfg.test_path else None
    )

    rows: list[tuple[float, float, float | None]] = []
    with open(output_path, "w", encoding="utf-8") as fh:
        fh.write("epsilon\tval_f1\ttest_f1\n")
        fh.flush()
        for eps in epsilons:
            run_cfg = copy.deepcopy(cfg)
            run_cfg.vat.epsilon = eps
            result = run_training(
                run_cfg, list(train_records), list(unlabeled), val_records, test_records
            )
            test_f1 = result.report.test.f1 if result.report.test is not None else None
            rows.append((eps, result.report.best_val_f1, test_f1))
            test_cell = "" if test_f1 is None else repr(test_f1)
            fh.write(f"{eps!r}\t{result.report.best_val_f1!r}\t{test_cell}\n")
            fh.flush()
            logger.info("sweep epsilon=%s: val F1=%.4f", eps, result.report.best_val_f1)
    return rows


@dataclass
class StatsResult:
    record_count: int
    span_fraction: float
    mean_toxicity: float | None
    sentence_count: int
    kde: list[tuple[float, float]] | None

    def summary_lines(self) -> list[str]:
        lines = [
            f"records\t{self.record_count}",
            f"fraction_with_spans\t{self.span_fraction!r}",
            f"mean_toxicity\t{'' if self.mean_toxicity is None else repr(self.mean_toxicity)}",
            f"sentences\t{self.sentence_count}",
        ]
        return lines


def corpus_stats(
    labeled_path: str, bandwidth: float = 0.05, grid_size: int = 100
) -> StatsResult:
    """Corpus summary plus a Gaussian KDE of the toxicity scores."""
    records = parse_corpus(labeled_path, has_labels=True)
    if not records:
        raise TrainingError(f"{labeled_path}: no records")
    span_fraction = sum(1 for r in records if r.gold) / len(records)
    sentence_count = sum(len(split_sentences(r)) for r in records)
    toxicities = [r.toxicity for r in records if r.toxicity is not None]
    if toxicities:
        mean_toxicity = float(np.mean(toxicities))
        grid = np.linspace(0.0, 1.0, grid_size)
        density = gaussian_kde(toxicities, bandwidth, grid)
        kde = list(zip(grid.tolist(), density.tolist()))
    else:
        warnings.warn(
            f"{labeled_path}: no toxicity column; skipping the KDE", RuntimeWarning
        )
        mean_toxicity = None
        kde = None
    return StatsResult(len(records), span_fraction, mean_toxicity, sentence_count, kde)
