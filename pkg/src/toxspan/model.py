"""The sequence labeler: word embeddings (plus optional char features), a
bidirectional gated recurrent encoder, a linear emission projection, and a
linear-chain CRF head.

The per-token embedding sequence produced by ``embed`` is the perturbation
site for virtual adversarial training: everything downstream of it is a
pure function of that tensor and the parameters.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from . import crf
from .autodiff import Variable
from .data import RawRecord, TokenizedSentence, Vocabulary, split_sentences
from .spans import NUM_TAGS, bio_decode


@dataclass
class ModelConfig:
    vocab_size: int = 0
    embed_dim: int = 50
    hidden_dim: int = 64
    num_tags: int = NUM_TAGS
    max_seq_len: int = 96
    use_chars: bool = False
    char_alphabet_size: int = 128
    char_embed_dim: int = 16
    char_window: int = 3
    char_feature_dim: int = 16
    seed: int = 0

    def validate(self) -> None:
        dims = {
            "vocab_size": self.vocab_size,
            "embed_dim": self.embed_dim,
            "hidden_dim": self.hidden_dim,
            "num_tags": self.num_tags,
            "char_alphabet_size": self.char_alphabet_size,
            "char_embed_dim": self.char_embed_dim,
            "char_window": self.char_window,
            "char_feature_dim": self.char_feature_dim,
        }
        for name, value in dims.items():
            if value < 1:
                raise ValueError(f"{name} must be >= 1, got {value}")
        if self.max_seq_len < 3:
            raise ValueError(f"max_seq_len must be >= 3, got {self.max_seq_len}")


def truncate(sentence: TokenizedSentence, max_len: int) -> TokenizedSentence:
    """Clip a sentence (and its tags) to the first ``max_len`` tokens."""
    if len(sentence.tokens) <= max_len:
        return sentence
    tags = sentence.tags[:max_len] if sentence.tags is not None else None
    return TokenizedSentence(sentence.record_id, sentence.tokens[:max_len], tags)


def char_ids(surface: str, alphabet_size: int) -> list[int]:
    """Code-point char ids; 0 is reserved for padding, out-of-alphabet -> 1."""
    return [ord(c) if 0 < ord(c) < alphabet_size else 1 for c in surface]


class SequenceModel:
    """Holds all trainable parameters and the forward passes over them."""

    def __init__(self, config: ModelConfig):
        config.validate()
        self.config = config
        rng = np.random.default_rng(config.seed)
        h, d, k = config.hidden_dim, config.embed_dim, config.num_tags
        in_dim = d + (config.char_feature_dim if config.use_chars else 0)

        def uniform(*shape):
            return rng.uniform(-0.1, 0.1, size=shape)

        self.params: dict[str, Variable] = {}

        def param(name, value):
            self.params[name] = ad.parameter(value)

        param("embed", uniform(config.vocab_size, d))
        if config.use_chars:
            param("char_embed", uniform(config.char_alphabet_size, config.char_embed_dim))
            param(
                "char_conv_w",
                uniform(config.char_window * config.char_embed_dim, config.char_feature_dim),
            )
            param("char_conv_b", uniform(config.char_feature_dim))
        for direction in ("fw", "bw"):
            param(f"gru_{direction}_wi", uniform(in_dim, 3 * h))
            param(f"gru_{direction}_bi", uniform(3 * h))
            param(f"gru_{direction}_wh", uniform(h, 3 * h))
            param(f"gru_{direction}_bh", uniform(3 * h))
        param("emit_w", uniform(2 * h, k))
        param("emit_b", uniform(k))
        # transitions start at zero: a pure emission model stabilizes early steps
        param("crf_trans", np.zeros((k, k)))
        param("crf_start", np.zeros(k))
        param("crf_stop", np.zeros(k))

    def parameters(self) -> list[Variable]:
        return list(self.params.values())

    # ------------------------------------------------------------------
    # forward passes

    def embed(
        self, word_ids: Sequence[int], token_chars: Sequence[Sequence[int]] | None = None
    ) -> Variable:
        """Per-token input vectors (T, embed_dim [+ char_feature_dim])."""
        cfg = self.config
        if len(word_ids) > cfg.max_seq_len:
            raise ValueError(
                f"sequence of {len(word_ids)} tokens exceeds max_seq_len "
                f"{cfg.max_seq_len}; truncate first"
            )
        words = ad.gather_rows(self.params["embed"], list(word_ids))
        if not cfg.use_chars:
            return words
        if token_chars is None or len(token_chars) != len(word_ids):
            raise ValueError("use_chars model needs per-token char ids")
        feats = [self._char_features(chars) for chars in token_chars]
        return ad.concat([words, ad.concat(feats, axis=0)], axis=1)

    def _char_features(self, chars: Sequence[int]) -> Variable:
        """Convolution over char embeddings with max pooling -> (1, F)."""
        cfg = self.config
        ids = list(chars) + [0] * max(0, cfg.char_window - len(chars))
        rows = ad.gather_rows(self.params["char_embed"], ids)
        width = cfg.char_window * cfg.char_embed_dim
        windows = [
            ad.reshape(rows[i : i + cfg.char_window], (1, width))
            for i in range(len(ids) - cfg.char_window + 1)
        ]
        scores = ad.add(
            ad.matmul(ad.concat(windows, axis=0), self.params["char_conv_w"]),
            self.params["char_conv_b"],
        )
        return ad.reshape(ad.tanh(ad.max(scores, axis=0)), (1, cfg.char_feature_dim))

    def _gru_pass(self, inputs: Variable, direction: str) -> list[Variable]:
        """One direction of the recurrent encoder; returns (1, H) rows."""
        h = self.config.hidden_dim
        t_len = inputs.value.shape[0]
        wi = self.params[f"gru_{direction}_wi"]
        bi = self.params[f"gru_{direction}_bi"]
        wh = self.params[f"gru_{direction}_wh"]
        bh = self.params[f"gru_{direction}_bh"]

        gates_in = ad.add(ad.matmul(inputs, wi), bi)  # (T, 3H), all steps at once
        order = range(t_len) if direction == "fw" else range(t_len - 1, -1, -1)
        state = ad.constant(np.zeros((1, h)))
        outputs: dict[int, Variable] = {}
        for t in order:
            xi = gates_in[t : t + 1]
            rec = ad.add(ad.matmul(state, wh), bh)
            reset = ad.sigmoid(ad.add(xi[:, 0:h], rec[:, 0:h]))
            update = ad.sigmoid(ad.add(xi[:, h : 2 * h], rec[:, h : 2 * h]))
            cand = ad.tanh(ad.add(xi[:, 2 * h :], ad.mul(reset, rec[:, 2 * h :])))
            state = ad.add(ad.mul(ad.sub(1.0, update), cand), ad.mul(update, state))
            outputs[t] = state
        return [outputs[t] for t in range(t_len)]

    def encode_emissions(self, embedded: Variable) -> Variable:
        """Bidirectional pass then linear projection to (T, num_tags)."""
        forward = self._gru_pass(embedded, "fw")
        backward = self._gru_pass(embedded, "bw")
        hidden = ad.concat(
            [ad.concat(forward, axis=0), ad.concat(backward, axis=0)], axis=1
        )
        return ad.add(ad.matmul(hidden, self.params["emit_w"]), self.params["emit_b"])

    # ------------------------------------------------------------------
    # CRF head

    def log_likelihood(self, emissions: Variable, tags: Sequence[int]) -> Variable:
        return crf.crf_log_likelihood(
            emissions,
            tags,
            self.params["crf_trans"],
            self.params["crf_start"],
            self.params["crf_stop"],
        )

    def viterbi(self, emissions: np.ndarray) -> list[int]:
        return crf.crf_viterbi(
            emissions,
            self.params["crf_trans"].value,
            self.params["crf_start"].value,
            self.params["crf_stop"].value,
        )

    def marginals(self, emissions: Variable) -> Variable:
        return crf.crf_marginals(
            emissions,
            self.params["crf_trans"],
            self.params["crf_start"],
            self.params["crf_stop"],
        )

    def sentence_inputs(
        self, sentence: TokenizedSentence, vocab: Vocabulary
    ) -> tuple[list[int], list[list[int]] | None]:
        """Vocabulary ids (and char ids when enabled) for an already-truncated sentence."""
        ids = vocab.encode(sentence)
        chars = None
        if self.config.use_chars:
            chars = [
                char_ids(t.surface, self.config.char_alphabet_size)
                for t in sentence.tokens
            ]
        return ids, chars

    def predict_tags(self, sentence: TokenizedSentence, vocab: Vocabulary) -> list[int]:
        ids, chars = self.sentence_inputs(sentence, vocab)
        emissions = self.encode_emissions(self.embed(ids, chars))
        return self.viterbi(emissions.value)


def predict_spans(model: SequenceModel, vocab: Vocabulary, record: RawRecord) -> set[int]:
    """Document pipeline: split, truncate, tag, decode, union offsets."""
    offsets: set[int] = set()
    for sentence in split_sentences(record):
        clipped = truncate(sentence, model.config.max_seq_len)
        tags = model.predict_tags(clipped, vocab)
        offsets |= bio_decode(tags, clipped.tokens)
    return offsets
