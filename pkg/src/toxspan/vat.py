"""Virtual adversarial training: the KL adversarial loss, the norm-bounded
perturbation search by power iteration, and the mixed training objective.

The perturbation is found label-free: starting from Gaussian noise of norm
``eta``, each power iteration takes the gradient of the KL divergence
between the clean token distributions and the distributions at the
perturbed embedding, renormalizes it to ``eta``, and the final gradient
direction is scaled to ``epsilon``. The clean distributions and the
perturbation itself are constants with respect to the parameters; gradients
reach the parameters only through the perturbed branch of the loss.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Variable
from .model import SequenceModel

KL_MODES = ("emission-softmax", "crf-marginals")


@dataclass
class VatConfig:
    epsilon: float = 2.0
    eta: float = 0.1
    power_iterations: int = 2
    gamma: float = 0.5
    kl_mode: str = "emission-softmax"
    noise_seed: int = 0

    def validate(self) -> None:
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.eta <= 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.power_iterations < 1:
            raise ValueError(
                f"power_iterations must be >= 1, got {self.power_iterations}"
            )
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must be in [0, 1], got {self.gamma}")
        if self.kl_mode not in KL_MODES:
            raise ValueError(
                f"kl_mode must be one of {KL_MODES}, got {self.kl_mode!r}"
            )


def token_distributions(model: SequenceModel, embedded: Variable, mode: str) -> Variable:
    """Per-token tag distributions (T, K); rows sum to one."""
    emissions = model.encode_emissions(embedded)
    if mode == "emission-softmax":
        return ad.softmax(emissions, axis=1)
    if mode == "crf-marginals":
        return model.marginals(emissions)
    raise ValueError(f"kl_mode must be one of {KL_MODES}, got {mode!r}")


def kl_sequence(p, q: Variable) -> Variable:
    """Mean over positions of KL(p_t || q_t), with 0*log(0) = 0.

    ``p`` is treated as a constant (the stop-gradient side); gradients flow
    through ``q`` only. ``q`` rows must be strictly positive, which softmax
    and forward-backward marginals guarantee.
    """
    p_val = p.value if isinstance(p, Variable) else np.asarray(p, dtype=np.float64)
    if p_val.shape != q.value.shape:
        raise ValueError(f"shape mismatch: p {p_val.shape} vs q {q.value.shape}")
    safe = np.where(p_val > 0.0, p_val, 1.0)
    entropy_term = float((p_val * np.log(safe)).sum(axis=1).mean())
    cross = ad.mean(ad.sum(ad.mul(ad.constant(p_val), ad.log(q)), axis=1))
    return ad.sub(entropy_term, cross)


def _clean_distributions(model: SequenceModel, e_val: np.ndarray, mode: str) -> np.ndarray:
    return token_distributions(model, ad.constant(e_val), mode).value


def _search_perturbation(
    model: SequenceModel,
    e_val: np.ndarray,
    clean: np.ndarray,
    cfg: VatConfig,
    rng: np.random.Generator,
) -> np.ndarray:
    """Power-iteration search; returns d with ||d||_2 == epsilon."""
    delta = rng.standard_normal(e_val.shape)
    delta = cfg.eta * delta / max(float(np.linalg.norm(delta)), ad.NORM_FLOOR)

    grad = None
    grad_norm = 0.0
    for _ in range(cfg.power_iterations):
        delta_var = ad.parameter(delta)
        perturbed = ad.add(ad.constant(e_val), delta_var)
        divergence = kl_sequence(clean, token_distributions(model, perturbed, cfg.kl_mode))
        ad.backward(divergence)
        grad = delta_var.grad if delta_var.grad is not None else np.zeros_like(delta)
        grad_norm = float(np.linalg.norm(grad))
        if grad_norm >= ad.NORM_FLOOR:
            delta = cfg.eta * grad / grad_norm

    if grad_norm < ad.NORM_FLOOR:
        warnings.warn(
            "degenerate adversarial gradient; falling back to the random direction",
            RuntimeWarning,
        )
        return cfg.epsilon * delta / max(float(np.linalg.norm(delta)), ad.NORM_FLOOR)
    return cfg.epsilon * grad / grad_norm


def adversarial_perturbation(
    model: SequenceModel,
    embedded,
    cfg: VatConfig,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Worst-case-direction perturbation for one embedding sequence.

    The returned array has L2 norm exactly ``epsilon`` and carries no
    gradient back into the parameters.
    """
    cfg.validate()
    if rng is None:
        rng = np.random.default_rng(cfg.noise_seed)
    e_val = embedded.value if isinstance(embedded, Variable) else np.asarray(embedded)
    clean = _clean_distributions(model, e_val, cfg.kl_mode)
    return _search_perturbation(model, e_val, clean, cfg, rng)


def adversarial_loss(
    model: SequenceModel,
    batch_embeddings: Sequence[Variable],
    cfg: VatConfig,
    rng: np.random.Generator | None = None,
) -> Variable:
    """Mean KL between clean and perturbed predictions over a batch.

    Consumes no labels, so the batch may mix labeled and unlabeled
    sentences. The clean side is detached; parameters receive gradients only
    through the perturbed branch.
    """
    cfg.validate()
    if not batch_embeddings:
        raise ValueError("adversarial loss needs a non-empty batch")
    if rng is None:
        rng = np.random.default_rng(cfg.noise_seed)
    losses = []
    for embedded in batch_embeddings:
        clean = _clean_distributions(model, embedded.value, cfg.kl_mode)
        d = _search_perturbation(model, embedded.value, clean, cfg, rng)
        perturbed = ad.add(embedded, ad.constant(d))
        losses.append(
            kl_sequence(clean, token_distributions(model, perturbed, cfg.kl_mode))
        )
    total = losses[0]
    for term in losses[1:]:
        total = ad.add(total, term)
    return ad.scale(total, 1.0 / len(losses))


def total_loss(l_sup, l_adv, gamma: float):
    """gamma * L_sup + (1 - gamma) * L_adv; the boundaries short-circuit."""
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must be in [0, 1], got {gamma}")
    if gamma == 1.0:
        return l_sup
    if gamma == 0.0:
        return l_adv
    return ad.add(ad.scale(l_sup, gamma), ad.scale(l_adv, 1.0 - gamma))
