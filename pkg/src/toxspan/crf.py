"""Linear-chain CRF: exact log-likelihood, Viterbi decoding, marginals.

A path over tags ``y_1..y_T`` scores ``start[y_1] + sum_t em[t, y_t] +
sum_t trans[y_{t-1}, y_t] + stop[y_T]``; the partition function comes from
the forward algorithm run in log space. Log-likelihood and marginals are
built from autodiff ops so gradients flow into emissions and the CRF
parameters; Viterbi is plain numpy (decoding needs no gradients).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import autodiff as ad
from .autodiff import Variable


def _check_emissions(emissions: Variable, num_tags: int) -> tuple[int, int]:
    t, k = emissions.value.shape
    if k != num_tags:
        raise ValueError(f"emissions have {k} columns for {num_tags} tags")
    if t < 1:
        raise ValueError("emissions must cover at least one position")
    return t, k


def crf_log_partition(
    emissions: Variable, trans: Variable, start: Variable, stop: Variable
) -> Variable:
    """log Z via the forward recursion over ``log_sum_exp``."""
    t_len, k = _check_emissions(emissions, start.value.shape[0])
    alpha = ad.add(start, emissions[0])
    for t in range(1, t_len):
        scores = ad.add(ad.reshape(alpha, (k, 1)), trans)
        alpha = ad.add(ad.log_sum_exp(scores, axis=0), emissions[t])
    return ad.log_sum_exp(ad.add(alpha, stop))


def crf_log_likelihood(
    emissions: Variable,
    tags: Sequence[int],
    trans: Variable,
    start: Variable,
    stop: Variable,
) -> Variable:
    """log P(tags | emissions) = path score - log Z."""
    t_len, k = _check_emissions(emissions, start.value.shape[0])
    if len(tags) != t_len:
        raise ValueError(f"got {len(tags)} tags for {t_len} emission rows")

    # constant indicator masks turn the path score into three mul+sum pairs
    em_mask = np.zeros((t_len, k))
    em_mask[np.arange(t_len), tags] = 1.0
    trans_count = np.zeros((k, k))
    for prev, cur in zip(tags[:-1], tags[1:]):
        trans_count[prev, cur] += 1.0
    start_mask = np.zeros(k)
    start_mask[tags[0]] = 1.0
    stop_mask = np.zeros(k)
    stop_mask[tags[-1]] = 1.0

    score = ad.add(
        ad.add(ad.sum(ad.mul(emissions, em_mask)), ad.sum(ad.mul(trans, trans_count))),
        ad.add(ad.sum(ad.mul(start, start_mask)), ad.sum(ad.mul(stop, stop_mask))),
    )
    return ad.sub(score, crf_log_partition(emissions, trans, start, stop))


def crf_viterbi(
    emissions: np.ndarray, trans: np.ndarray, start: np.ndarray, stop: np.ndarray
) -> list[int]:
    """Highest-scoring tag path; ties break toward the lower tag index."""
    emissions = np.asarray(emissions, dtype=np.float64)
    t_len, k = emissions.shape
    score = start + emissions[0]
    backptr = np.zeros((t_len, k), dtype=np.intp)
    for t in range(1, t_len):
        cand = score[:, None] + trans  # (from, to)
        backptr[t] = cand.argmax(axis=0)  # argmax picks the lowest index on ties
        score = cand.max(axis=0) + emissions[t]
    score = score + stop
    path = [int(score.argmax())]
    for t in range(t_len - 1, 0, -1):
        path.append(int(backptr[t, path[-1]]))
    path.reverse()
    return path


def crf_marginals(
    emissions: Variable, trans: Variable, start: Variable, stop: Variable
) -> Variable:
    """Forward-backward posterior tag distributions, one row per position."""
    t_len, k = _check_emissions(emissions, start.value.shape[0])

    alphas = [ad.add(start, emissions[0])]
    for t in range(1, t_len):
        scores = ad.add(ad.reshape(alphas[-1], (k, 1)), trans)
        alphas.append(ad.add(ad.log_sum_exp(scores, axis=0), emissions[t]))

    betas = [stop]
    for t in range(t_len - 2, -1, -1):
        nxt = ad.reshape(ad.add(emissions[t + 1], betas[-1]), (1, k))
        betas.append(ad.log_sum_exp(ad.add(trans, nxt), axis=1))
    betas.reverse()

    log_z = ad.log_sum_exp(ad.add(alphas[-1], stop))
    rows = [
        ad.reshape(ad.exp(ad.sub(ad.add(a, b), log_z)), (1, k))
        for a, b in zip(alphas, betas)
    ]
    return ad.concat(rows, axis=0)


def enumerate_paths(
    emissions: np.ndarray, trans: np.ndarray, start: np.ndarray, stop: np.ndarray
) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Score every tag path exhaustively (test oracle; exponential in T)."""
    import itertools

    emissions = np.asarray(emissions, dtype=np.float64)
    t_len, k = emissions.shape
    paths = list(itertools.product(range(k), repeat=t_len))
    scores = np.empty(len(paths))
    for i, path in enumerate(paths):
        s = start[path[0]] + stop[path[-1]] + emissions[np.arange(t_len), path].sum()
        s += sum(trans[a, b] for a, b in zip(path[:-1], path[1:]))
        scores[i] = s
    return scores, paths
