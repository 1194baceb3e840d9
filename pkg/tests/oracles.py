"""Independent brute-force re-implementations used as test oracles.

Written against raw lists/arrays with numpy, deliberately sharing no code
with the package: the package computes in pure Python over its domain types,
these recompute from first principles.
"""

from __future__ import annotations

import math
import sys

import numpy as np

BIG = sys.maxsize


def oracle_length_bin(length: int, lam: float, correct: bool) -> int:
    if not correct:
        return BIG
    if math.isinf(lam):
        return 0
    return int(math.floor(length / lam))


def oracle_rerank(correct: list[bool], lengths: list[int], raw_ranks: list[int], lam: float) -> list[int]:
    """Brute-force lexicographic sort on (incorrectness, bin, raw rank, id):
    repeatedly select the minimal remaining key."""
    n = len(correct)
    keys = {
        i: (int(not correct[i]), oracle_length_bin(lengths[i], lam, correct[i]), raw_ranks[i], i)
        for i in range(n)
    }
    ranks = [0] * n
    remaining = set(range(n))
    for rank in range(1, n + 1):
        best = min(remaining, key=lambda i: keys[i])
        ranks[best] = rank
        remaining.remove(best)
    return ranks


def oracle_hrr(rule: np.ndarray, ranks: np.ndarray, tau: float) -> np.ndarray:
    r_max = len(ranks)
    return np.asarray(rule, dtype=float) + tau * np.tanh(r_max / np.asarray(ranks, dtype=float) - 1.0)


def oracle_prr(ranks: np.ndarray) -> np.ndarray:
    r_max = len(ranks)
    return (r_max - np.asarray(ranks, dtype=float)) / (r_max - 1.0)


def oracle_advantage(rewards: np.ndarray, use_std: bool) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=float)
    std = rewards.std()  # population
    if std <= 1e-12:
        return np.zeros_like(rewards)
    centered = rewards - rewards.mean()
    return centered / std if use_std else centered


def oracle_clip(adv: np.ndarray, correct: np.ndarray, xi_minus: float, xi_plus: float) -> np.ndarray:
    adv = np.asarray(adv, dtype=float)
    correct = np.asarray(correct, dtype=bool)
    return np.where(correct, np.maximum(adv, xi_minus), np.minimum(adv, xi_plus))


def oracle_rloo(rewards: np.ndarray) -> np.ndarray:
    rewards = np.asarray(rewards, dtype=float)
    g = len(rewards)
    out = np.empty(g)
    for i in range(g):
        out[i] = rewards[i] - np.mean(np.delete(rewards, i))
    return out
