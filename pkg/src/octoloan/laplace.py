"""Truncated-and-ceiled Laplace sampling for noise-response counts.

A draw is ceil(max(0, X)) with X ~ Laplace(mu, lambda); the result is the
number of noise responses of one type.
"""

from __future__ import annotations

import math
import random


def laplace_cdf(x: float, mu: float, lam: float) -> float:
    if x < mu:
        return 0.5 * math.exp((x - mu) / lam)
    return 1.0 - 0.5 * math.exp(-(x - mu) / lam)


def sample_laplace(mu: float, lam: float, rng: random.Random) -> float:
    if lam <= 0:
        raise ValueError("scale must be positive")
    u = rng.random() - 0.5
    return mu - lam * math.copysign(1.0, u) * math.log1p(-2.0 * abs(u))


def sample_truncated_laplace(mu: float, lam: float, rng: random.Random) -> int:
    """One draw of ceil(max(0, Laplace(mu, lam)))."""
    return math.ceil(max(0.0, sample_laplace(mu, lam, rng)))


def truncated_mean(mu: float, lam: float, tail: float = 1e-12) -> float:
    """Analytic mean of ceil(max(0, Laplace(mu, lam))).

    E = sum_{k>=1} k * (F(k) - F(k-1)) = sum_{k>=0} (1 - F(k)), summed
    until the survival probability drops below `tail`.
    """
    total = 0.0
    k = 0
    while True:
        surv = 1.0 - laplace_cdf(float(k), mu, lam)
        total += surv
        if surv < tail and k > mu:
            return total
        k += 1
        if k > 10_000_000:
            raise RuntimeError("mean summation did not converge")
