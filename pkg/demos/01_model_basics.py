"""Ranking probabilities, sampling, marginalization, and pairwise breaking.

Walks through the core model objects: utilities identified by the sum-zero
convention, multiway observations with top-y cutoffs, exact ranking masses,
the sequential sampler, and full breaking into pairwise outcomes.
"""

import numpy as np

from plrank import (
    Observation,
    center,
    full_breaking,
    marginal_probability,
    pl_log_probability,
    sample_ranking,
)

rng = np.random.default_rng(0)

# Three items with log-scores 0.8, 0.0, -0.8 (already centered).
u = center(np.array([0.8, 0.0, -0.8]))
print("utilities:", u)

# Probability of observing the full ranking 0 > 1 > 2 on the triple {0,1,2}.
obs = Observation((0, 1, 2))
print("P(0 > 1 > 2) =", np.exp(pl_log_probability(u, obs)))

# A choice-1 observation only reveals the winner; its mass is the win probability.
top1 = Observation((0, 1, 2), cutoff=1)
print("P(0 first)  =", np.exp(pl_log_probability(u, top1)),
      "= softmax weight", np.exp(u[0]) / np.exp(u).sum())

# Internal consistency: the chance that 0 precedes 1 inside the triple equals
# the two-item logistic probability, by brute-force summation over rankings.
print("P(0 before 1 in triple) =", marginal_probability(u, (0, 1, 2), (0, 1)))
print("two-item logistic       =", 1 / (1 + np.exp(u[1] - u[0])))

# Sampling: empirical winner frequency approaches the win probability.
draws = 20000
wins = sum(sample_ranking(u, (0, 1, 2), rng)[0] == 0 for _ in range(draws))
print(f"empirical P(0 first) over {draws} draws =", wins / draws)

# Full breaking decomposes a ranking into all implied pairwise results.
seen = Observation((2, 0, 1))
print("breaking of 2 > 0 > 1:", full_breaking(seen))
print("breaking with cutoff 1:", full_breaking(Observation((2, 0, 1), cutoff=1)))
