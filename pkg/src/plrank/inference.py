"""Plug-in asymptotic standard errors and confidence intervals.

Marginal-family estimators (full, choice-one, choice-two, general cutoffs) use
the inverse-variance built from ordered-prefix enumeration per edge; the QMLE
uses the sandwich built from pairwise and triple-wise selection probabilities
only. Cost is counted in enumerated terms and budget-capped: the full-MLE
variance on wide edges is exactly the expensive case, and exceeding the budget
is an error so callers can switch estimator instead of silently degrading.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .estimators import FitResult, apply_estimator_cutoff
from .likelihood import EnumerationBudgetError, _perm_count
from .model import Dataset, check_utilities

# two-sided z for common confidence levels
Z_TABLE = {
    0.90: 1.6448536269514722,
    0.95: 1.959963984540054,
    0.99: 2.5758293035489004,
}

#: Default cap on enumerated prefixes for one inference call.
DEFAULT_PREFIX_BUDGET = 10**7


def normal_quantile(p: float) -> float:
    """Standard normal inverse CDF (Acklam's rational approximation plus one
    Halley refinement; abs error well below 1e-8)."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must be in (0, 1)")
    a = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
         1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
    b = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
         6.680131188771972e01, -1.328068155288572e01)
    c = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
         -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
    d = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
         3.754408661907416e00)
    p_low = 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    elif p <= 1.0 - p_low:
        q = p - 0.5
        r = q * q
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / (
            ((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
    else:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / (
            (((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    # Halley step on Phi(x) - p
    e = 0.5 * math.erfc(-x / math.sqrt(2.0)) - p
    g = e * math.sqrt(2.0 * math.pi) * math.exp(x * x / 2.0)
    return x - g / (1.0 + x * g / 2.0)


def z_for_level(level: float) -> float:
    """Two-sided critical value: table for {0.90, 0.95, 0.99}, else computed."""
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    z = Z_TABLE.get(round(level, 10))
    return z if z is not None else normal_quantile((1.0 + level) / 2.0)


def marginal_info_term(u, edge, y: int, k: int) -> float:
    """Information contribution of one edge for item ``k`` at observed depth ``y``:
    the probability of each ordered (y-1)-prefix followed by k, times one minus
    the probability that k is first among the items left. Zero when y = m."""
    u = check_utilities(u)
    edge = tuple(edge)
    if k not in edge:
        raise ValueError(f"item {k} not in edge {edge}")
    m = len(edge)
    if not 1 <= y <= m:
        raise ValueError(f"depth {y} outside [1, {m}]")
    if y == m:
        return 0.0
    a = {i: math.exp(u[i] - u[list(edge)].max()) for i in edge}
    others = [i for i in edge if i != k]
    total_all = sum(a.values())
    out = 0.0
    for prefix in itertools.permutations(others, y - 1):
        prob = 1.0
        total = total_all
        for i in prefix:
            prob *= a[i] / total
            total -= a[i]
        p_k = a[k] / total
        out += prob * p_k * (1.0 - p_k)
    return out


def marginal_info_term_bruteforce(u, edge, y: int, k: int) -> float:
    """Oracle: full m! permutation sum of 1{r(k)=y} x (1 - P(k first | rest))."""
    from .model import Observation, pl_log_probability

    u = check_utilities(u)
    edge = tuple(edge)
    m = len(edge)
    a = {i: math.exp(u[i]) for i in edge}
    out = 0.0
    for perm in itertools.permutations(edge):
        if perm[y - 1] != k:
            continue
        rest = perm[y - 1:]
        p_first = a[k] / sum(a[i] for i in rest)
        out += math.exp(pl_log_probability(u, Observation(perm))) * (1.0 - p_first)
    return out


def marginal_inverse_variance(u, dataset: Dataset, k: int) -> float:
    """Inverse asymptotic variance of the marginal-family estimate of item k:
    sum of :func:`marginal_info_term` over containing edges and depths up to
    each observation's cutoff."""
    u = check_utilities(u, dataset.n)
    out = 0.0
    for obs in dataset.observations:
        if k in obs.ranking:
            for y in range(1, min(obs.cutoff, obs.m - 1) + 1):
                out += marginal_info_term(u, obs.edge, y, k)
    return out


def _prefix_cost(m: int, cutoff: int) -> int:
    return sum(_perm_count(m, d) for d in range(1, min(cutoff, m - 1) + 1))


def batch_marginal_inverse_variance(
    u, dataset: Dataset, prefix_budget: int = DEFAULT_PREFIX_BUDGET, chunk: int = 1 << 21
):
    """All items at once: (inverse-variance vector, enumerated-prefix count).

    Enumerates ordered depth-d position tuples once per (edge size, cutoff)
    group; the tuple's last slot identifies the item, so one pass covers every
    k. Raises :class:`EnumerationBudgetError` (with per-edge counts) if the
    total exceeds ``prefix_budget``.
    """
    u = check_utilities(u, dataset.n)
    per_edge = {i: _prefix_cost(obs.m, obs.cutoff) for i, obs in enumerate(dataset.observations)}
    total_cost = sum(per_edge.values())
    if total_cost > prefix_budget:
        worst = dict(sorted(per_edge.items(), key=lambda kv: -kv[1])[:20])
        raise EnumerationBudgetError(
            f"inverse-variance enumeration needs {total_cost} prefixes "
            f"(budget {prefix_budget}); switch estimator or raise the budget",
            worst,
        )

    rho2 = np.zeros(dataset.n)
    groups: dict[tuple[int, int], list[np.ndarray]] = {}
    for obs in dataset.observations:
        groups.setdefault((obs.m, obs.cutoff), []).append(obs.edge)
    for (m, cutoff), edge_list in groups.items():
        edges = np.asarray(edge_list, dtype=np.int64)
        scores = np.exp(u[edges] - u.max())
        totals = scores.sum(axis=1)
        for depth in range(1, min(cutoff, m - 1) + 1):
            perms = np.asarray(list(itertools.permutations(range(m), depth)), dtype=np.int64)
            n_p = perms.shape[0]
            rows_per_chunk = max(1, chunk // max(1, n_p * depth))
            for lo in range(0, edges.shape[0], rows_per_chunk):
                sl = slice(lo, lo + rows_per_chunk)
                g = scores[sl][:, perms]  # (ne, np, depth)
                removed = np.zeros_like(g)
                if depth > 1:
                    removed[..., 1:] = np.cumsum(g[..., :-1], axis=-1)
                z = totals[sl, None, None] - removed
                probs = np.prod(g / z, axis=-1)
                term = probs * (1.0 - g[..., -1] / z[..., -1])
                for pos in range(m):
                    sel = np.flatnonzero(perms[:, -1] == pos)
                    if sel.size:
                        np.add.at(rho2, edges[sl, pos], term[:, sel].sum(axis=1))
    return rho2, total_cost


def pairwise_info_term(u, edge, k: int) -> float:
    """Pairwise Bradley-Terry information of item k within one edge:
    sum over the other items j of e^{u_k+u_j} / (e^{u_k}+e^{u_j})^2."""
    u = check_utilities(u)
    edge = tuple(edge)
    if k not in edge:
        raise ValueError(f"item {k} not in edge {edge}")
    out = 0.0
    for j in edge:
        if j != k:
            p = 1.0 / (1.0 + math.exp(u[j] - u[k]))
            out += p * (1.0 - p)
    return out


def pairwise_var_term(u, edge, k: int) -> float:
    """Variance of item k's pairwise score within one edge: the pairwise
    information plus cross terms over item pairs {j, t} capturing the
    dependence of broken pairs from the same ranking."""
    u = check_utilities(u)
    edge = tuple(edge)
    if k not in edge:
        raise ValueError(f"item {k} not in edge {edge}")
    others = [j for j in edge if j != k]
    shift = max(u[list(edge)])
    a = {i: math.exp(u[i] - shift) for i in edge}
    out = pairwise_info_term(u, edge, k)
    for j, t in itertools.combinations(others, 2):
        out += 2.0 * (
            a[k] / (a[k] + a[j] + a[t]) - a[k] ** 2 / ((a[k] + a[j]) * (a[k] + a[t]))
        )
    return out


def qmle_inverse_variance(u, dataset: Dataset, k: int) -> float:
    """Sandwich inverse variance of the QMLE for item k:
    (sum of pairwise info)^2 / (sum of pairwise score variances)."""
    u = check_utilities(u, dataset.n)
    info = 0.0
    var = 0.0
    for obs in dataset.observations:
        if k in obs.ranking:
            info += pairwise_info_term(u, obs.edge, k)
            var += pairwise_var_term(u, obs.edge, k)
    if var == 0.0:
        return 0.0
    return info**2 / var


def batch_qmle_inverse_variance(u, dataset: Dataset):
    """All items at once: (inverse-variance vector, evaluated-term count)."""
    u = check_utilities(u, dataset.n)
    info = np.zeros(dataset.n)
    var = np.zeros(dataset.n)
    cost = 0
    groups: dict[int, list] = {}
    for obs in dataset.observations:
        groups.setdefault(obs.m, []).append(obs.edge)
    for m, edge_list in groups.items():
        edges = np.asarray(edge_list, dtype=np.int64)
        a = np.exp(u[edges] - u.max())
        info_cols = np.zeros_like(a)
        extra_cols = np.zeros_like(a)
        for p, q in itertools.combinations(range(m), 2):
            w = a[:, p] * a[:, q] / (a[:, p] + a[:, q]) ** 2
            info_cols[:, p] += w
            info_cols[:, q] += w
        for p in range(m):
            ak = a[:, p]
            for q, r in itertools.combinations([i for i in range(m) if i != p], 2):
                extra_cols[:, p] += 2.0 * (
                    ak / (ak + a[:, q] + a[:, r]) - ak**2 / ((ak + a[:, q]) * (ak + a[:, r]))
                )
        np.add.at(info, edges, info_cols)
        np.add.at(var, edges, info_cols + extra_cols)
        cost += edges.shape[0] * (m * (m - 1) + m * (m - 1) * (m - 2) // 2)
    rho2 = np.zeros(dataset.n)
    nz = var > 0
    rho2[nz] = info[nz] ** 2 / var[nz]
    return rho2, cost


@dataclass
class InferenceReport:
    """Per-item plug-in uncertainty at a given confidence level.

    ``sigma`` is the plug-in asymptotic standard deviation 1/rho;
    ``theta_cost`` counts enumerated terms (ordered prefixes for the marginal
    family, pair/triple terms for the QMLE).
    """

    estimator: str
    level: float
    estimate: np.ndarray
    sigma: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_k: np.ndarray
    theta_cost: int

    @property
    def n(self) -> int:
        return self.estimate.shape[0]

    def covers(self, truth) -> np.ndarray:
        truth = np.asarray(truth, dtype=float)
        return (self.ci_low <= truth) & (truth <= self.ci_high)

    def to_csv(self, path) -> None:
        with open(path, "w") as f:
            f.write("item,estimate,sigma,ci_low,ci_high,n_k\n")
            for k in range(self.n):
                f.write(
                    f"{k},{float(self.estimate[k])!r},{float(self.sigma[k])!r},"
                    f"{float(self.ci_low[k])!r},{float(self.ci_high[k])!r},{int(self.n_k[k])}\n"
                )


def standard_errors(
    fit: FitResult,
    dataset: Dataset,
    level: float = 0.95,
    prefix_budget: int = DEFAULT_PREFIX_BUDGET,
) -> InferenceReport:
    """Plug-in standard errors and CIs at the fitted utilities.

    Marginal-family fits use the prefix-enumeration inverse variance with the
    same cutoffs the fit consumed; QMLE fits use the pairwise sandwich. The
    fit must have converged.
    """
    if not fit.converged:
        raise ValueError("standard errors require a converged fit")
    u = check_utilities(fit.estimate, dataset.n)
    effective = apply_estimator_cutoff(dataset, fit.estimator, fit.y_override)
    if fit.estimator == "qmle":
        rho2, cost = batch_qmle_inverse_variance(u, effective)
    else:
        rho2, cost = batch_marginal_inverse_variance(u, effective, prefix_budget)
    if np.any(rho2 <= 0):
        bad = int(np.flatnonzero(rho2 <= 0)[0])
        raise ValueError(f"item {bad} has no information (zero inverse variance)")
    sigma = 1.0 / np.sqrt(rho2)
    z = z_for_level(level)
    return InferenceReport(
        estimator=fit.estimator,
        level=level,
        estimate=u.copy(),
        sigma=sigma,
        ci_low=u - z * sigma,
        ci_high=u + z * sigma,
        n_k=effective.degrees(),
        theta_cost=int(cost),
    )
