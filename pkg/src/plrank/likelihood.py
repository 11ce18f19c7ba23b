"""Log-likelihoods, scores, Hessians, and expected Hessians.

Two objectives share this module: the marginal log-likelihood of the observed
top-``y`` portions of the rankings, and the quasi log-likelihood obtained by
full-breaking every observation into Bradley-Terry pairs. Scores sum to zero
within each edge, and both Hessians are negatives of weighted graph Laplacians
supported on co-edge pairs (stored sparsely; densify only for spectral work).
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp

from .model import Dataset, broken_pairs, check_utilities, grouped_rankings


class EnumerationBudgetError(RuntimeError):
    """Exact enumeration would exceed the configured budget.

    ``per_edge`` maps observation index -> required enumeration count.
    """

    def __init__(self, message, per_edge=None):
        super().__init__(message)
        self.per_edge = dict(per_edge or {})


def _suffix_sums(a: np.ndarray) -> np.ndarray:
    """out[..., j] = sum_{t >= j} a[..., t]."""
    return np.cumsum(a[..., ::-1], axis=-1)[..., ::-1]


def _group_arrays(u: np.ndarray, rankings: np.ndarray, cutoffs: np.ndarray):
    """Shared per-group precomputation.

    Returns (scores A = exp(u - max u) gathered by rank position,
    suffix sums S, position index row, cutoff mask ``j < y``).
    """
    vals = u[rankings] - u.max()
    a = np.exp(vals)
    s = _suffix_sums(a)
    positions = np.arange(rankings.shape[1])
    observed = positions[None, :] < cutoffs[:, None]
    return a, s, observed


def _marginal_loglik_from_groups(u, groups) -> float:
    total = 0.0
    for _, (rankings, cutoffs) in groups.items():
        vals = u[rankings]
        lse = np.logaddexp.accumulate(vals[:, ::-1], axis=1)[:, ::-1]
        observed = np.arange(rankings.shape[1])[None, :] < cutoffs[:, None]
        total += float(np.sum((vals - lse), where=observed))
    return total


def marginal_log_likelihood(u, dataset: Dataset) -> float:
    """Sum of top-``y`` sequential-choice log-masses over all observations."""
    u = check_utilities(u, dataset.n)
    return _marginal_loglik_from_groups(u, grouped_rankings(dataset))


def _quasi_loglik_from_pairs(u, pairs) -> float:
    if pairs.size == 0:
        return 0.0
    uw, ul = u[pairs[:, 0]], u[pairs[:, 1]]
    return float(np.sum(uw - np.logaddexp(uw, ul)))


def quasi_log_likelihood(u, dataset: Dataset) -> float:
    """Bradley-Terry log-likelihood of the fully broken pairwise outcomes."""
    u = check_utilities(u, dataset.n)
    return _quasi_loglik_from_pairs(u, broken_pairs(dataset))


def _marginal_score_from_groups(u, groups, n) -> np.ndarray:
    score = np.zeros(n)
    for _, (rankings, cutoffs) in groups.items():
        a, s, observed = _group_arrays(u, rankings, cutoffs)
        inv = np.where(observed, 1.0 / s, 0.0)
        csum = np.cumsum(inv, axis=1)  # csum[:, p] = sum_{j <= min(p, y-1)} 1/S_j
        np.add.at(score, rankings, observed.astype(float) - a * csum)
    return score


def marginal_score(u, dataset: Dataset) -> np.ndarray:
    """Gradient of :func:`marginal_log_likelihood`.

    Entry k accumulates, over observations containing k,
    ``1{r(k) <= y} - sum_{j <= r(k) ^ y} exp(u_k) / S_j`` with S_j the score
    sum over ranks >= j. Within each observation the entries sum to zero.
    """
    u = check_utilities(u, dataset.n)
    return _marginal_score_from_groups(u, grouped_rankings(dataset), dataset.n)


def _quasi_score_from_pairs(u, pairs, n) -> np.ndarray:
    score = np.zeros(n)
    if pairs.size == 0:
        return score
    # d/du_w log BT(w beats l) = 1 - p_w ; d/du_l = -(1 - p_w)
    loss_prob = 1.0 / (1.0 + np.exp(u[pairs[:, 0]] - u[pairs[:, 1]]))
    np.add.at(score, pairs[:, 0], loss_prob)
    np.add.at(score, pairs[:, 1], -loss_prob)
    return score


def quasi_score(u, dataset: Dataset) -> np.ndarray:
    """Gradient of :func:`quasi_log_likelihood` (rank-matching residuals).

    For full observations entry k equals
    ``sum_i (E_u[r_i(k)] - r_i(k))`` over observations containing k.
    """
    u = check_utilities(u, dataset.n)
    return _quasi_score_from_pairs(u, broken_pairs(dataset), dataset.n)


def _assemble(n, rows, cols, data) -> sp.csr_matrix:
    h = sp.coo_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return h.tocsr()


def marginal_hessian(u, dataset: Dataset) -> sp.csr_matrix:
    """Hessian of the marginal log-likelihood (sparse, co-edge support).

    Off-diagonal (k, k') sums ``exp(u_k + u_k') / S_j**2`` over shared
    observations and positions ``j <= r(k) ^ r(k') ^ y``; the diagonal makes
    every row sum to zero (negative weighted Laplacian). For cutoff 1 the
    matrix does not depend on the ranking outcomes.
    """
    u = check_utilities(u, dataset.n)
    rows, cols, data = [], [], []
    for m, (rankings, cutoffs) in grouped_rankings(dataset).items():
        a, s, observed = _group_arrays(u, rankings, cutoffs)
        inv2 = np.where(observed, 1.0 / s**2, 0.0)
        c2 = np.cumsum(inv2, axis=1)
        inv1 = np.where(observed, 1.0 / s, 0.0)
        c1 = np.cumsum(inv1, axis=1)
        for p in range(m):
            # diagonal: -a_p * sum_{j<=p^y} (S_j - a_p)/S_j^2
            diag = -a[:, p] * (c1[:, p] - a[:, p] * c2[:, p])
            rows.append(rankings[:, p])
            cols.append(rankings[:, p])
            data.append(diag)
            for q in range(p + 1, m):
                off = a[:, p] * a[:, q] * c2[:, p]
                rows.extend([rankings[:, p], rankings[:, q]])
                cols.extend([rankings[:, q], rankings[:, p]])
                data.extend([off, off])
    return _assemble(dataset.n, rows, cols, data)


def quasi_hessian(u, dataset: Dataset) -> sp.csr_matrix:
    """Hessian of the quasi log-likelihood: off-diagonal (k, k') counts broken
    co-occurrences weighted by ``exp(u_k + u_k')/(exp(u_k) + exp(u_k'))**2``.
    Outcome-independent for full observations."""
    u = check_utilities(u, dataset.n)
    n = dataset.n
    pairs = broken_pairs(dataset)
    if pairs.size == 0:
        return sp.csr_matrix((n, n))
    # |gap| keeps the weight bitwise symmetric in the pair orientation
    q = np.exp(-np.abs(u[pairs[:, 0]] - u[pairs[:, 1]]))
    w = q / (1.0 + q) ** 2
    i, j = pairs[:, 0], pairs[:, 1]
    off = sp.coo_matrix(
        (np.concatenate([w, w]), (np.concatenate([i, j]), np.concatenate([j, i]))), shape=(n, n)
    ).tocsr()
    # diagonal from the deduplicated off-diagonals: rows sum to zero exactly
    # and the matrix depends on outcomes only through broken-pair multiplicities
    diag = -np.asarray(off.sum(axis=1)).ravel()
    return (off + sp.diags(diag)).tocsr()


def _prefix_weights(u_edge: np.ndarray, prefix: tuple[int, ...]) -> tuple[float, np.ndarray]:
    """PL probability of an ordered prefix (by local position) and the suffix
    score sums S_1..S_y encountered along it."""
    a = np.exp(u_edge - u_edge.max())
    total = a.sum()
    prob = 1.0
    s_vals = np.empty(len(prefix))
    for j, pos in enumerate(prefix):
        s_vals[j] = total
        prob *= a[pos] / total
        total -= a[pos]
    return prob, s_vals


def expected_marginal_hessian(u, dataset: Dataset, max_prefixes_per_edge: int = 10**6) -> sp.csr_matrix:
    """Expectation of :func:`marginal_hessian` over ranking outcomes drawn at
    the same ``u``, by exact enumeration of ordered top-``y`` prefixes.

    Depends on the dataset only through edges and cutoffs. Raises
    :class:`EnumerationBudgetError` when some edge needs more than
    ``max_prefixes_per_edge`` ordered prefixes (m!/(m-y)!); callers may then
    use :func:`expected_marginal_hessian_mc`.
    """
    u = check_utilities(u, dataset.n)
    over = {}
    for idx, obs in enumerate(dataset.observations):
        count = _perm_count(obs.m, obs.cutoff)
        if count > max_prefixes_per_edge:
            over[idx] = count
    if over:
        raise EnumerationBudgetError(
            f"{len(over)} edges exceed the per-edge prefix budget {max_prefixes_per_edge}", over
        )

    h = np.zeros((dataset.n, dataset.n))
    for obs in dataset.observations:
        edge = obs.edge
        m, y = obs.m, obs.cutoff
        u_edge = u[list(edge)]
        # max-shifted scores appear in both numerators and the S sums, so the
        # shift cancels exactly
        a = np.exp(u_edge - u_edge.max())
        local = np.zeros((m, m))
        for prefix in itertools.permutations(range(m), y):
            prob, s_vals = _prefix_weights(u_edge, prefix)
            rank = np.full(m, y)  # local effective rank r ^ y (1-based)
            for j, pos in enumerate(prefix):
                rank[pos] = j + 1
            inv2 = np.cumsum(1.0 / s_vals**2)
            for p in range(m):
                for q in range(p + 1, m):
                    depth = min(rank[p], rank[q])
                    val = prob * a[p] * a[q] * inv2[depth - 1]
                    local[p, q] += val
                    local[q, p] += val
        idx = np.asarray(edge)
        h[np.ix_(idx, idx)] += local
    np.fill_diagonal(h, h.diagonal() - h.sum(axis=1))
    return sp.csr_matrix(h)


def expected_marginal_hessian_mc(u, dataset: Dataset, n_samples: int = 10**4, rng=None):
    """Monte Carlo fallback: average of outcome Hessians with entrywise
    standard errors. Returns (mean, se) as dense arrays."""
    from .model import sample_rankings

    u = check_utilities(u, dataset.n)
    rng = np.random.default_rng(rng)
    edges = dataset.edges
    cutoffs = [obs.cutoff for obs in dataset.observations]
    acc = np.zeros((dataset.n, dataset.n))
    acc2 = np.zeros((dataset.n, dataset.n))
    for _ in range(n_samples):
        sampled = sample_rankings(u, edges, rng)
        sampled = Dataset(dataset.n, [o.with_cutoff(y) for o, y in zip(sampled.observations, cutoffs)])
        hh = marginal_hessian(u, sampled).toarray()
        acc += hh
        acc2 += hh**2
    mean = acc / n_samples
    var = np.maximum(acc2 / n_samples - mean**2, 0.0)
    se = np.sqrt(var / n_samples)
    return mean, se


def _perm_count(m: int, y: int) -> int:
    out = 1
    for t in range(m, m - y, -1):
        out *= t
    return out


def hessian_to_coo_csv(h, path) -> None:
    """Dump a (sparse) matrix as ``row,col,value`` rows for debugging."""
    coo = sp.coo_matrix(h)
    with open(path, "w") as f:
        f.write("row,col,value\n")
        for r, c, v in zip(coo.row, coo.col, coo.data):
            f.write(f"{int(r)},{int(c)},{float(v)!r}\n")
