"""Existence checking and MM fitting for the marginal MLE family and the QMLE.

Both fitters run a minorize-maximize update in score space, recenter to the
sum-zero gauge each sweep, and stop when the sup-norm of the score divided by
the observation count drops below the tolerance, which certifies the
estimating equations directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .likelihood import (
    _group_arrays,
    _marginal_loglik_from_groups,
    _marginal_score_from_groups,
    _quasi_loglik_from_pairs,
    _quasi_score_from_pairs,
)
from .model import Dataset, broken_pairs, center, check_utilities, grouped_rankings

ESTIMATOR_KINDS = ("full", "marginal", "choice1", "choice2", "qmle")


class NonexistenceError(RuntimeError):
    """The (quasi-)likelihood has no finite maximizer on the observed data."""

    def __init__(self, partition):
        self.partition = sorted(partition)
        super().__init__(
            f"no finite maximizer: items {self.partition} are never beaten from outside"
        )


@dataclass(frozen=True)
class ExistenceResult:
    exists: bool
    failing_partition: tuple[int, ...] | None = None

    def __bool__(self) -> bool:
        return self.exists


@dataclass(frozen=True)
class FitConfig:
    tol_grad_inf: float = 1e-8
    max_iter: int = 5000
    initial: np.ndarray | None = None

    def __post_init__(self):
        if self.tol_grad_inf <= 0:
            raise ValueError("tol_grad_inf must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class FitResult:
    estimate: np.ndarray  # identified (sums to zero)
    estimator: str  # one of ESTIMATOR_KINDS
    final_log_lik: float
    iterations: int
    converged: bool
    final_grad_inf: float
    y_override: object = None  # cutoff override used (None | int | "full")

    def to_dict(self) -> dict:
        return {
            "estimate": [float(v) for v in self.estimate],
            "estimator": self.estimator,
            "final_log_lik": self.final_log_lik,
            "iterations": self.iterations,
            "converged": self.converged,
            "final_grad_inf": self.final_grad_inf,
            "y_override": self.y_override,
        }

    @classmethod
    def from_dict(cls, d) -> "FitResult":
        return cls(
            estimate=np.asarray(d["estimate"], dtype=float),
            estimator=d["estimator"],
            final_log_lik=float(d["final_log_lik"]),
            iterations=int(d["iterations"]),
            converged=bool(d["converged"]),
            final_grad_inf=float(d["final_grad_inf"]),
            y_override=d.get("y_override"),
        )


def apply_estimator_cutoff(dataset: Dataset, estimator: str, y_override=None) -> Dataset:
    """Dataset with the cutoffs an estimator kind actually consumes."""
    if estimator in ("full", "qmle"):
        return dataset.with_cutoff("full")
    if estimator == "choice1":
        return dataset.with_cutoff(1)
    if estimator == "choice2":
        return dataset.with_cutoff(2)
    if estimator == "marginal":
        return dataset if y_override is None else dataset.with_cutoff(y_override)
    raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATOR_KINDS}")


def existence_check(dataset: Dataset) -> ExistenceResult:
    """Existence and uniqueness of the constrained maximizer.

    Builds the dominance digraph with an arc loser -> winner for every broken
    pair (respecting cutoffs). A finite maximizer exists iff the digraph is
    strongly connected, i.e. every nonempty proper item subset is beaten from
    outside at least once. On failure the reported partition is a condensation
    sink: a set of items never beaten from outside (runaway winners).
    """
    n = dataset.n
    pairs = broken_pairs(dataset)
    if n == 1:
        return ExistenceResult(True)
    if pairs.size == 0:
        return ExistenceResult(False, tuple(range(n)))
    # arc loser -> winner
    adj = sp.coo_matrix(
        (np.ones(len(pairs)), (pairs[:, 1], pairs[:, 0])), shape=(n, n)
    ).tocsr()
    n_comp, labels = connected_components(adj, directed=True, connection="strong")
    if n_comp == 1:
        return ExistenceResult(True)
    # a component with no outgoing arc never loses to the outside
    has_out = np.zeros(n_comp, dtype=bool)
    li, lj = labels[pairs[:, 1]], labels[pairs[:, 0]]
    has_out[li[li != lj]] = True
    sink = int(np.flatnonzero(~has_out)[0])
    return ExistenceResult(False, tuple(int(v) for v in np.flatnonzero(labels == sink)))


def existence_check_bruteforce(dataset: Dataset) -> bool:
    """Oracle: scan all proper subsets for a missing cross-dominance (n <= ~16)."""
    n = dataset.n
    beats = set()
    for obs in dataset.observations:
        from .model import full_breaking

        beats.update(full_breaking(obs))
    items = range(n)
    for size in range(1, n):
        for u in itertools.combinations(items, size):
            u_set = set(u)
            if not any(w in u_set and l not in u_set for (w, l) in beats):
                return False
    return True


def _mm_marginal_sweep(u, groups):
    """One MM sweep; returns new utilities.

    exp(u_k) <- W_k / sum_{i: k in T_i} sum_{j <= r_i(k) ^ y_i} 1 / S_j(old).
    """
    n = u.shape[0]
    wins = np.zeros(n)
    denom = np.zeros(n)
    for _, (rankings, cutoffs) in groups.items():
        a, s, observed = _group_arrays(u, rankings, cutoffs)
        inv = np.where(observed, 1.0 / s, 0.0)
        csum = np.cumsum(inv, axis=1)
        np.add.at(denom, rankings, csum)
        np.add.at(wins, rankings, observed.astype(float))
    # scale of a is e^{-max u}; fold it back so u keeps its gauge before recentering
    return np.log(wins) - np.log(denom) + u.max()


def fit_marginal_mle(dataset: Dataset, y_override=None, config: FitConfig | None = None) -> FitResult:
    """Marginal MLE via MM; covers full (y=m), choice-one, choice-two and
    per-observation cutoffs.

    ``y_override``: None keeps stored cutoffs, an integer sets y = min(y, m),
    "full" sets y = m. Raises :class:`NonexistenceError` when the maximizer
    does not exist. The returned estimate satisfies the per-item estimating
    equations to the configured tolerance when converged.
    """
    config = config or FitConfig()
    effective = dataset if y_override is None else dataset.with_cutoff(y_override)
    ok = existence_check(effective)
    if not ok:
        raise NonexistenceError(ok.failing_partition)

    if y_override == "full":
        kind = "full"
    elif y_override in (1, 2):
        kind = f"choice{y_override}"
    else:
        kind = "marginal"

    groups = grouped_rankings(effective)
    n_obs = len(effective)
    n = dataset.n
    u = _initial(config, n)
    grad_inf = float(np.abs(_marginal_score_from_groups(u, groups, n)).max()) / n_obs
    iterations = 0
    while grad_inf > config.tol_grad_inf and iterations < config.max_iter:
        u = center(_mm_marginal_sweep(u, groups))
        iterations += 1
        grad_inf = float(np.abs(_marginal_score_from_groups(u, groups, n)).max()) / n_obs
    log_lik = _marginal_loglik_from_groups(u, groups)
    return FitResult(
        estimate=u,
        estimator=kind,
        final_log_lik=log_lik,
        iterations=iterations,
        converged=grad_inf <= config.tol_grad_inf,
        final_grad_inf=grad_inf,
        y_override=y_override,
    )


def fit_qmle(dataset: Dataset, config: FitConfig | None = None) -> FitResult:
    """QMLE: Bradley-Terry MM on the fully broken pairwise outcomes.

    The returned estimate matches observed and expected ranks per item
    (rank-matching estimating equations) to the configured tolerance.
    """
    config = config or FitConfig()
    ok = existence_check(dataset)
    if not ok:
        raise NonexistenceError(ok.failing_partition)

    pairs = broken_pairs(dataset)
    n = dataset.n
    n_obs = len(dataset)
    wins = np.bincount(pairs[:, 0], minlength=n).astype(float)

    u = _initial(config, n)
    grad_inf = float(np.abs(_quasi_score_from_pairs(u, pairs, n)).max()) / n_obs
    iterations = 0
    while grad_inf > config.tol_grad_inf and iterations < config.max_iter:
        s = np.exp(u - u.max())
        inv = 1.0 / (s[pairs[:, 0]] + s[pairs[:, 1]])
        denom = np.zeros(n)
        np.add.at(denom, pairs[:, 0], inv)
        np.add.at(denom, pairs[:, 1], inv)
        u = center(np.log(wins) - np.log(denom) + u.max())
        iterations += 1
        grad_inf = float(np.abs(_quasi_score_from_pairs(u, pairs, n)).max()) / n_obs
    return FitResult(
        estimate=u,
        estimator="qmle",
        final_log_lik=_quasi_loglik_from_pairs(u, pairs),
        iterations=iterations,
        converged=grad_inf <= config.tol_grad_inf,
        final_grad_inf=grad_inf,
        y_override=None,
    )


def fit(dataset: Dataset, estimator: str, config: FitConfig | None = None) -> FitResult:
    """Dispatch by estimator kind ("full", "marginal", "choice1", "choice2", "qmle")."""
    if estimator == "qmle":
        return fit_qmle(dataset.with_cutoff("full"), config)
    if estimator == "full":
        return fit_marginal_mle(dataset, "full", config)
    if estimator == "choice1":
        return fit_marginal_mle(dataset, 1, config)
    if estimator == "choice2":
        return fit_marginal_mle(dataset, 2, config)
    if estimator == "marginal":
        return fit_marginal_mle(dataset, None, config)
    raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATOR_KINDS}")


def _initial(config: FitConfig, n: int) -> np.ndarray:
    if config.initial is None:
        return np.zeros(n)
    return center(check_utilities(config.initial, n))
