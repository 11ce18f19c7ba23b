"""Random comparison-hypergraph generators and topology diagnostics.

Generators: per-size Bernoulli / fixed-count hypergraphs with optionally
nonuniform edge probabilities, and a block model where within-community and
cross-community edges have different probabilities. Both take an explicit
seeded generator and are deterministic given (config, seed).

Diagnostics: degree extremes, shared-edge counts and the edge-sharing ratio,
the subset-boundary Cheeger constant (exact small-n scan), spectral gaps of
the normalized expected-Hessian Laplacian, leave-one-out gaps, and the
admissible-chain expansion bound (exact tiny-n enumeration). Repeated edges
count with multiplicity throughout.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .model import Dataset, Edge, Observation, check_utilities

DEFAULT_CHEEGER_CAP = 20
DEFAULT_CHAIN_CAP = 10


class CapExceededError(RuntimeError):
    """Exact enumeration requested beyond the configured vertex cap."""


class IsolatedVertexError(RuntimeError):
    def __init__(self, vertex: int):
        self.vertex = int(vertex)
        super().__init__(f"vertex {vertex} has no incident edges")


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeSizeRule:
    """How to include size-``m`` edges: ``constant`` includes each candidate
    independently with probability ``p``; ``uniform`` draws each candidate's
    own probability from [p, q] first (nonuniform model); ``fixed`` returns
    exactly ``count`` distinct uniform edges."""

    m: int
    mode: str  # "constant" | "uniform" | "fixed"
    p: float = 0.0
    q: float = 0.0
    count: int = 0

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("edge size must be >= 2")
        if self.mode not in ("constant", "uniform", "fixed"):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.mode in ("constant", "uniform") and not 0.0 <= self.p <= 1.0:
            raise ValueError("p must be in [0, 1]")
        if self.mode == "uniform" and not self.p <= self.q <= 1.0:
            raise ValueError("need p <= q <= 1")
        if self.mode == "fixed" and self.count < 0:
            raise ValueError("count must be >= 0")


@dataclass(frozen=True)
class RandomHypergraphConfig:
    """Union of independent per-size random hypergraphs on ``n`` vertices."""

    n: int
    rules: tuple[EdgeSizeRule, ...]

    def __post_init__(self):
        for rule in self.rules:
            if rule.m > self.n:
                raise ValueError(f"edge size {rule.m} exceeds n={self.n}")


@dataclass(frozen=True)
class BlockModelConfig:
    """m-uniform block model: ``community_sizes`` partition [0, n) into
    contiguous blocks; an edge inside block i appears with probability
    ``omega_within[i]``, any community-straddling edge with ``omega_cross``.
    ``fixed_counts``, when given as (per-community..., cross), replaces the
    Bernoulli draw with exact distinct-edge counts per type."""

    m: int
    community_sizes: tuple[int, ...]
    omega_within: tuple[float, ...] = ()
    omega_cross: float = 0.0
    fixed_counts: tuple[int, ...] | None = None

    def __post_init__(self):
        if any(s <= 0 for s in self.community_sizes):
            raise ValueError("community sizes must be positive")
        if self.fixed_counts is None:
            if len(self.omega_within) != len(self.community_sizes):
                raise ValueError("need one within-probability per community")
            if any(not 0.0 <= w <= 1.0 for w in (*self.omega_within, self.omega_cross)):
                raise ValueError("probabilities must be in [0, 1]")
        elif len(self.fixed_counts) != len(self.community_sizes) + 1:
            raise ValueError("fixed_counts needs one entry per community plus cross")

    @property
    def n(self) -> int:
        return int(sum(self.community_sizes))

    def communities(self) -> list[np.ndarray]:
        bounds = np.cumsum((0,) + tuple(self.community_sizes))
        return [np.arange(bounds[i], bounds[i + 1]) for i in range(len(self.community_sizes))]


def sample_distinct_edges(items, m: int, count: int, rng: np.random.Generator,
                          exclude=None, predicate=None) -> list[Edge]:
    """``count`` distinct uniform m-subsets of ``items`` (optionally filtered by
    ``predicate`` and disjoint from ``exclude``), via batched rejection.

    Each batch row takes the m smallest of i.i.d. uniform keys, which is a
    uniform random m-subset.
    """
    items = np.asarray(items, dtype=np.int64)
    total = math.comb(len(items), m)
    if count > total:
        raise ValueError(f"cannot draw {count} distinct edges from {total} candidates")
    if count == 0:
        return []
    seen = set(exclude) if exclude else set()
    out: list[Edge] = []
    while len(out) < count:
        need = count - len(out)
        batch = max(32, need + need // 4)
        keys = rng.random((batch, len(items)))
        if m < len(items):
            picks = np.argpartition(keys, m, axis=1)[:, :m]
        else:
            picks = np.tile(np.arange(len(items)), (batch, 1))
        cand = np.sort(items[picks], axis=1)
        for row in cand:
            pick = tuple(row.tolist())
            if pick in seen or (predicate is not None and not predicate(pick)):
                continue
            seen.add(pick)
            out.append(pick)
            if len(out) == count:
                break
    return out


def sample_uniform_edges(items, m: int, count: int, rng: np.random.Generator,
                         predicate=None) -> list[Edge]:
    """``count`` i.i.d. uniform m-subsets of ``items`` (repeats allowed), as for
    independently assembled comparisons."""
    items = np.asarray(items, dtype=np.int64)
    if m > len(items):
        raise ValueError(f"cannot form size-{m} edges from {len(items)} items")
    out: list[Edge] = []
    while len(out) < count:
        batch = max(32, count - len(out) + (count - len(out)) // 4)
        keys = rng.random((batch, len(items)))
        if m < len(items):
            picks = np.argpartition(keys, m, axis=1)[:, :m]
        else:
            picks = np.tile(np.arange(len(items)), (batch, 1))
        cand = np.sort(items[picks], axis=1)
        for row in cand:
            pick = tuple(row.tolist())
            if predicate is not None and not predicate(pick):
                continue
            out.append(pick)
            if len(out) == count:
                break
    return out


def sample_random_hypergraph(config: RandomHypergraphConfig, rng: np.random.Generator,
                             enumeration_cap: int = 10**7) -> list[Edge]:
    """Draw the per-size random hypergraph.

    ``constant`` mode avoids enumerating the candidate set: the edge count is
    Binomial(C(n, m), p) and then that many distinct edges are uniform (the
    same law as per-candidate coin flips). ``uniform`` mode needs per-candidate
    probabilities, so C(n, m) must stay within ``enumeration_cap``.
    """
    edges: list[Edge] = []
    n = config.n
    for rule in config.rules:
        total = math.comb(n, rule.m)
        if rule.mode == "fixed":
            edges.extend(sample_distinct_edges(range(n), rule.m, rule.count, rng))
        elif rule.mode == "constant":
            count = int(rng.binomial(total, rule.p)) if rule.p > 0 else 0
            edges.extend(sample_distinct_edges(range(n), rule.m, count, rng))
        else:  # uniform(p, q): genuinely nonuniform probabilities
            if total > enumeration_cap:
                raise CapExceededError(
                    f"uniform-probability mode needs C({n},{rule.m})={total} candidates enumerated"
                )
            probs = rng.uniform(rule.p, rule.q, size=total)
            keep = rng.random(total) < probs
            for include, cand in zip(keep, itertools.combinations(range(n), rule.m)):
                if include:
                    edges.append(cand)
    return edges


def sample_block_model(config: BlockModelConfig, rng: np.random.Generator) -> list[Edge]:
    """Draw the block-model hypergraph (Bernoulli or fixed-count per type)."""
    n, m = config.n, config.m
    communities = config.communities()
    within_candidates = [math.comb(len(c), m) if len(c) >= m else 0 for c in communities]
    cross_candidates = math.comb(n, m) - sum(within_candidates)
    if config.fixed_counts is not None:
        counts = list(config.fixed_counts)
    else:
        counts = [
            int(rng.binomial(c, w)) if c and w > 0 else 0
            for c, w in zip(within_candidates, config.omega_within)
        ]
        counts.append(
            int(rng.binomial(cross_candidates, config.omega_cross))
            if cross_candidates and config.omega_cross > 0
            else 0
        )
    edges: list[Edge] = []
    bounds = np.cumsum((0,) + tuple(config.community_sizes))

    def crossing(edge: Edge) -> bool:
        first = np.searchsorted(bounds, edge[0], side="right")
        last = np.searchsorted(bounds, edge[-1], side="right")
        return first != last

    for comm, count in zip(communities, counts[:-1]):
        edges.extend(sample_distinct_edges(comm, m, count, rng))
    edges.extend(sample_distinct_edges(range(n), m, counts[-1], rng, predicate=crossing))
    return edges


# ---------------------------------------------------------------------------
# Degree-level diagnostics
# ---------------------------------------------------------------------------


def degree_stats(edges, n: int):
    """(per-vertex degree vector, min degree, max degree), with multiplicity."""
    deg = np.zeros(n, dtype=np.int64)
    for e in edges:
        deg[list(e)] += 1
    return deg, int(deg.min()), int(deg.max())


def shared_edges(edges, n: int) -> dict[tuple[int, int], int]:
    """Co-occurrence counts N_jk over unordered vertex pairs (multiplicity)."""
    counts: dict[tuple[int, int], int] = {}
    for e in edges:
        for j, k in itertools.combinations(sorted(e), 2):
            counts[(j, k)] = counts.get((j, k), 0) + 1
    return counts


def edge_sharing_ratio(edges, n: int) -> float:
    """max over ordered vertex pairs of N_jk / N_j (correlation strength of
    the per-item estimates; <= 1/min-degree on simple pairwise graphs)."""
    deg, _, _ = degree_stats(edges, n)
    best = 0.0
    for (j, k), njk in shared_edges(edges, n).items():
        best = max(best, njk / deg[j], njk / deg[k])
    return best


def boundary_edges(edges, subset) -> list[Edge]:
    """Edges meeting both ``subset`` and its complement (multiplicity kept)."""
    s = set(subset)
    return [e for e in edges if any(v in s for v in e) and any(v not in s for v in e)]


def is_connected(edges, n: int) -> bool:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in edges:
        r = find(e[0])
        for v in e[1:]:
            parent[find(v)] = r
    return len({find(v) for v in range(n)}) == 1


def modified_cheeger(edges, n: int, cap: int = DEFAULT_CHEEGER_CAP, chunk: int = 1 << 12) -> float:
    """min over nonempty proper subsets U of |boundary(U)| / min(|U|, |U^c|),
    by exact scan of all subsets (positive iff connected). ``n`` is capped."""
    if n > cap:
        raise CapExceededError(f"exact subset scan needs n <= {cap}, got {n}")
    if n < 2:
        raise ValueError("need at least 2 vertices")
    masks = np.asarray([sum(1 << v for v in set(e)) for e in edges], dtype=np.uint64)
    full = (1 << n) - 1
    best = math.inf
    # U and its complement give the same value: scan subsets containing vertex 0
    subsets = np.arange(1, full + 1, 2, dtype=np.uint64)
    for lo in range(0, subsets.size, chunk):
        u = subsets[lo : lo + chunk]
        if int(u[-1]) == full:
            u = u[:-1]
            if u.size == 0:
                break
        inter = u[:, None] & masks[None, :]
        bd = ((inter != 0) & (inter != masks[None, :])).sum(axis=1)
        sizes = np.bitwise_count(u).astype(np.int64)
        ratio = bd / np.minimum(sizes, n - sizes)
        best = min(best, float(ratio.min()) if ratio.size else math.inf)
    return best


def modified_cheeger_bruteforce(edges, n: int) -> float:
    """Oracle: direct loop over subsets via boundary_edges (tiny n only)."""
    best = math.inf
    vertices = list(range(n))
    for size in range(1, n):
        for u in itertools.combinations(vertices, size):
            best = min(best, len(boundary_edges(edges, u)) / min(size, n - size))
    return best


# ---------------------------------------------------------------------------
# Spectral diagnostics
# ---------------------------------------------------------------------------


@dataclass
class SpectralDiagnostics:
    eigenvalues: np.ndarray  # of the normalized Laplacian, ascending
    s_gap: float  # min(lambda_2, 2 - lambda_n)
    lambda2_leave: float | None  # worst leave-one-out unnormalized gap


def _expected_neg_hessian(dataset: Dataset, u, estimator: str) -> np.ndarray:
    """Dense -E[Hessian] for the requested estimator kind (a weighted graph
    Laplacian; depends on edges and cutoffs only)."""
    from .estimators import apply_estimator_cutoff
    from .likelihood import expected_marginal_hessian, quasi_hessian

    effective = apply_estimator_cutoff(dataset, estimator)
    if estimator == "qmle":
        return -quasi_hessian(u, effective).toarray()
    return -expected_marginal_hessian(u, effective).toarray()


def spectral_diagnostics(
    dataset_or_edges,
    u=None,
    estimator: str = "qmle",
    leave_one_out: bool = True,
    n: int | None = None,
) -> SpectralDiagnostics:
    """Spectrum of the normalized expected-Hessian Laplacian.

    Accepts a Dataset or a bare edge list (edges are then treated as full
    observations; the expectation never depends on outcomes). ``u`` defaults
    to all zeros. Raises :class:`IsolatedVertexError` on zero-degree vertices.
    """
    dataset = _as_dataset(dataset_or_edges, n)
    u = np.zeros(dataset.n) if u is None else check_utilities(u, dataset.n)
    lap = _expected_neg_hessian(dataset, u, estimator)
    d = np.diag(lap).copy()
    if np.any(d <= 0):
        raise IsolatedVertexError(int(np.flatnonzero(d <= 0)[0]))
    inv_sqrt = 1.0 / np.sqrt(d)
    lsym = lap * inv_sqrt[:, None] * inv_sqrt[None, :]
    eigs = np.linalg.eigvalsh(lsym)
    s_gap = float(min(eigs[1], 2.0 - eigs[-1]))
    lam_leave = None
    if leave_one_out:
        lam_leave = math.inf
        for k in range(dataset.n):
            keep = [obs for obs in dataset.observations if k not in obs.ranking]
            sub = Dataset(dataset.n, keep)
            lap_k = _expected_neg_hessian(sub, u, estimator)
            idx = np.arange(dataset.n) != k
            eig_k = np.linalg.eigvalsh(lap_k[np.ix_(idx, idx)])
            lam_leave = min(lam_leave, float(eig_k[1]) if eig_k.size > 1 else 0.0)
    return SpectralDiagnostics(eigenvalues=eigs, s_gap=s_gap, lambda2_leave=lam_leave)


def _as_dataset(dataset_or_edges, n=None) -> Dataset:
    if isinstance(dataset_or_edges, Dataset):
        return dataset_or_edges
    edges = [tuple(sorted(e)) for e in dataset_or_edges]
    if n is None:
        n = 1 + max(max(e) for e in edges)
    return Dataset(n, [Observation(e) for e in edges])


# ---------------------------------------------------------------------------
# Admissible-chain expansion bound
# ---------------------------------------------------------------------------


def expansion_chain_bound(edges, n: int, cap: int = DEFAULT_CHAIN_CAP) -> float:
    """Worst-case sum of sqrt(log n / h(A_j)) over admissible chains.

    A chain of strictly increasing vertex subsets is admissible when, at every
    step, at least half of the current boundary edges land inside the next
    set; the final set contributes no summand. Exact dynamic program over all
    subsets, so ``n`` is tightly capped. Errors on disconnected graphs (some
    h(A) would be zero).
    """
    if n > cap:
        raise CapExceededError(f"admissible-chain enumeration needs n <= {cap}, got {n}")
    if not is_connected(edges, n):
        raise ValueError("expansion bound undefined on a disconnected graph")
    edge_masks = [sum(1 << v for v in set(e)) for e in edges]
    n_edges = len(edge_masks)
    full = (1 << n) - 1
    log_n = math.log(n)

    boundary_bits = [0] * (full + 1)  # bit i set <-> edge i in boundary(A)
    inside_bits = [0] * (full + 1)  # bit i set <-> edge i inside A
    weight = [0.0] * (full + 1)
    for a in range(1, full + 1):
        size = a.bit_count()
        bd = ins = 0
        for i, em in enumerate(edge_masks):
            inter = em & a
            if inter == em:
                ins |= 1 << i
            elif inter:
                bd |= 1 << i
        boundary_bits[a] = bd
        inside_bits[a] = ins
        if a != full:
            h = bd.bit_count() / min(size, n - size)
            weight[a] = math.sqrt(log_n / h)  # h > 0: graph is connected

    # f(A) = best chain total starting at A; supersets processed first
    f = [0.0] * (full + 1)
    order = sorted(range(1, full + 1), key=lambda a: -a.bit_count())
    best = 0.0
    for a in order:
        if a == full:
            continue
        bd = boundary_bits[a]
        need = (bd.bit_count() + 1) // 2  # at least half
        best_tail = None
        rest = full & ~a
        sub = rest
        while sub:  # all strict supersets a | sub
            b = a | sub
            if (bd & inside_bits[b]).bit_count() >= need:
                tail = f[b]
                if best_tail is None or tail > best_tail:
                    best_tail = tail
            sub = (sub - 1) & rest
        if best_tail is not None:
            f[a] = max(0.0, weight[a] + best_tail)
        best = max(best, f[a])
    return best


def enumerate_admissible_chains(edges, n: int, cap: int = DEFAULT_CHAIN_CAP):
    """Oracle helper: yield every admissible chain (as tuples of frozensets).

    Exponential; for cross-checking :func:`expansion_chain_bound` at tiny n.
    """
    if n > cap:
        raise CapExceededError(f"chain enumeration needs n <= {cap}, got {n}")
    full = (1 << n) - 1
    edge_masks = [sum(1 << v for v in set(e)) for e in edges]

    def to_set(mask):
        return frozenset(v for v in range(n) if mask >> v & 1)

    def extend(chain_masks):
        yield tuple(chain_masks)
        last = chain_masks[-1]
        if last == full:
            return
        bd = [i for i, em in enumerate(edge_masks) if em & last and em & ~last & full]
        rest = full & ~last
        sub = rest
        while sub:
            nxt = last | sub
            inside = sum(1 for i in bd if edge_masks[i] & ~nxt & full == 0)
            if 2 * inside >= len(bd):
                yield from extend(chain_masks + [nxt])
            sub = (sub - 1) & rest

    for a in range(1, full + 1):
        for chain in extend([a]):
            yield tuple(to_set(mask) for mask in chain)


def chain_score(edges, n: int, chain) -> float:
    """Sum of sqrt(log n / h(A_j)) over all but the last set of a chain."""
    total = 0.0
    for a in list(chain)[:-1]:
        h = len(boundary_edges(edges, a)) / min(len(a), n - len(a))
        total += math.sqrt(math.log(n) / h)
    return total


# ---------------------------------------------------------------------------
# Bundled report
# ---------------------------------------------------------------------------


@dataclass
class GraphDiagnostics:
    n: int
    n_edges: int
    degree_min: int
    degree_max: int
    r_ratio: float
    connected: bool
    s_gap: float | None = None
    lambda2_leave: float | None = None
    cheeger: float | None = None
    gamma_re: float | None = None

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in (
            "n", "n_edges", "degree_min", "degree_max", "r_ratio", "connected",
            "s_gap", "lambda2_leave", "cheeger", "gamma_re",
        )}


def graph_diagnostics(
    dataset_or_edges,
    n: int | None = None,
    u=None,
    estimator: str = "qmle",
    exact_cheeger: bool = False,
    chain_bound: bool = False,
    cheeger_cap: int = DEFAULT_CHEEGER_CAP,
    chain_cap: int = DEFAULT_CHAIN_CAP,
    spectral: bool = True,
) -> GraphDiagnostics:
    """One-call bundle of the topology quantities governing estimator quality."""
    dataset = _as_dataset(dataset_or_edges, n)
    edges = dataset.edges
    deg, dmin, dmax = degree_stats(edges, dataset.n)
    out = GraphDiagnostics(
        n=dataset.n,
        n_edges=len(edges),
        degree_min=dmin,
        degree_max=dmax,
        r_ratio=edge_sharing_ratio(edges, dataset.n) if edges else 0.0,
        connected=is_connected(edges, dataset.n),
    )
    if spectral and dmin > 0:
        spectrum = spectral_diagnostics(dataset, u, estimator)
        out.s_gap = spectrum.s_gap
        out.lambda2_leave = spectrum.lambda2_leave
    if exact_cheeger:
        out.cheeger = modified_cheeger(edges, dataset.n, cap=cheeger_cap)
    if chain_bound:
        out.gamma_re = expansion_chain_bound(edges, dataset.n, cap=chain_cap)
    return out
