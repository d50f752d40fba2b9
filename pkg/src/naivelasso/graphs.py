"""Random graphs and the partial-correlation covariance built from them."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleDensity, NotPositiveDefinite

GRAPH_KINDS = ("scale_free", "erdos_renyi", "stochastic_block")


@dataclass(frozen=True)
class GraphSpec:
    """Graph family plus its parameters.

    Recognised ``params``: ``gamma`` and ``density`` (scale-free),
    ``density`` (Erdos-Renyi), ``blocks``, ``intra`` and ``inter``
    (stochastic block), and ``lead_ranks`` (scale-free node reordering).
    """

    kind: str
    p: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in GRAPH_KINDS:
            raise ValueError(f"unknown graph kind {self.kind!r}")
        if self.p < 1:
            raise ValueError("p must be positive")
        for key in ("density", "intra", "inter"):
            v = self.params.get(key)
            if v is not None and not 0 <= v <= 1:
                raise ValueError(f"{key} must lie in [0, 1]")
        if self.kind == "stochastic_block":
            blocks = self.params.get("blocks", default_blocks(self.p))
            if sum(blocks) != self.p:
                raise ValueError(f"block sizes {blocks} do not sum to p={self.p}")


@dataclass(frozen=True)
class CovarianceModel:
    A: np.ndarray
    Sigma: np.ndarray
    rho: float
    edges: tuple = ()


def default_blocks(p):
    small = 5 if p <= 200 else 10
    small = min(small, max(p - 1, 1))
    return (small, p - small) if p > small else (p,)


def default_lead_ranks(p):
    """1-based degree ranks placed first: 10,20,...,50 at p <= 200, else 30,60,...,300."""
    step, count = (10, 5) if p <= 200 else (30, 10)
    return tuple(r for r in range(step, step * count + 1, step) if r <= p)


def target_edge_count(p, density):
    # truncation: 0.05 * C(100, 2) = 247.5 -> 247 edges
    return int(math.floor(density * p * (p - 1) / 2 + 1e-9))


def _erdos_renyi_pairs(nodes_a, nodes_b, density, rng, same):
    edges = []
    if same:
        a = np.asarray(nodes_a)
        iu, ju = np.triu_indices(a.size, k=1)
        keep = rng.random(iu.size) < density
        edges = list(zip(a[iu[keep]].tolist(), a[ju[keep]].tolist()))
    else:
        a, b = np.asarray(nodes_a), np.asarray(nodes_b)
        keep = rng.random((a.size, b.size)) < density
        ii, jj = np.nonzero(keep)
        edges = list(zip(a[ii].tolist(), b[jj].tolist()))
    return edges


def _static_power_law(p, m, gamma, rng):
    """Fitness-based static scale-free model with exactly ``m`` distinct edges.

    Node ``i`` (1-based) gets fitness ``i^(-1/(gamma - 1))``; endpoints are
    drawn proportionally to fitness and self-loops and repeats are rejected.
    """
    alpha = 1.0 / (gamma - 1.0)
    w = np.arange(1, p + 1, dtype=np.float64) ** (-alpha)
    w /= w.sum()
    edges = set()
    while len(edges) < m:
        need = m - len(edges)
        batch = max(64, 2 * need)
        u = rng.choice(p, size=batch, p=w)
        v = rng.choice(p, size=batch, p=w)
        for a, b in zip(u.tolist(), v.tolist()):
            if a == b:
                continue
            e = (a, b) if a < b else (b, a)
            if e not in edges:
                edges.add(e)
                if len(edges) == m:
                    break
    return sorted(edges)


def _reorder_by_degree(p, edges, lead_ranks):
    """Relabel nodes so the ``lead_ranks``-th least-connected nodes come first.

    Degree ties break by original index. Remaining nodes keep their
    relative order.
    """
    deg = np.zeros(p, dtype=np.intp)
    for a, b in edges:
        deg[a] += 1
        deg[b] += 1
    by_degree = np.argsort(deg, kind="stable")
    lead = [int(by_degree[r - 1]) for r in lead_ranks]
    lead_set = set(lead)
    new_order = lead + [i for i in range(p) if i not in lead_set]
    relabel = np.empty(p, dtype=np.intp)
    relabel[new_order] = np.arange(p)
    out = []
    for a, b in edges:
        x, y = int(relabel[a]), int(relabel[b])
        out.append((x, y) if x < y else (y, x))
    return sorted(out)


def generate_graph(spec: GraphSpec, seed=0, rng=None):
    """Sample an undirected edge list ``[(j, k), ...]`` with ``j < k``."""
    rng = np.random.default_rng(seed) if rng is None else rng
    p, params = spec.p, spec.params
    if spec.kind == "erdos_renyi":
        return sorted(_erdos_renyi_pairs(range(p), None, params.get("density", 0.05), rng, True))
    if spec.kind == "scale_free":
        density = params.get("density", 0.05)
        gamma = params.get("gamma", 5.0)
        if gamma <= 1:
            raise ValueError("power-law exponent must exceed 1")
        m = target_edge_count(p, density)
        if m > p * (p - 1) // 2:
            raise InfeasibleDensity(f"{m} edges do not fit on {p} nodes")
        edges = _static_power_law(p, m, gamma, rng)
        ranks = tuple(params.get("lead_ranks", default_lead_ranks(p)))
        if any(r < 1 or r > p for r in ranks):
            raise InfeasibleDensity(f"lead ranks {ranks} out of range for p={p}")
        return _reorder_by_degree(p, edges, ranks)
    # stochastic block: smaller blocks get the lower indices
    blocks = sorted(params.get("blocks", default_blocks(p)))
    intra = params.get("intra", 0.3)
    inter = params.get("inter", 0.05)
    starts = np.cumsum([0] + list(blocks))
    groups = [list(range(starts[i], starts[i + 1])) for i in range(len(blocks))]
    edges = []
    for g in groups:
        edges += _erdos_renyi_pairs(g, None, intra, rng, True)
    for i in range(len(groups)):
        for k in range(i + 1, len(groups)):
            edges += _erdos_renyi_pairs(groups[i], groups[k], inter, rng, False)
    return sorted(edges)


def covariance_from_graph(edges, p, rho) -> CovarianceModel:
    """``A = I + rho * adjacency``; ``Sigma = A^{-1}`` rescaled to unit diagonal."""
    A = np.eye(p)
    for a, b in edges:
        A[a, b] = A[b, a] = rho
    try:
        L = np.linalg.cholesky(A)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("weighted adjacency matrix is not positive definite") from None
    Linv = np.linalg.inv(L)
    S = Linv.T @ Linv
    d = np.sqrt(np.diag(S))
    Sigma = S / np.outer(d, d)
    Sigma = (Sigma + Sigma.T) / 2
    np.fill_diagonal(Sigma, 1.0)
    return CovarianceModel(A, Sigma, float(rho), tuple(edges))


def sample_wishart_correlation(p, seed=0, rng=None, return_raw=False):
    """Bartlett draw of ``Wishart(df=p, I_p)`` standardized to a correlation matrix."""
    if p < 2:
        raise ValueError("p must be at least 2")
    rng = np.random.default_rng(seed) if rng is None else rng
    T = np.tril(rng.standard_normal((p, p)), k=-1)
    df = p
    T[np.diag_indices(p)] = np.sqrt(rng.chisquare(df - np.arange(p)))
    W = T @ T.T
    d = np.sqrt(np.diag(W))
    Sigma = W / np.outer(d, d)
    Sigma = (Sigma + Sigma.T) / 2
    np.fill_diagonal(Sigma, 1.0)
    try:
        np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        raise NotPositiveDefinite("Wishart draw is not positive definite") from None
    model = CovarianceModel(W, Sigma, 0.0)
    return (model, W) if return_raw else model
