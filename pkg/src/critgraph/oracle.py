"""Direct samplers of the rank-1 random graph, used as ground truth for the exploration."""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .weights import WeightSequence

BERNOULLI_MAX_N = 10_000


@dataclass(frozen=True)
class Graph:
    n: int
    edges: np.ndarray  # (m, 2) int64, u < v, lexicographically sorted, unique

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.int64).reshape(-1, 2)
        if e.size:
            if np.any(e[:, 0] >= e[:, 1]) or e.min() < 0 or e.max() >= self.n:
                raise ValueError("edges must be pairs u < v inside [0, n)")
            key = e[:, 0] * self.n + e[:, 1]
            if np.any(np.diff(key) <= 0):
                raise ValueError("edges must be sorted and unique")
        object.__setattr__(self, "edges", e)

    @property
    def m(self) -> int:
        return int(self.edges.shape[0])

    @classmethod
    def from_pairs(cls, n: int, pairs) -> "Graph":
        """Normalize arbitrary pairs: drop loops, orient u < v, deduplicate."""
        p = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
        p = p[p[:, 0] != p[:, 1]]
        p = np.sort(p, axis=1)
        key = np.unique(p[:, 0] * n + p[:, 1])
        return cls(n, np.stack([key // n, key % n], axis=1))


def sample_bernoulli(w: WeightSequence, lam: float, rng: np.random.Generator) -> Graph:
    """Independent coin per pair; O(n^2)."""
    n = w.n
    if n > BERNOULLI_MAX_N:
        raise ValueError(f"pairwise sampler limited to n <= {BERNOULLI_MAX_N}")
    c = w.t_n(lam) / w.ell1
    if n * (n - 1) // 2 <= 2_000_000:
        iu, ju = np.triu_indices(n, k=1)
        p = -np.expm1(-c * w.w[iu] * w.w[ju])
        keep = rng.random(iu.size) < p
        return Graph(n, np.stack([iu[keep], ju[keep]], axis=1))
    chunks = []
    for u in range(n - 1):
        v = np.arange(u + 1, n)
        p = -np.expm1(-c * w.w[u] * w.w[v])
        hit = v[rng.random(v.size) < p]
        chunks.append(np.stack([np.full(hit.size, u), hit], axis=1))
    return Graph(n, np.concatenate(chunks) if chunks else np.empty((0, 2), np.int64))


class AliasTable:
    """Walker/Vose alias table for O(1) draws from a finite distribution."""

    def __init__(self, weights: np.ndarray):
        p = np.asarray(weights, dtype=np.float64)
        n = p.size
        scaled = p * (n / p.sum())
        self.prob = np.ones(n)
        self.alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s, l = small.pop(), large.pop()
            self.prob[s] = scaled[s]
            self.alias[s] = l
            scaled[l] -= 1.0 - scaled[s]
            (small if scaled[l] < 1.0 else large).append(l)
        # leftovers are 1 up to rounding
        self.n = n

    def probabilities(self) -> np.ndarray:
        """Distribution encoded by the table (for checking)."""
        out = self.prob / self.n
        np.add.at(out, self.alias, (1.0 - self.prob) / self.n)
        return out

    def draw(self, rng: np.random.Generator, size: int) -> np.ndarray:
        col = rng.integers(0, self.n, size=size)
        coin = rng.random(size)
        return np.where(coin < self.prob[col], col, self.alias[col])


def poisson_edge_mean(w: WeightSequence, lam: float) -> float:
    """Mean number of endpoint pairs drawn by the Poisson sampler."""
    return w.t_n(lam) * w.ell1 / 2.0


def sample_poisson(w: WeightSequence, lam: float, rng: np.random.Generator,
                   table: AliasTable | None = None) -> Graph:
    """Poissonized multigraph collapsed to a simple graph.

    Pair {u, v} receives Poisson(t_n w_u w_v / ell1) parallel edges, so it is
    present with probability exactly 1 - exp(-t_n w_u w_v / ell1).
    """
    table = AliasTable(w.w) if table is None else table
    M = rng.poisson(poisson_edge_mean(w, lam))
    ends = table.draw(rng, 2 * M).reshape(-1, 2)
    return Graph.from_pairs(w.n, ends)


class DisjointSet:
    def __init__(self, n: int):
        self.parent = list(range(n))
        self.size = [1] * n

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        if self.size[ra] < self.size[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        self.size[ra] += self.size[rb]


def component_labels(g: Graph) -> np.ndarray:
    """Label each vertex by the smallest vertex of its component."""
    ds = DisjointSet(g.n)
    for u, v in g.edges.tolist():
        ds.union(u, v)
    roots = np.array([ds.find(x) for x in range(g.n)], dtype=np.int64)
    smallest = np.full(g.n, g.n, dtype=np.int64)
    np.minimum.at(smallest, roots, np.arange(g.n))
    return smallest[roots]


def components(g: Graph, w: WeightSequence | None = None) -> list[tuple[frozenset, int, float]]:
    """(vertex set, size, weight) per component, ordered by smallest vertex."""
    lab = component_labels(g)
    wv = np.ones(g.n) if w is None else w.w
    out = []
    for c in np.unique(lab):
        members = np.flatnonzero(lab == c)
        out.append((frozenset(members.tolist()), int(members.size), float(wv[members].sum())))
    return out


def component_sizes(g: Graph) -> np.ndarray:
    counts = np.bincount(component_labels(g), minlength=g.n)
    return counts[counts > 0]


def write_edge_list(g: Graph, path: str | Path) -> None:
    Path(path).write_text("".join(f"{u + 1} {v + 1}\n" for u, v in g.edges.tolist()))


def read_edge_list(path: str | Path, n: int) -> Graph:
    pairs = [tuple(int(x) - 1 for x in line.split()) for line in Path(path).read_text().splitlines() if line.strip()]
    return Graph.from_pairs(n, pairs if pairs else np.empty((0, 2), np.int64))
