"""Exponential-clock exploration of rank-1 random graphs.

Each vertex ``v`` carries a discovery clock ``J_v ~ Exp(w_v t_n / ell1)``. The
walk ``S(t) = -t + sum_v w_v 1{J_v <= t}`` encodes the graph: component ``k``
occupies the interval ``[tau_{k-1}, tau_k)`` where ``tau_k`` is the first time
``S`` reaches ``-(sum of root weights whose clock has not rung)``. Roots are
picked from presorted exponential keys, either weight-proportional
(``weight_biased``) or uniform (``size_biased``), so one clock vector drives
both explorations.

The kernel is event-driven. Between jumps the distance ``Y`` from the walk to
the current level shrinks at unit speed, so the exhaustion time is closed
form and no root finding is involved.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .excursions import JumpDriftPath
from .weights import WeightSequence

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure python fallback
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f

Mode = Literal["size_biased", "weight_biased"]
MODES = ("size_biased", "weight_biased")


class ExplorationError(RuntimeError):
    """An exact identity of the exploration failed; the replicate is unusable."""


@dataclass(frozen=True)
class ClockRealization:
    J: np.ndarray
    Ekeys: np.ndarray
    Ehatkeys: np.ndarray
    lam: float
    seed: tuple | None = None
    _orders: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n(self) -> int:
        return int(self.J.size)

    def argsort(self, name: str) -> np.ndarray:
        """Cached argsort of ``J``, ``Ekeys`` or ``Ehatkeys``; ties fall back to label order."""
        if name not in self._orders:
            x = getattr(self, name)
            order = np.argsort(x)
            if np.any(x[order[1:]] == x[order[:-1]]):
                order = np.argsort(x, kind="stable")
            self._orders[name] = order
        return self._orders[name]

    def keys(self, mode: Mode) -> np.ndarray:
        if mode == "weight_biased":
            return self.Ekeys
        if mode == "size_biased":
            return self.Ehatkeys
        raise ValueError(f"unknown mode {mode!r}")


def _positive_uniforms(rng: np.random.Generator, shape) -> np.ndarray:
    u = rng.random(shape)
    bad = u == 0.0
    while bad.any():
        u[bad] = rng.random(int(bad.sum()))
        bad = u == 0.0
    return u


def _redraw_ties(x: np.ndarray, scale: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    # x = -log(u) * scale; ties are a probability-zero event. Returns the
    # stable argsort of the final x.
    for _ in range(100):
        order = np.argsort(x)
        xs = x[order]
        dup = np.flatnonzero(xs[1:] == xs[:-1])
        if dup.size == 0:
            break
        later = order[dup + 1]
        x[later] = -np.log(_positive_uniforms(rng, later.size)) * scale[later]
    else:
        # give up on redraws; the stable argsort breaks remaining ties by label
        order = np.argsort(x, kind="stable")
    return order


def sample_clocks(w: WeightSequence, lam: float, rng: np.random.Generator,
                  seed: tuple | None = None) -> ClockRealization:
    """Draw J, weight-biased keys and uniform keys by inverse CDF.

    Uniforms come from one ``(n, 3)`` block so vertex ``v`` always consumes
    row ``v``.
    """
    t_n = w.t_n(lam)
    if t_n <= 0:
        raise ValueError(f"1 + lambda n^(-1/3) must be positive, got {t_n}")
    n = w.n
    u = _positive_uniforms(rng, (n, 3))
    scales = (w.ell1 / (w.w * t_n), w.ell1 / w.w, np.full(n, float(n)))
    out = []
    orders = {}
    for col, (name, scale) in enumerate(zip(("J", "Ekeys", "Ehatkeys"), scales)):
        x = -np.log(u[:, col]) * scale
        orders[name] = _redraw_ties(x, scale, rng)
        x.setflags(write=False)
        out.append(x)
    return ClockRealization(out[0], out[1], out[2], float(lam), seed, orders)


@njit(cache=True)
def _explore_kernel(w, J, jorder, keyorder):
    n = w.size
    discovered = np.zeros(n, np.bool_)
    is_root = np.zeros(n, np.bool_)
    labels = np.empty(n, np.int64)
    order = np.empty(n, np.int64)
    roots = np.empty(n, np.int64)
    tau = np.empty(n + 1, np.float64)
    offsets = np.empty(n + 1, np.int64)
    tau[0] = 0.0
    offsets[0] = 0
    t = 0.0
    pos = 0
    jp = 0
    cur = 0
    K = 0
    while pos < n:
        while discovered[keyorder[cur]]:
            cur += 1
        r = keyorder[cur]
        discovered[r] = True
        is_root[r] = True
        labels[r] = K
        order[pos] = r
        pos += 1
        roots[K] = r
        # Y = S(t) + level; the root's own jump cancels its level term, so
        # root clocks are skipped below
        y = w[r]
        while True:
            while jp < n and is_root[jorder[jp]]:
                jp += 1
            if jp < n and J[jorder[jp]] - t <= y:
                v = jorder[jp]
                y -= J[v] - t
                t = J[v]
                y += w[v]
                discovered[v] = True
                labels[v] = K
                order[pos] = v
                pos += 1
                jp += 1
            else:
                t = t + y
                break
        K += 1
        tau[K] = t
        offsets[K] = pos
    return labels, order, roots[:K].copy(), tau[:K + 1].copy(), offsets[:K + 1].copy()


@dataclass(frozen=True)
class ComponentRecord:
    index: int
    root: int
    vertices: frozenset
    tau_start: float
    tau_end: float
    size: int
    weight: float

    @property
    def is_empty(self) -> bool:
        return self.size == 0


EMPTY_COMPONENT = ComponentRecord(0, -1, frozenset(), 0.0, 0.0, 0, 0.0)


@dataclass(frozen=True)
class ExplorationResult:
    """Components in discovery order, stored as flat arrays.

    ``order[offsets[k]:offsets[k+1]]`` lists component ``k`` (0-based) in
    discovery order, root first. ``counting[k]`` is the number of vertices
    discovered strictly before ``tau[k]``.
    """

    mode: str
    n: int
    roots: np.ndarray
    tau: np.ndarray
    sizes: np.ndarray
    weights: np.ndarray
    labels: np.ndarray
    order: np.ndarray
    offsets: np.ndarray
    min_label: np.ndarray
    counting: np.ndarray
    _components: list = field(default=None, repr=False, compare=False)

    @property
    def K(self) -> int:
        return int(self.roots.size)

    @property
    def root_sequence(self) -> list[int]:
        return self.roots.tolist()

    def vertices(self, k: int) -> np.ndarray:
        """Vertices of component ``k`` (0-based discovery index)."""
        return self.order[self.offsets[k]:self.offsets[k + 1]]

    @property
    def components(self) -> list[ComponentRecord]:
        if self._components is None:
            recs = [
                ComponentRecord(
                    index=k + 1,
                    root=int(self.roots[k]),
                    vertices=frozenset(self.vertices(k).tolist()),
                    tau_start=float(self.tau[k]),
                    tau_end=float(self.tau[k + 1]),
                    size=int(self.sizes[k]),
                    weight=float(self.weights[k]),
                )
                for k in range(self.K)
            ]
            object.__setattr__(self, "_components", recs)
        return self._components

    def partition(self) -> frozenset:
        """Vertex partition as a set of frozensets, for comparisons."""
        return frozenset(frozenset(self.vertices(k).tolist()) for k in range(self.K))


def _counting_before_tau(clocks: ClockRealization, roots: np.ndarray, tau: np.ndarray) -> np.ndarray:
    # N^(t-) at each tau_k via the root-corrected count; independent of the
    # kernel's membership bookkeeping
    cp = CountingProcess(clocks.J, roots, tau, sorted_J=clocks.J[clocks.argsort("J")])
    out = cp.discovered_left(tau)
    out[0] = 0
    return out


def explore(w: WeightSequence, clocks: ClockRealization, mode: Mode,
            check: bool = True) -> ExplorationResult:
    if clocks.n != w.n:
        raise ValueError("clock realization and weights have different n")
    jorder = clocks.argsort("J")
    keyorder = clocks.argsort("Ehatkeys" if mode == "size_biased" else "Ekeys")
    labels, order, roots, tau, offsets = _explore_kernel(w.w, clocks.J, jorder, keyorder)
    K = roots.size
    sizes = np.diff(offsets)
    weights = np.bincount(labels, weights=w.w, minlength=K)
    min_label = np.minimum.reduceat(order, offsets[:-1])
    counting = _counting_before_tau(clocks, roots, tau)
    res = ExplorationResult(mode, w.n, roots, tau, sizes, weights, labels, order,
                            offsets, min_label, counting)
    if check:
        problems = check_identities(w, res)
        if problems:
            raise ExplorationError("; ".join(problems))
    return res


def check_identities(w: WeightSequence, res: ExplorationResult, rtol: float = 1e-9) -> list[str]:
    """Exact per-replicate identities; returns a list of violations (empty if fine)."""
    problems = []
    if res.sizes.sum() != w.n or np.any(res.sizes <= 0):
        problems.append("sizes do not partition [n]")
    if np.any(np.bincount(res.order, minlength=w.n) != 1):
        problems.append("vertex sets do not partition [n]")
    gaps = np.diff(res.tau)
    if np.any(gaps <= 0):
        problems.append("tau sequence not strictly increasing")
    if not np.allclose(gaps, res.weights, rtol=rtol, atol=0.0):
        bad = int(np.argmax(np.abs(gaps - res.weights) / res.weights))
        problems.append(f"weight != tau gap at component {bad}")
    if not np.isclose(res.weights.sum(), w.ell1, rtol=rtol, atol=0.0):
        problems.append("component weights do not sum to ell1")
    if not np.array_equal(np.diff(res.counting), res.sizes):
        problems.append("sizes differ from increments of the discovery count")
    return problems


def coupled_explore(w: WeightSequence, clocks: ClockRealization,
                    check: bool = True) -> tuple[ExplorationResult, ExplorationResult]:
    """Size-biased and weight-biased explorations sharing the clock vector J."""
    return explore(w, clocks, "size_biased", check), explore(w, clocks, "weight_biased", check)


def walk_path(w: WeightSequence, clocks: ClockRealization) -> JumpDriftPath:
    order = clocks.argsort("J")
    horizon = float(clocks.J.max() + w.wmax)
    return JumpDriftPath(clocks.J[order], w.w[order], horizon)


class CountingProcess:
    """Step functions counting rung clocks, optionally corrected by roots.

    ``N(t) = #{v : J_v <= t}``. Given the roots and tau of an exploration,
    ``discovered(t)`` adds the roots of every component discovered by time t
    whose own clock has not yet rung; this counts exactly the vertices
    discovered by time t (the N-hat / N-tilde of the two modes).
    """

    def __init__(self, J: np.ndarray, roots: np.ndarray | None = None,
                 tau: np.ndarray | None = None, sorted_J: np.ndarray | None = None):
        self._Js = np.sort(np.asarray(J)) if sorted_J is None else sorted_J
        self.n = self._Js.size
        if roots is not None:
            self._tau = np.asarray(tau)
            self._K = len(roots)
            self._JR = np.sort(np.asarray(J)[roots])

    @classmethod
    def from_result(cls, clocks: ClockRealization, res: ExplorationResult) -> "CountingProcess":
        return cls(clocks.J, res.roots, res.tau, sorted_J=clocks.J[clocks.argsort("J")])

    def __call__(self, t):
        return np.searchsorted(self._Js, t, side="right")

    def left(self, t):
        return np.searchsorted(self._Js, t, side="left")

    def _require_roots(self):
        if not hasattr(self, "_JR"):
            raise ValueError("root-corrected counts need the roots and tau of an exploration")

    def discovered(self, t):
        # roots R_1..R_m with m = min(c(t)+1, K) where c(t) = #completed
        # components; a root with index > m has J > t automatically, so the
        # correction is m - #{roots with J <= t}
        self._require_roots()
        c = np.searchsorted(self._tau, t, side="right") - 1
        m = np.minimum(c + 1, self._K)
        rung = np.searchsorted(self._JR, t, side="right")
        return self(t) + m - rung

    def discovered_left(self, t):
        self._require_roots()
        t = np.asarray(t, dtype=np.float64)
        c = np.searchsorted(self._tau, t, side="left") - 1
        m = np.clip(c + 1, 0, self._K)
        rung = np.searchsorted(self._JR, t, side="left")
        return self.left(t) + m - rung


def counting_process(clocks: ClockRealization, res: ExplorationResult | None = None) -> CountingProcess:
    if res is None:
        return CountingProcess(clocks.J)
    return CountingProcess.from_result(clocks, res)


def ranked_indices(res: ExplorationResult, by: Literal["size", "weight"], k: int) -> np.ndarray:
    """0-based component indices of the top k, padded with -1."""
    if by == "size":
        key = res.sizes
    elif by == "weight":
        key = res.weights
    else:
        raise ValueError(f"cannot rank by {by!r}")
    idx = np.lexsort((res.min_label, -key))[:k]
    if idx.size < k:
        idx = np.concatenate([idx, np.full(k - idx.size, -1, dtype=idx.dtype)])
    return idx


def rank_components(res: ExplorationResult, by: Literal["size", "weight"], k: int) -> list[ComponentRecord]:
    comps = res.components
    return [comps[i] if i >= 0 else EMPTY_COMPONENT for i in ranked_indices(res, by, k)]


def components_completed(res: ExplorationResult, t) -> np.ndarray:
    """c(t): number of components fully explored by time t."""
    return np.searchsorted(res.tau, t, side="right") - 1


def root_weight_series(res: ExplorationResult, clocks: ClockRealization,
                       w: WeightSequence, t_grid) -> dict[str, np.ndarray]:
    """Root sums over the c(t n^{2/3}) completed components, scaled by n^{-1/3}.

    Keys: ``root_weight`` (plain sum of root weights), ``root_weight_rung`` and
    ``root_count_rung`` (restricted to roots whose own clock rang by the time),
    ``components`` (c itself).
    """
    n = res.n
    a = n ** (-1.0 / 3.0)
    t = np.asarray(t_grid, dtype=np.float64) * n ** (2.0 / 3.0)
    c = components_completed(res, t)
    wr = w.w[res.roots]
    jr = clocks.J[res.roots]
    cum_w = np.concatenate([[0.0], np.cumsum(wr)])
    out_w = np.empty(t.size)
    out_c = np.empty(t.size)
    for j, (cj, tj) in enumerate(zip(c, t)):
        rung = jr[:cj] <= tj
        out_w[j] = wr[:cj][rung].sum()
        out_c[j] = rung.sum()
    return {
        "root_weight": a * cum_w[c],
        "root_weight_rung": a * out_w,
        "root_count_rung": a * out_c,
        "components": a * c,
    }


def root_prefix_sums(res: ExplorationResult, clocks: ClockRealization, w: WeightSequence,
                     m: int, t: float) -> dict[str, float]:
    """Sums over the first m roots (unscaled time t in units of n^{2/3}), scaled by n^{-1/3}.

    ``weight``: sum of root weights; ``weight_rung``/``count_rung``: the same
    restricted to roots whose clock rang by ``t n^{2/3}``.
    """
    n = res.n
    a = n ** (-1.0 / 3.0)
    r = res.roots[:m]
    rung = clocks.J[r] <= t * n ** (2.0 / 3.0)
    return {
        "weight": a * float(w.w[r].sum()),
        "weight_rung": a * float(w.w[r][rung].sum()),
        "count_rung": a * float(rung.sum()),
        "available": int(r.size),
    }


def key_clock_series(clocks: ClockRealization, w: WeightSequence, mode: Mode,
                     s_grid, k_grid) -> dict[str, np.ndarray]:
    """Rescaled key-clock processes: V(n^{1/3}s) n^{-1/3} on ``s_grid`` and
    T_k n^{-1/3} for k in ``k_grid`` (the k-th smallest key)."""
    n = clocks.n
    a = n ** (-1.0 / 3.0)
    keys = clocks.keys(mode)
    order = np.argsort(keys, kind="stable")
    ks = keys[order]
    cum = np.concatenate([[0.0], np.cumsum(w.w[order])])
    s = np.asarray(s_grid, dtype=np.float64)
    V = a * cum[np.searchsorted(ks, s / a, side="right")]
    k = np.asarray(k_grid, dtype=np.int64)
    T = np.where(k >= 1, a * ks[np.clip(k - 1, 0, n - 1)], 0.0)
    return {"V": V, "T": T}


def competing_clock_sums(clocks: ClockRealization, w: WeightSequence, mode: Mode,
                         s: float, t: float) -> dict[str, float]:
    """Weight and count of vertices whose key rings by s n^{1/3} and whose
    discovery clock rings by t n^{2/3}, scaled by n^{-1/3}."""
    n = clocks.n
    a = n ** (-1.0 / 3.0)
    both = (clocks.keys(mode) <= s / a) & (clocks.J <= t * n ** (2.0 / 3.0))
    return {"weight": a * float(w.w[both].sum()), "count": a * float(both.sum())}


def exact_walk_moments(w: WeightSequence, lam: float, t) -> tuple[np.ndarray, np.ndarray]:
    """Exact finite-n mean and variance of S(t): each jump is an independent
    Bernoulli(1 - exp(-q_v t)) indicator times w_v."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    q = w.w * w.t_n(lam) / w.ell1
    p = -np.expm1(-np.outer(t, q))
    mean = -t + p @ w.w
    var = (p * (1 - p)) @ (w.w * w.w)
    return mean, var


def dump_ndjson(res: ExplorationResult, path) -> None:
    """One JSON object per component; vertex ids 1-indexed."""
    with open(path, "w") as fh:
        for k in range(res.K):
            fh.write(json.dumps({
                "k": k + 1,
                "root": int(res.roots[k]) + 1,
                "size": int(res.sizes[k]),
                "weight": float(res.weights[k]),
                "tauStart": float(res.tau[k]),
                "tauEnd": float(res.tau[k + 1]),
            }) + "\n")
