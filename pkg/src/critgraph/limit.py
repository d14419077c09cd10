"""Brownian motion with parabolic drift and its ordered excursion lengths.

``W(t) = sqrt(mu'/mu) B(t) + lambda t - mu'/(2 mu^2) t^2``. The drift pushes
the path down quadratically, so the long excursions above the running
infimum all happen in a window of width O(mu^2/mu') around the origin; the
sampler grows the horizon by doubling until the top k are settled.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .excursions import GridPath, excursion_arrays, rank_order
from .sbpp import PointProcess
from .weights import ModelParams


@dataclass(frozen=True)
class LimitParams:
    lam: float = 0.0
    mu: float = 1.0
    mu_prime: float = 1.0
    dt: float = 1e-4
    t_init: float | None = None
    k: int = 4
    cap_factor: float = 64.0

    def __post_init__(self):
        if self.t_init is None:
            object.__setattr__(self, "t_init", 10.0 * self.mu**2 / self.mu_prime)
        if not (self.dt > 0 and self.t_init > 0 and self.k >= 1):
            raise ValueError("need dt > 0, t_init > 0, k >= 1")
        if not (self.mu > 0 and self.mu_prime > 0):
            raise ValueError("mu and mu_prime must be positive")

    @classmethod
    def from_model(cls, p: ModelParams, **kw) -> "LimitParams":
        return cls(lam=p.lam, mu=p.mu, mu_prime=p.mu_prime, **kw)

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.mu_prime / self.mu))

    @property
    def curvature(self) -> float:
        return self.mu_prime / (2.0 * self.mu**2)

    def mean(self, t):
        t = np.asarray(t, dtype=np.float64)
        return self.lam * t - self.curvature * t * t

    def variance(self, t):
        return (self.mu_prime / self.mu) * np.asarray(t, dtype=np.float64)


def _drift(p: LimitParams, t: np.ndarray) -> np.ndarray:
    return p.lam * t - p.curvature * t * t


def _n_steps(T: float, dt: float) -> int:
    return int(round(T / dt))


class _Brownian:
    """Standard Brownian motion on a grid, extended on demand from one stream."""

    def __init__(self, rng: np.random.Generator, dt: float):
        self.rng = rng
        self.dt = dt
        self.B = np.zeros(1)

    def extend_to(self, steps: int) -> None:
        have = self.B.size - 1
        if steps <= have:
            return
        inc = self.rng.standard_normal(steps - have) * np.sqrt(self.dt)
        self.B = np.concatenate([self.B, self.B[-1] + np.cumsum(inc)])


def _w_path(p: LimitParams, B: np.ndarray, dt: float) -> GridPath:
    t = dt * np.arange(B.size)
    return GridPath(dt, p.sigma * B + _drift(p, t))


def sample_W(p: LimitParams, rng: np.random.Generator, horizon: float | None = None) -> GridPath:
    T = p.t_init if horizon is None else float(horizon)
    bm = _Brownian(rng, p.dt)
    bm.extend_to(_n_steps(T, p.dt))
    return _w_path(p, bm.B, p.dt)


@dataclass(frozen=True)
class LimitSample:
    gammas: np.ndarray
    starts: np.ndarray
    ends: np.ndarray
    horizon_used: float
    flagged: bool = False
    path: GridPath | None = field(default=None, repr=False)


def _settled(g, d, levels, trailing, T: float, k: int, min_level_end: float) -> bool:
    if g.size < k:
        return False
    idx = rank_order(g, d)[:k]
    gk = d[idx[-1]] - g[idx[-1]]
    # (a) the infimum has dropped below the k-th excursion's level by at least its length
    if not min_level_end <= levels[idx[-1]] - gk:
        return False
    # (b) nothing in the last half of the horizon is longer than the k-th
    late = g >= T / 2
    if np.any((d[late] - g[late]) > gk):
        return False
    if trailing is not None and T - trailing[0] >= gk:
        return False
    return True


def _summarize(path: GridPath, k: int, flagged: bool, keep_path: bool) -> LimitSample:
    g, d, _, _ = excursion_arrays(path)
    idx = rank_order(g, d)[:k]
    gam = np.zeros(k)
    gs = np.zeros(k)
    ds = np.zeros(k)
    gam[: idx.size] = d[idx] - g[idx]
    gs[: idx.size] = g[idx]
    ds[: idx.size] = d[idx]
    return LimitSample(gam, gs, ds, path.horizon, flagged or idx.size < k, path if keep_path else None)


def _grow(p: LimitParams, bm: _Brownian, strides: tuple[int, ...]):
    """Double the horizon until every requested resolution is settled."""
    T = p.t_init
    cap = p.cap_factor * p.t_init
    while True:
        # a whole number of coarse steps, so every resolution ends at T
        bm.extend_to(_n_steps(T, bm.dt * max(strides)) * max(strides))
        paths = [_w_path(p, bm.B[::s], bm.dt * s) for s in strides]
        ok = True
        for path in paths:
            g, d, lv, tr = excursion_arrays(path)
            M_end = float(np.minimum.accumulate(path.values)[-1])
            if not _settled(g, d, lv, tr, path.horizon, p.k, M_end):
                ok = False
                break
        if ok:
            return paths, False
        if T * 2 > cap:
            return paths, True
        T *= 2


def sample_gammas(p: LimitParams, rng: np.random.Generator, keep_path: bool = False) -> LimitSample:
    bm = _Brownian(rng, p.dt)
    (path,), flagged = _grow(p, bm, (1,))
    return _summarize(path, p.k, flagged, keep_path)


def sample_gammas_coupled(p: LimitParams, rng: np.random.Generator) -> tuple[LimitSample, LimitSample]:
    """Top-k excursions of one Brownian path read at step dt and at dt/2."""
    fine = replace(p, dt=p.dt / 2)
    bm = _Brownian(rng, fine.dt)
    (coarse_path, fine_path), flagged = _grow(fine, bm, (2, 1))
    return _summarize(coarse_path, p.k, flagged, False), _summarize(fine_path, p.k, flagged, False)


def limit_point_process(s: LimitSample) -> PointProcess:
    """Atoms (g^(i), Gamma^(i)); g is where the excursion starts."""
    keep = s.gammas > 0
    return PointProcess(s.starts[keep], s.gammas[keep], "start")


def claim_a2_probe(T: float, C: float, reps: int, p: LimitParams, rng: np.random.Generator) -> float:
    """Frequency of inf_{[0,T/2]} W - inf_{[0,2T]} W <= C."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    half = _n_steps(T / 2, p.dt)
    hits = 0
    for _ in range(reps):
        v = sample_W(p, rng, 2 * T).values
        hits += (v[: half + 1].min() - v.min()) <= C
    return hits / reps


def save_gammas(samples: list[LimitSample], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["replicate", "i", "gamma", "g", "d"])
        for r, s in enumerate(samples):
            for i in range(s.gammas.size):
                wr.writerow([r, i + 1, repr(float(s.gammas[i])), repr(float(s.starts[i])), repr(float(s.ends[i]))])
