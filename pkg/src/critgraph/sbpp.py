"""Size-biased point processes.

``generate(X)`` marks each ``X_i`` with an independent ``Exp(rate X_i)`` clock
and places the atom ``(S_i, X_i)`` where ``S_i`` is the mass of all entries
whose clock rang no later than ``X_i``'s. The atoms therefore appear in a
size-biased order and their first coordinates are cumulative masses.

Two anchorings are used. ``end``: ``s`` is the mass up to and including the
atom (``generate``). ``start``: ``s`` is the mass strictly before the atom,
which is how the exploration and the limit process record component start
times.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np

from .exploration import ExplorationResult

Anchor = Literal["end", "start"]


@dataclass(frozen=True)
class PointProcess:
    s: np.ndarray
    x: np.ndarray
    anchor: Anchor = "end"

    def __post_init__(self):
        s = np.asarray(self.s, dtype=np.float64)
        x = np.asarray(self.x, dtype=np.float64)
        if s.shape != x.shape or s.ndim != 1:
            raise ValueError("s and x must be vectors of equal length")
        if np.any(s < 0) or np.any(x <= 0):
            raise ValueError("atoms need s >= 0 and x > 0")
        if np.unique(s).size != s.size:
            raise ValueError("first coordinates must be distinct")
        if self.anchor not in ("end", "start"):
            raise ValueError(f"unknown anchor {self.anchor!r}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "x", x)

    def __len__(self) -> int:
        return int(self.s.size)

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.s.tolist(), self.x.tolist()))


def generate(X, rng: np.random.Generator) -> PointProcess:
    X = np.asarray(X, dtype=np.float64)
    if np.any(X < 0):
        raise ValueError("X must be nonnegative")
    X = X[X > 0]
    if X.size == 0:
        return PointProcess(np.empty(0), np.empty(0))
    u = rng.random(X.size)
    E = -np.log1p(-u) / X
    order = np.argsort(E, kind="stable")
    xs = X[order]
    return PointProcess(np.cumsum(xs), xs, "end")


def ord(pp: PointProcess) -> np.ndarray:  # noqa: A001 - matches the ranked-sequence name
    """Second coordinates in nonincreasing order."""
    return np.sort(pp.x)[::-1]


def cond1_errors(pp: PointProcess) -> np.ndarray:
    """Relative error of the cumulative-mass identity at every atom.

    ``end``: sum of x' over atoms with s' <= s equals s.
    ``start``: sum of x' over atoms with s' < s equals s.
    """
    if len(pp) == 0:
        return np.empty(0)
    idx = np.argsort(pp.s)
    s, x = pp.s[idx], pp.x[idx]
    cum = np.cumsum(x)
    mass = cum if pp.anchor == "end" else cum - x
    scale = np.maximum(np.abs(s), x)
    return np.abs(mass - s) / scale


@dataclass(frozen=True)
class SBPPReport:
    n_atoms: int
    window_counts: dict
    cond1_max_rel_error: float
    cond1_ok: bool
    tail_s0: np.ndarray
    tail_sup: np.ndarray

    @property
    def tail_nonincreasing(self) -> bool:
        return bool(np.all(np.diff(self.tail_sup) <= 0))


def sbpp_conditions_check(pp: PointProcess, delta: float, s0_grid=None,
                          t_grid=None, rtol: float = 1e-9) -> SBPPReport:
    if not (0 < delta <= 1):
        raise ValueError("delta must lie in (0, 1]")
    s0 = np.linspace(0.0, 5.0, 11) if s0_grid is None else np.asarray(s0_grid, dtype=np.float64)
    tg = [1.0, 2.0, 5.0] if t_grid is None else list(t_grid)
    in_band = (pp.x >= delta) & (pp.x <= 1.0 / delta)
    counts = {float(t): int(np.sum(in_band & (pp.s <= t))) for t in tg}
    err = cond1_errors(pp)
    max_err = float(err.max()) if err.size else 0.0
    sup = np.array([pp.x[pp.s > a].max() if np.any(pp.s > a) else 0.0 for a in s0])
    return SBPPReport(len(pp), counts, max_err, max_err <= rtol, s0, sup)


def pi_n_from_exploration(res: ExplorationResult, n: int | None = None) -> PointProcess:
    """Atoms (n^{-2/3} N(tau_k-), n^{-2/3} size_{k+1}) for 0 <= k < K-1."""
    if res.mode != "size_biased":
        raise ValueError("the point process is built from the size-biased exploration")
    n = res.n if n is None else n
    c = n ** (-2.0 / 3.0)
    N = res.counting.astype(np.float64)
    K = res.K
    s = c * N[: K - 1]
    x = c * (N[1:K] - N[: K - 1])
    return PointProcess(s, x, "start")


def save_point_process(pp: PointProcess, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["s", "x"])
        for s, x in pp.atoms:
            wr.writerow([repr(s), repr(x)])


def load_point_process(path: str | Path, anchor: Anchor = "end") -> PointProcess:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return PointProcess(np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows]), anchor)
