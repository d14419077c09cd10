"""Running infima, excursions and hitting times of paths without negative jumps.

Two path forms are supported:

* ``JumpDriftPath``: slope -1 with positive jumps. All quantities are exact
  (closed form on each linear piece).
* ``GridPath``: values on a regular grid, linearly interpolated. Crossing
  times are located by interpolation, so excursion endpoints carry O(dt)
  error.

Convention: a jump arriving exactly when the path returns to a level does
not end the excursion (the level is never attained, only touched by the
left limit).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Union

import numpy as np


@dataclass(frozen=True)
class JumpDriftPath:
    times: np.ndarray
    sizes: np.ndarray
    horizon: float

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.float64)
        s = np.asarray(self.sizes, dtype=np.float64)
        if t.shape != s.shape or t.ndim != 1:
            raise ValueError("times and sizes must be vectors of equal length")
        if t.size and (np.any(np.diff(t) <= 0) or t[0] < 0 or t[-1] > self.horizon):
            raise ValueError("jump times must be strictly increasing within [0, T]")
        if np.any(s <= 0):
            raise ValueError("jump sizes must be positive")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sizes", s)
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "_cum", np.concatenate([[0.0], np.cumsum(s)]))

    slope = -1.0

    def __call__(self, t):
        return -np.asarray(t, dtype=np.float64) + self._cum[np.searchsorted(self.times, t, side="right")]

    def left(self, t):
        return -np.asarray(t, dtype=np.float64) + self._cum[np.searchsorted(self.times, t, side="left")]

    def left_limits(self) -> np.ndarray:
        """f(t_i-) at each jump time."""
        return -self.times + self._cum[:-1]

    def restrict(self, T: float) -> "JumpDriftPath":
        keep = self.times <= T
        return JumpDriftPath(self.times[keep], self.sizes[keep], T)


@dataclass(frozen=True)
class GridPath:
    dt: float
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if v.ndim != 1 or v.size == 0 or not np.all(np.isfinite(v)):
            raise ValueError("grid values must be a finite nonempty vector")
        object.__setattr__(self, "values", v)

    @property
    def horizon(self) -> float:
        return self.dt * (self.values.size - 1)

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.size)

    def __call__(self, t):
        return np.interp(t, self.times, self.values)

    left = __call__


@dataclass(frozen=True)
class PiecewiseLinearPath:
    knots_t: np.ndarray
    knots_v: np.ndarray

    @property
    def horizon(self) -> float:
        return float(self.knots_t[-1])

    def __call__(self, t):
        return np.interp(t, self.knots_t, self.knots_v)

    left = __call__


Path_ = Union[JumpDriftPath, GridPath]


class Excursion(NamedTuple):
    g: float
    d: float

    @property
    def length(self) -> float:
        return self.d - self.g

    @property
    def is_empty(self) -> bool:
        return self.d <= self.g


EMPTY_EXCURSION = Excursion(0.0, 0.0)


@dataclass(frozen=True)
class CutoffLevels:
    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=np.float64)
        if a.ndim != 1 or a.size == 0 or a[0] != 0.0 or np.any(np.diff(a) < 0):
            raise ValueError("cutoff levels must start at 0 and be nondecreasing")
        object.__setattr__(self, "alpha", a)


# --- running infimum -------------------------------------------------------

def running_inf(f: Path_):
    if isinstance(f, GridPath):
        return GridPath(f.dt, np.minimum.accumulate(np.minimum(f.values, f.values[0])))
    if isinstance(f, JumpDriftPath):
        g, d, levels, trailing = _jump_drift_excursions(f)
        # knots: descend at slope -1 between excursions, flat across each
        kt, kv = [0.0], [0.0]
        for gi, di, li in zip(g, d, levels):
            kt += [gi, di]
            kv += [li, li]
        T = f.horizon
        if trailing is not None:
            tg, tl = trailing
            kt += [tg, T]
            kv += [tl, tl]
        elif kt[-1] < T:
            kv.append(kv[-1] - (T - kt[-1]))
            kt.append(T)
        return PiecewiseLinearPath(np.array(kt), np.array(kv))
    raise TypeError(f"unsupported path type {type(f).__name__}")


# --- hitting times ---------------------------------------------------------

def _hitting_jump_drift(h: JumpDriftPath, z: np.ndarray, T: float):
    if T < h.horizon:
        h = h.restrict(T)
    L = h.left_limits()
    fT = float(h(T))
    tau = np.full(z.shape, T)
    hit = np.zeros(z.shape, dtype=bool)
    if L.size:
        negM = -np.minimum.accumulate(L)
        # first jump whose left limit lies strictly below -z
        i = np.searchsorted(negM, z, side="right")
        inside = i < L.size
        ii = i[inside]
        tau[inside] = h.times[ii] + L[ii] + z[inside]
        hit[inside] = True
        last = h.times[-1]
    else:
        inside = np.zeros(z.shape, dtype=bool)
        last = 0.0
    tail = ~inside & (fT <= -z)
    # final stretch: linear descent from the last jump to T
    tau[tail] = T + fT + z[tail]
    hit[tail] = True
    tau[tail] = np.maximum(tau[tail], last)
    return tau, hit


def _hitting_grid(h: GridPath, z: np.ndarray, T: float):
    v = h.values
    nmax = int(np.floor(T / h.dt + 1e-9)) + 1
    v = v[:min(nmax, v.size)]
    negM = -np.minimum.accumulate(v)
    j = np.searchsorted(negM, z, side="left")
    tau = np.full(z.shape, T)
    hit = j < v.size
    jj = j[hit]
    zz = z[hit]
    prev = np.maximum(jj - 1, 0)
    denom = v[prev] - v[jj]
    frac = np.where(denom > 0, (v[prev] + zz) / np.where(denom > 0, denom, 1.0), 0.0)
    tau[hit] = np.where(jj == 0, 0.0, h.dt * (prev + frac))
    return tau, hit


def hitting_times(h: Path_, z, T: float | None = None):
    """Vectorized ``inf{t : h(t) = -z} ∧ T`` plus a flag telling whether the level was attained."""
    z = np.atleast_1d(np.asarray(z, dtype=np.float64))
    if np.any(z < 0):
        raise ValueError("levels z must be nonnegative")
    T = h.horizon if T is None else float(T)
    if isinstance(h, JumpDriftPath):
        return _hitting_jump_drift(h, z, T)
    if isinstance(h, GridPath):
        return _hitting_grid(h, z, T)
    raise TypeError(f"unsupported path type {type(h).__name__}")


def hitting_time(h: Path_, z: float, T: float | None = None) -> float:
    tau, _ = hitting_times(h, [z], T)
    return float(tau[0])


# --- excursions above the running infimum ----------------------------------

def _jump_drift_excursions(f: JumpDriftPath):
    """Start times, end times and levels of complete excursions, plus the
    (start, level) of an excursion still open at the horizon."""
    L = f.left_limits()
    if L.size == 0:
        e = np.empty(0)
        return e, e, e, None
    prevmin = np.minimum.accumulate(np.concatenate([[0.0], L]))[:-1]
    start = L < prevmin
    start[0] = True
    levels = L[start]
    g = f.times[start]
    d, hit = hitting_times(f, -levels)
    trailing = None
    if not hit[-1]:
        trailing = (float(g[-1]), float(levels[-1]))
    return g[hit], d[hit], levels[hit], trailing


def _grid_excursions(f: GridPath):
    v = f.values
    M = np.minimum.accumulate(np.minimum(v, v[0]))
    above = (v > M).astype(np.int8)
    edges = np.diff(np.concatenate([[0], above, [0]]))
    a = np.flatnonzero(edges == 1)       # first index above
    b = np.flatnonzero(edges == -1) - 1  # last index above
    trailing = None
    if b.size and b[-1] == v.size - 1:
        trailing = (f.dt * (a[-1] - 1), float(M[a[-1] - 1]))
        a, b = a[:-1], b[:-1]
    levels = M[a - 1]
    g = f.dt * (a - 1)
    num = v[b] - levels
    den = v[b] - v[b + 1]
    d = f.dt * (b + num / den)
    return g, d, levels, trailing


def excursion_arrays(f: Path_, min_length: float = 0.0):
    """(g, d, levels, trailing) with excursions in start order."""
    if isinstance(f, JumpDriftPath):
        g, d, lv, tr = _jump_drift_excursions(f)
    elif isinstance(f, GridPath):
        g, d, lv, tr = _grid_excursions(f)
    else:
        raise TypeError(f"unsupported path type {type(f).__name__}")
    if min_length > 0:
        keep = (d - g) >= min_length
        g, d, lv = g[keep], d[keep], lv[keep]
    return g, d, lv, tr


def excursions_above_inf(f: Path_, min_length: float = 0.0) -> list[Excursion]:
    g, d, _, _ = excursion_arrays(f, min_length)
    return [Excursion(float(a), float(b)) for a, b in zip(g, d)]


def rank_order(g: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Indices sorting excursions by length descending, then start ascending."""
    return np.lexsort((g, -(d - g)))


def _pad(exc: list[Excursion], k: int) -> list[Excursion]:
    return exc[:k] + [EMPTY_EXCURSION] * max(0, k - len(exc))


def ordered_excursions(f: Path_, k: int, min_length: float = 0.0) -> list[Excursion]:
    g, d, _, _ = excursion_arrays(f, min_length)
    idx = rank_order(g, d)[:k]
    return _pad([Excursion(float(g[i]), float(d[i])) for i in idx], k)


# --- cutoff-level excursions -----------------------------------------------

def cutoff_excursions(h: Path_, alpha: CutoffLevels | np.ndarray, ranked: bool = True,
                      T: float | None = None) -> list[Excursion]:
    """Pairs (tau(h, alpha_{i-1}), tau(h, alpha_i)) for each i with tau(h, alpha_i) < T."""
    if not isinstance(alpha, CutoffLevels):
        alpha = CutoffLevels(alpha)
    T = h.horizon if T is None else float(T)
    tau, _ = hitting_times(h, alpha.alpha, T)
    i = np.flatnonzero(tau[1:] < T) + 1
    g, d = tau[i - 1], tau[i]
    if ranked:
        idx = rank_order(g, d)
        g, d = g[idx], d[idx]
    return [Excursion(float(a), float(b)) for a, b in zip(g, d)]


def eps_dense_check(alpha: CutoffLevels | np.ndarray, eps: float) -> bool:
    """Whether [0, alpha_k] is covered by the open eps-balls around the levels."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    a = np.asarray(alpha.alpha if isinstance(alpha, CutoffLevels) else alpha, dtype=np.float64)
    a = np.sort(a)
    return bool(a[0] < eps and np.all(np.diff(a) < 2 * eps))


def decomposition_distance(a: list[Excursion], b: list[Excursion], k: int | None = None) -> float:
    """max over ranks of |g_a - g_b| + |d_a - d_b| for the top k excursions."""
    k = max(len(a), len(b)) if k is None else k
    a, b = _pad(list(a), k), _pad(list(b), k)
    return max((abs(x.g - y.g) + abs(x.d - y.d) for x, y in zip(a, b)), default=0.0)


# --- CSV -------------------------------------------------------------------

def save_path(f: Path_, path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        if isinstance(f, GridPath):
            wr.writerow(["time", "value"])
            for t, v in zip(f.times.tolist(), f.values.tolist()):
                wr.writerow([repr(t), repr(v)])
        else:
            wr.writerow(["time", "jump"])
            wr.writerow(["horizon", repr(f.horizon)])
            for t, s in zip(f.times.tolist(), f.sizes.tolist()):
                wr.writerow([repr(t), repr(s)])


def load_path(path: str | Path) -> Path_:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    if header == ["time", "value"]:
        t = np.array([float(r[0]) for r in body])
        v = np.array([float(r[1]) for r in body])
        dt = float(t[1] - t[0]) if t.size > 1 else 1.0
        return GridPath(dt, v)
    if header == ["time", "jump"]:
        horizon = float(body[0][1])
        t = np.array([float(r[0]) for r in body[1:]])
        s = np.array([float(r[1]) for r in body[1:]])
        return JumpDriftPath(t, s, horizon)
    raise ValueError(f"unrecognised path CSV header {header}")
