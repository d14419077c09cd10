"""Weight sequences for rank-1 random graphs in the critical window.

A weight sequence is the vector ``w`` of vertex weights. Edge ``{u, v}`` is
present with probability ``1 - exp(-t_n w_u w_v / ell1)`` where
``t_n = 1 + lambda * n**(-1/3)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


def _fsum(x: np.ndarray) -> float:
    # correctly rounded; r1/r2 multiply the cancellation error by n^{1/3}
    return math.fsum(x.tolist())


@dataclass(frozen=True)
class WeightSequence:
    w: np.ndarray
    n: int = field(init=False)
    ell1: float = field(init=False)
    ell2sq: float = field(init=False)
    ell3cu: float = field(init=False)
    wmax: float = field(init=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weight sequence must be a nonempty vector")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("weights must be finite and strictly positive")
        w.setflags(write=False)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "n", int(w.size))
        object.__setattr__(self, "ell1", _fsum(w))
        object.__setattr__(self, "ell2sq", _fsum(w * w))
        object.__setattr__(self, "ell3cu", _fsum(w * w * w))
        object.__setattr__(self, "wmax", float(w.max()))

    def __len__(self) -> int:
        return self.n

    def t_n(self, lam: float) -> float:
        return 1.0 + lam * self.n ** (-1.0 / 3.0)

    def edge_probability(self, u, v, lam: float):
        """Connection probability of the pair(s) (u, v)."""
        x = self.t_n(lam) * self.w[u] * self.w[v] / self.ell1
        return -np.expm1(-x)


@dataclass(frozen=True)
class ModelParams:
    lam: float
    mu: float
    mu_prime: float

    def __post_init__(self):
        if not (self.mu > 0 and self.mu_prime > 0):
            raise ValueError("mu and mu_prime must be positive")
        if self.mu > 1 + 1e-12:
            raise ValueError(f"mu must be <= 1, got {self.mu}")


@dataclass(frozen=True)
class CriticalityReport:
    r1: float
    r2: float
    r3: float
    rmax: float

    def within(self, thresholds: dict) -> bool:
        """True when |r1|, |r2|, |r3| and rmax are all at most their thresholds."""
        return all(abs(getattr(self, key)) <= float(limit) for key, limit in thresholds.items())

    def as_dict(self) -> dict:
        return {"r1": self.r1, "r2": self.r2, "r3": self.r3, "rmax": self.rmax}


DEFAULT_THRESHOLDS = {"r1": 0.5, "r2": 0.5, "r3": 0.5, "rmax": 0.5}


def make_constant(n: int) -> WeightSequence:
    if n < 1:
        raise ValueError("n must be >= 1")
    return WeightSequence(np.ones(int(n)))


def two_point_probability(a: float, b: float) -> float:
    """Mass p at ``a`` making E[W] = E[W^2] for the law p*delta_a + (1-p)*delta_b."""
    if not (0 < a < b):
        raise ValueError("two-point family needs 0 < a < b")
    # p*a(1-a) + (1-p)*b(1-b) = 0
    da, db = a * (a - 1.0), b * (b - 1.0)
    if da == db:
        raise ValueError("no valid two-point mixture")
    p = db / (db - da)
    if not (0.0 < p < 1.0):
        raise ValueError(f"no two-point mixture with p in (0,1) for a={a}, b={b}")
    return p


def make_two_point(n: int, a: float, b: float, lam: float = 0.0) -> tuple[WeightSequence, ModelParams]:
    if n < 1:
        raise ValueError("n must be >= 1")
    p = two_point_probability(a, b)
    n_a = int(round(p * n))  # round-half-even
    w = np.concatenate([np.full(n_a, float(a)), np.full(n - n_a, float(b))])
    mu = p * a + (1 - p) * b
    mu_prime = p * a**3 + (1 - p) * b**3
    return WeightSequence(w), ModelParams(lam, mu, mu_prime)


def criticality_report(w: WeightSequence, p: ModelParams) -> CriticalityReport:
    n = w.n
    c = n ** (1.0 / 3.0)
    return CriticalityReport(
        r1=c * (w.ell1 / n - p.mu),
        r2=c * (w.ell2sq / n - p.mu),
        r3=w.ell3cu / n - p.mu_prime,
        rmax=w.wmax / c,
    )


def renormalize_to_critical(w: WeightSequence) -> tuple[WeightSequence, float]:
    scale = w.ell1 / w.ell2sq
    return WeightSequence(scale * w.w), scale


def aldous_parameters(w: WeightSequence, p: ModelParams) -> tuple[np.ndarray, float, float]:
    """Rescaled weights x, intensity q and window location so that
    ``1 - exp(-q x_i x_j)`` is the edge probability."""
    n = w.n
    a_n = p.mu_prime ** (1.0 / 3.0) / (p.mu * n ** (2.0 / 3.0))
    x = a_n * w.w
    q = (1.0 + p.lam * n ** (-1.0 / 3.0)) / (a_n * a_n * w.ell1)
    t_aldous = p.mu_prime ** (-2.0 / 3.0) * p.mu * p.lam
    return x, q, t_aldous


def params_from_sequence(w: WeightSequence, lam: float = 0.0) -> ModelParams:
    """Empirical moments of a custom sequence used as its limiting parameters."""
    return ModelParams(lam, w.ell1 / w.n, w.ell3cu / w.n)


def load_weights(path: str | Path) -> WeightSequence:
    values = [float(tok) for tok in Path(path).read_text().split()]
    return WeightSequence(np.array(values))


def save_weights(w: WeightSequence, path: str | Path) -> None:
    Path(path).write_text("".join(f"{x!r}\n" for x in w.w.tolist()))


@dataclass(frozen=True)
class Family:
    """A named weight family; ``build(n)`` gives the sequence and its limiting parameters."""

    name: str
    params: dict = field(default_factory=dict)

    def build(self, n: int, lam: float = 0.0) -> tuple[WeightSequence, ModelParams]:
        if self.name == "constant":
            return make_constant(n), ModelParams(lam, 1.0, 1.0)
        if self.name == "two_point":
            a = float(self.params.get("a", 0.5))
            b = float(self.params.get("b", 2.0))
            return make_two_point(n, a, b, lam)
        if self.name == "file":
            w = load_weights(self.params["path"])
            if n is not None and w.n != n:
                raise ValueError(f"weights file holds {w.n} weights, requested n={n}")
            return w, params_from_sequence(w, lam)
        raise ValueError(f"unknown weight family {self.name!r}")

    def describe(self) -> dict:
        return {"name": self.name, **{k: self.params[k] for k in sorted(self.params)}}


FAMILIES = ("constant", "two_point", "file")
