"""Empirical distribution tools and the experiment report container.

The experiment drivers live in :mod:`critgraph.experiments` and are
re-exported here lazily.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import special, stats as sps


class Ecdf:
    def __init__(self, sample):
        x = np.sort(np.asarray(sample, dtype=np.float64))
        if x.size == 0:
            raise ValueError("empty sample")
        self.x = x

    def __call__(self, t):
        return np.searchsorted(self.x, t, side="right") / self.x.size

    def __len__(self) -> int:
        return self.x.size


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample Kolmogorov-Smirnov distance and its asymptotic p-value."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    D = float(np.max(np.abs(fa - fb)))
    en = math.sqrt(a.size * b.size / (a.size + b.size))
    # Stephens' small-sample correction of the Kolmogorov limit law
    p = float(special.kolmogorov((en + 0.12 + 0.11 / en) * D))
    return D, min(max(p, 0.0), 1.0)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    ci = sps.binomtest(int(successes), int(trials)).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.low), float(ci.high)


def z_score(mean: float, target: float, se: float) -> float:
    if se == 0:
        return 0.0 if mean == target else math.copysign(math.inf, mean - target)
    return (mean - target) / se


def mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    if x.size < 2:
        return float(x.mean()) if x.size else math.nan, math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def chi_square_pvalue(observed, expected_probs) -> float:
    observed = np.asarray(observed, dtype=np.float64)
    expected = np.asarray(expected_probs, dtype=np.float64) * observed.sum()
    return float(sps.chisquare(observed, expected).pvalue)


def _clean(v):
    if isinstance(v, dict):
        return {str(k): _clean(v[k]) for k in v}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v)
    return v


@dataclass
class Gate:
    name: str
    statistic: float
    threshold: float
    op: str  # "<=", ">=", "<", ">"
    detail: str = ""

    @property
    def passed(self) -> bool:
        s, t = self.statistic, self.threshold
        return {"<=": s <= t, ">=": s >= t, "<": s < t, ">": s > t}[self.op]

    def as_dict(self) -> dict:
        return {"name": self.name, "statistic": self.statistic, "threshold": self.threshold,
                "op": self.op, "passed": self.passed, "detail": self.detail}


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    tables: dict = field(default_factory=dict)
    gates: list = field(default_factory=list)
    replicates: dict = field(default_factory=dict)
    flagged: dict = field(default_factory=dict)
    samples: dict = field(default_factory=dict)  # raw per-replicate arrays, not serialized

    @property
    def passed(self) -> bool:
        return all(g.passed for g in self.gates)

    def table(self, name: str) -> list[dict]:
        return self.tables[name]

    def add_rows(self, name: str, rows: list[dict]) -> None:
        self.tables.setdefault(name, []).extend(rows)

    def as_dict(self) -> dict:
        return _clean({
            "experiment": self.experiment,
            "config": self.config,
            "tables": self.tables,
            "gates": [g.as_dict() for g in self.gates],
            "replicates": self.replicates,
            "flagged": self.flagged,
            "passed": self.passed,
        })

    def to_json(self) -> str:
        return json.dumps(self.as_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, outdir: str | Path, ecdf: dict | None = None) -> list[Path]:
        """report.json, one CSV per table and optional ECDF .dat files."""
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        written = [outdir / "report.json"]
        written[0].write_text(self.to_json())
        for name, rows in sorted(self.tables.items()):
            if not rows:
                continue
            cols = list(rows[0].keys())
            for r in rows[1:]:
                cols += [c for c in r if c not in cols]
            p = outdir / f"{name}.csv"
            with open(p, "w", newline="") as fh:
                wr = csv.DictWriter(fh, fieldnames=cols)
                wr.writeheader()
                for r in rows:
                    wr.writerow({c: _fmt(r.get(c, "")) for c in cols})
            written.append(p)
        for name, sample in sorted((ecdf or {}).items()):
            p = outdir / f"ecdf_{name}.dat"
            write_ecdf_dat(sample, p)
            written.append(p)
        return written

    def summary_lines(self) -> list[str]:
        lines = [f"experiment {self.experiment}: replicates {self.replicates}"]
        if self.flagged:
            lines.append(f"flagged {self.flagged}")
        for g in self.gates:
            lines.append(f"{'PASS' if g.passed else 'FAIL'}  {g.name}: {g.statistic:.6g} {g.op} {g.threshold:.6g}"
                         + (f"  ({g.detail})" if g.detail else ""))
        return lines


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def write_ecdf_dat(sample, path: str | Path) -> None:
    """Two columns (x, F(x)) at every sample point, gnuplot-ready."""
    x = np.sort(np.asarray(sample, dtype=np.float64))
    F = np.arange(1, x.size + 1) / x.size
    with open(path, "w") as fh:
        fh.write("# x F\n")
        for a, b in zip(x.tolist(), F.tolist()):
            fh.write(f"{a!r} {b!r}\n")


_LAZY = {
    "run_theorem_1_1", "run_ranking_consistency", "run_walk_convergence",
    "run_root_lln", "run_counting_lln", "run_oracle_equivalence",
}


def __getattr__(name):
    if name in _LAZY:
        from . import experiments
        return getattr(experiments, name)
    raise AttributeError(name)
