import numpy as np
import pytest
from hypothesis import given, strategies as st

from critgraph.exploration import explore, sample_clocks
from critgraph.sbpp import (
    PointProcess, cond1_errors, generate, load_point_process, ord as ord_, pi_n_from_exploration,
    save_point_process, sbpp_conditions_check,
)
from critgraph.stats import chi_square_pvalue
from critgraph.streams import seed_streams
from critgraph.weights import make_two_point

positive = st.lists(st.floats(1e-3, 100.0), min_size=0, max_size=30)


def test_single_atom():
    pp = generate([2.5], np.random.default_rng(0))
    assert pp.atoms == [(2.5, 2.5)]


def test_two_entries_both_orders():
    seen = set()
    for seed in range(200):
        pp = generate([2.0, 1.0], np.random.default_rng(seed))
        seen.add(tuple(pp.atoms))
        assert np.all(cond1_errors(pp) == 0)
    assert seen == {((2.0, 2.0), (3.0, 1.0)), ((1.0, 1.0), (3.0, 2.0))}


@given(positive, st.integers(0, 2**32 - 1))
def test_ord_inverts_generate(X, seed):
    pp = generate(X, np.random.default_rng(seed))
    assert ord_(pp).tolist() == sorted(X, reverse=True)
    assert np.all(cond1_errors(pp) <= 1e-9)


def test_ord_examples():
    assert ord_(PointProcess([], [])).size == 0
    assert ord_(PointProcess([1.0, 3.0], [1.0, 2.0])).tolist() == [2.0, 1.0]
    assert generate([0.0, 0.0], np.random.default_rng(0)).atoms == []


def test_first_atom_is_size_biased():
    X = np.array([1.0, 2.0, 3.0, 4.0])
    reps = 10**5
    first = np.zeros(4)
    for r in range(reps):
        pp = generate(X, seed_streams(11, r, "sbpp"))
        first[int(np.flatnonzero(X == pp.x[0])[0])] += 1
    assert chi_square_pvalue(first, X / X.sum()) > 1e-3


def test_invalid_processes():
    with pytest.raises(ValueError):
        PointProcess([1.0, 1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        PointProcess([1.0], [0.0])
    with pytest.raises(ValueError):
        PointProcess([1.0], [1.0], "middle")
    with pytest.raises(ValueError):
        generate([-1.0], np.random.default_rng(0))


def test_conditions_report():
    pp = generate(np.arange(1.0, 11.0), np.random.default_rng(2))
    rep = sbpp_conditions_check(pp, 0.2, s0_grid=np.linspace(0, 60, 13))
    assert rep.cond1_ok and rep.n_atoms == 10
    assert rep.tail_nonincreasing
    assert rep.window_counts[5.0] <= 10
    with pytest.raises(ValueError):
        sbpp_conditions_check(pp, 0.0)


def _exploration(n=3000, seed=0):
    w, _ = make_two_point(n, 0.5, 2.0)
    return explore(w, sample_clocks(w, 0.0, np.random.default_rng(seed)), "size_biased")


def test_pi_n_atoms():
    res = _exploration()
    n = res.n
    pp = pi_n_from_exploration(res)
    assert len(pp) == res.K - 1
    assert np.allclose(pp.x * n ** (2 / 3), res.sizes[:-1])
    assert np.all(cond1_errors(pp) <= 1e-9)
    assert pp.x.sum() == pytest.approx((n - res.sizes[-1]) * n ** (-2 / 3))
    ranked = np.sort(res.sizes[:-1])[::-1]
    assert np.allclose(ord_(pp) * n ** (2 / 3), ranked)


def test_pi_n_tail_recorded():
    pp = pi_n_from_exploration(_exploration(20000, 1))
    rep = sbpp_conditions_check(pp, 0.1, s0_grid=[0.0, 3.0])
    assert rep.tail_sup[1] <= rep.tail_sup[0]


def test_pi_n_rejects_weight_biased():
    w, _ = make_two_point(100, 0.5, 2.0)
    res = explore(w, sample_clocks(w, 0.0, np.random.default_rng(0)), "weight_biased")
    with pytest.raises(ValueError):
        pi_n_from_exploration(res)


def test_csv_roundtrip(tmp_path):
    pp = generate([1.5, 0.25, 3.0], np.random.default_rng(4))
    save_point_process(pp, tmp_path / "pp.csv")
    back = load_point_process(tmp_path / "pp.csv")
    assert back.atoms == pp.atoms
