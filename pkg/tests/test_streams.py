import numpy as np
import pytest

from critgraph.streams import ROLES, seed_streams, stream_id


def test_same_key_same_stream():
    a = seed_streams(42, 0, "clocks").random(1000)
    b = seed_streams(42, 0, "clocks").random(1000)
    assert np.array_equal(a, b)


def test_replicates_do_not_collide():
    a = seed_streams(42, 0, "clocks").integers(0, 2**63, 10**4, dtype=np.int64)
    b = seed_streams(42, 1, "clocks").integers(0, 2**63, 10**4, dtype=np.int64)
    assert np.intersect1d(a, b).size == 0


def test_roles_are_separate():
    draws = {role: seed_streams(42, 0, role).random(8).tobytes() for role in ROLES}
    assert len(set(draws.values())) == len(ROLES)


def test_master_seeds_separate():
    assert not np.array_equal(seed_streams(1, 0, "limit").random(8), seed_streams(2, 0, "limit").random(8))


def test_invalid_inputs():
    with pytest.raises(ValueError):
        seed_streams(42, 0, "nope")
    with pytest.raises(ValueError):
        seed_streams(-1, 0, "clocks")
    assert stream_id(42, 3, "sbpp") == (42, 3, ROLES["sbpp"])
