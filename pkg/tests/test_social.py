from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from msnsim.social import (
    DecayParams,
    MachineProfile,
    Weights,
    connection_strength,
    decayed_strength,
    interest_similarity,
    link_expiry_step,
    neighbor_similarity,
    should_connect,
    spatial_similarity,
)


def prof(id=0, location=0, interests=(), followees=()):
    return MachineProfile(id=id, location=location, interests=frozenset(interests), followees=frozenset(followees))


def brute_overlap(mine, theirs) -> float:
    mine = list(mine)
    if not mine:
        return 0.0
    shared = 0
    for x in mine:
        for y in theirs:
            if x == y:
                shared += 1
                break
    return shared / len(mine)


def brute_expiry(a: float, c_th: float) -> int:
    # high-precision scan, independent of the float predicate
    t = 1
    while not mpmath.exp(-mpmath.mpf(a) * t) < mpmath.mpf(c_th):
        t += 1
    return t


# --- interest / neighbor axes -------------------------------------------------


def test_interest_similarity_examples():
    assert interest_similarity(prof(interests={1, 2, 3, 4, 5}), prof(1, interests={3, 4, 5, 6, 7})) == 0.6
    assert interest_similarity(prof(interests={1, 2, 3}), prof(1, interests={1, 2, 3})) == 1.0
    assert interest_similarity(prof(interests=()), prof(1, interests={1})) == 0.0


def test_interest_similarity_is_asymmetric():
    i, j = prof(interests={1, 2}), prof(1, interests={1, 2, 3, 4})
    assert interest_similarity(i, j) == 1.0
    assert interest_similarity(j, i) == 0.5


def test_neighbor_similarity_examples():
    a, b, c, d = "abcd"
    assert neighbor_similarity(prof(followees={a, b, c}), prof(1, followees={b, c, d})) == pytest.approx(2 / 3)
    assert neighbor_similarity(prof(followees=()), prof(1, followees={a})) == 0.0
    assert neighbor_similarity(prof(followees={a, b}), prof(1, followees={a, b})) == 1.0


sets = st.frozensets(st.integers(0, 11))


@given(sets, sets)
def test_overlaps_match_enumeration(x, y):
    assert interest_similarity(prof(interests=x), prof(1, interests=y)) == brute_overlap(x, y)
    fx, fy = x - {100}, y - {101}
    assert neighbor_similarity(prof(100, followees=fx), prof(101, followees=fy)) == brute_overlap(fx, fy)


@given(sets.filter(bool))
def test_self_similarity_is_one(x):
    p = prof(100, interests=x, followees=x)
    assert interest_similarity(p, p) == 1.0
    assert neighbor_similarity(p, p) == 1.0


def test_profile_rejects_self_follow():
    with pytest.raises(ValueError, match="follow itself"):
        prof(3, followees={3})


# --- spatial axis ---------------------------------------------------------------


@pytest.mark.parametrize("max_dist", [1, 9, 42.5])
def test_spatial_same_subspace_is_one(max_dist):
    assert spatial_similarity(prof(location=4), prof(1, location=4), max_dist) == 1.0


def test_spatial_examples():
    assert spatial_similarity(prof(location=2), prof(1, location=5), 9) == pytest.approx(2 / 3)
    assert spatial_similarity(prof(location=0), prof(1, location=9), 9) == 0.0


def test_spatial_errors():
    with pytest.raises(ValueError, match="max_dist"):
        spatial_similarity(prof(), prof(1), 0)
    with pytest.raises(ValueError, match="exceeds"):
        spatial_similarity(prof(location=0), prof(1, location=10), 9)


# --- combined strength --------------------------------------------------------


def test_connection_strength_equal_weights():
    a, b, c, d = "abcd"
    i = prof("i", location=2, interests={1, 2, 3, 4, 5}, followees={a, b})
    j = prof("j", location=5, interests={3, 4, 5, 6, 7}, followees={b, c, d})
    s = connection_strength(i, j, Weights(1 / 3, 1 / 3, 1 / 3), 9)
    assert (s.interest, s.neighbor) == (0.6, 0.5)
    assert s.spatial == pytest.approx(2 / 3)
    expected = (Fraction(3, 5) + Fraction(2, 3) + Fraction(1, 2)) / 3
    assert s.total == pytest.approx(float(expected), abs=1e-12)
    assert s.total == pytest.approx(0.58889, abs=1e-5)


def test_connection_strength_degenerate_weights():
    i = prof("i", location=0, interests={1, 2, 3}, followees={"x"})
    j = prof("j", location=9, interests={1, 7}, followees={"y"})
    s = connection_strength(i, j, Weights(1.0, 0.0, 0.0), 9)
    assert s.total == s.interest == 1 / 3


def test_connection_strength_identical_machines():
    i = prof("i", location=3, interests={1, 2}, followees={"x", "y"})
    j = prof("j", location=3, interests={1, 2}, followees={"x", "y"})
    assert connection_strength(i, j, Weights(), 9).total == pytest.approx(1.0, abs=1e-12)


weights_st = st.tuples(st.integers(0, 100), st.integers(0, 100), st.integers(0, 100)).filter(sum).map(
    lambda t: Weights(t[0] / sum(t), t[1] / sum(t), 1 - t[0] / sum(t) - t[1] / sum(t))
)


@given(weights_st, sets, sets, sets, sets, st.integers(0, 9), st.integers(0, 9))
def test_strength_bounds_and_threshold_zero(w, ix, iy, fx, fy, lx, ly):
    i = prof(100, lx, ix, fx)
    j = prof(101, ly, iy, fy)
    s = connection_strength(i, j, w, 9)
    for v in (s.interest, s.spatial, s.neighbor):
        assert 0.0 <= v <= 1.0
    assert -1e-12 <= s.total <= 1.0 + 1e-12
    assert should_connect(s.total, 0.0)


@given(weights_st, st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_strength_monotone_in_each_axis(w, a, b, c, bump):
    def total(x, y, z):
        return w.interest * x + w.spatial * y + w.neighbor * z

    hi = min(1.0, a + bump)
    assert total(hi, b, c) >= total(a, b, c)
    hi = min(1.0, b + bump)
    assert total(a, hi, c) >= total(a, b, c)
    hi = min(1.0, c + bump)
    assert total(a, b, hi) >= total(a, b, c)


def test_weights_must_sum_to_one():
    Weights(0.5, 0.25, 0.25)
    with pytest.raises(ValueError, match="Weights"):
        Weights(0.3, 0.3, 0.3)
    with pytest.raises(ValueError, match="Weights"):
        Weights(1.5, -0.5, 0.0)


# --- threshold and decay ----------------------------------------------------------


@pytest.mark.parametrize("c_ij,c_th,expected", [(0.5, 0.5, True), (0.0, 0.0, True), (0.44, 0.45, False)])
def test_should_connect(c_ij, c_th, expected):
    assert should_connect(c_ij, c_th) is expected


def test_decayed_strength_examples():
    assert decayed_strength(0, 0.37) == 1.0
    assert decayed_strength(8, 0.1) == pytest.approx(float(mpmath.exp(-0.8)), rel=1e-14)
    assert decayed_strength(8, 0.1) == pytest.approx(0.4493, abs=5e-5)
    assert decayed_strength(1, 1.0) == pytest.approx(0.3679, abs=5e-5)


def test_decayed_strength_scaled():
    assert decayed_strength(2, 0.5, initial=0.6) == pytest.approx(0.6 * math.exp(-1.0))


@given(st.integers(0, 500), st.floats(0.001, 5))
def test_decay_strictly_decreasing(dt, a):
    here = decayed_strength(dt, a)
    if here > 0:
        assert decayed_strength(dt + 1, a) < here
        assert decayed_strength(dt + 1, a * 1.5) < decayed_strength(dt + 1, a)


def test_link_expiry_examples():
    assert brute_expiry(0.1, 0.45) == 8
    assert link_expiry_step(0.1, 0.45) == 8
    assert link_expiry_step(1.0, math.exp(-1)) == 2
    assert link_expiry_step(0.3, 0.0) == math.inf
    assert link_expiry_step(0.3, 1.0) == 1


def test_link_expiry_errors():
    with pytest.raises(ValueError):
        link_expiry_step(0.0, 0.5)
    with pytest.raises(ValueError):
        link_expiry_step(0.1, 1.2)


GRID_A = [0.01, 0.05, 0.1, 0.2, 0.37, 0.5, 1.0, 1.5, 2.0]
GRID_C = [round(0.05 + 0.05 * k, 2) for k in range(19)]


@pytest.mark.parametrize("a", GRID_A)
def test_link_expiry_bracket(a):
    for c_th in GRID_C:
        t = link_expiry_step(a, c_th)
        assert decayed_strength(t, a) < c_th
        assert decayed_strength(t - 1, a) >= c_th or t == 1
        assert t == brute_expiry(a, c_th)


@settings(max_examples=200)
@given(st.floats(0.01, 2.0), st.floats(0.05, 0.95), st.floats(0.05, 1.0))
def test_scaled_expiry_bracket(a, c_th, initial):
    t = link_expiry_step(a, c_th, initial)
    assert decayed_strength(t, a, initial) < c_th
    if t > 1:
        assert decayed_strength(t - 1, a, initial) >= c_th


def test_decay_params_validation():
    with pytest.raises(ValueError, match="DecayParams"):
        DecayParams(rate=0.0)
    with pytest.raises(ValueError, match="DecayParams"):
        DecayParams(threshold=1.01)
