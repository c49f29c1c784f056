from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ietflow import builtins
from ietflow.errors import BadLevel, CapExceeded, TiedLengths
from ietflow.iet import CombinatorialData, build_iet
from ietflow.induction import (
    Trace,
    brute_force_return,
    det,
    elementary,
    identity,
    iterate,
    matmul,
    matvec,
    mmy_schedule,
    periodic_blocks,
    rv_step,
    sup_norm,
    tower_bases,
    towers,
    zorich_schedule,
)
from ietflow.scalar import Quadratic

PHI = (Quadratic.sqrt(5) - 1) / 2
SWAP = CombinatorialData.from_rows("A B", "B A")


def fib(n):
    a, b = 1, 1
    for _ in range(n):
        a, b = b, a + b
    return a


def test_golden_first_step(golden):
    s = rv_step(golden)
    assert (s.eps, s.winner, s.loser) == (0, "B", "A")
    assert s.theta == ((1, 0), (1, 1))  # I + E_{B,A}
    lam = s.after.lengths
    assert lam["B"] / lam["A"] == PHI
    # unnormalized lengths (1 - phi, 2 phi - 1) = phi^2 (1, phi)
    assert s.after.lengths["A"] * s.scale == PHI ** 2
    assert s.after.lengths["B"] * s.scale == PHI ** 3


def test_euclid_step_is_subtraction():
    s = rv_step(builtins.get("euclid"))
    assert (s.eps, s.winner, s.loser) == (1, "A", "B")
    assert s.after.lengths == {"A": Fraction(1, 3), "B": Fraction(2, 3)}


def test_tie_raises_with_step_index():
    with pytest.raises(TiedLengths) as exc:
        rv_step(build_iet(SWAP, [1, 1]), 7)
    assert exc.value.step == 7


def test_rational_induction_terminates():
    tr = Trace(builtins.get("euclid"))
    with pytest.raises(TiedLengths):
        tr.extend(100)


def test_golden_winners_alternate(golden):
    steps, theta = iterate(golden, 10)
    assert [s.winner for s in steps] == ["B", "A"] * 5
    assert {s.theta for s in steps} == {elementary(2, 1, 0), elementary(2, 0, 1)}
    assert det(theta) == 1


def test_zero_steps():
    steps, theta = iterate(builtins.get("golden"), 0)
    assert steps == [] and theta == identity(2)


def test_length_identity_unnormalized(genus2):
    tr = Trace(genus2)
    tr.extend(40)
    for n in range(1, 41):
        s = tr.steps[n - 1]
        prev = [tr.stage(n - 1).lengths[a] for a in genus2.alphabet]
        cur = [tr.stage(n).lengths[a] * s.scale for a in genus2.alphabet]
        assert prev == matvec(s.theta, cur)


def test_zorich_blocks_golden(golden):
    sched = zorich_schedule(golden, 20)
    assert sched.block_lengths() == [1] * 20
    assert set(sched.norms()) == {1}


def test_zorich_blocks_sqrt2():
    sched = zorich_schedule(builtins.get("sqrt2"), 20)
    assert sched.block_lengths() == [2] * 20


def test_zorich_unbounded_quotients():
    sched = zorich_schedule(builtins.get("unbounded-quotients"), 12)
    assert sched.block_lengths() == list(range(1, 13))


def test_zorich_K0(golden):
    assert zorich_schedule(golden, 0).times == [0]


def test_mmy_equals_zorich_for_two_letters(golden):
    z, m = zorich_schedule(golden, 30), mmy_schedule(golden, 1, 30)
    assert z.times == m.times
    assert m.blocks[:2] in ([((1, 0), (1, 1)), ((1, 1), (0, 1))], [((1, 1), (0, 1)), ((1, 0), (1, 1))])


def test_mmy_bad_level(golden, genus2):
    with pytest.raises(BadLevel):
        mmy_schedule(golden, 2, 5)
    with pytest.raises(BadLevel):
        mmy_schedule(genus2, 4, 5)


def test_block_is_product_of_steps(genus2):
    tr = Trace(genus2)
    sched = mmy_schedule(tr, 3, 10)
    for (a, b), B in zip(zip(sched.times, sched.times[1:]), sched.blocks):
        P = identity(4)
        for s in tr.steps[a:b]:
            P = matmul(P, s.theta)
        assert P == B


@pytest.mark.parametrize("level", [1, 2, 3])
def test_mmy_blocks_are_maximal(genus2, level):
    tr = Trace(genus2)
    sched = mmy_schedule(tr, level, 15)
    for a, b in zip(sched.times, sched.times[1:]):
        names = {tr.steps[i].winner for i in range(a, b)}
        assert len(names) <= level
        assert len(names | {tr.steps[b].winner}) > level


@pytest.mark.xfail(strict=True, reason="MMY times at level 3 (0, 5, 10, ...) are not a subsequence of "
                                       "level 2 (0, 4, 7, 10, ...) on the genus-2 loop")
def test_mmy_times_nested(genus2):
    tr = Trace(genus2)
    t3 = mmy_schedule(tr, 3, 6).times
    t2 = set(mmy_schedule(tr, 2, 20).times)
    assert set(t3) <= t2


def test_genus2_blocks_eventually_periodic(genus2):
    tr = Trace(genus2)
    start, period = tr.find_period(40)
    assert (start, period) == (0, 10)
    k0, per, times = periodic_blocks(tr, 3, start, period)
    assert per == 2
    sched = mmy_schedule(tr, 3, 12)
    assert sched.blocks[2:] == sched.blocks[:-2]
    assert sched.norms()[:4] == [2, 4, 2, 4]


def test_towers_stage0(golden):
    td = towers(zorich_schedule(golden, 3), 0)
    assert td.heights == {"A": 1, "B": 1}
    assert td.unscaled_lengths() == golden.lengths


def test_golden_heights_are_fibonacci(golden):
    sched = zorich_schedule(golden, 25)
    for k in range(1, 26):
        h = sorted(towers(sched, k).heights.values())
        assert h == [fib(k), fib(k + 1)]


@pytest.mark.parametrize("name", builtins.CANONICAL)
def test_tiling_identity(name):
    T = builtins.get(name)
    tr = Trace(T)
    for n in range(0, 60, 3):
        S, s = tr.stage(n), tr.scale(n)
        assert sum((h * s * S.lengths[a] for a, h in zip(T.alphabet, tr.heights(n))), 0) == 1


def test_return_time_full_interval(golden):
    assert brute_force_return(golden, (0, 1), Fraction(1, 3), 5)[0] == 1


def test_return_time_cap(golden):
    tr = Trace(golden)
    base = tower_bases(tr, 12)
    a, b = base["A"]
    with pytest.raises(CapExceeded):
        brute_force_return(golden, (0, tr.scale(12)), (a + b) / 2, 3)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(1, 2 ** 20 - 1))
def test_return_time_equals_tower_height(k, u):
    T = builtins.get("golden")
    sched = zorich_schedule(T, 12)
    n = sched.times[k]
    tr = sched.trace
    heights = dict(zip(T.alphabet, tr.heights(n)))
    for a, (lo, hi) in tower_bases(tr, n).items():
        x = lo + (hi - lo) * Fraction(u, 2 ** 20)
        assert brute_force_return(T, (0, tr.scale(n)), x, 10 ** 5)[0] == heights[a]


def test_sup_norm():
    assert sup_norm(((1, 3), (2, 0))) == 3
