import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ietflow import builtins
from ietflow.errors import BadIndex, CertificateMismatch, NotPrimitive, ZeroEntry
from ietflow.induction import Trace
from ietflow.regularity import (
    audit_constant,
    balance_audit,
    balanced_verdict,
    bounded_type_certificate,
    find_quadratic_loop,
    gap_profile,
    head_profile,
    orbit_profile,
    partition_gaps,
    perron_root,
    self_similar,
    veech_nu,
)
from ietflow.scalar import Quadratic

PHI = (Quadratic.sqrt(5) - 1) / 2


def test_veech_all_ones():
    assert veech_nu(((1, 1), (1, 1))) == (1, 1, 1)


def test_veech_ratios():
    assert veech_nu(((2, 1), (1, 1))) == (2, 2, 2)


def test_veech_zero_entry():
    with pytest.raises(ZeroEntry):
        veech_nu(((1, 0), (1, 1)))


def test_certificate_golden(golden):
    cert = bounded_type_certificate(golden, 50)
    assert cert.norms == [1] * 50 and cert.C_K == 1
    assert cert.periodic["period"] == 2
    assert cert.certified
    assert cert.to_json()["certified"] is True


def test_certificate_single_block(golden):
    cert = bounded_type_certificate(golden, 1)
    assert cert.K == 1 and cert.C_K == cert.norms[0] == 1


def test_certificate_unbounded():
    cert = bounded_type_certificate(builtins.get("unbounded-quotients"), 20)
    assert cert.C_K >= 10
    assert cert.norms == list(range(1, 21))
    assert not cert.certified


def test_certificate_genus2(genus2):
    cert = bounded_type_certificate(genus2, 30)
    assert cert.certified and cert.C_K == 4 and cert.bound == 4
    assert cert.periodic["period"] == 2 and cert.periodic["raw_period"] == 10


@pytest.mark.parametrize("name", ["golden", "sqrt2", "genus2-loop"])
def test_inverse_gives_same_certificate_verdict(name):
    T = builtins.get(name)
    a, b = bounded_type_certificate(T, 20), bounded_type_certificate(T.inverse(), 20)
    assert a.certified == b.certified


def test_certificate_K0(golden):
    with pytest.raises(BadIndex):
        bounded_type_certificate(golden, 0)


def test_three_distance_orbit_of_zero(golden):
    assert len(set(partition_gaps(golden, 5, scope="orbit", x=0).gaps)) <= 3


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 60), st.integers(0, 2 ** 30))
def test_three_distance_any_point(n, u):
    T = builtins.get("golden")
    g = partition_gaps(T, n, scope="orbit", x=Fraction(u, 2 ** 30 + 1))
    assert len(set(g.gaps)) <= 3
    assert sum(g.gaps) == 1


def test_single_point_partition(golden):
    assert partition_gaps(golden, 1, scope="orbit", x=Fraction(1, 7)).gaps == [1]


def test_golden_all_letters_small_n(golden):
    g = partition_gaps(golden, 10, 0, "all")
    assert g.min >= Fraction(1, 50)


def test_bad_window(golden):
    with pytest.raises(BadIndex):
        partition_gaps(golden, 5, 5, "all")


@pytest.mark.parametrize("name", ["golden", "genus2-loop"])
def test_profile_matches_exact_windows(name):
    T = builtins.get(name)
    prof = gap_profile(T, 24)
    for n in range(1, 25):
        for scope, sp in (("all", prof.all),):
            gaps = [partition_gaps(T, n, j, scope) for j in range(n)]
            assert math.isclose(sp.min_gap[n], float(min(g.min for g in gaps)), abs_tol=1e-13)
            assert math.isclose(sp.max_gap[n], float(max(g.max for g in gaps)), abs_tol=1e-13)
        per_letter = [partition_gaps(T, n, j, a) for j in range(n) for a in T.alphabet]
        assert math.isclose(prof.letters.min_gap[n], float(min(g.min for g in per_letter)), abs_tol=1e-13)
        assert math.isclose(prof.letters.max_gap[n], float(max(g.max for g in per_letter)), abs_tol=1e-13)


def test_orbit_profile_three_distance(golden):
    prof = orbit_profile(golden, Fraction(1, 3), 300)
    n = np.arange(1, 301)
    c = np.maximum(1 / (n * prof.min_gap[1:]), n * prof.max_gap[1:])
    assert c.max() < 3


def test_balanced_pass_and_fail(golden):
    assert balanced_verdict(golden, 5, 500).passed
    v = balanced_verdict(golden, 1.01, 10)
    assert not v.passed
    n, j, scope, gap = v.witness
    assert n * gap <= 1 / 1.01 or n * gap >= 1.01
    # at n = 1 the all-letters partition is cut at every l_a, so its gaps are the lengths
    assert partition_gaps(golden, 1, 0, "A").gaps == [1]
    assert not balanced_verdict(golden, 1.5, 1).passed
    assert balanced_verdict(golden, 2.7, 1).passed


@pytest.mark.parametrize("name", ["golden", "sqrt2", "genus2-loop"])
def test_head_profile_bounded_below(name):
    h = head_profile(builtins.get(name), 2000)
    assert np.nanmin(h) > 0.02


@pytest.mark.xfail(strict=True, reason="measured inf n*min P_{n,0} / value at n=10 is 0.287 at n <= 2000")
def test_head_profile_decay_witness():
    h = head_profile(builtins.get("unbounded-quotients"), 2000)
    assert np.nanmin(h) < 0.1 * h[10]


def test_head_profile_decays_for_unbounded():
    h = head_profile(builtins.get("unbounded-quotients"), 2000)
    bounded = head_profile(builtins.get("golden"), 2000)
    ratio = np.nanmin(h) / h[10]
    assert ratio < 0.3
    assert ratio < np.nanmin(bounded) / bounded[10]


def test_audit_golden_needs_two(golden):
    tr = Trace(golden)
    cert = bounded_type_certificate(golden, 30, tr)
    assert not balance_audit(golden, 30, 1, cert, tr).passed
    assert audit_constant(cert, tr) == 2
    assert balance_audit(golden, 30, 2, cert, tr).passed


def test_audit_rejects_C_below_certificate(golden):
    with pytest.raises(CertificateMismatch):
        balance_audit(golden, 10, Fraction(1, 2))


@pytest.mark.parametrize("name", builtins.CANONICAL)
def test_audit_passes_at_audit_constant(name):
    T = builtins.get(name)
    tr = Trace(T)
    cert = bounded_type_certificate(T, 20, tr)
    assert balance_audit(T, 20, audit_constant(cert, tr), cert, tr).passed


def test_swap_loop_recovers_golden(golden):
    ss = self_similar(builtins.SWAP, (0, 1))
    assert ss.T == golden
    assert ss.root == 1 / PHI ** 2
    assert perron_root(ss.matrix)[1] == [1, -3, 1]


def test_empty_loop():
    with pytest.raises(NotPrimitive):
        self_similar(builtins.SWAP, ())


def test_genus2_loop_is_first_quadratic_loop():
    assert find_quadratic_loop(builtins.GENUS2, 10) == builtins.GENUS2_LOOP


def test_genus2_lengths(genus2):
    r5 = Quadratic.sqrt(5)
    assert genus2.lengths == {
        "A": (7 - 3 * r5) / 2,
        "B": (-4 + 2 * r5) / 3,
        "C": (-4 + 2 * r5) / 3,
        "D": (1 + r5) / 6,
    }
    ss = self_similar(builtins.GENUS2, builtins.GENUS2_LOOP)
    assert ss.root == (7 + 3 * r5) / 2
