import math
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ietflow import scalar as sc
from ietflow.errors import MixedFieldError, PrecisionExhausted
from ietflow.scalar import Ball, Quadratic

ints = st.integers(-50, 50)
quads = st.builds(lambda a, b, q: Quadratic(a, b, q, 5), ints, ints, st.integers(1, 30))


def test_sqrt5_squares_to_5():
    r = Quadratic.sqrt(5)
    assert r * r == 5
    assert (r * r).is_rational


def test_canonical_form_reduces_gcd():
    q = Quadratic(2, 4, 6, 5)
    assert (q.a, q.b, q.q) == (1, 2, 3)
    q = Quadratic(1, 1, -2, 5)
    assert q.q == 2 and q.a == -1


def test_non_squarefree_radicand_is_reduced():
    assert Quadratic(0, 1, 1, 20) == 2 * Quadratic.sqrt(5)


def test_mixed_fields_raise():
    with pytest.raises(MixedFieldError):
        Quadratic.sqrt(2) + Quadratic.sqrt(5)


def test_golden_identities():
    phi = (Quadratic.sqrt(5) - 1) / 2
    assert phi * phi == 1 - phi
    assert 2 * phi - 1 == phi ** 3
    assert math.isclose(float(phi), (math.sqrt(5) - 1) / 2, rel_tol=1e-15)


def test_floor_and_frac():
    phi = (Quadratic.sqrt(5) - 1) / 2
    assert math.floor(10 * phi) == 6
    assert sc.frac(3 * phi) == 3 * phi - 1


@given(quads, quads)
def test_field_arithmetic_matches_floats(x, y):
    assert math.isclose(float(x + y), float(x) + float(y), abs_tol=1e-9)
    assert math.isclose(float(x * y), float(x) * float(y), rel_tol=1e-9, abs_tol=1e-9)
    if y != 0:
        assert (x / y) * y == x


@given(quads, quads)
def test_comparison_is_consistent_with_floats(x, y):
    if abs(float(x) - float(y)) > 1e-9:
        assert (x < y) == (float(x) < float(y))


@given(quads)
def test_canonical_after_operations(x):
    for v in (x + 1, x * x, x - Fraction(1, 3)):
        assert v.q > 0
        assert math.gcd(math.gcd(v.a, v.b), v.q) == 1


@given(st.one_of(quads, st.fractions(max_denominator=1000)))
def test_json_round_trip(x):
    assert sc.from_json(sc.to_json(x)) == x


def test_ball_comparison_refuses_when_undecidable():
    a = Ball(1, 53, rad=1e-3)
    assert a > 0
    with pytest.raises(PrecisionExhausted):
        a < 1 + 1e-4  # noqa: B015


def test_ball_tracks_arithmetic():
    a = Ball(Fraction(1, 3), 80)
    b = a * 3 - 1
    assert abs(float(b.mid)) <= float(b.rad)
