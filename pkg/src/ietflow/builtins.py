"""Named instances shipped with the package."""
from __future__ import annotations

from fractions import Fraction

from .iet import IET, CombinatorialData, build_iet
from .scalar import Quadratic

SWAP = CombinatorialData.from_rows("A B", "B A")
GENUS2 = CombinatorialData.from_rows("A B C D", "D C B A")

# Shortest closed Rauzy loop at ABCD/DCBA (lexicographically first) with a
# primitive matrix and a quadratic Perron root; regularity.find_quadratic_loop
# rediscovers it.
GENUS2_LOOP = (0, 0, 0, 1, 0, 1, 0, 1, 0, 1)

UNBOUNDED_TERMS = 60


def golden() -> IET:
    """Rotation by phi = (sqrt5 - 1)/2 as the 2-IET with lengths (1 - phi, phi)."""
    phi = (Quadratic.sqrt(5) - 1) / 2
    return build_iet(SWAP, [1 - phi, phi])


def sqrt2() -> IET:
    """2-IET with lengths proportional to (1, sqrt2 - 1); all Zorich blocks have length 2."""
    return build_iet(SWAP, [1, Quadratic.sqrt(2) - 1])


def continued_fraction(terms):
    """Value of [0; a_1, a_2, ...] as a Fraction."""
    x = Fraction(0)
    for a in reversed(terms):
        x = 1 / (a + x)
    return x


def unbounded_quotients(terms=UNBOUNDED_TERMS) -> IET:
    """2-IET with lengths proportional to (1, alpha), alpha = [0; 1, 2, 3, ..., terms].

    alpha is a rational truncation, so the induction ends in a tie after
    roughly terms*(terms+1)/2 steps; all uses stay far below that.
    """
    alpha = continued_fraction(list(range(1, terms + 1)))
    return build_iet(SWAP, [1, alpha])


def genus2_loop() -> IET:
    from .regularity import self_similar

    return self_similar(GENUS2, GENUS2_LOOP).T


def euclid() -> IET:
    """Rational 2-IET with lengths (3/5, 2/5): its induction ends in a tie."""
    return build_iet(SWAP, [Fraction(3, 5), Fraction(2, 5)])


BUILTINS = {
    "golden": golden,
    "sqrt2": sqrt2,
    "unbounded-quotients": unbounded_quotients,
    "genus2-loop": genus2_loop,
    "euclid": euclid,
}

# the four instances every cross-check runs on
CANONICAL = ("golden", "sqrt2", "unbounded-quotients", "genus2-loop")


def get(name: str) -> IET:
    try:
        return BUILTINS[name]()
    except KeyError:
        raise KeyError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}") from None
