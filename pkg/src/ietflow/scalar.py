"""Scalars: exact rationals, exact quadratic irrationals and error-bounded floats.

Three kinds of number flow through the package:

* ``fractions.Fraction`` (and ``int``) -- exact rationals;
* :class:`Quadratic` -- exact elements ``(a + b*sqrt(D))/q`` of a real quadratic
  field, kept in lowest terms;
* :class:`Ball` -- a multiprecision midpoint with a rigorous radius.  Any
  comparison that the radius cannot decide raises
  :class:`~ietflow.errors.PrecisionExhausted` instead of guessing.
"""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

import mpmath

from .errors import MixedFieldError, PrecisionExhausted


def _squarefree_part(n):
    """Return (s, f) with n == s * f**2 and s square-free."""
    s, f = 1, 1
    p = 2
    while p * p <= n:
        while n % (p * p) == 0:
            n //= p * p
            f *= p
        if n % p == 0:
            n //= p
            s *= p
        p += 1
    return s * n, f


def _sign_sqrt_expr(a, b, D):
    """Sign of a + b*sqrt(D) for integers a, b and D > 0 not a square."""
    if b == 0:
        return (a > 0) - (a < 0)
    if a == 0:
        return 1 if b > 0 else -1
    if a > 0 and b > 0:
        return 1
    if a < 0 and b < 0:
        return -1
    # opposite signs: compare a^2 with b^2 D
    lhs, rhs = a * a, b * b * D
    if a > 0:
        return 1 if lhs > rhs else -1
    return 1 if rhs > lhs else -1


class Quadratic:
    """Exact element ``(a + b*sqrt(D)) / q`` of Q(sqrt(D)).

    Canonical form: ``q > 0`` and ``gcd(a, b, q) == 1``; ``D > 1`` square-free.
    Arithmetic with ``int``/``Fraction`` is supported; mixing two different
    ``D`` raises :class:`MixedFieldError`.
    """

    __slots__ = ("a", "b", "q", "D")

    def __init__(self, a, b, q, D):
        if q == 0:
            raise ZeroDivisionError("zero denominator")
        if D <= 1:
            raise ValueError("D must be > 1")
        s, f = _squarefree_part(D)
        if f != 1:
            b *= f
            D = s
        if D == 1:
            raise ValueError("D must not be a perfect square")
        if q < 0:
            a, b, q = -a, -b, -q
        g = math.gcd(math.gcd(a, b), q)
        if g > 1:
            a //= g
            b //= g
            q //= g
        self.a, self.b, self.q, self.D = a, b, q, D

    @classmethod
    def _raw(cls, a, b, q, D):
        # internal constructor: D already square-free
        obj = object.__new__(cls)
        if q < 0:
            a, b, q = -a, -b, -q
        g = math.gcd(math.gcd(a, b), q)
        if g > 1:
            a //= g
            b //= g
            q //= g
        obj.a, obj.b, obj.q, obj.D = a, b, q, D
        return obj

    @classmethod
    def sqrt(cls, D):
        """sqrt(D) as a field element (D square-free > 1)."""
        return cls(0, 1, 1, D)

    # -- coercion ---------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Quadratic):
            if other.D != self.D:
                raise MixedFieldError(f"cannot mix Q(sqrt({self.D})) and Q(sqrt({other.D}))")
            return other
        if isinstance(other, int):
            return Quadratic._raw(other, 0, 1, self.D)
        if isinstance(other, Rational):
            return Quadratic._raw(other.numerator, 0, other.denominator, self.D)
        return None

    @property
    def is_rational(self):
        return self.b == 0

    def conjugate(self):
        return Quadratic._raw(self.a, -self.b, self.q, self.D)

    def norm(self):
        """Field norm x * conj(x) as a Fraction."""
        return Fraction(self.a * self.a - self.b * self.b * self.D, self.q * self.q)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        q = self.q * o.q
        return Quadratic._raw(self.a * o.q + o.a * self.q, self.b * o.q + o.b * self.q, q, self.D)

    __radd__ = __add__

    def __neg__(self):
        return Quadratic._raw(-self.a, -self.b, self.q, self.D)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        q = self.q * o.q
        return Quadratic._raw(self.a * o.q - o.a * self.q, self.b * o.q - o.b * self.q, q, self.D)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a = self.a * o.a + self.b * o.b * self.D
        b = self.a * o.b + self.b * o.a
        return Quadratic._raw(a, b, self.q * o.q, self.D)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        den = o.a * o.a - o.b * o.b * self.D
        if den == 0:
            raise ZeroDivisionError("division by zero in quadratic field")
        # (a + b r)/q * r'/(a' + b' r) with r' = q'(a' - b' r)
        a = (self.a * o.a - self.b * o.b * self.D) * o.q
        b = (self.b * o.a - self.a * o.b) * o.q
        return Quadratic._raw(a, b, self.q * den, self.D)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return (1 / self) ** (-n)
        result = Quadratic._raw(1, 0, 1, self.D)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- order ------------------------------------------------------------
    def sign(self):
        return _sign_sqrt_expr(self.a, self.b, self.D)

    def _cmp(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        a = self.a * o.q - o.a * self.q
        b = self.b * o.q - o.b * self.q
        return _sign_sqrt_expr(a, b, self.D)

    def __eq__(self, other):
        if isinstance(other, float):
            return False
        c = self._cmp(other)
        return c if c is NotImplemented else c == 0

    def __lt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c >= 0

    def __hash__(self):
        if self.b == 0:
            return hash(Fraction(self.a, self.q))
        return hash((self.a, self.b, self.q, self.D))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __floor__(self):
        if self.b == 0:
            return self.a // self.q
        s = math.isqrt(self.b * self.b * self.D)
        # b*sqrt(D) is irrational, so its floor is s or -s-1
        fl = s if self.b > 0 else -s - 1
        return (self.a + fl) // self.q

    # -- conversion -------------------------------------------------------
    def _scaled(self, k):
        """Integer N with |N / (q 2^k) - self| < 1 / (q 2^k)."""
        r = math.isqrt(self.b * self.b * self.D << (2 * k))
        return (self.a << k) + (r if self.b >= 0 else -r - 1)

    def _guard_bits(self, prec):
        bits = max(abs(self.a).bit_length(), abs(self.b).bit_length(), self.D.bit_length())
        return prec + 2 * bits + self.q.bit_length() + 16

    def to_fraction_approx(self, prec=64):
        """Rational approximation with relative error below 2**-prec."""
        if self.b == 0:
            return Fraction(self.a, self.q)
        k = self._guard_bits(prec)
        return Fraction(self._scaled(k), self.q << k)

    def __float__(self):
        return float(self.to_fraction_approx(64))

    def to_mpf(self, prec):
        ctx = context(prec)
        if self.b == 0:
            return ctx.mpf(self.a) / self.q
        k = self._guard_bits(prec)
        return ctx.mpf(self._scaled(k)) / (self.q << k)

    def __repr__(self):
        return f"Quadratic({self.a}, {self.b}, {self.q}, {self.D})"

    def __str__(self):
        if self.b == 0:
            return str(Fraction(self.a, self.q))
        sgn = "+" if self.b > 0 else "-"
        return f"({self.a} {sgn} {abs(self.b)}*sqrt({self.D}))/{self.q}"


@lru_cache(maxsize=None)
def context(prec):
    """A private mpmath context working at ``prec`` bits."""
    ctx = mpmath.MPContext()
    ctx.prec = prec
    return ctx


class Ball:
    """Multiprecision float with a rigorous error radius.

    ``mid`` is an mpf at ``prec`` bits and ``rad`` an upper bound on
    ``|true value - mid|``.  Every operation adds one rounding error to the
    radius.  Comparisons that the radius cannot separate raise
    :class:`PrecisionExhausted`.
    """

    __slots__ = ("mid", "rad", "prec")

    def __init__(self, value, prec=53, rad=0):
        ctx = context(prec)
        self.prec = prec
        if isinstance(value, Ball):
            self.mid = ctx.mpf(value.mid)
            rad = ctx.mpf(rad) + value.rad
        elif isinstance(value, Quadratic):
            self.mid = value.to_mpf(prec)
        elif isinstance(value, Fraction):
            self.mid = ctx.mpf(value.numerator) / value.denominator
        else:
            self.mid = ctx.mpf(value)
        # one ulp covers the conversion rounding
        self.rad = ctx.mpf(rad) + self._ulp(self.mid)

    def _ulp(self, x):
        if not x:
            return context(self.prec).mpf(0)
        return context(self.prec).ldexp(1, int(context(self.prec).mag(x)) - self.prec + 1)

    @classmethod
    def _new(cls, mid, rad, prec):
        obj = object.__new__(cls)
        obj.mid, obj.rad, obj.prec = mid, rad, prec
        obj.rad = rad + obj._ulp(mid)
        return obj

    def _coerce(self, other):
        if isinstance(other, Ball):
            return other
        if isinstance(other, (int, Rational, Quadratic, float)) or isinstance(other, mpmath.mpf):
            return Ball(other, self.prec)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        prec = max(self.prec, o.prec)
        return Ball._new(self.mid + o.mid, self.rad + o.rad, prec)

    __radd__ = __add__

    def __neg__(self):
        return Ball._new(-self.mid, self.rad, self.prec)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        prec = max(self.prec, o.prec)
        return Ball._new(self.mid - o.mid, self.rad + o.rad, prec)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        prec = max(self.prec, o.prec)
        rad = abs(self.mid) * o.rad + abs(o.mid) * self.rad + self.rad * o.rad
        return Ball._new(self.mid * o.mid, rad, prec)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        lo = abs(o.mid) - o.rad
        if lo <= 0:
            raise PrecisionExhausted("divisor ball contains zero")
        prec = max(self.prec, o.prec)
        q = self.mid / o.mid
        rad = (self.rad + abs(q) * o.rad) / lo
        return Ball._new(q, rad, prec)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def _cmp(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        diff = self.mid - o.mid
        r = self.rad + o.rad
        if diff > r:
            return 1
        if diff < -r:
            return -1
        raise PrecisionExhausted(f"cannot order balls at {self.prec} bits (|diff| <= {mpmath.nstr(r, 5)})")

    def __lt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c < 0

    def __gt__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return c if c is NotImplemented else c > 0

    def __eq__(self, other):
        # equality is never certifiable; certified inequality returns False
        c = self._cmp(other)
        return c if c is NotImplemented else False

    __hash__ = None

    def sign(self):
        return self._cmp(0)

    def __floor__(self):
        fl = int(mpmath.floor(self.mid))
        if self.mid - self.rad < fl or self.mid + self.rad >= fl + 1:
            raise PrecisionExhausted("floor not certified")
        return fl

    def __float__(self):
        return float(self.mid)

    def __abs__(self):
        return -self if self.mid < 0 else self

    def to_mpf(self, prec):
        return context(prec).mpf(self.mid)

    def __repr__(self):
        return f"Ball({mpmath.nstr(self.mid, 20)} +/- {mpmath.nstr(self.rad, 3)}, prec={self.prec})"


# -- generic helpers -------------------------------------------------------------

def kind_of(x):
    if isinstance(x, Ball):
        return "float"
    if isinstance(x, Quadratic):
        return "rational" if x.is_rational else "quadratic"
    if isinstance(x, (int, Rational)):
        return "rational"
    raise TypeError(f"not a scalar: {x!r}")


def is_exact(x):
    return not isinstance(x, (Ball, float))


def to_float(x):
    return float(x)


def to_mpf(x, prec):
    if isinstance(x, (Quadratic, Ball)):
        return x.to_mpf(prec)
    ctx = context(prec)
    if isinstance(x, Fraction):
        return ctx.mpf(x.numerator) / x.denominator
    return ctx.mpf(x)


def frac(x):
    """Fractional part {x} = x - floor(x)."""
    return x - math.floor(x)


def common_field(values):
    """Return the D of the quadratic field shared by ``values`` (None if all rational)."""
    D = None
    for v in values:
        if isinstance(v, Quadratic) and not v.is_rational:
            if D is not None and v.D != D:
                raise MixedFieldError(f"values live in Q(sqrt({D})) and Q(sqrt({v.D}))")
            D = v.D
    return D


def to_json(x):
    """Lossless JSON form of an exact scalar; floats record their midpoint."""
    if isinstance(x, Ball):
        return {"kind": "float", "value": mpmath.nstr(x.mid, int(x.prec * 0.302) + 2), "prec": x.prec}
    if isinstance(x, Quadratic):
        if x.is_rational:
            return {"kind": "rational", "num": x.a, "den": x.q}
        return {"kind": "quadratic", "a": x.a, "b": x.b, "q": x.q, "D": x.D}
    if isinstance(x, float):
        return {"kind": "float", "value": repr(x), "prec": 53}
    x = Fraction(x)
    return {"kind": "rational", "num": x.numerator, "den": x.denominator}


def from_json(obj):
    if isinstance(obj, (int, float, str)):
        if isinstance(obj, float):
            return Ball(obj, 53)
        return Fraction(obj)
    kind = obj.get("kind")
    if kind == "rational":
        return Fraction(int(obj["num"]), int(obj["den"]))
    if kind == "quadratic":
        return Quadratic(int(obj["a"]), int(obj["b"]), int(obj["q"]), int(obj["D"]))
    if kind == "float":
        prec = int(obj.get("prec", 53))
        return Ball(context(prec).mpf(str(obj["value"])), prec)
    raise ValueError(f"unknown scalar kind {kind!r}")


def json_text(x):
    """Compact human-readable string used in CSV cells."""
    if isinstance(x, Ball):
        return mpmath.nstr(x.mid, 17)
    return str(x)
