"""Roof functions with symmetric logarithmic singularities and their special flows.

The roof is fixed by its derivative

    f'(x) = -sum C+_a / {x - l_a} + sum C-_a / {r_a - x} + g(x)

with the antiderivative

    f(x) = -sum C+_a log{x - l_a} - sum C-_a log{r_a - x} + G(x) + f0,

where G is the antiderivative of the trigonometric polynomial g with G(0) = 0
and f0 shifts f so that its minimum equals ``f_min``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import scalar as sc
from .errors import AtSingularity, OrbitHitsSingularity, RoofSpecError
from .iet import BACKWARD, FORWARD, IET, apply, circle_dist

TWO_PI = 2 * math.pi
INF = math.inf


def _num(v):
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, float):
        return Fraction(repr(v))
    if isinstance(v, str):
        return Fraction(v)
    if isinstance(v, dict):
        return sc.from_json(v)
    raise RoofSpecError(f"bad coefficient {v!r}")


@dataclass(frozen=True)
class RoofSpec:
    """Coefficients of f'; ``f0=None`` means "choose f0 so that min f = f_min"."""

    Cplus: dict
    Cminus: dict
    g: tuple = ()  # (freq, a, b): a cos(2 pi freq x) + b sin(2 pi freq x); freq 0 is the constant a
    f0: object = None
    f_min: Fraction = Fraction(1)

    def __post_init__(self):
        for name, C in (("Cplus", self.Cplus), ("Cminus", self.Cminus)):
            for a, v in C.items():
                if v < 0:
                    raise RoofSpecError(f"{name}[{a}] = {v} is negative")
        sp, sm = sum(self.Cplus.values(), Fraction(0)), sum(self.Cminus.values(), Fraction(0))
        if sp != sm:
            raise RoofSpecError(f"asymmetric singularities: sum C+ = {sp} != sum C- = {sm}")
        if not sp > 0:
            raise RoofSpecError("need sum C+ = sum C- > 0")
        for term in self.g:
            if len(term) != 3 or int(term[0]) != term[0] or term[0] < 0:
                raise RoofSpecError(f"bad trigonometric term {term!r}")
        if not self.f_min > 0:
            raise RoofSpecError("f_min must be positive")

    @property
    def C_tilde(self):
        return sum(self.Cplus.values(), Fraction(0)) + sum(self.Cminus.values(), Fraction(0))

    @classmethod
    def single_pair(cls, T: IET, g=(), f_min=1):
        """C+ = 1 at the left end of the first interval and C- = 1 at the right end of the last one.

        Both sit at the circle point 0, giving f(x) = -log x - log(1-x) + f0 when g = 0.
        """
        first = T.comb.letter_at(0, 1)
        last = T.comb.letter_at(0, T.d)
        return cls({first: Fraction(1)}, {last: Fraction(1)}, tuple(g), None, Fraction(f_min))

    def scaled(self, factor):
        """The spec of factor * f (f0 re-derived unless fixed)."""
        factor = Fraction(factor)
        if not factor > 0:
            raise RoofSpecError("scale factor must be positive")
        return RoofSpec(
            {a: v * factor for a, v in self.Cplus.items()},
            {a: v * factor for a, v in self.Cminus.items()},
            tuple((k, a * factor, b * factor) for k, a, b in self.g),
            None if self.f0 is None else self.f0 * factor,
            self.f_min * factor,
        )

    def normalized(self, T: IET):
        """Rescaled so that C+ at the first letter of the top row equals 1."""
        c = self.Cplus.get(T.comb.letter_at(0, 1), 0)
        if not c > 0:
            raise RoofSpecError("no C+ singularity at 0 to normalize by")
        return self.scaled(1 / Fraction(c))

    def to_json(self):
        def enc(v):
            v = Fraction(v)
            return str(v) if v.denominator != 1 else v.numerator

        return {
            "Cplus": {a: enc(v) for a, v in sorted(self.Cplus.items())},
            "Cminus": {a: enc(v) for a, v in sorted(self.Cminus.items())},
            "g": [[int(k), enc(a), enc(b)] for k, a, b in self.g],
            "f0": None if self.f0 is None else (self.f0 if isinstance(self.f0, float) else enc(self.f0)),
            "f_min": enc(self.f_min),
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            Cp = {a: _num(v) for a, v in obj["Cplus"].items()}
            Cm = {a: _num(v) for a, v in obj["Cminus"].items()}
        except KeyError as exc:
            raise RoofSpecError(f"missing field {exc}") from None
        g = tuple((int(t[0]), _num(t[1]), _num(t[2])) for t in obj.get("g", []))
        f0 = obj.get("f0")
        f0 = None if f0 is None or f0 == "auto" else _num(f0)
        return cls(Cp, Cm, g, f0, _num(obj.get("f_min", 1)))


@dataclass(frozen=True)
class FlowPoint:
    x: object
    s: object


class Roof:
    """A RoofSpec bound to an IET: the actual function f on the circle."""

    def __init__(self, spec: RoofSpec, T: IET):
        for a in list(spec.Cplus) + list(spec.Cminus):
            if a not in T.alphabet:
                raise RoofSpecError(f"letter {a!r} not in the alphabet {T.alphabet}")
        self.spec = spec
        self.T = T
        self.plus = [(T.left[a], v) for a, v in sorted(spec.Cplus.items()) if v > 0]
        self.minus = [(T.right[a], v) for a, v in sorted(spec.Cminus.items()) if v > 0]
        # the right end 1 of the last interval is the circle point 0
        self.minus = [(r if r != 1 else 0, v) for r, v in self.minus]
        self.singular = sorted({p for p, _ in self.plus} | {p for p, _ in self.minus}, key=float)
        self._pf = [(float(p), float(v)) for p, v in self.plus]
        self._mf = [(float(p), float(v)) for p, v in self.minus]
        self._g = [(int(k), float(a), float(b)) for k, a, b in spec.g]
        if spec.f0 is None:
            self.f0, self.f_min = self._auto_f0()
        else:
            self.f0 = float(spec.f0)
            self.f_min = self._grid_min(self.f0)

    # -- smooth part ----------------------------------------------------------------
    def g_float(self, x):
        out = 0.0
        for k, a, b in self._g:
            if k == 0:
                out += a
            else:
                out += a * math.cos(TWO_PI * k * x) + b * math.sin(TWO_PI * k * x)
        return out

    def G_float(self, x):
        out = 0.0
        for k, a, b in self._g:
            if k == 0:
                out += a * x
            else:
                w = TWO_PI * k
                out += (a * math.sin(w * x) - b * (math.cos(w * x) - 1)) / w
        return out

    def _g_mp(self, ctx, x):
        out = ctx.mpf(0)
        for k, a, b in self.spec.g:
            a, b = sc.to_mpf(a, ctx.prec), sc.to_mpf(b, ctx.prec)
            if k == 0:
                out += a
            else:
                out += a * ctx.cos(2 * ctx.pi * k * x) + b * ctx.sin(2 * ctx.pi * k * x)
        return out

    def _G_mp(self, ctx, x):
        out = ctx.mpf(0)
        for k, a, b in self.spec.g:
            a, b = sc.to_mpf(a, ctx.prec), sc.to_mpf(b, ctx.prec)
            if k == 0:
                out += a * x
            else:
                w = 2 * ctx.pi * k
                out += (a * ctx.sin(w * x) - b * (ctx.cos(w * x) - 1)) / w
        return out

    # -- float evaluation -------------------------------------------------------------
    def _check_float(self, x):
        for p, _ in self._pf:
            if x == p:
                raise AtSingularity(f"f is singular at {x}")
        for p, _ in self._mf:
            if x == p:
                raise AtSingularity(f"f is singular at {x}")

    def value_float(self, x, with_f0=True):
        x = float(x)
        self._check_float(x)
        out = 0.0
        for p, c in self._pf:
            out -= c * math.log((x - p) % 1.0)
        for p, c in self._mf:
            out -= c * math.log((p - x) % 1.0)
        out += self.G_float(x)
        return out + self.f0 if with_f0 else out

    def deriv_float(self, x):
        x = float(x)
        self._check_float(x)
        out = self.g_float(x)
        for p, c in self._pf:
            out -= c / ((x - p) % 1.0)
        for p, c in self._mf:
            out += c / ((p - x) % 1.0)
        return out

    def values_np(self, xs, with_f0=True):
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        for p, c in self._pf:
            out -= c * np.log(np.mod(xs - p, 1.0))
        for p, c in self._mf:
            out -= c * np.log(np.mod(p - xs, 1.0))
        for k, a, b in self._g:
            if k == 0:
                out += a * xs
            else:
                w = TWO_PI * k
                out += (a * np.sin(w * xs) - b * (np.cos(w * xs) - 1)) / w
        if with_f0:
            out += self.f0
        return out

    def derivs_np(self, xs):
        xs = np.asarray(xs, dtype=float)
        out = np.zeros_like(xs)
        for p, c in self._pf:
            out -= c / np.mod(xs - p, 1.0)
        for p, c in self._mf:
            out += c / np.mod(p - xs, 1.0)
        for k, a, b in self._g:
            if k == 0:
                out += a
            else:
                out += a * np.cos(TWO_PI * k * xs) + b * np.sin(TWO_PI * k * xs)
        return out

    # -- multiprecision evaluation ------------------------------------------------------
    def _dists(self, x):
        """Exact one-sided distances {x - l} and {r - x} (x exact or Ball)."""
        dp = []
        for p, c in self.plus:
            t = sc.frac(x - p)
            if not t > 0:
                raise AtSingularity(f"f is singular at {x}")
            dp.append((t, c))
        dm = []
        for p, c in self.minus:
            t = sc.frac(p - x)
            if not t > 0:
                raise AtSingularity(f"f is singular at {x}")
            dm.append((t, c))
        return dp, dm

    def value(self, x, prec=53):
        """f(x) as an mpf at ``prec`` bits (distances to singularities computed exactly)."""
        if prec <= 53 and not sc.is_exact(x):
            return self.value_float(x)
        ctx = sc.context(prec)
        dp, dm = self._dists(x)
        out = ctx.mpf(0)
        for t, c in dp:
            out -= sc.to_mpf(c, prec) * ctx.log(sc.to_mpf(t, prec))
        for t, c in dm:
            out -= sc.to_mpf(c, prec) * ctx.log(sc.to_mpf(t, prec))
        xm = sc.to_mpf(x, prec)
        return out + self._G_mp(ctx, xm) + ctx.mpf(self.f0)

    def deriv(self, x, prec=53):
        ctx = sc.context(prec)
        dp, dm = self._dists(x)
        out = self._g_mp(ctx, sc.to_mpf(x, prec))
        for t, c in dp:
            out -= sc.to_mpf(c, prec) / sc.to_mpf(t, prec)
        for t, c in dm:
            out += sc.to_mpf(c, prec) / sc.to_mpf(t, prec)
        return out

    def __call__(self, x):
        return self.value_float(x)

    # -- f0 ---------------------------------------------------------------------------
    def _pieces(self):
        sing = sorted(float(p) for p in self.singular)
        out = []
        for i, a in enumerate(sing):
            b = sing[i + 1] if i + 1 < len(sing) else sing[0] + 1.0
            out.append((a, b))
        return out

    def _piece_min(self, a, b):
        from scipy.optimize import minimize_scalar

        def fx(t):
            return float(self.values_np(np.array([t % 1.0]), with_f0=False)[0])

        n = 20001
        ts = np.linspace(a, b, n)[1:-1]
        vals = self.values_np(np.mod(ts, 1.0), with_f0=False)
        i = int(np.argmin(vals))
        lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, len(ts) - 1)]
        res = minimize_scalar(fx, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        return min(float(res.fun), float(vals[i]))

    def _unshifted_min(self):
        return min(self._piece_min(a, b) for a, b in self._pieces())

    def _auto_f0(self):
        m = self._unshifted_min()
        f0 = float(self.spec.f_min) - m
        # a hair of slack for the local optimizer's tolerance
        return f0, float(self.spec.f_min) - 1e-9

    def _grid_min(self, f0):
        return self._unshifted_min() + f0

    # -- Birkhoff sums -------------------------------------------------------------------
    def birkhoff(self, x, n, what="f", prec=53):
        """f^(n)(x) (what='f') or f'^(n)(x) (what='df') along exact orbits, at ``prec`` bits."""
        return birkhoff(self, x, n, what, prec)


def bind(spec: RoofSpec, T: IET) -> Roof:
    return Roof(spec, T)


def _orbit_points(T, x, n):
    """Points entering f^(n)(x): T^0..T^{n-1} x for n > 0, T^n..T^{-1} x for n < 0."""
    if n >= 0:
        pts, y = [], x
        for _ in range(n):
            pts.append(y)
            y = apply(T, y)
        return pts, list(range(n))
    pts, y = [], x
    for i in range(1, -n + 1):
        y = apply(T, y, BACKWARD)
        pts.append(y)
    return pts, [-i for i in range(1, -n + 1)]


def birkhoff(roof: Roof, x, n, what="f", prec=53):
    """The Z-cocycle f^(n)(x): sum over T^0..T^{n-1}x, 0 for n=0, minus sum over T^n..T^{-1}x."""
    if what not in ("f", "df"):
        raise ValueError("what must be 'f' or 'df'")
    if n == 0:
        return sc.context(prec).mpf(0) if prec > 53 else 0.0
    pts, its = _orbit_points(roof.T, x, n)
    ev = roof.value if what == "f" else roof.deriv
    total = sc.context(max(prec, 53)).mpf(0)
    for p, i in zip(pts, its):
        try:
            total += ev(p, prec)
        except AtSingularity:
            raise OrbitHitsSingularity(i) from None
    if n < 0:
        total = -total
    return total if prec > 53 else float(total)


def flow_step(roof: Roof, p: FlowPoint, t, prec=53) -> FlowPoint:
    """T_t^f(x, s) = (T^n x, s + t - f^(n)(x)) with f^(n)(x) <= s + t < f^(n+1)(x)."""
    ctx = sc.context(max(prec, 53))
    T = roof.T
    x = p.x
    u = ctx.mpf(sc.to_mpf(p.s, ctx.prec)) + ctx.mpf(sc.to_mpf(t, ctx.prec))
    S = ctx.mpf(0)
    n = 0
    if u >= 0:
        while True:
            try:
                fx = roof.value(x, prec)
            except AtSingularity:
                raise OrbitHitsSingularity(n) from None
            if u < S + fx:
                break
            S += fx
            x = apply(T, x)
            n += 1
    else:
        while u < S:
            x = apply(T, x, BACKWARD)
            n -= 1
            try:
                S -= roof.value(x, prec)
            except AtSingularity:
                raise OrbitHitsSingularity(n) from None
    return FlowPoint(x, u - S)


def flow_dist(p: FlowPoint, q: FlowPoint):
    """d^f((x,s),(y,s')) = circle distance of x, y plus |s - s'|."""
    return circle_dist(p.x, q.x) + abs(p.s - q.s)


def closest_approach(T: IET, z, r: int, direction=FORWARD):
    """Per letter (z^l, z^r): min over 0 <= i < r of |T^i z - l_a|^+ and |r_a - T^i z|^+.

    |x|^+ is x for x >= 0 and infinity otherwise.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    best_l = {a: None for a in T.alphabet}
    best_r = {a: None for a in T.alphabet}
    y = z
    for i in range(r):
        if i:
            y = apply(T, y, direction)
        for a in T.alphabet:
            dl = y - T.left[a]
            if dl >= 0 and (best_l[a] is None or dl < best_l[a]):
                best_l[a] = dl
            dr = T.right[a] - y
            if dr >= 0 and (best_r[a] is None or dr < best_r[a]):
                best_r[a] = dr
    return {a: (INF if best_l[a] is None else best_l[a], INF if best_r[a] is None else best_r[a])
            for a in T.alphabet}


# -- cancellation audit -----------------------------------------------------------


@dataclass
class CancAudit:
    """R(z, r) = |f'^(r)(z) + sum C+/z^l - sum C-/z^r| / r, maximized over r <= h_beta."""

    rows: list  # (k, samples, R_max, R_q99)
    per_stage: dict = field(repr=False)

    def M_prime(self, k_max=None):
        vals = [r[2] for r in self.rows if k_max is None or r[0] <= k_max]
        return max(vals) if vals else 0.0


def canc_residuals(roof: Roof, pts: np.ndarray):
    """R(z, r) for r = 1..len(pts), given the orbit z, Tz, ... as floats."""
    T = roof.T
    dfs = roof.derivs_np(pts)
    S = np.cumsum(dfs)
    corr = np.zeros_like(S)
    for a, c in roof.spec.Cplus.items():
        if c > 0:
            d = pts - float(T.left[a])
            d = np.where(d >= 0, d, np.inf)
            corr += float(c) / np.minimum.accumulate(d)
    for a, c in roof.spec.Cminus.items():
        if c > 0:
            d = float(T.right[a]) - pts
            d = np.where(d >= 0, d, np.inf)
            corr -= float(c) / np.minimum.accumulate(d)
    r = np.arange(1, len(pts) + 1)
    return np.abs(S + corr) / r


def canc_audit(roof: Roof, K: int, samples: int = 1000, seed: int = 0, trace=None) -> CancAudit:
    """Sample z uniformly in I^{m_k} (k = 0..K) and record max_r R(z, r) over r <= h_beta."""
    from .induction import Trace, mmy_schedule

    T = roof.T
    tr = trace or Trace(T)
    sched = mmy_schedule(tr, T.d - 1, K) if T.d > 1 else None
    rng = np.random.default_rng(seed)
    fm = T.float_map()
    rows, per = [], {}
    for k in range(K + 1):
        n = sched.times[k]
        S, scale = tr.stage(n), float(tr.scale(n))
        h = dict(zip(T.alphabet, tr.heights(n)))
        lefts = [(float(S.left[a]) * scale, a) for a in S._top]
        vals = []
        for _ in range(samples):
            z = float(rng.random()) * scale
            beta = lefts[0][1]
            for lft, a in lefts:
                if z >= lft:
                    beta = a
            pts = np.array(fm.orbit_unchecked(z, h[beta] - 1))
            vals.append(float(canc_residuals(roof, pts).max()))
        vals = np.array(vals)
        per[k] = vals
        rows.append((k, samples, float(vals.max()), float(np.quantile(vals, 0.99))))
    return CancAudit(rows, per)
