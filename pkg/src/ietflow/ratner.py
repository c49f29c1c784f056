"""Drift detection and kept-drift verification for pairs of nearby points.

For a pair x, y = x + eta the Birkhoff sums of the roof separate only when the
orbit passes close to the singularity at 0.  The pipeline is

1. derive the constants (P, H, kappa, delta) from c, C, d, C~, M', D, eps, N;
2. pick a time direction in which the orbit of x stays 2*eta away from all
   discontinuities on a window of length 1/(16 eta c);
3. find a hit time k with T^k x in (2 eta, 400 eta c^4);
4. pick the branch whose Birkhoff difference lands in P and check that the
   difference stays within eps of it over the window [M, M + L].

``strict`` mode uses the constants and ranges as derived; ``adaptive`` mode
measures c, M', D on the instance, takes kappa from the caller, only requires
M, L >= N for the hit time, and tries every admissible k in turn.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from . import scalar as sc
from .errors import (
    BadInputs,
    DriftNotKept,
    IETError,
    NeitherHolds,
    NoBranchInP,
    NotFound,
    NotNormalized,
    PairTooFar,
    PrecisionExhausted,
    SameOrbit,
)
from .iet import BACKWARD, FORWARD, IET, apply, circle_dist
from .roof import Roof

STRICT = "strict"
ADAPTIVE = "adaptive"


def _exact(v):
    """Fraction for ints/Fractions/decimal strings, leave floats alone."""
    if isinstance(v, (int, Fraction)):
        return Fraction(v)
    if isinstance(v, str):
        return Fraction(v)
    return v


# -- constants ----------------------------------------------------------------------


@dataclass(frozen=True)
class RatnerConstants:
    c: object
    C: object
    d: int
    C_tilde: object
    M_prime: object
    D: object
    eps: object
    N: int
    H: object
    P_low: object
    kappa: object
    delta: object
    kappa_terms: tuple
    delta_terms: tuple
    mode: str = STRICT

    @property
    def P_high(self):
        return self.H

    def in_P(self, p):
        a = abs(p)
        return float(self.P_low) <= a <= float(self.H)

    def to_json(self):
        def enc(v):
            if isinstance(v, Fraction):
                return str(v) if v.denominator != 1 else v.numerator
            if isinstance(v, float) and math.isinf(v):
                return "inf"
            return v

        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                out[k] = [enc(t) for t in v]
            else:
                out[k] = enc(v)
        return out


def derive_constants(c, C, d, C_tilde, M_prime, D, eps, N, kappa=None, mode=STRICT) -> RatnerConstants:
    """P, H, kappa and delta from the balance/MMY constants.

    Rational inputs give exact rational outputs.  ``kappa`` overrides the
    derived value (adaptive mode only).  Terms of kappa/delta that divide by a
    zero M' or D are infinite and drop out of the minimum.
    """
    c, C, C_tilde, M_prime, D, eps = (_exact(v) for v in (c, C, C_tilde, M_prime, D, eps))
    if not (c >= 1 and C >= 1):
        raise BadInputs("need c >= 1 and C >= 1")
    if not (isinstance(d, int) and d >= 2):
        raise BadInputs("need an integer d >= 2")
    if not (C_tilde > 0 and eps > 0):
        raise BadInputs("need C~ > 0 and eps > 0")
    if not (isinstance(N, int) and N >= 1):
        raise BadInputs("need an integer N >= 1")
    if M_prime < 0 or D < 0:
        raise BadInputs("need M' >= 0 and D >= 0")
    q = 400 * c ** 4 + 1
    H = 2 * (M_prime * C / q + C_tilde) * (d * C ** 3 * q / (32 * c) + 1)
    P_low = 1 / (1600 * c ** 4)
    inf = math.inf
    kterms = (
        16 * c / (C ** 3 * q),
        8 * c * eps / (d * C ** 2 * M_prime) if M_prime else inf,
        2 / (C ** 3 * q),
        eps / (2 * C_tilde * C),
    )
    k_derived = min(kterms)
    if kappa is None:
        kappa = k_derived
    elif mode == STRICT:
        raise BadInputs("kappa can only be overridden in adaptive mode")
    else:
        kappa = _exact(kappa)
        if not 0 < kappa < 1:
            raise BadInputs("kappa must lie in (0, 1)")
    dterms = (
        eps,
        1 / (64 * c),
        1 / (256 * c ** 3),
        kappa / (512 * c ** 5 * N),
        1 / (2 * c * q),
        Fraction(3) / (4000 * c ** 4 * D) if D else inf,
        eps / (4 * D) if D else inf,
    )
    delta = min(dterms)
    return RatnerConstants(c, C, d, C_tilde, M_prime, D, eps, N, H, P_low, kappa, delta,
                           kterms, dterms, mode)


# -- D -----------------------------------------------------------------------------


@dataclass(frozen=True)
class DEstimate:
    D: float  # with 10% margin
    raw_sup: float
    window: float  # upper end of the sampled interval (0, window)
    points: int


def estimate_D(roof: Roof, points: int = 2000, decades: int = 12, margin=0.1, prec=200) -> DEstimate:
    """sup |f'(x) + 1/x| over a geometric grid in (0, min P_{1,0} / 2), plus ``margin``."""
    T = roof.T
    first = T.comb.letter_at(0, 1)
    if roof.spec.Cplus.get(first, 0) != 1:
        raise NotNormalized("C+ at the first interval must equal 1 (use RoofSpec.normalized)")
    window = min(T.lengths.values()) / 2
    ctx = sc.context(prec)
    wf = sc.to_mpf(window, prec)
    best = ctx.mpf(0)
    for i in range(points):
        # x = window * 10^(-decades * i / (points - 1)), rounded down to a dyadic
        xm = wf * ctx.power(10, -ctx.mpf(decades) * i / max(points - 1, 1))
        x = Fraction(int(ctx.floor(xm * 2 ** 96)), 2 ** 96)
        if not 0 < x < window:
            continue
        v = abs(roof.deriv(x, prec) + 1 / sc.to_mpf(x, prec))
        if v > best:
            best = v
    raw = float(best)
    return DEstimate(raw * (1 + margin), raw, float(window), points)


# -- separation -------------------------------------------------------------------


@dataclass(frozen=True)
class SeparationResult:
    count: int
    window: tuple
    witnesses: tuple  # (n, letter, distance as float)


def _near(lefts, y, delta_f, err):
    """(letter, distance) of the discontinuity closest to the float point y if it is < delta, else None.

    Raises PrecisionExhausted when the float error bound cannot decide.
    """
    best = None
    for a, la in lefts:
        dd = abs(y - la) % 1.0
        dd = min(dd, 1.0 - dd)
        if abs(dd - delta_f) <= err:
            raise PrecisionExhausted("distance to a discontinuity too close to delta")
        if dd < delta_f and (best is None or dd < best[1]):
            best = (a, dd)
    return best


def separation_count(T: IET, x, delta, c, include_origin=True) -> SeparationResult:
    """Number of n in [-1/(8 delta c), 1/(8 delta c)] with min_a ||l_a - T^n x|| < delta.

    The origin l_a = 0 of the first top letter is always T(l_b) for the first
    bottom letter b, so an approach to l_b at time n is followed by an equally
    close approach to 0 at time n + 1.  ``include_origin=False`` drops the
    origin from the minimum, leaving only the discontinuities of T.
    """
    if not delta > 0:
        raise BadInputs("delta must be > 0")
    half = math.floor(1 / (8 * float(delta) * float(c)))
    letters = [a for a in T.alphabet if include_origin or a != T.comb.letter_at(0, 1)]
    try:
        return _separation_float(T, letters, x, delta, half)
    except PrecisionExhausted:
        return _separation_exact(T, letters, x, delta, half)


def _separation_float(T, letters, x, delta, half):
    fm = T.float_map()
    xf = float(x)
    err0 = 0.0 if isinstance(x, (int, Fraction)) and float(x) == x else 2.0 ** -53
    fwd, e1 = fm.orbit(xf, half, err0)
    bwd, e2 = fm.orbit(xf, half, err0, BACKWARD)
    err = max(e1, e2) + fm.eps + 2.0 ** -52
    df = float(delta)
    lefts = [(a, float(T.left[a])) for a in letters]
    wit = []
    for n, y in zip(range(0, half + 1), fwd):
        hit = _near(lefts, y, df, err)
        if hit:
            wit.append((n, hit[0], hit[1]))
    for n, y in zip(range(1, half + 1), bwd[1:]):
        hit = _near(lefts, y, df, err)
        if hit:
            wit.append((-n, hit[0], hit[1]))
    wit.sort()
    return SeparationResult(len(wit), (-half, half), tuple(wit))


def _separation_exact(T, letters, x, delta, half):
    wit = []
    for direction, sign in ((FORWARD, 1), (BACKWARD, -1)):
        y = x
        for n in range(0, half + 1):
            if n:
                y = apply(T, y, direction)
            elif sign < 0:
                continue
            for a in letters:
                dd = circle_dist(T.left[a], y)
                if dd < delta:
                    wit.append((sign * n, a, float(dd)))
                    break
    wit.sort()
    return SeparationResult(len(wit), (-half, half), tuple(wit))


# -- direction ---------------------------------------------------------------------


def _window(eta, c, div):
    return math.floor(1 / (div * float(eta) * float(c)))


def _orbit_exact(T, x, n, direction=FORWARD):
    out = [x]
    y = x
    for _ in range(n):
        y = apply(T, y, direction)
        out.append(y)
    return out


class _Undecided(Exception):
    """A float comparison fell inside its error bound."""


class _Orbit:
    """Orbit of x in one direction: certified floats when possible, exact points otherwise."""

    def __init__(self, T: IET, x, n, direction=FORWARD):
        self.T, self.x, self.n, self.direction = T, x, n, direction
        self._exact = None
        try:
            pts, err = T.float_map().orbit(float(x), n, 2.0 ** -53, direction)
            self.floats = np.array(pts)
            self.err = err + T.float_map().eps + 2.0 ** -52
        except PrecisionExhausted:
            self.floats = None

    @property
    def exact(self):
        if self._exact is None:
            self._exact = _orbit_exact(self.T, self.x, self.n, self.direction)
        return self._exact

    def disc_dist(self):
        """Float circle distance from each point to the nearest l_a, with its error."""
        if self.floats is None:
            raise _Undecided
        lefts = np.array([float(self.T.left[a]) for a in self.T.alphabet])
        d = np.abs(self.floats[:, None] - lefts[None, :]) % 1.0
        return np.min(np.minimum(d, 1.0 - d), axis=1), self.err


def _far_from_disc(orb: _Orbit, start, bound):
    """All orbit points from index ``start`` on stay at circle distance >= bound from every l_a."""
    try:
        dist, err = orb.disc_dist()
        dist = dist[start:]
        bf = float(bound)
        if np.all(dist > bf + err):
            return True
        if np.any(dist < bf - err):
            return False
    except _Undecided:
        pass
    lefts = [orb.T.left[a] for a in orb.T.alphabet]
    return all(circle_dist(la, y) >= bound for y in orb.exact[start:] for la in lefts)


def _same_orbit(fwd: _Orbit, bwd: _Orbit, y):
    """m != 0 with T^m x == y inside the two windows, else None."""
    for sign, orb in ((1, fwd), (-1, bwd)):
        if orb.floats is not None:
            cand = np.nonzero(np.abs(orb.floats - float(y)) <= orb.err)[0]
            cand = [int(m) for m in cand if m]
            pts = orb.exact if cand else []
        else:
            cand = range(1, orb.n + 1)
            pts = orb.exact
        for m in cand:
            if pts[m] == y:
                return sign * m
    return None


def select_direction(T: IET, x, y, consts: RatnerConstants, enforce_delta=True, orbits=None):
    """'forward', 'backward' or 'both' according to which orbit window stays 2*eta from the l_a."""
    eta = circle_dist(x, y)
    if not eta > 0:
        raise SameOrbit("x == y")
    if enforce_delta and not eta < consts.delta:
        raise PairTooFar(f"eta = {float(eta):.3g} >= delta = {float(consts.delta):.3g}")
    W = _window(eta, consts.c, 16)
    fwd, bwd = orbits or (_Orbit(T, x, W), _Orbit(T, x, W, BACKWARD))
    m = _same_orbit(fwd, bwd, y)
    if m is not None:
        raise SameOrbit(f"y = T^{m} x")
    ok_f = _far_from_disc(fwd, 0, 2 * eta)
    ok_b = _far_from_disc(bwd, 1, 2 * eta)
    if ok_f and ok_b:
        return "both"
    if ok_f:
        return FORWARD
    if ok_b:
        return BACKWARD
    raise NeitherHolds("both orbit windows come within 2*eta of a discontinuity")


# -- hit time ----------------------------------------------------------------------


def hit_range(eta, consts: RatnerConstants, strict=True):
    """Integer range of admissible hit times k."""
    k_hi = _window(eta, consts.c, 32)
    if strict:
        k_lo = math.ceil(consts.N / consts.kappa)
    else:
        # smallest k whose windows satisfy M >= N and L >= N in both branch types
        k_lo = 1
        kap = float(consts.kappa)
        while math.floor((1 - kap) * k_lo) < consts.N or math.ceil(kap * math.floor((1 - kap) * k_lo)) < consts.N:
            k_lo += 1
    return k_lo, k_hi


def hit_times(T: IET, x, eta, consts: RatnerConstants, direction=FORWARD, strict=True, orbit=None):
    """All k in the admissible range with T^{+-k} x in (2 eta, 400 eta c^4)."""
    k_lo, k_hi = hit_range(eta, consts, strict)
    lo, hi = 2 * eta, 400 * eta * Fraction(consts.c) ** 4
    if k_hi < k_lo:
        return [], (k_lo, k_hi)
    if orbit is None or orbit.n < k_hi:
        orbit = _Orbit(T, x, k_hi, direction)
    ks = range(k_lo, k_hi + 1)
    if orbit.floats is not None:
        v, err = orbit.floats[k_lo:k_hi + 1], orbit.err
        lf, hf = float(lo), float(hi)
        inside = (v > lf + err) & (v < hf - err)
        unsure = ~inside & ((np.abs(v - lf) <= err) | (np.abs(v - hf) <= err))
        out = []
        for k, yes, maybe in zip(ks, inside, unsure):
            if yes or (maybe and lo < orbit.exact[k] < hi):
                out.append(k)
        return out, (k_lo, k_hi)
    return [k for k in ks if lo < orbit.exact[k] < hi], (k_lo, k_hi)


def find_hit_time(T: IET, x, eta, consts: RatnerConstants, direction=FORWARD, strict=True):
    """Smallest admissible k with T^k x (or T^-k x) in (2 eta, 400 eta c^4)."""
    if strict and not eta < consts.delta:
        raise PairTooFar(f"eta = {float(eta):.3g} >= delta = {float(consts.delta):.3g}")
    ks, rng = hit_times(T, x, eta, consts, direction, strict)
    if not ks:
        raise NotFound(rng)
    return ks[0]


# -- certificates ------------------------------------------------------------------


@dataclass
class DriftCertificate:
    x: object
    y: object
    eta: object
    direction: str
    k: int
    branch: str
    M: int
    L: int
    p: float
    deviation: float  # sup_{0<=n<=L} |f^(+-n)(T^{+-M}x) - f^(+-n)(T^{+-M}y)|
    cocycle_deviation: float  # sup_{n in [M, M+L]} |Delta_{+-n} - p|
    jump: float  # |Delta_{k+1} - Delta_k| (forward) or |Delta_{-k} - Delta_{-k+1}|
    orbit_gap: float  # sup over the window of d(T^n x, T^n y)
    mode: str
    constants: RatnerConstants = field(repr=False)

    @property
    def strict(self):
        return self.mode == STRICT

    def row(self):
        return {
            "eta": float(self.eta),
            "x": sc.json_text(self.x),
            "y": sc.json_text(self.y),
            "direction": self.direction,
            "branch": self.branch,
            "k": self.k,
            "M": self.M,
            "L": self.L,
            "p": self.p,
            "deviation": self.deviation,
        }


class _Sums:
    """Birkhoff differences Delta_n = f^(n)(x) - f^(n)(y) along one time direction, in floats."""

    def __init__(self, roof: Roof, x, y, n, direction):
        T = roof.T
        fm = T.float_map()
        try:
            xs, _ = fm.orbit(float(x), n, 0.0, direction)
            ys, _ = fm.orbit(float(y), n, 0.0, direction)
        except PrecisionExhausted:
            xs = [float(v) for v in _orbit_exact(T, x, n, direction)]
            ys = [float(v) for v in _orbit_exact(T, y, n, direction)]
        self.xs, self.ys = np.array(xs), np.array(ys)
        diff = roof.values_np(self.xs, with_f0=False) - roof.values_np(self.ys, with_f0=False)
        if direction == FORWARD:
            # Delta_n = sum_{i<n} (f(T^i x) - f(T^i y))
            self.delta = np.concatenate([[0.0], np.cumsum(diff[:-1])])
        else:
            # Delta_{-n} = -sum_{1<=i<=n} (f(T^-i x) - f(T^-i y))
            self.delta = np.concatenate([[0.0], -np.cumsum(diff[1:])])
        d = np.abs(self.xs - self.ys) % 1.0
        self.dist = np.minimum(d, 1.0 - d)


def _branches(direction, k, kappa):
    """Candidate (branch, M, index of p) for a hit time k, in preference order."""
    if direction == FORWARD:
        return [("ka", k + 1, k + 1), ("ka2", math.floor((1 - kappa) * k), k)]
    return [("ka3", k, k), ("ka4", math.floor((1 - kappa) * k), k - 1)]


def _evaluate(sums: _Sums, direction, k, consts: RatnerConstants):
    """Try both branches at hit time k.  Returns (certificate fields) or raises."""
    kap = float(consts.kappa)
    eps = float(consts.eps)
    jump = abs(sums.delta[k + 1] - sums.delta[k]) if direction == FORWARD else \
        abs(sums.delta[k] - sums.delta[k - 1])
    in_p = []
    for branch, M, ip in _branches(direction, k, kap):
        p = float(sums.delta[ip])
        if consts.in_P(p):
            in_p.append((branch, M, ip, p))
    if not in_p:
        raise NoBranchInP(f"neither branch difference lies in P at k={k}")
    if jump < 1 / (800 * float(consts.c) ** 4):
        raise NoBranchInP(f"jump {jump:.3g} at k={k} below 1/(800 c^4)")
    last = None
    for branch, M, ip, p in in_p:
        L = math.ceil(kap * M)
        if M < 0 or M + L >= len(sums.delta):
            continue
        window = sums.delta[M:M + L + 1]
        dev = float(np.max(np.abs(window - sums.delta[M])))
        cdev = float(np.max(np.abs(window - p)))
        gap = float(np.max(sums.dist[M:M + L + 1]))
        worst = max(dev, cdev)
        if worst < eps and gap < eps:
            return branch, M, L, p, dev, cdev, float(jump), gap
        n_bad = int(np.argmax(np.maximum(np.abs(window - sums.delta[M]), np.abs(window - p))))
        last = DriftNotKept(M + n_bad, worst)
    raise last if last is not None else NoBranchInP(f"window past the computed range at k={k}")


def drift_certificate(T: IET, roof: Roof, x, y, consts: RatnerConstants, mode=STRICT,
                      direction=None) -> DriftCertificate:
    """Detect a drift p in P and verify it is kept over [M, M + L].

    strict: delta enforced, k >= N/kappa, only the smallest hit time is used.
    adaptive: delta not enforced, k only needs M, L >= N, every hit time is tried.
    """
    strict = mode == STRICT
    eta = circle_dist(x, y)
    if sc.frac(y - x) != eta:
        # orient the pair so that y = x + eta
        x, y = y, x
    W = _window(eta, consts.c, 16)
    orbits = {FORWARD: _Orbit(T, x, W), BACKWARD: _Orbit(T, x, W, BACKWARD)}
    dirs = select_direction(T, x, y, consts, strict, (orbits[FORWARD], orbits[BACKWARD]))
    order = [FORWARD, BACKWARD] if dirs == "both" else [dirs]
    if direction is not None:
        if dirs != "both" and dirs != direction:
            raise NeitherHolds(f"{direction} window condition fails")
        order = [direction]
    errors = []
    for dr in order:
        ks, rng = hit_times(T, x, eta, consts, dr, strict, orbits[dr])
        if not ks:
            errors.append(NotFound(rng))
            continue
        sums = _Sums(roof, x, y, W + 1, dr)
        for k in (ks[:1] if strict else ks):
            try:
                fields = _evaluate(sums, dr, k, consts)
            except (NoBranchInP, DriftNotKept) as exc:
                errors.append(exc)
                continue
            branch, M, L, p, dev, cdev, jump, gap = fields
            return DriftCertificate(x, y, eta, dr, k, branch, M, L, p, dev, cdev, jump, gap, mode, consts)
    # report the most informative failure
    for cls in (DriftNotKept, NoBranchInP, NotFound):
        for e in errors:
            if isinstance(e, cls):
                raise e
    raise NotFound((0, 0))


@dataclass(frozen=True)
class Reevaluation:
    p: float
    deviation: float
    cocycle_deviation: float
    jump: float
    p_in_P: bool
    L_ok: bool
    kept: bool
    jump_ok: bool

    @property
    def ok(self):
        return self.p_in_P and self.L_ok and self.kept and self.jump_ok


def reevaluate(roof: Roof, cert: DriftCertificate, prec=106) -> Reevaluation:
    """Recompute a certificate from scratch along exact orbits at ``prec`` bits."""
    T = roof.T
    c = cert.constants
    ctx = sc.context(prec)
    n = cert.M + cert.L + 2
    xs = _orbit_exact(T, cert.x, n, cert.direction)
    ys = _orbit_exact(T, cert.y, n, cert.direction)
    diff = [roof.value(a, prec) - roof.value(b, prec) for a, b in zip(xs, ys)]
    delta = [ctx.mpf(0)]
    if cert.direction == FORWARD:
        for v in diff[:-1]:
            delta.append(delta[-1] + v)
    else:
        for v in diff[1:]:
            delta.append(delta[-1] - v)
    k = cert.k
    ip = {"ka": k + 1, "ka2": k, "ka3": k, "ka4": k - 1}[cert.branch]
    p = delta[ip]
    window = delta[cert.M:cert.M + cert.L + 1]
    dev = max(abs(w - delta[cert.M]) for w in window)
    cdev = max(abs(w - p) for w in window)
    jump = abs(delta[k + 1] - delta[k]) if cert.direction == FORWARD else abs(delta[k] - delta[k - 1])
    kap = c.kappa
    L_ok = cert.L == math.ceil(kap * cert.M) and cert.L >= kap * cert.M
    eps = sc.to_mpf(c.eps, prec) if not isinstance(c.eps, float) else ctx.mpf(c.eps)
    c4 = ctx.mpf(c.c) ** 4 if isinstance(c.c, float) else sc.to_mpf(Fraction(c.c) ** 4, prec)
    return Reevaluation(
        float(p), float(dev), float(cdev), float(jump),
        c.in_P(float(p)), L_ok, bool(dev < eps and cdev < eps), bool(jump >= 1 / (800 * c4)),
    )


# -- sweeps ----------------------------------------------------------------------


@dataclass
class PairResult:
    eta: object
    x: object
    y: object
    status: str
    cert: DriftCertificate | None = None
    error: str | None = None

    def row(self):
        if self.cert is not None:
            r = self.cert.row()
        else:
            r = {"eta": float(self.eta), "x": sc.json_text(self.x), "y": sc.json_text(self.y),
                 "direction": "", "branch": "", "k": "", "M": "", "L": "", "p": "", "deviation": ""}
        r["status"] = self.status
        return r


def sample_pair(rng: np.random.Generator, eta):
    """x uniform on a 2^-53 grid, y = x + eta on the circle."""
    x = Fraction(int(rng.integers(0, 2 ** 53)), 2 ** 53)
    y = sc.frac(x + eta)
    return x, y


def run_pair(T, roof, x, y, consts, mode, reeval_prec=None):
    """Full pipeline on one pair; with ``reeval_prec`` the certificate is also recomputed at that precision."""
    eta = circle_dist(x, y)
    try:
        cert = drift_certificate(T, roof, x, y, consts, mode)
    except IETError as exc:
        return PairResult(eta, x, y, type(exc).__name__, None, str(exc))
    if reeval_prec:
        re = reevaluate(roof, cert, reeval_prec)
        if not re.ok:
            return PairResult(eta, x, y, "ReevalFailed", cert, repr(re))
    return PairResult(eta, x, y, "ok", cert)


def _pair_task(args):
    return run_pair(*args)


def swr_sweep(T: IET, roof: Roof, consts: RatnerConstants, scales, pairs_per_scale: int, seed: int = 0,
              mode=ADAPTIVE, jobs: int = 1, reeval_prec=None):
    """Run the drift pipeline on random pairs at each scale eta; deterministic in ``seed``."""
    root = np.random.SeedSequence(seed)
    scale_seqs = root.spawn(len(scales))
    tasks = []
    for eta, ss in zip(scales, scale_seqs):
        eta = _exact(eta)
        for pss in ss.spawn(pairs_per_scale):
            x, y = sample_pair(np.random.default_rng(pss), eta)
            tasks.append((T, roof, x, y, consts, mode, reeval_prec))
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_pair_task, tasks, chunksize=4))
    else:
        results = [_pair_task(t) for t in tasks]
    return SweepReport(list(scales), pairs_per_scale, seed, mode, consts, results)


@dataclass
class SweepReport:
    scales: list
    pairs_per_scale: int
    seed: int
    mode: str
    consts: RatnerConstants
    results: list

    def by_scale(self, eta):
        eta = _exact(eta)
        return [r for r in self.results if r.eta == eta]

    def failures(self):
        return [r for r in self.results if r.status != "ok"]

    def summary(self):
        out = {"mode": self.mode, "seed": self.seed, "pairs_per_scale": self.pairs_per_scale,
               "P": [float(self.consts.P_low), float(self.consts.H)],
               "kappa": float(self.consts.kappa), "eps": float(self.consts.eps), "scales": []}
        for eta in self.scales:
            rs = self.by_scale(eta)
            certs = [r.cert for r in rs if r.status == "ok"]
            ps = np.array([c.p for c in certs]) if certs else np.array([])
            entry = {
                "eta": float(_exact(eta)),
                "pairs": len(rs),
                "success_fraction": (len(certs) / len(rs)) if rs else None,
                "directions": {d: sum(c.direction == d for c in certs) for d in (FORWARD, BACKWARD)},
                "branches": {b: sum(c.branch == b for c in certs) for b in ("ka", "ka2", "ka3", "ka4")},
                "failures": {},
                "p_abs_min": float(np.min(np.abs(ps))) if len(ps) else None,
                "p_abs_max": float(np.max(np.abs(ps))) if len(ps) else None,
                "p_quantiles": [float(q) for q in np.quantile(ps, [0.05, 0.5, 0.95])] if len(ps) else None,
                "min_L_over_M": min((c.L / c.M for c in certs), default=None),
                "max_deviation": max((max(c.deviation, c.cocycle_deviation) for c in certs), default=None),
            }
            for r in rs:
                if r.status != "ok":
                    entry["failures"][r.status] = entry["failures"].get(r.status, 0) + 1
            out["scales"].append(entry)
        return out


def witness(T: IET, roof: Roof, consts: RatnerConstants, result: PairResult, mode, reeval_prec=None) -> dict:
    """Self-contained replay record for one pair."""
    return {
        "reeval_prec": reeval_prec,
        "instance": T.to_json(),
        "roof": roof.spec.to_json(),
        "constants": consts.to_json(),
        "mode": mode,
        "pair": {"x": sc.to_json(result.x), "y": sc.to_json(result.y)},
        "status": result.status,
        "error": result.error,
    }


def replay_witness(obj) -> PairResult:
    """Re-run the pair stored in a witness record."""
    from .iet import CombinatorialData, build_iet
    from .roof import RoofSpec

    inst = obj["instance"]
    comb = CombinatorialData(tuple(inst["alphabet"]), tuple(inst["pi0"]), tuple(inst["pi1"]))
    T = build_iet(comb, [sc.from_json(v) for v in inst["lengths"]])
    roof = Roof(RoofSpec.from_json(obj["roof"]), T)
    k = obj["constants"]

    def dec(v):
        if v == "inf":
            return math.inf
        return Fraction(v) if isinstance(v, (str, int)) else v

    consts = derive_constants(dec(k["c"]), dec(k["C"]), k["d"], dec(k["C_tilde"]), dec(k["M_prime"]),
                              dec(k["D"]), dec(k["eps"]), k["N"],
                              kappa=dec(k["kappa"]) if k["mode"] == ADAPTIVE else None, mode=k["mode"])
    x, y = sc.from_json(obj["pair"]["x"]), sc.from_json(obj["pair"]["y"])
    return run_pair(T, roof, x, y, consts, obj["mode"], obj.get("reeval_prec"))


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


# -- measured constants --------------------------------------------------------------


def measure_constants(T: IET, roof: Roof, eps=Fraction(1, 10), N=1, kappa=Fraction(1, 20), mode=ADAPTIVE,
                      n_max=2000, K=50, samples=1000, seed=0, overrides=None):
    """Constants from measurements on the instance.

    c: balanced-partition constant over n <= n_max (10% margin); C: MMY bound
    (periodic bound when certified, else C_K); M', D: audited values with a 2x
    safety factor.  ``overrides`` replaces any measured value.  Returns the
    constants and the raw measurements.
    """
    from .induction import Trace
    from .regularity import bounded_type_certificate, gap_profile
    from .roof import canc_audit

    overrides = dict(overrides or {})
    meas = {}
    if "c" not in overrides:
        meas["c"] = gap_profile(T, n_max).c_star()
    if "C" not in overrides:
        tr = Trace(T)
        cert = bounded_type_certificate(T, K, tr)
        meas["C"] = cert.bound if cert.certified else cert.C_K
    if "M_prime" not in overrides:
        meas["M_prime"] = 2 * canc_audit(roof, 8, samples, seed).M_prime(8)
    if "D" not in overrides:
        first = T.comb.letter_at(0, 1)
        scale = roof.spec.Cplus.get(first, 0)
        if not scale > 0:
            raise NotNormalized("the roof needs a C+ singularity at 0")
        nroof = roof if scale == 1 else Roof(roof.spec.normalized(T), T)
        meas["D"] = 2 * float(scale) * estimate_D(nroof).D
    vals = {**meas, **overrides}
    # floats go in as exact binary fractions so the derivation stays rational
    conv = {k: (Fraction(v) if isinstance(v, float) else _exact(v)) for k, v in vals.items()}
    consts = derive_constants(conv["c"], conv["C"], T.d, roof.spec.C_tilde, conv["M_prime"], conv["D"],
                              _exact(eps), int(N), kappa=kappa if mode == ADAPTIVE else None, mode=mode)
    return consts, meas
