"""Bounded-type certificates, Veech ratios, orbit partitions and balanced lengths.

Two independent predicates live here:

* :func:`bounded_type_certificate` looks only at the MMY block matrices of
  the induction (an eventually periodic induction path proves boundedness);
* :func:`balanced_verdict` / :func:`balanced_exists` look only at gaps of the
  partitions cut by orbit segments of the discontinuities.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import scalar as sc
from ._gapscan import scan_windows
from .errors import (
    BadIndex,
    CertificateMismatch,
    NotPrimitive,
    PerronDegreeTooHigh,
    PrecisionExhausted,
    ZeroEntry,
)
from .iet import BACKWARD, FORWARD, IET, CombinatorialData, apply, build_iet
from .induction import (
    Trace,
    _rauzy_comb,
    elementary,
    identity,
    matmul,
    mmy_schedule,
    periodic_blocks,
    sup_norm,
    tower_bases,
)

# -- Veech ratios -------------------------------------------------------------------


def veech_nu(A):
    """(nu1, nu2, nu): largest ratio of two entries in one column / in one row."""
    if any(x <= 0 for r in A for x in r):
        raise ZeroEntry("Veech ratios need a strictly positive matrix")
    cols = list(zip(*A))
    nu1 = max(Fraction(max(c), min(c)) for c in cols)
    nu2 = max(Fraction(max(r), min(r)) for r in A)
    return nu1, nu2, max(nu1, nu2)


# -- bounded type -------------------------------------------------------------------


@dataclass
class BoundedTypeCertificate:
    instance_hash: str
    K: int
    norms: list
    times: list
    periodic: dict | None = None  # {"period": blocks per cycle, "start": first periodic block, ...}
    bound: int | None = None  # sup over all blocks (only when periodic)

    @property
    def C_K(self):
        return max(self.norms) if self.norms else 0

    @property
    def certified(self):
        return self.periodic is not None

    def to_json(self):
        return {
            "instance_hash": self.instance_hash,
            "schedule": "mmy",
            "K": self.K,
            "norms": self.norms,
            "C_K": self.C_K,
            "periodic": self.periodic,
            "certified": self.certified,
        }


def bounded_type_certificate(T: IET, K: int, trace: Trace | None = None, period_search=None):
    """MMY(d-1) block norms up to K blocks, upgraded to a proof when the path is periodic.

    Periodicity means the normalized state (pi, lambda) repeats exactly.  The
    search looks at the raw steps consumed by the K blocks, or at
    ``period_search`` steps if given.
    """
    if K < 1:
        raise BadIndex("K must be >= 1")
    tr = trace or Trace(T)
    sched = mmy_schedule(tr, T.d - 1, K)
    norms = sched.norms()
    cert = BoundedTypeCertificate(T.instance_hash(), K, norms, sched.times)
    depth = period_search if period_search is not None else sched.times[-1]
    found = tr.find_period(depth) if T.exact else None
    if found is not None:
        start, period = found
        k0, per, times = periodic_blocks(tr, T.d - 1, start, period)
        bound = max(sup_norm(ext_product(tr, start, period, a, b)) for a, b in zip(times, times[1:]))
        cert.periodic = {"period": per, "start": k0, "raw_start": start, "raw_period": period}
        cert.bound = bound
    return cert


def ext_product(tr: Trace, start, period, a, b):
    """B(a, b) along the periodic extension of a raw path."""
    tr.extend(start + period)
    A = identity(tr.T.d)
    for i in range(a, b):
        if i >= start:
            i = start + (i - start) % period
        A = matmul(A, tr.steps[i].theta)
    return A


# -- partitions ---------------------------------------------------------------------


@dataclass
class PartitionGaps:
    n: int
    j: int | None
    scope: str
    gaps: list = field(repr=False)

    @property
    def min(self):
        return self.gaps[0]

    @property
    def max(self):
        return self.gaps[-1]


def _orbit_range(T: IET, x, i_from, i_to):
    """{i: T^i x} for i_from <= i <= i_to (i_from <= 0 <= i_to)."""
    out = {0: x}
    y = x
    for i in range(1, i_to + 1):
        y = apply(T, y)
        out[i] = y
    y = x
    for i in range(1, -i_from + 1):
        y = apply(T, y, BACKWARD)
        out[-i] = y
    return out


def circle_gaps(points):
    """Sorted gaps of the partition of the circle cut at ``points`` (duplicates merged)."""
    pts = sorted(set(points))
    if len(pts) == 1:
        return [sc.Fraction(1) if not isinstance(pts[0], sc.Ball) else 1]
    gaps = [b - a for a, b in zip(pts, pts[1:])]
    gaps.append(1 - pts[-1] + pts[0])
    return sorted(gaps)


def _scope_letters(T, scope):
    if scope == "all":
        return list(T.alphabet)
    if scope in T.alphabet:
        return [scope]
    raise BadIndex(f"unknown scope {scope!r}")


def partition_gaps(T: IET, n: int, j: int | None = None, scope="all", x=None):
    """Exact gaps of P_{n,j}^alpha (scope=letter), P_{n,j} (scope='all') or P_n(x) (scope='orbit')."""
    if n < 1:
        raise BadIndex("n must be >= 1")
    if scope == "orbit":
        pts = list(_orbit_range(T, x, 0, n - 1).values())
        return PartitionGaps(n, None, "orbit", circle_gaps(pts))
    if j is None or not 0 <= j <= n - 1:
        raise BadIndex(f"j must satisfy 0 <= j <= n-1, got j={j}, n={n}")
    pts = []
    for a in _scope_letters(T, scope):
        orb = _orbit_range(T, T.left[a], min(0, j - n + 1), max(0, j))
        pts.extend(orb[i] for i in range(j - n + 1, j + 1))
    return PartitionGaps(n, j, scope, circle_gaps(pts))


# -- fast scans over all windows ---------------------------------------------------


@dataclass
class ScopeProfile:
    """Worst gaps over all admissible j, indexed by n = 1..n_max."""

    scope: str
    min_gap: np.ndarray
    min_j: np.ndarray
    max_gap: np.ndarray
    max_j: np.ndarray
    min_letter: list | None = None
    max_letter: list | None = None

    def c_needed(self):
        """max(1/(n min), n max) per n (index 0 unused)."""
        n = np.arange(1, len(self.min_gap), dtype=float)
        out = np.zeros(len(self.min_gap))
        out[1:] = np.maximum(1.0 / (n * self.min_gap[1:]), n * self.max_gap[1:])
        return out


@dataclass
class GapProfile:
    n_max: int
    letters: ScopeProfile  # worst over letters
    all: ScopeProfile
    err: float  # bound on |float gap - exact gap|
    T: IET = field(repr=False, default=None)

    def scopes(self):
        return [self.letters, self.all]

    def c_curve(self):
        """Running max over n' <= n of the smallest c compatible with scale n'."""
        need = np.maximum(self.letters.c_needed(), self.all.c_needed())
        return np.maximum.accumulate(need)

    def c_star(self, n=None, margin=0.1):
        curve = self.c_curve()
        n = self.n_max if n is None else n
        return float(curve[n]) * (1 + margin)

    def rows(self):
        """CSV rows (n, j, scope, min_gap, max_gap): per n and scope, the window with the smallest gap."""
        out = []
        for n in range(1, self.n_max + 1):
            for prof in (self.letters, self.all):
                scope = prof.scope
                if prof.min_letter is not None:
                    scope = f"letter:{prof.min_letter[n]}"
                out.append((n, int(prof.min_j[n]), scope, float(prof.min_gap[n]), float(prof.max_gap[n])))
        return out


def _float_points(T: IET, i_lo, i_hi):
    """Float orbit points T^i l_alpha, their index, letter and exact-identity ids."""
    pos, idx, let, uid = [], [], [], []
    ids = {}
    for a in T.alphabet:
        orb = _orbit_range(T, T.left[a], i_lo, i_hi)
        for i in range(i_lo, i_hi + 1):
            y = orb[i]
            key = y if T.exact else (a, i)
            if key not in ids:
                ids[key] = len(ids)
            pos.append(float(y))
            idx.append(i)
            let.append(a)
            uid.append(ids[key])
    if not T.exact:
        # T(l_b) = 0 = l_first for the letter b ending up first in the bottom row
        first = T.comb.letter_at(0, 1)
        b = T.comb.letter_at(1, 1)
        for p in range(len(pos)):
            if let[p] == first and (b, idx[p] + 1) in ids:
                uid[p] = ids[(b, idx[p] + 1)]
    pos = np.array(pos)
    idx = np.array(idx, dtype=np.int64)
    uid = np.array(uid, dtype=np.int64)
    let = np.array(let)
    order = np.argsort(idx, kind="stable")
    return pos[order], idx[order], let[order], uid[order]


def _float_err(T: IET, n_max):
    if T.exact:
        return 6e-16
    fm = T.float_map()
    return 2 * (fm.eps + n_max * fm.step_err) + 6e-16


def _run(pos, idx, uid, a_lo, a_hi, n_max):
    n_uid = int(uid.max()) + 1 if len(uid) else 0
    # renumber uids so the kernel's tables stay small
    _, uid = np.unique(uid, return_inverse=True)
    return scan_windows(pos, idx, uid.astype(np.int64), n_uid, a_lo, a_hi, n_max)


def gap_profile(T: IET, n_max: int) -> GapProfile:
    """Worst min/max gaps of P^alpha_{n,j} and P_{n,j} over 0 <= j <= n-1, for n <= n_max."""
    if n_max < 1:
        raise BadIndex("n_max must be >= 1")
    pos, idx, let, uid = _float_points(T, -(n_max - 1), n_max - 1)
    a_lo = -(n_max - 1)
    all_res = _run(pos, idx, uid, a_lo, 0, n_max)
    best = None
    for a in T.alphabet:
        mask = let == a
        res = _run(pos[mask], idx[mask], uid[mask], a_lo, 0, n_max)
        if best is None:
            best = [r.copy() for r in res] + [np.array([a] * (n_max + 1)), np.array([a] * (n_max + 1))]
            continue
        lo = res[0] < best[0]
        best[0][lo], best[1][lo], best[4][lo] = res[0][lo], res[1][lo], a
        hi = res[2] > best[2]
        best[2][hi], best[3][hi], best[5][hi] = res[2][hi], res[3][hi], a
    letters = ScopeProfile("letter", best[0], best[1], best[2], best[3], list(best[4]), list(best[5]))
    allp = ScopeProfile("all", *all_res)
    return GapProfile(n_max, letters, allp, _float_err(T, n_max), T)


def head_profile(T: IET, n_max: int) -> np.ndarray:
    """n * min P_{n,0} for n = 0..n_max (entry 0 is nan), all letters."""
    if n_max < 1:
        raise BadIndex("n_max must be >= 1")
    pos, idx, _, uid = _float_points(T, -(n_max - 1), 0)
    # P_{n,0} uses indices -(n-1)..0: flip them so every window starts at 0
    order = np.argsort(-idx, kind="stable")
    min_v, _, _, _ = _run(pos[order], -idx[order], uid[order], 0, 0, n_max)
    out = np.full(n_max + 1, np.nan)
    out[1:] = np.arange(1, n_max + 1) * min_v[1:]
    return out


def orbit_profile(T: IET, x, n_max: int) -> ScopeProfile:
    """min/max gaps of P_n(x) = P({T^k x : 0 <= k < n}) for n <= n_max."""
    if T.exact and sc.is_exact(x):
        pts = list(_orbit_range(T, x, 0, n_max - 1).values())
        pos = np.array([float(p) for p in pts])
    else:
        pos, _ = T.float_map().orbit(float(x), n_max - 1)
        pos = np.array(pos)
    idx = np.arange(n_max, dtype=np.int64)
    res = scan_windows(pos, idx, idx.copy(), n_max, 0, 0, n_max)
    return ScopeProfile("orbit", *res)


# -- balanced verdicts -------------------------------------------------------------


@dataclass(frozen=True)
class BalancedVerdict:
    passed: bool
    n_max: int
    c: float
    witness: tuple | None = None  # (n, j, scope, gap)

    def __str__(self):
        if self.passed:
            return f"Pass({self.n_max})"
        n, j, scope, gap = self.witness
        return f"Fail(n={n}, j={j}, scope={scope}, gap={gap:.6g})"


def _exact_window(T, n, j, scope):
    letter = scope.split(":", 1)[1] if scope.startswith("letter:") else "all"
    return partition_gaps(T, n, j, letter)


def balanced_verdict(T: IET, c, n_max: int, profile: GapProfile | None = None) -> BalancedVerdict:
    """Check 1/(cn) < min and max < c/n for all n <= n_max, all j, both scopes."""
    if not c > 0:
        raise BadIndex("c must be > 0")
    prof = profile if profile is not None and profile.n_max >= n_max else gap_profile(T, n_max)
    cf = float(c)
    err = prof.err
    for n in range(1, n_max + 1):
        for sp in prof.scopes():
            lo, hi = 1.0 / (cf * n), cf / n
            gmin, gmax = float(sp.min_gap[n]), float(sp.max_gap[n])
            scope = sp.scope if sp.min_letter is None else f"letter:{sp.min_letter[n]}"
            if abs(gmin - lo) <= err + 1e-12 * lo and T.exact:
                gmin = float(_exact_window(T, n, int(sp.min_j[n]), scope).min)
            if not gmin > lo:
                return BalancedVerdict(False, n_max, cf, (n, int(sp.min_j[n]), scope, gmin))
            scope = sp.scope if sp.max_letter is None else f"letter:{sp.max_letter[n]}"
            if abs(gmax - hi) <= err + 1e-12 * hi and T.exact:
                gmax = float(_exact_window(T, n, int(sp.max_j[n]), scope).max)
            if not gmax < hi:
                return BalancedVerdict(False, n_max, cf, (n, int(sp.max_j[n]), scope, gmax))
    return BalancedVerdict(True, n_max, cf)


@dataclass(frozen=True)
class ExistenceVerdict:
    """Finite-range reading of "some c works for every n"."""

    balanced: bool
    c_star: float
    c_early: float
    n_max: int
    growth: float
    tolerance: float


def balanced_exists(T: IET, n_max: int = 2000, profile: GapProfile | None = None, tolerance=0.05,
                    early_fraction=0.1):
    """Decide whether a single c serves all scales, from the scan up to n_max.

    The smallest workable c for scales n' <= n is nondecreasing in n.  If it
    has stopped growing (within ``tolerance``) between n_max*early_fraction
    and n_max the partitions are read as balanced, with c* the reported
    constant; continued growth is read as unbalanced.
    """
    prof = profile if profile is not None and profile.n_max >= n_max else gap_profile(T, n_max)
    curve = prof.c_curve()
    n_early = max(1, int(n_max * early_fraction))
    late, early = float(curve[n_max]), float(curve[n_early])
    growth = late / early
    return ExistenceVerdict(growth <= 1 + tolerance, late * 1.1, early * 1.1, n_max, growth, tolerance)


# -- inequality chains ------------------------------------------------------------


@dataclass
class AuditReport:
    C: object
    K: int
    chains: dict  # chain name -> list of failure witnesses

    @property
    def passed(self):
        return all(not w for w in self.chains.values())

    def summary(self):
        return {name: ("pass" if not w else f"fail ({len(w)}; first {w[0]})") for name, w in self.chains.items()}


def audit_constant(cert: BoundedTypeCertificate, trace: Trace):
    """max(C_K, sup_k ||B(m_k, m_{k+r})||) with r = max(2d - 3, 2) blocks.

    Products of r consecutive MMY blocks are positive, which is what the
    balance chains need; single blocks usually are not.
    """
    d = trace.T.d
    r = max(2 * d - 3, 2)
    times = cert.times
    spans = [sup_norm(trace.product(times[k], times[k + r])) for k in range(len(times) - r)]
    return max([cert.C_K] + spans)


def balance_audit(T: IET, K: int, C, cert: BoundedTypeCertificate | None = None, trace: Trace | None = None):
    """Check the balance inequalities implied by an MMY bound C at stages m_0..m_K.

    Chains: lengths/heights comparable within factor C; |I^0|/(dC^2) <=
    |I_a| h_a <= |I^0|; d/C h_a^{m_k} <= h_b^{m_k+1} <= dC^2 h_a^{m_k}.
    """
    tr = trace or Trace(T)
    cert = cert or bounded_type_certificate(T, K, tr)
    if C < cert.C_K:
        raise CertificateMismatch(f"C={C} is below the observed block norm bound {cert.C_K}")
    d = T.d
    times = cert.times
    chains = {"lengths": [], "heights": [], "pigeon": [], "growth": []}
    letters = T.alphabet
    for k in range(K + 1):
        n = times[k]
        S, s = tr.stage(n), tr.scale(n)
        lam = {a: s * S.lengths[a] for a in letters}
        h = dict(zip(letters, tr.heights(n)))
        for a, b in itertools.permutations(letters, 2):
            if not (lam[b] <= C * lam[a]):
                chains["lengths"].append((k, a, b))
            if not (h[b] <= C * h[a]):
                chains["heights"].append((k, a, b))
        for a in letters:
            prod = lam[a] * h[a]
            if not (Fraction(1) / (d * C * C) <= prod <= 1):
                chains["pigeon"].append((k, a))
        if k < K:
            h_next = dict(zip(letters, tr.heights(times[k + 1])))
            for a, b in itertools.product(letters, repeat=2):
                if not (Fraction(d) / C * h[a] <= h_next[b] <= d * C * C * h[a]):
                    chains["growth"].append((k, a, b))
    return AuditReport(C, K, chains)


# -- self-similar instances -------------------------------------------------------


def loop_path(comb: CombinatorialData, eps_seq):
    """Follow an eps sequence in the Rauzy diagram: (end comb, winners, product matrix)."""
    d = comb.d
    A = identity(d)
    winners = []
    for eps in eps_seq:
        top_last = comb.letter_at(0, d)
        bottom_last = comb.letter_at(1, d)
        w, l = (top_last, bottom_last) if eps == 0 else (bottom_last, top_last)
        winners.append(w)
        A = matmul(A, elementary(d, comb.index(w), comb.index(l)))
        comb = _rauzy_comb(comb, eps)
    return comb, winners, A


def is_primitive(A):
    d = len(A)
    M = [[int(x > 0) for x in r] for r in A]
    P = M
    for _ in range((d - 1) ** 2 + 1):
        if all(x > 0 for r in P for x in r):
            return True
        P = [[int(any(P[i][k] and M[k][j] for k in range(d))) for j in range(d)] for i in range(d)]
    return False


def perron_root(A):
    """Perron root of a primitive integer matrix as an exact scalar (degree <= 2).

    Returns (root, minimal polynomial coefficients).  Raises
    PerronDegreeTooHigh when the minimal polynomial has degree > 2.
    """
    import sympy

    x = sympy.Symbol("x")
    M = sympy.Matrix(A)
    charpoly = M.charpoly(x).as_expr()
    rho_f = max(abs(complex(v)) for v in np.linalg.eigvals(np.array(A, dtype=float)))
    for fac, _ in sympy.factor_list(charpoly, x)[1]:
        poly = sympy.Poly(fac, x)
        roots = [complex(r) for r in poly.nroots(n=30)]
        if not any(abs(r - rho_f) < 1e-9 * max(1.0, rho_f) for r in roots):
            continue
        coeffs = [int(cf) for cf in poly.all_coeffs()]
        if poly.degree() == 1:
            a1, a0 = coeffs
            return Fraction(-a0, a1), coeffs
        if poly.degree() == 2:
            a2, a1, a0 = coeffs
            return _quad_root(a2, a1, a0), coeffs
        raise PerronDegreeTooHigh(f"Perron root has degree {poly.degree()}")
    raise RuntimeError("Perron root not found among the factors")


def _quad_root(a2, a1, a0):
    """Larger real root of a2 x^2 + a1 x + a0."""
    if a2 < 0:
        a2, a1, a0 = -a2, -a1, -a0
    disc = a1 * a1 - 4 * a2 * a0
    r = math.isqrt(disc)
    if r * r == disc:
        return Fraction(-a1 + r, 2 * a2)
    return sc.Quadratic(-a1, 1, 2 * a2, disc)


def nullvector(A, rho):
    """A nonzero vector v with (A - rho I) v = 0, exact over the field of rho."""
    d = len(A)
    M = [[A[i][j] - (rho if i == j else 0) for j in range(d)] for i in range(d)]
    pivots = []
    row = 0
    for col in range(d):
        piv = next((r for r in range(row, d) if M[r][col] != 0), None)
        if piv is None:
            continue
        M[row], M[piv] = M[piv], M[row]
        inv = 1 / M[row][col]
        M[row] = [v * inv for v in M[row]]
        for r in range(d):
            if r != row and M[r][col] != 0:
                f = M[r][col]
                M[r] = [v - f * w for v, w in zip(M[r], M[row])]
        pivots.append(col)
        row += 1
    free = [c for c in range(d) if c not in pivots]
    if not free:
        raise NotPrimitive("eigenvalue has trivial eigenspace")
    fcol = free[0]
    v = [0] * d
    v[fcol] = 1
    for r, pc in enumerate(pivots):
        v[pc] = -M[r][fcol]
    return v


@dataclass
class SelfSimilar:
    T: IET
    loop: tuple
    winners: list
    matrix: tuple
    root: object
    exact: bool = True


def self_similar(comb: CombinatorialData, eps_seq, prec=256) -> SelfSimilar:
    """The IET whose induction path repeats the closed Rauzy loop ``eps_seq`` forever.

    Its lengths form the Perron eigenvector of the loop matrix.  A float-mode
    instance is attached to PerronDegreeTooHigh when the root is not quadratic.
    """
    eps_seq = tuple(eps_seq)
    if not eps_seq:
        raise NotPrimitive("empty loop")
    end, winners, A = loop_path(comb, eps_seq)
    if end != comb:
        raise BadIndex(f"loop does not close: ends at {end}")
    if not is_primitive(A):
        raise NotPrimitive("loop matrix has no strictly positive power")
    try:
        rho, _ = perron_root(A)
    except PerronDegreeTooHigh as exc:
        ctx = sc.context(prec)
        w, V = ctx.eig(ctx.matrix(A))
        i = max(range(len(w)), key=lambda t: abs(w[t]))
        v = [abs(ctx.re(V[r, i])) for r in range(len(A))]
        T = build_iet(comb, [sc.Ball(x, prec) for x in v])
        raise PerronDegreeTooHigh(str(exc), SelfSimilar(T, eps_seq, winners, A, w[i], exact=False)) from None
    v = nullvector(A, rho)
    if v[0] < 0:
        v = [-x for x in v]
    T = build_iet(comb, v)
    replay = Trace(T)
    replay.extend(len(eps_seq))
    assert tuple(s.eps for s in replay.steps) == eps_seq, "induction does not follow the loop"
    assert replay.stage(len(eps_seq)) == T, "induction does not return to the start"
    return SelfSimilar(T, eps_seq, winners, A, rho)


def closed_loops(comb: CombinatorialData, max_len: int):
    """All eps sequences of length <= max_len returning to ``comb``, shortest first."""
    for L in range(1, max_len + 1):
        for seq in itertools.product((0, 1), repeat=L):
            c = comb
            for eps in seq:
                c = _rauzy_comb(c, eps)
            if c == comb:
                yield seq


def find_quadratic_loop(comb: CombinatorialData, max_len: int = 12):
    """First closed loop (shortest, then lexicographic) with primitive matrix and quadratic Perron root."""
    for seq in closed_loops(comb, max_len):
        _, _, A = loop_path(comb, seq)
        if not is_primitive(A):
            continue
        try:
            rho, coeffs = perron_root(A)
        except PerronDegreeTooHigh:
            continue
        if len(coeffs) == 3:
            return seq
    return None
