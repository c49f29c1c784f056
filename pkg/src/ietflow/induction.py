"""Rauzy-Veech induction, its Zorich and MMY accelerations, and Rohlin towers.

Every induction step renormalizes the new length vector to total length 1 and
records the factor it divided by, so that identities in the unrescaled frame
(lengths ``scale * lengths``) can be checked exactly.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator

from . import scalar as sc
from .errors import BadLevel, CapExceeded, DepthExceeded, OutOfDomain, TiedLengths
from .iet import IET, CombinatorialData, apply

# -- integer matrices indexed by the alphabet (in alphabet order) ---------------------


def identity(d):
    return tuple(tuple(int(i == j) for j in range(d)) for i in range(d))


def elementary(d, row, col):
    """I + E_{row,col}."""
    return tuple(tuple(int(i == j) + int(i == row and j == col) for j in range(d)) for i in range(d))


def matmul(A, B):
    cols = list(zip(*B))
    return tuple(tuple(sum(a * b for a, b in zip(r, c)) for c in cols) for r in A)


def matvec(A, v):
    return [sum((a * x for a, x in zip(r, v)), 0) for r in A]


def transpose(A):
    return tuple(zip(*A))


def sup_norm(A):
    return max(max(r) for r in A)


def det(A):
    """Exact determinant of an integer matrix (fraction-free Bareiss)."""
    M = [list(r) for r in A]
    n = len(M)
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


# -- one step -----------------------------------------------------------------------


@dataclass(frozen=True)
class InductionStep:
    eps: int
    winner: str
    loser: str
    theta: tuple  # I + E_{winner, loser}, alphabet order
    before: IET
    after: IET  # renormalized to total length 1
    scale: object  # unnormalized total of ``after`` relative to ``before``

    def theta_nonzero(self):
        return [self.winner, self.loser]


def _rauzy_comb(comb: CombinatorialData, eps: int) -> CombinatorialData:
    d = comb.d
    other = comb.pi1 if eps == 0 else comb.pi0
    row = comb.pi0 if eps == 0 else comb.pi1
    w = row.index(d)  # alphabet index of the winner
    pw = other[w]
    new = []
    for p in other:
        if p <= pw:
            new.append(p)
        elif p < d:
            new.append(p + 1)
        else:
            new.append(pw + 1)
    new = tuple(new)
    if eps == 0:
        return CombinatorialData(comb.alphabet, comb.pi0, new)
    return CombinatorialData(comb.alphabet, new, comb.pi1)


def rv_step(T: IET, step_index=0) -> InductionStep:
    """One Rauzy-Veech step: the first return map to [0, 1 - loser length)."""
    comb = T.comb
    top_last = comb.letter_at(0, comb.d)
    bottom_last = comb.letter_at(1, comb.d)
    lt, lb = T.lengths[top_last], T.lengths[bottom_last]
    if lt == lb:
        raise TiedLengths(step_index)
    if lt > lb:
        eps, winner, loser = 0, top_last, bottom_last
    else:
        eps, winner, loser = 1, bottom_last, top_last
    lam = dict(T.lengths)
    lam[winner] = lam[winner] - lam[loser]
    total = 1 - lam[loser] if T.exact else sum(lam.values(), 0)
    new_comb = _rauzy_comb(comb, eps)
    after = IET(new_comb, {a: v / total for a, v in lam.items()})
    d = comb.d
    idx = comb.alphabet.index
    theta = elementary(d, idx(winner), idx(loser))
    return InductionStep(eps, winner, loser, theta, T, after, total)


def induct(T: IET, max_steps=None) -> Iterator[InductionStep]:
    """Yield successive Rauzy-Veech steps of T (forever unless capped or tied)."""
    n = 0
    while max_steps is None or n < max_steps:
        s = rv_step(T, n)
        yield s
        T = s.after
        n += 1


def iterate(T: IET, n: int):
    """The first ``n`` steps and the product matrix Theta^(n)."""
    steps = list(induct(T, n))
    theta = identity(T.d)
    for s in steps:
        theta = matmul(theta, s.theta)
    return steps, theta


# -- raw traces ---------------------------------------------------------------------


class Trace:
    """A lazily extended raw induction trace of one IET.

    ``stage(n)`` is the renormalized IET after n steps, ``scale(n)`` the
    total length of stage n in the original frame, ``winners[i]`` the name
    of arrow i+1.
    """

    def __init__(self, T: IET, max_steps=10 ** 6):
        self.T = T
        self.max_steps = max_steps
        self.steps = []
        self._stages = [T]
        self._scales = [1]
        self._gen = induct(T)
        self.tie = None

    def extend(self, n):
        """Make sure at least n steps are available."""
        while len(self.steps) < n:
            if len(self.steps) >= self.max_steps:
                raise DepthExceeded(f"more than {self.max_steps} raw induction steps needed")
            if self.tie is not None:
                raise self.tie
            try:
                s = next(self._gen)
            except TiedLengths as exc:
                self.tie = exc
                raise
            self.steps.append(s)
            self._stages.append(s.after)
            self._scales.append(self._scales[-1] * s.scale)

    def __len__(self):
        return len(self.steps)

    def stage(self, n):
        self.extend(n)
        return self._stages[n]

    def scale(self, n):
        self.extend(n)
        return self._scales[n]

    def winner(self, i):
        self.extend(i + 1)
        return self.steps[i].winner

    def product(self, n_from, n_to):
        """B(n_from, n_to): ordered product of the Thetas of steps n_from..n_to-1."""
        self.extend(n_to)
        A = identity(self.T.d)
        for s in self.steps[n_from:n_to]:
            A = matmul(A, s.theta)
        return A

    def heights(self, n):
        """Return times h^n of the towers over the stage-n subintervals, alphabet order."""
        self.extend(n)
        idx = self.T.alphabet.index
        h = [1] * self.T.d
        for s in self.steps[:n]:
            h[idx(s.loser)] += h[idx(s.winner)]
        return h

    def state_key(self, n):
        S = self.stage(n)
        return (S.comb.pi0, S.comb.pi1, tuple(S.lengths[a] for a in S.alphabet))

    def find_period(self, max_steps):
        """(start, period) if the normalized state repeats within ``max_steps`` steps."""
        if not self.T.exact:
            return None
        seen = {}
        for n in range(max_steps + 1):
            try:
                key = self.state_key(n)
            except TiedLengths:
                return None
            if key in seen:
                return seen[key], n - seen[key]
            seen[key] = n
        return None

    def to_jsonl(self, n, fh):
        """Write one JSON record per step (steps 1..n)."""
        self.extend(n)
        for i, s in enumerate(self.steps[:n], start=1):
            rec = {
                "step": i,
                "eps": s.eps,
                "winner": s.winner,
                "loser": s.loser,
                "theta_nonzero": s.theta_nonzero(),
                "lengths": [sc.to_json(s.after.lengths[a]) for a in s.after.alphabet],
                "pi0": list(s.after.comb.pi0),
                "pi1": list(s.after.comb.pi1),
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# -- acceleration schedules ---------------------------------------------------------


@dataclass
class AccelerationSchedule:
    kind: str  # raw | zorich | mmy
    level: int | None
    times: list  # n_0 = 0 < n_1 < ... (complete blocks only)
    blocks: list  # B(n_k, n_{k+1})
    trace: Trace = field(repr=False)

    @property
    def K(self):
        return len(self.blocks)

    def norms(self):
        return [sup_norm(B) for B in self.blocks]

    def block_lengths(self):
        return [b - a for a, b in zip(self.times, self.times[1:])]

    def to_json(self):
        return {
            "kind": self.kind,
            "level": self.level,
            "times": self.times,
            "blocks": [[list(r) for r in B] for B in self.blocks],
        }


def _block_ends(winner, start, level, limit):
    """End of the maximal block after ``start`` using <= level names.

    ``winner(i)`` is the name of arrow i+1.  Returns the block end n, i.e. the
    arrows start+1..n form the block and arrow n+1 brings a new name.
    """
    names = set()
    n = start
    while True:
        if n - start > limit:
            raise DepthExceeded(f"block starting at {start} longer than {limit} steps")
        w = winner(n)
        if w not in names and len(names) == level:
            return n
        names.add(w)
        n += 1


def block_times(winner, level, K, limit=10 ** 6):
    times = [0]
    while len(times) <= K:
        times.append(_block_ends(winner, times[-1], level, limit))
    return times


def _schedule(T_or_trace, level, K, kind, max_steps):
    tr = T_or_trace if isinstance(T_or_trace, Trace) else Trace(T_or_trace, max_steps)
    times = block_times(tr.winner, level, K, max_steps)
    blocks = [tr.product(a, b) for a, b in zip(times, times[1:])]
    return AccelerationSchedule(kind, level, times, blocks, tr)


def zorich_schedule(T, K, max_steps=10 ** 6) -> AccelerationSchedule:
    """Blocks of consecutive steps sharing one value of eps."""
    return _schedule(T, 1, K, "zorich", max_steps)


def mmy_schedule(T, level, K, max_steps=10 ** 6) -> AccelerationSchedule:
    """Maximal blocks whose arrows take at most ``level`` distinct names."""
    d = T.T.d if isinstance(T, Trace) else T.d
    if not 1 <= level < d:
        raise BadLevel(f"level must satisfy 1 <= level < {d}, got {level}")
    return _schedule(T, level, K, "mmy", max_steps)


def raw_schedule(T, K, max_steps=10 ** 6) -> AccelerationSchedule:
    tr = T if isinstance(T, Trace) else Trace(T, max_steps)
    tr.extend(K)
    times = list(range(K + 1))
    blocks = [s.theta for s in tr.steps[:K]]
    return AccelerationSchedule("raw", None, times, blocks, tr)


def periodic_blocks(trace: Trace, level, start, period, max_blocks=10 ** 4):
    """Block structure of an eventually periodic raw path.

    With the winner sequence periodic from ``start`` with ``period``, greedy
    blocks become periodic too.  Returns (pre, per, times): ``pre`` blocks
    before the cycle, ``per`` blocks per cycle, and the block times up to the
    end of the first full cycle.  Every block of the infinite path equals one
    of these.
    """
    trace.extend(start + period)

    def winner(i):
        if i >= start:
            i = start + (i - start) % period
        return trace.steps[i].winner

    times = [0]
    seen = {}
    while len(times) < max_blocks:
        t = times[-1]
        if t >= start:
            key = (t - start) % period
            if key in seen:
                k0 = seen[key]
                return k0, len(times) - 1 - k0, times
            seen[key] = len(times) - 1
        times.append(_block_ends(winner, t, level, 10 * period + start))
    raise DepthExceeded("block structure did not become periodic")


# -- towers -------------------------------------------------------------------------


@dataclass(frozen=True)
class TowerData:
    stage: int
    lengths: dict  # normalized lengths of the stage IET
    scale: object  # total length of the stage interval in the original frame
    heights: dict

    def unscaled_lengths(self):
        return {a: self.scale * v for a, v in self.lengths.items()}


def towers(schedule: AccelerationSchedule, k: int, T: IET | None = None) -> TowerData:
    """Tower data at the k-th time of ``schedule``."""
    if k > schedule.K:
        raise DepthExceeded(f"schedule has only {schedule.K} blocks")
    tr = schedule.trace
    n = schedule.times[k]
    S = tr.stage(n)
    h = tr.heights(n)
    return TowerData(n, dict(S.lengths), tr.scale(n), dict(zip(S.alphabet, h)))


def tower_bases(tr: Trace, n):
    """Base intervals {letter: (left, right)} of the stage-n towers, original frame."""
    S, s = tr.stage(n), tr.scale(n)
    return {a: (s * S.left[a], s * S.right[a]) for a in S.alphabet}


def brute_force_return(T: IET, sub, x, cap):
    """Smallest n >= 1 with T^n x in the half-open interval ``sub``, and T^n x."""
    a, b = sub
    if not (a <= x < b):
        raise OutOfDomain(f"{x} not in [{a}, {b})")
    y = x
    for n in range(1, cap + 1):
        y = apply(T, y)
        if a <= y < b:
            return n, y
    raise CapExceeded(f"no return within {cap} steps")
