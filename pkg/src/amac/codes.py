"""Constant-composition AMAC codes, delay geometry and error-pattern bookkeeping.

Window layout for delay D (d = D mod n, l = (D - d)/n + 1), with 2K
subblocks of lengths n - d (odd k) and d (even k):

    sender 1:  x(i_1) ... x(i_{l-1}) x(0) x(i_{l+1}) ... x(i_K)
    sender 2:  y(0)[d:] y(j_1) ... y(j_{K-1}) y(0)[:d]

Subblock k lies in block t1(k) of sender 1 and block t2(k) of sender 2;
t2 = 0 and t2 = K both denote the (split) sync word of sender 2.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, DomainError, UsageError
from .probability import Dist


def t1(k: int) -> int:
    return (k + 1) // 2


def t2(k: int) -> int:
    return k // 2


@dataclass(frozen=True)
class DelayGeometry:
    n: int
    K: int
    D: int

    def __post_init__(self):
        if self.n < 1 or self.K < 2:
            raise DomainError("need n >= 1 and K >= 2")
        if not 0 <= self.D <= self.n * self.K - 1:
            raise DomainError(f"delay must lie in [0, {self.n * self.K - 1}]")

    @property
    def d(self) -> int:
        return self.D % self.n

    @property
    def l(self) -> int:
        return (self.D - self.d) // self.n + 1

    @property
    def alpha(self) -> float:
        return self.d / self.n

    @property
    def lengths(self) -> np.ndarray:
        """n_k for k = 1..2K."""
        return np.array([self.n - self.d if k % 2 else self.d for k in range(1, 2 * self.K + 1)])

    @property
    def starts(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.lengths)[:-1]])

    def x_slice(self, k: int) -> slice:
        """Positions of subblock k inside the sender-1 codeword t1(k)."""
        return slice(0, self.n - self.d) if k % 2 else slice(self.n - self.d, self.n)

    def y_slice(self, k: int) -> slice:
        """Positions of subblock k inside the sender-2 codeword t2(k)."""
        return slice(self.d, self.n) if k % 2 else slice(0, self.d)

    def y_block(self, k: int) -> int:
        """Sender-2 message index position for subblock k (K for the sync word)."""
        b = t2(k)
        return self.K if b == 0 else b


@dataclass(frozen=True, eq=False)
class AmacCode:
    """Codebooks with the sync word in row 0: x_words[0] = x(0), x_words[m] = x(m)."""
    n: int
    K: int
    x_words: np.ndarray
    y_words: np.ndarray
    px_counts: tuple
    py_counts: tuple
    seed: int | None = None

    def __post_init__(self):
        if self.K < 2:
            raise DomainError("K must be at least 2")
        for words, counts in ((self.x_words, self.px_counts), (self.y_words, self.py_counts)):
            if words.ndim != 2 or words.shape[1] != self.n:
                raise DomainError("codewords must have length n")
            if len({w.tobytes() for w in words}) != len(words):
                raise DomainError("codewords and sync word must be distinct")
            for w in words:
                if tuple(np.bincount(w, minlength=len(counts))) != tuple(counts):
                    raise DomainError("every word must have the prescribed type")

    @property
    def m1(self) -> int:
        return self.x_words.shape[0] - 1

    @property
    def m2(self) -> int:
        return self.y_words.shape[0] - 1

    @property
    def rates(self) -> tuple[float, float]:
        return math.log2(self.m1) / self.n, math.log2(self.m2) / self.n

    def x_window(self, i, geom: DelayGeometry) -> np.ndarray:
        i = check_message_tuple(i, geom, sender=1)
        return np.concatenate([self.x_words[t] for t in i])

    def y_window(self, j, geom: DelayGeometry) -> np.ndarray:
        j = check_message_tuple(j, geom, sender=2)
        d = geom.d
        parts = [self.y_words[0][d:]] + [self.y_words[t] for t in j[:-1]] + [self.y_words[0][:d]]
        return np.concatenate(parts)


def check_message_tuple(t, geom: DelayGeometry, sender: int) -> tuple:
    t = tuple(int(v) for v in t)
    if len(t) != geom.K:
        raise UsageError(f"message tuple must have length K = {geom.K}")
    sync_pos = geom.l if sender == 1 else geom.K
    if t[sync_pos - 1] != 0:
        raise UsageError(f"sender {sender} tuple must carry the sync word at block {sync_pos}")
    if any(v == 0 for p, v in enumerate(t, 1) if p != sync_pos):
        raise UsageError("message indices start at 1; 0 is reserved for the sync word")
    return t


def codebook_size(n: int, rate: float) -> int:
    return int(math.floor(2.0 ** (n * rate) + 1e-9))


def type_class_members(counts) -> np.ndarray:
    """All sequences with the given symbol counts, in lexicographic order."""
    counts = list(counts)
    n = sum(counts)
    out = []

    def rec(prefix, left):
        if len(prefix) == n:
            out.append(prefix.copy())
            return
        for a, c in enumerate(left):
            if c:
                left[a] -= 1
                prefix.append(a)
                rec(prefix, left)
                prefix.pop()
                left[a] += 1

    rec([], counts)
    return np.array(out, dtype=np.int64).reshape(len(out), n)


def multinomial(counts) -> int:
    total, out = 0, 1
    for c in counts:
        total += c
        out *= math.comb(total, c)
    return out


def _sample_type_class(counts, m: int, rng: np.random.Generator) -> np.ndarray:
    size = multinomial(counts)
    if m > size:
        raise CapacityError(f"need {m} distinct words but the type class has only {size}")
    if size <= 20_000:
        members = type_class_members(counts)
        return members[np.sort(rng.choice(size, m, replace=False))][rng.permutation(m)]
    base = np.repeat(np.arange(len(counts)), counts)
    seen, words = set(), []
    while len(words) < m:
        w = rng.permutation(base)
        key = w.tobytes()
        if key not in seen:
            seen.add(key)
            words.append(w)
    return np.array(words)


def type_counts(p, n: int) -> tuple:
    """Round a distribution to a type with denominator n (largest remainders)."""
    p = np.asarray(p, dtype=float)
    raw = p * n
    counts = np.floor(raw).astype(int)
    for a in np.argsort(-(raw - counts))[: n - counts.sum()]:
        counts[a] += 1
    return tuple(int(c) for c in counts)


def _as_counts(t, n: int) -> tuple:
    t = np.asarray(t, dtype=float)
    if np.all(t == np.round(t)) and t.sum() == n:
        return tuple(int(c) for c in t)
    return type_counts(Dist.normalize(t).probs, n)


def build_code(n: int, K: int, r1: float, r2: float, px_type, py_type, seed: int) -> AmacCode:
    """Random constant-composition code: 2^{nR} words plus a sync word per sender.

    Types are integer count vectors summing to n (a distribution is rounded).
    Words are drawn uniformly without replacement from the type class.
    """
    if r1 < 0 or r2 < 0:
        raise DomainError("rates must be nonnegative")
    px_type, py_type = _as_counts(px_type, n), _as_counts(py_type, n)
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, 0xC0DE])))
    xw = _sample_type_class(px_type, codebook_size(n, r1) + 1, rng)
    yw = _sample_type_class(py_type, codebook_size(n, r2) + 1, rng)
    return AmacCode(n, K, xw, yw, px_type, py_type, seed)


# ------------------------------------------------------------ error patterns
@dataclass(frozen=True)
class PatternComponent:
    support: tuple
    L: int
    j: int


@dataclass(frozen=True)
class PatternInfo:
    L1: tuple
    L2: tuple
    S1: frozenset
    S2: frozenset
    S12: frozenset
    components: tuple = field(default=())

    @property
    def length(self) -> int:
        return len(self.L1) + len(self.L2)

    @property
    def support(self) -> frozenset:
        return self.S1 | self.S2 | self.S12

    @property
    def proper(self) -> bool:
        return self.length > 0


def pattern_sets(L1, L2, K: int):
    """S1, S2, S12 from the erroneous block sets of the two senders."""
    L1, L2 = set(L1), set(L2)
    s1, s2, s12 = set(), set(), set()
    for k in range(1, 2 * K + 1):
        e1 = t1(k) in L1
        e2 = t2(k) in L2          # t2 = 0 is the sync word, never erroneous
        if e1 and e2:
            s12.add(k)
        elif e1:
            s1.add(k)
        elif e2:
            s2.add(k)
    return s1, s2, s12


def irreducible_components(L1, L2) -> tuple:
    """Chains of erroneous codewords linked through shared subblocks.

    Sender-1 block t covers subblocks {2t-1, 2t}, sender-2 block t covers
    {2t, 2t+1}; a component of length L covers L + 1 consecutive subblocks.
    """
    spans = sorted([(2 * t - 1, 1) for t in L1] + [(2 * t, 2) for t in L2])
    comps, cur = [], None
    for start, sender in spans:
        if cur is not None and start <= cur["end"]:
            cur["end"] = max(cur["end"], start + 1)
            cur["L"] += 1
        else:
            if cur is not None:
                comps.append(cur)
            cur = {"start": start, "end": start + 1, "L": 1, "j": sender}
    if cur is not None:
        comps.append(cur)
    return tuple(PatternComponent(tuple(range(c["start"], c["end"] + 1)), c["L"], c["j"])
                 for c in comps)


def classify_pattern(i, i_hat, j, j_hat, geom: DelayGeometry) -> PatternInfo:
    i, i_hat = check_message_tuple(i, geom, 1), check_message_tuple(i_hat, geom, 1)
    j, j_hat = check_message_tuple(j, geom, 2), check_message_tuple(j_hat, geom, 2)
    L1 = tuple(t for t in range(1, geom.K + 1) if i[t - 1] != i_hat[t - 1])
    L2 = tuple(t for t in range(1, geom.K + 1) if j[t - 1] != j_hat[t - 1])
    s1, s2, s12 = pattern_sets(L1, L2, geom.K)
    return PatternInfo(L1, L2, frozenset(s1), frozenset(s2), frozenset(s12),
                       irreducible_components(L1, L2))


def all_message_tuples(geom: DelayGeometry, m: int, sender: int):
    """Lexicographic iterator over admissible message tuples of one sender."""
    sync_pos = geom.l if sender == 1 else geom.K
    ranges = [range(0, 1) if p == sync_pos else range(1, m + 1) for p in range(1, geom.K + 1)]
    return itertools.product(*ranges)
