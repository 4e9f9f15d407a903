"""Exact small-scale combinatorics of types, subtypes and balanced sequences."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .codes import (AmacCode, DelayGeometry, all_message_tuples, classify_pattern, multinomial,
                    pattern_sets, type_class_members)
from .errors import DomainError, RefusalError
from .probability import divergence, entropy, multi_information


@dataclass(frozen=True)
class TypeClassQuery:
    n: int
    counts: tuple

    def __post_init__(self):
        if any(c < 0 for c in self.counts) or sum(self.counts) != self.n:
            raise DomainError("type counts must be nonnegative and sum to n")

    @property
    def dist(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.n


def type_class_size(q: TypeClassQuery) -> int:
    """Exact |T^n_P| (a multinomial coefficient, arbitrary precision)."""
    if q.n > 64:
        raise RefusalError("type class sizes are only computed for n <= 64")
    return multinomial(q.counts)


def type_class_bounds(q: TypeClassQuery) -> tuple[float, float]:
    """(2^{nH(P)} / (n+1)^{|X|}, 2^{nH(P)})."""
    h = entropy(q.dist)
    return 2.0 ** (q.n * h) / (q.n + 1) ** len(q.counts), 2.0 ** (q.n * h)


def delta_n(n: int, alphabet: int = 2) -> float:
    """Balancing threshold 3|X| log2(n) / n."""
    return 3 * alphabet * math.log2(n) / n


def jensen_shannon_split(p, n: int, d: int, v1, v2, form: str = "entropy") -> float:
    """Split gap of a type P into a length-d prefix type V1 and suffix type V2.

    ``form="entropy"``: H(P) - (d/n) H(V1) - ((n-d)/n) H(V2);
    ``form="divergence"``: (d/n) D(V1||P) + ((n-d)/n) D(V2||P). The two agree.
    """
    p, v1, v2 = (np.asarray(a, dtype=float) for a in (p, v1, v2))
    if not 0 < d < n:
        raise DomainError("need 0 < d < n")
    if np.max(np.abs(d / n * v1 + (n - d) / n * v2 - p)) > 1e-12:
        raise DomainError("mixture (d/n) V1 + ((n-d)/n) V2 must equal P")
    if form == "entropy":
        return max(entropy(p) - d / n * entropy(v1) - (n - d) / n * entropy(v2), 0.0)
    if form == "divergence":
        return d / n * divergence(v1, p) + (n - d) / n * divergence(v2, p)
    raise DomainError(f"unknown form {form!r}")


def max_split_gap(seqs: np.ndarray, alphabet: int) -> np.ndarray:
    """max over 0 < d < n of the split gap, for each row of ``seqs``."""
    seqs = np.atleast_2d(seqs)
    n = seqs.shape[1]
    onehot = (seqs[:, :, None] == np.arange(alphabet)).astype(float)
    prefix = np.cumsum(onehot, axis=1)                   # counts of the first d symbols
    total = prefix[:, -1:, :]

    def h(counts, m):
        with np.errstate(divide="ignore", invalid="ignore"):
            pr = counts / m
            return -np.sum(np.where(pr > 0, pr * np.log2(np.where(pr > 0, pr, 1.0)), 0.0), axis=-1)

    d = np.arange(1, n)[None, :]
    h1 = h(prefix[:, :-1, :], d[..., None])
    h2 = h(total - prefix[:, :-1, :], (n - d)[..., None])
    hp = h(total[:, 0, :], n)[:, None]
    gaps = hp - d / n * h1 - (n - d) / n * h2
    return gaps.max(axis=1) if n > 1 else np.zeros(seqs.shape[0])


def count_balanced(counts, delta: float) -> tuple[int, int]:
    """(number of delta-balanced sequences, |T^n_P|) by exhaustive enumeration (binary)."""
    counts = tuple(int(c) for c in counts)
    n = sum(counts)
    if len(counts) != 2:
        raise RefusalError("exhaustive balance counts are implemented for binary alphabets")
    if n > 20:
        raise RefusalError("exhaustive enumeration is limited to n <= 20")
    seqs = type_class_members(counts)
    gaps = max_split_gap(seqs, 2)
    return int(np.sum(gaps <= delta + 1e-12)), len(seqs)


@dataclass(frozen=True)
class BalanceCheck:
    n: int
    counts: tuple
    delta: float
    balanced: int
    total: int

    @property
    def holds(self) -> bool:
        return 2 * self.balanced >= self.total


def verify_expurgation(n_max: int = 16, n_min: int = 2) -> list[BalanceCheck]:
    """At least half of every binary type class is delta_n-balanced, for n <= n_max."""
    out = []
    for n in range(n_min, n_max + 1):
        for ones in range(n + 1):
            counts = (n - ones, ones)
            b, t = count_balanced(counts, delta_n(n, 2))
            out.append(BalanceCheck(n, counts, delta_n(n, 2), b, t))
    return out


def conditional_type_count(x, joint_counts) -> int:
    """Number of y with joint type of (x, y) given by ``joint_counts`` (exact product formula)."""
    x = np.asarray(x)
    jc = np.asarray(joint_counts, dtype=int)
    if not np.array_equal(jc.sum(axis=1), np.bincount(x, minlength=jc.shape[0])):
        return 0
    return math.prod(multinomial(row) for row in jc)


# --------------------------------------------------------------- packing
@dataclass(frozen=True)
class PackingCheck:
    lhs: int
    bound: float          # right-hand side without the polynomial factor
    p_n: float
    ratio: float          # lhs / bound

    @property
    def rhs(self) -> float:
        return self.p_n * self.bound

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs * (1 + 1e-12)


def default_p_n(n: int, K: int, nx: int = 2, ny: int = 2) -> float:
    """A polynomial counting subtype sequences: (n+1)^{2K |X|^2 |Y|^2}."""
    return float(n + 1) ** (2 * K * nx * nx * ny * ny)


def quadruple_subtypes(code: AmacCode, geom: DelayGeometry, i, i_hat, j, j_hat,
                       nx: int = 2, ny: int = 2) -> tuple:
    """Per-subblock joint type counts of (x(i), x(i_hat), y(j), y(j_hat))."""
    rows = [code.x_window(i, geom), code.x_window(i_hat, geom),
            code.y_window(j, geom), code.y_window(j_hat, geom)]
    dims = (nx, nx, ny, ny)
    out = []
    for start, nk in zip(geom.starts, geom.lengths):
        cols = [r[start:start + nk] for r in rows]
        c = np.zeros(dims, dtype=int)
        np.add.at(c, tuple(cols), 1)
        out.append(c)
    return tuple(out)


def _packing_bound(v_seq, geom: DelayGeometry, s_sets, r1: float, r2: float) -> float:
    s1, s2, s12 = s_sets
    n, K = geom.n, geom.K
    log_bound = n * (K - 1) * (r1 + r2)
    for k, (c, nk) in enumerate(zip(v_seq, geom.lengths), start=1):
        if nk == 0:
            continue
        v = c / nk                               # axes: X, X^, Y, Y^
        if k in s1:
            term = multi_information(v.sum(axis=3), [(1,), (0,), (2,)]) - r1
        elif k in s2:
            term = multi_information(v.sum(axis=1), [(2,), (0,), (1,)]) - r2
        elif k in s12:
            term = multi_information(v, [(1,), (3,), (0,), (2,)]) - r1 - r2
        else:
            term = multi_information(v.sum(axis=(1, 3)), [(0,), (1,)])
        log_bound -= nk * term
    return 2.0 ** log_bound


def check_packing_inequality(code: AmacCode, D: int, pattern, v_seq, p_n: float | None = None,
                             nx: int = 2, ny: int = 2) -> PackingCheck:
    """Count quadruples of the given error pattern with subtype sequence ``v_seq``.

    The count is compared with the exponential bound 2^{n(K-1)(R1+R2)} 2^{-sum n_k I_k}
    and its ratio reported; ``holds`` uses the polynomial factor ``p_n``.
    """
    if code.n > 6 or code.K != 2 or code.m1 > 4 or code.m2 > 4:
        raise RefusalError("packing checks are limited to n <= 6, K = 2, at most 4 words")
    geom = DelayGeometry(code.n, code.K, D)
    L1, L2 = (tuple(sorted(x)) for x in pattern)
    s_sets = pattern_sets(L1, L2, geom.K)
    target = [np.asarray(c, dtype=int) for c in v_seq]
    if len(target) != 2 * geom.K:
        raise DomainError("need one subtype per subblock")
    lhs = 0
    tuples1 = list(all_message_tuples(geom, code.m1, 1))
    tuples2 = list(all_message_tuples(geom, code.m2, 2))
    for i, ih in itertools.product(tuples1, repeat=2):
        for j, jh in itertools.product(tuples2, repeat=2):
            info = classify_pattern(i, ih, j, jh, geom)
            if info.L1 != L1 or info.L2 != L2:
                continue
            subs = quadruple_subtypes(code, geom, i, ih, j, jh, nx, ny)
            if all(np.array_equal(a, b) for a, b in zip(subs, target)):
                lhs += 1
    r1, r2 = code.rates
    bound = _packing_bound(target, geom, s_sets, r1, r2)
    p = default_p_n(code.n, code.K, nx, ny) if p_n is None else p_n
    return PackingCheck(lhs, bound, p, lhs / bound if bound > 0 else math.inf)
