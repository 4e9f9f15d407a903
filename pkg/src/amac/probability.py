"""Finite-alphabet distributions and information measures (all in bits).

Alphabets are index sets ``0..k-1``. Arrays passed to the functions below may
be plain numpy arrays or any of the wrapper types defined here; the wrappers
only add validation and immutability.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, DomainError, UsageError

PROB_TOL = 1e-12
INF = math.inf  # sentinel for D(p||q) when p is not absolutely continuous w.r.t. q


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class _Pmf:
    probs: np.ndarray
    ndim_expected = None

    def __post_init__(self):
        arr = _frozen(self.probs)
        if self.ndim_expected is not None and arr.ndim != self.ndim_expected:
            raise DimensionError(
                f"{type(self).__name__} needs a {self.ndim_expected}-d array, got shape {arr.shape}")
        if arr.size == 0:
            raise DimensionError("empty alphabet")
        if np.any(~np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("probabilities must be finite and nonnegative")
        if abs(arr.sum() - 1.0) > PROB_TOL:
            raise DomainError(f"probabilities sum to {arr.sum()!r}, not 1")
        object.__setattr__(self, "probs", arr)

    @classmethod
    def normalize(cls, weights):
        """Build from nonnegative weights by explicit renormalisation."""
        arr = np.asarray(weights, dtype=float)
        if np.any(arr < 0):
            raise DomainError("weights must be nonnegative")
        total = arr.sum()
        if total <= 0:
            raise DomainError("weights sum to zero")
        return cls(arr / total)

    def __array__(self, dtype=None, copy=None):
        return self.probs if dtype is None else self.probs.astype(dtype)

    @property
    def shape(self):
        return self.probs.shape

    def __eq__(self, other):
        return type(self) is type(other) and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((type(self).__name__, self.probs.tobytes(), self.probs.shape))

    def __repr__(self):
        return f"{type(self).__name__}({np.array2string(self.probs, precision=6)})"


@dataclass(frozen=True, eq=False, repr=False)
class Dist(_Pmf):
    """Distribution on a single finite alphabet."""
    ndim_expected = 1


@dataclass(frozen=True, eq=False, repr=False)
class Joint2(_Pmf):
    """Joint distribution on a product of two alphabets."""
    ndim_expected = 2

    @property
    def marginals(self) -> tuple[np.ndarray, np.ndarray]:
        return self.probs.sum(axis=1), self.probs.sum(axis=0)


@dataclass(frozen=True, eq=False, repr=False)
class Joint3(_Pmf):
    """Joint distribution on X x Y x Z."""
    ndim_expected = 3

    @property
    def xy(self) -> np.ndarray:
        return self.probs.sum(axis=2)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Stochastic matrix W(z|x,y) stored as an array of shape (|X|, |Y|, |Z|).

    A single-user channel is the special case |Y| = 1.
    """
    matrix: np.ndarray

    def __post_init__(self):
        arr = _frozen(self.matrix)
        if arr.ndim == 2:
            arr = _frozen(arr[:, None, :])
        if arr.ndim != 3:
            raise DimensionError(f"channel matrix must be 2-d or 3-d, got shape {arr.shape}")
        if np.any(~np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("channel entries must be finite and nonnegative")
        if np.any(np.abs(arr.sum(axis=-1) - 1.0) > PROB_TOL):
            raise DomainError("every channel row must sum to 1")
        object.__setattr__(self, "matrix", arr)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def shape(self):
        return self.matrix.shape

    def __eq__(self, other):
        return isinstance(other, ChannelMatrix) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


def as_array(p) -> np.ndarray:
    return np.asarray(p, dtype=float)


def _check_same_shape(p, q):
    if p.shape != q.shape:
        raise DimensionError(f"shape mismatch: {p.shape} vs {q.shape}")


def entropy(p) -> float:
    """Shannon entropy in bits of a pmf of any shape; ``0 log 0 = 0``."""
    a = as_array(p).ravel()
    a = a[a > 0]
    return float(max(0.0, -np.sum(a * np.log2(a))))


def divergence(p, q) -> float:
    """D(p||q) in bits, or ``INF`` if p puts mass where q does not."""
    p, q = as_array(p), as_array(q)
    _check_same_shape(p, q)
    mask = p > 0
    if np.any(q[mask] <= 0):
        return INF
    val = float(np.sum(p[mask] * (np.log2(p[mask]) - np.log2(q[mask]))))
    return max(val, 0.0)


def variational_distance(p, q) -> float:
    """L1 distance sum |p - q| (twice the total-variation distance)."""
    p, q = as_array(p), as_array(q)
    _check_same_shape(p, q)
    return float(np.abs(p - q).sum())


def marginal(v, axes: Iterable[int]) -> np.ndarray:
    """Marginal of ``v`` on the given axes, axis order preserved."""
    v = as_array(v)
    keep = tuple(sorted(set(axes)))
    drop = tuple(i for i in range(v.ndim) if i not in keep)
    return v.sum(axis=drop) if drop else v


def compose(v, w) -> np.ndarray:
    """(V o W)(x, y, z) = V(x, y) W(z | x, y)."""
    v = as_array(v)
    w = as_array(w)
    if w.ndim == 2:
        w = w[:, None, :]
    if v.ndim == 1:
        v = v[:, None]
    if v.shape != w.shape[:2]:
        raise DimensionError(f"joint input shape {v.shape} does not match channel {w.shape}")
    return v[:, :, None] * w


def product(px, py) -> np.ndarray:
    """P^{XY}(x, y) = P^X(x) P^Y(y)."""
    return np.outer(as_array(px), as_array(py))


def multi_information(v, groups: Sequence[Sequence[int]] | None = None) -> float:
    """Watanabe multi-information sum_i H(group_i) - H(joint).

    ``groups`` partitions the axes of ``v``; by default every axis is its own
    group. For two groups this is the mutual information between them.
    """
    v = as_array(v)
    if groups is None:
        groups = [(i,) for i in range(v.ndim)]
    groups = [tuple(g) for g in groups]
    if len(groups) < 2:
        raise UsageError("multi-information needs at least two groups")
    flat = sorted(i for g in groups for i in g)
    if flat != list(range(v.ndim)):
        raise UsageError(f"groups {groups} do not partition the {v.ndim} axes")
    val = sum(entropy(marginal(v, g)) for g in groups) - entropy(v)
    return max(val, 0.0)


def mutual_information(v, a: Sequence[int], b: Sequence[int]) -> float:
    """I(A ^ B) for disjoint axis sets of ``v`` (other axes are marginalised)."""
    v = as_array(v)
    sub = marginal(v, tuple(a) + tuple(b))
    keep = sorted(set(a) | set(b))
    pos = {ax: i for i, ax in enumerate(keep)}
    return multi_information(sub, [[pos[i] for i in a], [pos[i] for i in b]])


def conditional_entropy(v, a: Sequence[int], b: Sequence[int]) -> float:
    """H(A | B) = H(A, B) - H(B)."""
    v = as_array(v)
    return entropy(marginal(v, tuple(a) + tuple(b))) - entropy(marginal(v, b))


# Brief forms for a joint on X x Y x Z (axes 0, 1, 2).
def info0(v) -> float:
    return mutual_information(v, (0,), (1,))


def info1(v) -> float:
    """I(X ^ YZ)."""
    return mutual_information(v, (0,), (1, 2))


def info2(v) -> float:
    """I(Y ^ XZ)."""
    return mutual_information(v, (1,), (0, 2))


def info12(v) -> float:
    """I(X ^ Y ^ Z)."""
    return multi_information(v, [(0,), (1,), (2,)])


INFO_BY_INDEX = {1: info1, 2: info2, 12: info12}


def info_term(v, which: int) -> float:
    try:
        return INFO_BY_INDEX[which](v)
    except KeyError:
        raise UsageError(f"which must be one of 1, 2, 12, got {which!r}") from None


def couple_to_marginals(v, px, py) -> np.ndarray:
    """Move a joint on X x Y to prescribed marginals with small L1 change.

    Two mass-shifting passes: first the X marginal is corrected with the Y
    marginal held fixed, then the roles are swapped. The result satisfies
    ``||result - v|| <= ||px - v^X|| + ||py - v^Y||``.
    """
    v = as_array(v)
    px, py = as_array(px), as_array(py)
    if v.ndim != 2 or v.shape != (px.size, py.size):
        raise DimensionError(f"joint {v.shape} vs marginals {px.shape}, {py.shape}")
    step1 = _shift_row_marginal(v, px)
    return _shift_row_marginal(step1.T, py).T


def _shift_row_marginal(v: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Make the row sums equal ``target`` keeping column sums (one pass)."""
    rows = v.sum(axis=1)
    if np.array_equal(rows, target):
        return v.copy()
    plus = rows > target
    minus = ~plus
    out = v.copy()
    # rows losing mass are scaled down
    out[plus] = v[plus] * (target[plus] / rows[plus])[:, None]
    released = (v[plus] * ((rows[plus] - target[plus]) / rows[plus])[:, None]).sum(axis=0)
    gain = target[minus] - rows[minus]
    total_gain = gain.sum()
    if total_gain > 0:
        c = released / total_gain  # c_y, sums to 1
        out[minus] = v[minus] + np.outer(gain, c)
    np.clip(out, 0.0, None, out=out)
    return out


def extend_coupling_to_channel(v, vxy_hat, w) -> np.ndarray:
    """Extend a perturbed XY-marginal to a joint on X x Y x Z.

    Conditionals of ``v`` are kept on cells with ``v(x,y) >= eta`` and
    replaced by the channel row elsewhere, ``eta = sqrt(||vxy_hat - v^XY||)``.
    Requires ``||vxy_hat - v^XY|| <= (|X||Y|)^-2``.
    """
    v = as_array(v)
    vxy_hat = as_array(vxy_hat)
    w = as_array(w)
    if w.ndim == 2:
        w = w[:, None, :]
    if v.ndim != 3 or v.shape != w.shape or vxy_hat.shape != v.shape[:2]:
        raise DimensionError(f"shapes v={v.shape}, vxy_hat={vxy_hat.shape}, w={w.shape}")
    vxy = v.sum(axis=2)
    gap = variational_distance(vxy_hat, vxy)
    nx, ny = vxy.shape
    if gap > (nx * ny) ** -2 + PROB_TOL:
        raise DomainError(f"||vxy_hat - v^XY|| = {gap:.3g} exceeds (|X||Y|)^-2")
    eta = math.sqrt(gap)
    cond = np.array(w, dtype=float, copy=True)
    keep = (vxy >= eta) & (vxy > 0)
    cond[keep] = v[keep] / vxy[keep][:, None]
    return vxy_hat[:, :, None] * cond
