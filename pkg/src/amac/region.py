"""Pentagon rate regions, compound intersections and unions over input laws."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError, RefusalError, UsageError
from .probability import compose, info_term, product


@dataclass(frozen=True)
class Pentagon:
    """{(R1, R2): R1 <= i1, R2 <= i2, R1 + R2 <= i12} in bits/symbol."""
    i1: float
    i2: float
    i12: float

    def __post_init__(self):
        if min(self.i1, self.i2, self.i12) < -1e-12:
            raise DomainError("pentagon bounds must be nonnegative")

    def vertices(self) -> np.ndarray:
        """Corner points in counter-clockwise order starting at the origin."""
        a = min(self.i1, self.i12)
        b = min(self.i2, self.i12)
        pts = [(0.0, 0.0), (a, 0.0), (a, max(min(self.i12 - a, b), 0.0)),
               (max(min(self.i12 - b, a), 0.0), b), (0.0, b)]
        out = [pts[0]]
        for p in pts[1:]:
            if np.hypot(p[0] - out[-1][0], p[1] - out[-1][1]) > 1e-12:
                out.append(p)
        return np.array(out)


def pentagon(px, py, w) -> Pentagon:
    """Bounds I(X ^ YZ), I(Y ^ XZ), I(X ^ Y ^ Z) of P = (P^X x P^Y) o W."""
    p = compose(product(px, py), w)
    return Pentagon(info_term(p, 1), info_term(p, 2), info_term(p, 12))


def contains(pent: Pentagon, r1: float, r2: float, tol: float = 0.0) -> bool:
    if r1 < 0 or r2 < 0:
        raise DomainError("rates must be nonnegative")
    return r1 <= pent.i1 + tol and r2 <= pent.i2 + tol and r1 + r2 <= pent.i12 + tol


def compound_region(px, py, channels: Sequence) -> Pentagon:
    """Intersection of the pentagons of a finite channel family."""
    if len(channels) == 0:
        raise UsageError("channel family is empty")
    pents = [pentagon(px, py, w) for w in channels]
    return Pentagon(min(p.i1 for p in pents), min(p.i2 for p in pents), min(p.i12 for p in pents))


@dataclass
class RegionScan:
    inputs: np.ndarray          # (n, 2): P^X(1), P^Y(1)
    bounds: np.ndarray          # (n, 3): i1, i2, i12
    boundary: np.ndarray        # (m, 2) polyline of the union's upper envelope

    def best_sum_rate(self) -> tuple[float, tuple[float, float]]:
        k = int(np.argmax(self.bounds[:, 2]))
        return float(self.bounds[k, 2]), (float(self.inputs[k, 0]), float(self.inputs[k, 1]))


def _envelope(pents: list[Pentagon], samples: int) -> np.ndarray:
    """max R2 over the union at each R1 on a uniform grid."""
    r1_max = max(min(p.i1, p.i12) for p in pents)
    grid = np.linspace(0.0, r1_max, samples)
    i1 = np.array([p.i1 for p in pents])
    i2 = np.array([p.i2 for p in pents])
    i12 = np.array([p.i12 for p in pents])
    top = np.minimum(i2[None, :], i12[None, :] - grid[:, None])
    top = np.where(grid[:, None] <= np.minimum(i1, i12)[None, :] + 1e-15, top, -np.inf)
    return np.column_stack([grid, np.maximum(top.max(axis=1), 0.0)])


def union_over_inputs(w, step: float = 0.005, family: Sequence | None = None,
                      samples: int = 201) -> RegionScan:
    """Scan binary input laws; each gives a pentagon (or compound intersection).

    The returned boundary samples the upper envelope of the non-convexified
    union of all scanned pentagons.
    """
    chans = list(family) if family is not None else [w]
    for c in chans:
        a = np.asarray(c)
        if a.shape[0] != 2 or a.shape[1] != 2:
            raise RefusalError("input-law scans are implemented for binary inputs only")
    m = int(round(1 / step))
    if abs(m * step - 1) > 1e-9:
        raise DomainError("step must divide 1")
    ticks = np.arange(m + 1) / m
    inputs, bounds, pents = [], [], []
    for a in ticks:
        for b in ticks:
            pent = compound_region([1 - a, a], [1 - b, b], chans)
            inputs.append((a, b))
            bounds.append((pent.i1, pent.i2, pent.i12))
            pents.append(pent)
    return RegionScan(np.array(inputs), np.array(bounds), _envelope(pents, samples))
