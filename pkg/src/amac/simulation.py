"""Monte-Carlo simulation of AMAC codes with the maximal multi-information decoder."""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import binomtest

from .codes import AmacCode, DelayGeometry, classify_pattern, t1
from .errors import DimensionError, RefusalError

DECODE_CAP = 2 ** 20
TIE_TOL = 1e-9
SCHEMA_VERSION = 1


def _xlogx(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    return np.where(c > 0, c * np.log2(np.where(c > 0, c, 1.0)), 0.0)


def subblock_score_counts(joint_counts: np.ndarray) -> np.ndarray:
    """n_k * empirical I(X ^ Y ^ Z) from joint counts of shape (..., |X|, |Y|, |Z|)."""
    n = joint_counts.sum(axis=(-3, -2, -1))
    cx = joint_counts.sum(axis=(-2, -1))
    cy = joint_counts.sum(axis=(-3, -1))
    cz = joint_counts.sum(axis=(-3, -2))
    return (2 * _xlogx(n) - _xlogx(cx).sum(-1) - _xlogx(cy).sum(-1) - _xlogx(cz).sum(-1)
            + _xlogx(joint_counts).sum(axis=(-3, -2, -1)))


@dataclass
class _Decoder:
    """Precomputed candidate enumeration for one (code, geometry, channel alphabet)."""
    code: AmacCode
    geom: DelayGeometry
    nz: int
    cap: int = DECODE_CAP

    def __post_init__(self):
        geom, code = self.geom, self.code
        size = code.m1 ** (geom.K - 1) * code.m2 ** (geom.K - 1)
        if size > self.cap:
            raise RefusalError(f"{size} candidate message tuples exceed the decoding cap {self.cap}")
        ranges1 = [np.array([0]) if t == geom.l else np.arange(1, code.m1 + 1)
                   for t in range(1, geom.K + 1)]
        ranges2 = [np.array([0]) if t == geom.K else np.arange(1, code.m2 + 1)
                   for t in range(1, geom.K + 1)]
        grids = np.meshgrid(*(ranges1 + ranges2), indexing="ij")    # lexicographic in (i, j)
        flat = np.stack([g.ravel() for g in grids], axis=1)
        self.cand_i = flat[:, : geom.K]
        self.cand_j = flat[:, geom.K:]
        self.blocks = [k for k in range(1, 2 * geom.K + 1) if geom.lengths[k - 1] > 0]
        self.nx = int(max(code.x_words.max(), len(code.px_counts) - 1)) + 1
        self.ny = int(max(code.y_words.max(), len(code.py_counts) - 1)) + 1

    def scores(self, z: np.ndarray) -> np.ndarray:
        """Decoding metric for every candidate; z has shape (T, nK)."""
        geom, code = self.geom, self.code
        z = np.atleast_2d(z)
        starts = geom.starts
        total = np.zeros((z.shape[0], self.cand_i.shape[0]))
        sym = self.nx * self.ny * self.nz
        for k in self.blocks:
            nk = int(geom.lengths[k - 1])
            xs = code.x_words[:, geom.x_slice(k)]            # (M1+1, nk)
            ys = code.y_words[:, geom.y_slice(k)]            # (M2+1, nk)
            zs = z[:, starts[k - 1]: starts[k - 1] + nk]     # (T, nk)
            joint = (xs[None, :, None, :] * self.ny + ys[None, None, :, :]) * self.nz \
                + zs[:, None, None, :]
            cells = int(np.prod(joint.shape[:3]))
            offsets = (np.arange(cells) * sym).reshape(joint.shape[:3] + (1,))
            counts = np.bincount((joint + offsets).ravel(), minlength=cells * sym)
            table = subblock_score_counts(
                counts.reshape(joint.shape[:3] + (self.nx, self.ny, self.nz)).astype(float))
            a = self.cand_i[:, t1(k) - 1]
            b = self.cand_j[:, geom.y_block(k) - 1]
            total += table[:, a, b]
        return total

    def decode(self, z: np.ndarray) -> list[tuple[tuple, tuple]]:
        sc = self.scores(z)
        out = []
        for row in sc:
            best = int(np.argmax(row >= row.max() - TIE_TOL))    # first (lexicographic) maximiser
            out.append((tuple(int(v) for v in self.cand_i[best]),
                        tuple(int(v) for v in self.cand_j[best])))
        return out


def mmi_decode(code: AmacCode, geom: DelayGeometry, z, nz: int | None = None,
               cap: int = DECODE_CAP) -> tuple[tuple, tuple]:
    """Exhaustive maximal multi-information decoding of one output window."""
    z = np.asarray(z, dtype=np.int64)
    if z.shape != (code.n * geom.K,):
        raise DimensionError(f"output window must have length nK = {code.n * geom.K}")
    nz = int(z.max()) + 1 if nz is None else nz
    return _Decoder(code, geom, nz, cap).decode(z[None, :])[0]


def block_entropy_decode(code: AmacCode, geom: DelayGeometry, z) -> tuple[tuple, tuple]:
    """Synchronous (d = 0) decoding: per block minimise H(x_t, y_{t-1} | z_t)."""
    if geom.d != 0:
        raise RefusalError("termwise decoding applies to the synchronous case d = 0")
    n, K = code.n, geom.K
    z = np.asarray(z, dtype=np.int64)
    i = [0] * K
    j = [0] * K
    for t in range(1, K + 1):
        zt = z[(t - 1) * n: t * n]
        opts_x = [0] if t == geom.l else range(1, code.m1 + 1)
        opts_y = [0] if t - 1 in (0, K) else range(1, code.m2 + 1)
        best, arg = math.inf, None
        for a in opts_x:
            for b in opts_y:
                xy = code.x_words[a] * 64 + code.y_words[b]
                h_joint = -_xlogx(np.unique(xy * 64 + zt, return_counts=True)[1] / n).sum()
                h_z = -_xlogx(np.unique(zt, return_counts=True)[1] / n).sum()
                val = h_joint - h_z
                if val < best - TIE_TOL:
                    best, arg = val, (a, b)
        i[t - 1] = arg[0]
        if t - 1 >= 1:
            j[t - 2] = arg[1]
    return tuple(i), tuple(j)


# ---------------------------------------------------------------- trials
@dataclass
class PatternTally:
    params: dict
    seed: int
    trials: int
    correct: int = 0
    patterns: Counter = field(default_factory=Counter)      # (L1, L2) -> count
    component_lengths: Counter = field(default_factory=Counter)

    @property
    def errors(self) -> int:
        return self.trials - self.correct

    @property
    def error_rate(self) -> float:
        return self.errors / self.trials if self.trials else 0.0

    def wilson(self, level: float = 0.95) -> tuple[float, float]:
        ci = binomtest(self.errors, self.trials).proportion_ci(confidence_level=level,
                                                               method="wilson")
        return float(ci.low), float(ci.high)

    def empirical_exponent(self) -> float:
        n = self.params.get("n", 1)
        return -math.log2(self.error_rate) / n if self.errors else math.inf

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "params": self.params,
            "seed": self.seed,
            "trials": self.trials,
            "patterns": [{"L1": list(k[0]), "L2": list(k[1]), "count": c}
                         for k, c in sorted(self.patterns.items())],
            "error_rate": self.error_rate,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Independent counter-based stream for one trial index."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def run_trials(code: AmacCode, w, D: int, trials: int, seed: int, batch: int = 512,
               cap: int = DECODE_CAP) -> PatternTally:
    """Send uniformly random messages through W, decode, and tally error patterns."""
    w = np.asarray(w, dtype=float)
    geom = DelayGeometry(code.n, code.K, D)
    if w.ndim != 3:
        raise DimensionError("MAC channel matrix must have shape (|X|, |Y|, |Z|)")
    dec = _Decoder(code, geom, w.shape[2], cap)
    cdf = np.cumsum(w, axis=2)
    cdf[..., -1] = 1.0
    tally = PatternTally({"n": code.n, "K": code.K, "D": D, "d": geom.d, "l": geom.l,
                          "m1": code.m1, "m2": code.m2, "code_seed": code.seed}, seed, trials)
    ncand = dec.cand_i.shape[0]
    for start in range(0, trials, batch):
        stop = min(trials, start + batch)
        sent, zs = [], []
        for t in range(start, stop):
            rng = trial_rng(seed, t)
            c = int(rng.integers(ncand))
            i, j = dec.cand_i[c], dec.cand_j[c]
            x = code.x_window(i, geom)
            y = code.y_window(j, geom)
            u = rng.random(x.size)
            z = (u[:, None] >= cdf[x, y]).sum(axis=1)
            sent.append((i, j))
            zs.append(z)
        for (i, j), (ih, jh) in zip(sent, dec.decode(np.array(zs))):
            info = classify_pattern(i, ih, j, jh, geom)
            if not info.proper:
                tally.correct += 1
                continue
            tally.patterns[(info.L1, info.L2)] += 1
            for comp in info.components:
                tally.component_lengths[comp.L] += 1
    return tally
