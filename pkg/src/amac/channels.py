"""Channel constructions, single-user capacity and the sphere-packing exponent."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import ConvergenceError, DimensionError, DomainError, InfeasibleError
from .probability import PROB_TOL, ChannelMatrix, Dist, divergence
from .solver import DivInfoProblem, MarginalConstraint, SolverConfig

LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class SingleUserChannel:
    """Stochastic matrix W(z|x) of shape (|X|, |Z|)."""
    matrix: np.ndarray

    def __post_init__(self):
        arr = np.array(self.matrix, dtype=float)
        if arr.ndim != 2:
            raise DimensionError(f"single-user channel must be 2-d, got shape {arr.shape}")
        if np.any(~np.isfinite(arr)) or np.any(arr < 0):
            raise DomainError("channel entries must be finite and nonnegative")
        if np.any(np.abs(arr.sum(axis=1) - 1) > PROB_TOL):
            raise DomainError("every channel row must sum to 1")
        arr.setflags(write=False)
        object.__setattr__(self, "matrix", arr)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def shape(self):
        return self.matrix.shape


@dataclass(frozen=True, eq=False)
class MacChannel(ChannelMatrix):
    """Two-input channel W(z|x,y) with a free-form construction label."""
    construction: str = "explicit"
    params: dict = field(default_factory=dict)


def z_channel(sigma: float) -> SingleUserChannel:
    """Z-channel: input 0 is received noiselessly, input 1 flips to 0 w.p. sigma."""
    if not 0.0 <= sigma <= 1.0:
        raise DomainError(f"sigma must lie in [0, 1], got {sigma}")
    return SingleUserChannel(np.array([[1.0, 0.0], [sigma, 1.0 - sigma]]))


def bsc(p: float) -> SingleUserChannel:
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"crossover must lie in [0, 1], got {p}")
    return SingleUserChannel(np.array([[1.0 - p, p], [p, 1.0 - p]]))


def xor_mac(w1: SingleUserChannel) -> MacChannel:
    """W(z|x,y) = w1(z | x xor y)."""
    m = np.asarray(w1, dtype=float)
    if m.shape[0] != 2:
        raise DimensionError("xor construction needs a binary-input channel")
    w = np.stack([np.stack([m[x ^ y] for y in range(2)]) for x in range(2)])
    return MacChannel(w, construction="xor-then-single-user")


def pair_output_mac(nx: int = 2, ny: int = 2) -> MacChannel:
    """Noiseless channel whose output is the input pair itself (|Z| = nx*ny)."""
    w = np.zeros((nx, ny, nx * ny))
    for x in range(nx):
        for y in range(ny):
            w[x, y, x * ny + y] = 1.0
    return MacChannel(w, construction="pair-output")


def mutual_info_pw(p, w) -> float:
    """I(P, W) in bits for input law p and single-user matrix w."""
    p, w = np.asarray(p, float), np.asarray(w, float)
    q = p @ w
    return float(sum(p[x] * divergence(w[x], q) for x in range(p.size) if p[x] > 0))


def capacity(w, tol: float = 1e-9, max_iter: int = 100_000) -> tuple[float, Dist]:
    """Blahut-Arimoto iteration stopped on the duality gap.

    Each round gives I(p, W) <= C <= max_x D(W_x || pW); iteration stops when
    the two bounds are within ``tol`` bits. Returns the lower bound and p.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    w = np.asarray(w, dtype=float)
    if w.ndim == 3 and w.shape[1] == 1:
        w = w[:, 0, :]
    if w.ndim != 2:
        raise DimensionError("capacity needs a single-user channel matrix")
    nx = w.shape[0]
    p = np.full(nx, 1.0 / nx)
    logw = np.where(w > 0, np.log(np.where(w > 0, w, 1.0)), 0.0)
    lo = hi = 0.0
    for _ in range(max_iter):
        q = p @ w
        logq = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), 0.0)
        dx = np.sum(w * (logw - logq), axis=1) / LN2       # D(W_x || q) in bits
        lo = float(max(p @ dx, 0.0))
        hi = float(dx.max())
        if hi - lo < tol:
            return lo, Dist.normalize(p)
        p = p * np.exp2(dx - hi)
        p /= p.sum()
    raise ConvergenceError("capacity iteration cap reached", best=p, residual=hi - lo,
                           bracket=(lo, hi))


def xor_preimage_input(q) -> Dist:
    """Binary P with P xor P' ~ q for P, P' iid: solves 2p(1-p) = q(1), p <= 1/2."""
    q = np.asarray(q, dtype=float)
    if q.shape != (2,):
        raise DimensionError("q must be a binary distribution")
    q1 = float(q[1])
    if q1 > 0.5 + PROB_TOL:
        raise InfeasibleError(f"q(1) = {q1} > 1/2 cannot be an xor of iid bits")
    p = (1.0 - math.sqrt(max(0.0, 1.0 - 2.0 * q1))) / 2.0
    return Dist(np.array([1.0 - p, p]))


# ---------------------------------------------------------------- sphere packing
def _as_single(w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if w.ndim == 3 and w.shape[1] == 1:
        w = w[:, 0, :]
    if w.ndim != 2:
        raise DimensionError("sphere packing needs a single-user channel")
    return w


def _binary_grid(step: float) -> np.ndarray:
    m = int(round(1.0 / step))
    if abs(m * step - 1.0) > 1e-9:
        raise DomainError("grid step must divide 1")
    return np.array([[1 - k / m, k / m] for k in range(m + 1)])


def sp_zero_rate(w, p) -> float:
    """min over V with I(P,V) = 0 of D(V||W|P) = -log sum_z prod_x W(z|x)^P(x)."""
    w, p = _as_single(w), np.asarray(p, float)
    used = p > 0
    with np.errstate(divide="ignore"):
        logs = np.log2(w[used])
    s = np.exp2(np.sum(p[used, None] * logs, axis=0)).sum()
    return max(-math.log2(s), 0.0) if s > 0 else math.inf


class SpherePacking:
    """E_sp(r) = max_P min_{V: I(P,V) <= r} D(V||W|P) for a single-user channel.

    The inner minimum is evaluated through its Lagrange dual
    max_{lam >= 0} [min_V D(V||W|P) + lam I(P,V)] - lam r, with the inner
    Lagrangian solved by the same constrained solver used for the pattern
    exponents (|Y| = 1). The outer maximum uses a grid over binary inputs.
    """

    def __init__(self, w, grid_step: float = 1e-3, cfg: SolverConfig | None = None):
        self.w = _as_single(w)
        if self.w.shape[0] != 2:
            raise DimensionError("grid search over inputs is implemented for binary inputs")
        self.cfg = cfg or SolverConfig()
        self.inputs = _binary_grid(grid_step)
        self._problems: dict[int, DivInfoProblem | None] = {}
        self.lam_grid = np.concatenate([[0.0], np.geomspace(1e-3, 1e4, 57)])
        self.stride = max(1, int(round(0.01 / grid_step)))
        self._table = None

    def problem(self, k: int) -> DivInfoProblem | None:
        if k not in self._problems:
            p = self.inputs[k]
            if np.count_nonzero(p) < 2:
                self._problems[k] = None     # a point-mass input carries no information
            else:
                joint = (p[:, None] * self.w)[:, None, :]
                cons = MarginalConstraint(Dist(p), Dist(np.ones(1)))
                self._problems[k] = DivInfoProblem(joint, cons, self.cfg)
        return self._problems[k]

    def table(self):
        """(G, I) over a coarse input subgrid and the lam grid, G = min_V D + lam I."""
        if self._table is None:
            coarse = np.unique(np.append(np.arange(0, len(self.inputs), self.stride),
                                         len(self.inputs) - 1))
            g = np.zeros((coarse.size, self.lam_grid.size))
            for row, k in enumerate(coarse):
                prob = self.problem(int(k))
                if prob is None:
                    continue
                for t, lam in enumerate(self.lam_grid):
                    g[row, t] = prob.solve(1, float(lam)).objective
            self._table = (coarse, g)
        return self._table

    def inner(self, k: int, r: float) -> float:
        """min_{V: I(P,V) <= r} D(V||W|P) for the k-th grid input."""
        prob = self.problem(k)
        if prob is None:
            return 0.0
        i_p = prob.info_at_p()[1]
        if r >= i_p:
            return 0.0
        if r <= 0:
            return sp_zero_rate(self.w, self.inputs[k])

        def h(lam):
            return prob.solve(1, lam).info_term - r

        hi = 1.0
        while h(hi) > 0:
            hi *= 4.0
            if hi > 1e8:
                sol = prob.solve(1, hi)
                return max(sol.objective - hi * r, 0.0)
        lo = 0.0 if hi == 1.0 else hi / 4.0
        lam = brentq(h, lo, hi, xtol=1e-13, rtol=1e-12)
        sol = prob.solve(1, lam)
        return max(sol.objective - lam * r, 0.0)

    def __call__(self, r: float, refine: int = 3) -> float:
        if r < 0:
            raise DomainError("rate must be nonnegative")
        if r == 0:
            return max(sp_zero_rate(self.w, p) for p in self.inputs)
        coarse, g = self.table()
        per_input = (g - self.lam_grid[None, :] * r).max(axis=1)   # dual lower bounds
        if per_input.max() <= 0:
            return 0.0
        values: dict[int, float] = {}

        def value(k):
            if k not in values:
                values[k] = self.inner(k, r)
            return values[k]

        for row in np.argsort(per_input)[::-1][:refine]:
            c = int(coarse[row])
            for k in range(max(0, c - self.stride), min(len(self.inputs), c + self.stride + 1)):
                value(k)
        k = max(values, key=values.get)
        while True:     # hill-climb on the fine grid
            nbrs = [j for j in (k - 1, k + 1) if 0 <= j < len(self.inputs)]
            up = max(nbrs, key=value)
            if value(up) <= value(k):
                break
            k = up
        return values[k]


_SP_CACHE: dict = {}


def sphere_packing_exponent(w, r: float, grid: float = 1e-3, cfg: SolverConfig | None = None) -> float:
    """Sphere-packing exponent in bits at rate r (bits/symbol)."""
    w = _as_single(w)
    key = (w.tobytes(), w.shape, grid, cfg)
    sp = _SP_CACHE.get(key)
    if sp is None:
        sp = _SP_CACHE[key] = SpherePacking(w, grid, cfg)
    return sp(r)


def gallager_sphere_packing(w, r: float, grid: float = 1e-3,
                            rhos: np.ndarray | None = None) -> float:
    """sup_rho [max_P E0(rho, P) - rho r] on a grid; an independent cross-check."""
    w = _as_single(w)
    inputs = _binary_grid(grid)
    if rhos is None:
        rhos = np.concatenate([np.linspace(0, 5, 501), np.geomspace(5, 500, 400)])
    best = 0.0
    for rho in rhos:
        s = 1.0 / (1.0 + rho)
        inner = inputs @ (w ** s)                # (grid, |Z|)
        e0 = -np.log2(np.sum(inner ** (1.0 + rho), axis=1))
        best = max(best, float(e0.max() - rho * r))
    return best


def brute_force_sphere_packing_z(sigma: float, r: float, step: float = 0.002,
                                 inner_step: float | None = None) -> float:
    """Nested grid search for the Z-channel: outer input P(1), inner V(.|1).

    Absolute continuity forces V(.|0) = (1, 0); V(.|1) = (1 - v, v) is scanned
    on a grid of spacing ``inner_step`` (default step / 100, since D is steep
    in v near 0 and a coarse inner grid overshoots by about step * |dD/dv|).
    """
    inner_step = step / 100 if inner_step is None else inner_step
    ps = np.arange(0.0, 1.0 + step / 2, step)
    vs = np.arange(0.0, 1.0 + inner_step / 2, inner_step)

    def xlog(a, b):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(a > 0, a * np.log2(np.where(a > 0, a, 1.0) / b), 0.0)

    def h2(t):
        return -(xlog(t, 1.0) + xlog(1 - t, 1.0))

    hv = h2(vs)
    if 0 < sigma < 1:
        dv = xlog(1 - vs, sigma) + xlog(vs, 1 - sigma)     # D(V(.|1) || W(.|1))
    else:
        dv = np.where(vs == 1 - sigma, 0.0, np.inf)
    best = 0.0
    for p1 in ps:
        info = h2(p1 * vs) - p1 * hv
        ok = info <= r + 1e-12
        if np.any(ok):
            val = p1 * float(np.min(dv[ok])) if p1 > 0 else 0.0
            best = max(best, val)
    return best
