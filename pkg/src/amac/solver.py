"""Constrained minimisation of D(V||P) + lam * I^i_V over V with fixed X/Y marginals.

For i in {1, 2, 12} the information term is, on the feasible set,

    I^1  = H(P^X) - H_V(X|YZ)
    I^2  = H(P^Y) - H_V(Y|XZ)
    I^12 = H(P^X) + H(P^Y) - H_V(XY|Z)

so the objective is ``sum V log V - sum V log P + lam * (sum V log V - sum V_B log V_B)``
up to a constant, with B the conditioning variables. It is strictly convex on
the support of P. Two inner methods are provided:

* ``"fixed-point"``: V <- IPF-projection of (P * V_B^lam)^(1/(1+lam)) onto the
  marginal constraints; this is alternating minimisation and decreases the
  objective monotonically.
* ``"newton"``: Newton's method on the same stationarity condition, restricted
  to the null space of the marginal constraints. Much faster, used by default,
  with the fixed-point iteration as fallback.

On top sits the case split of the exponent as a function of the rate
combination r: zero / linear (slope -1) / curved (solved by root finding in lam).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, DimensionError, DomainError, RefusalError, SolverError, UsageError
from .probability import Dist, divergence, entropy, info_term

LN2 = math.log(2.0)
WHICH = (1, 2, 12)
# axes of the conditioning variable B for each information term
_COND_AXES = {1: (1, 2), 2: (0, 2), 12: (2,)}


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and caps for the inner solver and the lam root finder."""
    tol: float = 1e-11             # objective decrease (bits) stopping rule
    marginal_tol: float = 1e-9
    max_iter: int = 100_000
    r_tol: float = 1e-8            # |sum beta_i I^i - r| for the curved regime
    max_bisect: int = 60
    oracle_step: float = 0.002
    method: str = "newton"         # "newton" or "fixed-point"
    bracket_points: int = 17       # lam grid used to bracket roots

    def __post_init__(self):
        if self.method not in ("newton", "fixed-point"):
            raise UsageError(f"unknown method {self.method!r}")
        if min(self.tol, self.marginal_tol, self.r_tol) <= 0:
            raise DomainError("tolerances must be positive")

    @classmethod
    def from_mapping(cls, values: Mapping) -> "SolverConfig":
        known = {k: v for k, v in values.items() if k in cls.__dataclass_fields__}
        return cls(**known)


DEFAULT_CONFIG = SolverConfig()


@dataclass(frozen=True)
class MarginalConstraint:
    px: Dist
    py: Dist

    def __post_init__(self):
        if not isinstance(self.px, Dist):
            object.__setattr__(self, "px", Dist(self.px))
        if not isinstance(self.py, Dist):
            object.__setattr__(self, "py", Dist(self.py))

    @classmethod
    def of(cls, p_xyz) -> "MarginalConstraint":
        p = np.asarray(p_xyz, dtype=float)
        return cls(Dist.normalize(p.sum(axis=(1, 2))), Dist.normalize(p.sum(axis=(0, 2))))


@dataclass(frozen=True)
class SubproblemSolution:
    which: int
    lam: float
    v_star: np.ndarray
    divergence_term: float   # D(V*||P), bits
    info_term: float         # I^which at V*, bits
    iterations: int
    residual: float          # max marginal violation

    @property
    def objective(self) -> float:
        return self.divergence_term + self.lam * self.info_term


@dataclass(frozen=True)
class CaseSplitResult:
    exponent: float
    regime: str                          # "zero" | "linear" | "curved"
    lam: float                           # slope of the exponent in r is -lam
    r_target: float
    r_hat: float
    r_max: float
    witnesses: dict = field(default_factory=dict)


class DivInfoProblem:
    """All lam-subproblems for one reference P^{XYZ} and marginal constraint.

    Solutions are memoised per (which, lam); they do not depend on the beta
    weights, so one instance serves every error pattern of a channel.
    """

    _CACHE_LIMIT = 40_000

    def __init__(self, p_xyz, constraint: MarginalConstraint | None = None,
                 cfg: SolverConfig | None = None):
        p = np.array(p_xyz, dtype=float)
        if p.ndim != 3:
            raise DimensionError(f"P^XYZ must be 3-d, got shape {p.shape}")
        if abs(p.sum() - 1) > 1e-9 or np.any(p < 0):
            raise DomainError("P^XYZ must be a probability distribution")
        self.p = p
        self.cfg = cfg or DEFAULT_CONFIG
        self.constraint = constraint or MarginalConstraint.of(p)
        self.px = np.asarray(self.constraint.px, dtype=float)
        self.py = np.asarray(self.constraint.py, dtype=float)
        if (self.px.size, self.py.size) != p.shape[:2]:
            raise DimensionError("constraint marginals do not match P^XYZ")

        self.shape = p.shape
        self.support = np.flatnonzero(p.ravel() > 0)
        self.logp = np.log(p.ravel()[self.support])
        nx, ny, nz = p.shape
        xs, ys, zs = np.unravel_index(self.support, p.shape)
        self.xidx, self.yidx, self.zidx = xs, ys, zs
        n = self.support.size
        a = np.zeros((nx + ny, n))
        a[xs, np.arange(n)] = 1.0
        a[nx + ys, np.arange(n)] = 1.0
        self.a = a
        self.b = np.concatenate([self.px, self.py])
        self.null = scipy.linalg.null_space(a)
        self._bidx = {}
        for which, axes in _COND_AXES.items():
            coords = np.stack([(xs, ys, zs)[ax] for ax in axes])
            dims = tuple(p.shape[ax] for ax in axes)
            flat = np.ravel_multi_index(coords, dims)
            uniq, inv = np.unique(flat, return_inverse=True)
            self._bidx[which] = (inv, uniq.size)
        self._start = self._project(p.ravel()[self.support])
        self._cache: dict[tuple[int, float], SubproblemSolution] = {}
        self._pinned: set[tuple[int, float]] = set()
        self._last: dict[int, SubproblemSolution] = {}
        self._info_p = None

    # ------------------------------------------------------------------ basics
    def full(self, v: np.ndarray) -> np.ndarray:
        out = np.zeros(self.p.size)
        out[self.support] = v
        return out.reshape(self.shape)

    def residual(self, v: np.ndarray) -> float:
        return float(np.max(np.abs(self.a @ v - self.b)))

    def _project(self, v: np.ndarray, tol: float = 1e-15, max_iter: int = 10_000) -> np.ndarray:
        """IPF: rescale rows/columns until the X and Y marginals match."""
        v = np.array(v, dtype=float)
        nx, ny = self.px.size, self.py.size
        for _ in range(max_iter):
            mx = np.bincount(self.xidx, v, minlength=nx)
            with np.errstate(divide="ignore", invalid="ignore"):
                v *= np.where(mx > 0, self.px / mx, 0.0)[self.xidx]
            my = np.bincount(self.yidx, v, minlength=ny)
            with np.errstate(divide="ignore", invalid="ignore"):
                v *= np.where(my > 0, self.py / my, 0.0)[self.yidx]
            if self.residual(v) < tol:
                break
        return v

    def objective_nats(self, v: np.ndarray, lam: float, which: int) -> float:
        """(1+lam) sum v ln v - lam sum v_B ln v_B - sum v ln p (nats)."""
        inv, nb = self._bidx[which]
        vb = np.bincount(inv, v, minlength=nb)
        pos = v > 0
        posb = vb > 0
        return float((1 + lam) * np.sum(v[pos] * np.log(v[pos]))
                     - lam * np.sum(vb[posb] * np.log(vb[posb]))
                     - np.sum(v * self.logp))

    def info_at_p(self) -> dict[int, float]:
        if self._info_p is None:
            v = self.full(self._start)
            self._info_p = {i: info_term(v, i) for i in WHICH}
        return self._info_p

    # ------------------------------------------------------------- inner solve
    def solve(self, which: int, lam: float, init: np.ndarray | None = None) -> SubproblemSolution:
        if which not in WHICH:
            raise UsageError(f"which must be one of {WHICH}")
        lam = float(lam)
        if not lam >= 0 or not math.isfinite(lam):
            raise DomainError(f"lam must be a finite nonnegative number, got {lam}")
        key = (which, lam)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if init is None:
            init = self._warm_start(which, lam)
        if lam == 0.0:
            v, its = self._start.copy(), 0
        elif self.cfg.method == "newton":
            try:
                v, its = self._newton(which, lam, init)
            except (ConvergenceError, np.linalg.LinAlgError):
                v, its = self._fixed_point(which, lam, self._start)
        else:
            v, its = self._fixed_point(which, lam, init)
        full = self.full(v)
        sol = SubproblemSolution(which, lam, full, divergence(full, self.p), info_term(full, which),
                                 its, self.residual(v))
        if sol.residual > self.cfg.marginal_tol:
            raise ConvergenceError(f"marginal residual {sol.residual:.2e} above tolerance",
                                   best=sol, residual=sol.residual)
        if len(self._cache) > self._CACHE_LIMIT:
            self._cache = {k: s for k, s in self._cache.items() if k in self._pinned}
        self._cache[key] = sol
        self._last[which] = sol
        return sol

    def _warm_start(self, which: int, lam: float) -> np.ndarray:
        best, gap = self._start, lam
        for (w, l), sol in ((k, s) for k, s in self._cache.items() if k in self._pinned):
            if w == which and abs(l - lam) < gap:
                best, gap = sol.v_star.ravel()[self.support], abs(l - lam)
        last = self._last.get(which)
        if last is not None and abs(last.lam - lam) < gap:
            best = last.v_star.ravel()[self.support]
        return best

    def _newton(self, which: int, lam: float, init: np.ndarray):
        inv, nb = self._bidx[which]
        n_free = self.null.shape[1]
        v = np.array(init, dtype=float)
        if n_free == 0:
            return v, 0
        scale = 1.0 / (1.0 + lam)
        c = lam * scale
        same = inv[:, None] == inv[None, :]
        null = self.null

        def value(u):
            ub = np.bincount(inv, u, minlength=nb)
            return np.sum(u * np.log(u)) - c * np.sum(ub * np.log(ub)) - scale * np.sum(u * self.logp)

        f = value(v)
        for it in range(1, 200):
            vb = np.bincount(inv, v, minlength=nb)
            grad = np.log(v) - c * np.log(vb[inv]) - scale * self.logp
            hess = np.diag(1.0 / v) - c * same / vb[inv][:, None]
            gr = null.T @ grad
            hr = null.T @ hess @ null
            step = -np.linalg.solve(hr, gr)
            dec2 = float(-gr @ step)
            if dec2 < 1e-22:
                return v, it
            dv = null @ step
            neg = dv < 0
            t = 1.0
            if np.any(neg):
                t = min(1.0, 0.95 * float(np.min(-v[neg] / dv[neg])))
            while True:
                cand = v + t * dv
                if np.all(cand > 0):
                    fc = value(cand)
                    if fc <= f - 0.25 * t * dec2 or (dec2 < 1e-14 and fc <= f + 1e-15):
                        break
                t *= 0.5
                if t < 1e-12:
                    if dec2 < 1e-12:
                        return v, it
                    raise ConvergenceError("Newton line search failed", best=v, residual=dec2)
            v, f = cand, fc
        raise ConvergenceError("Newton iteration cap reached", best=v)

    def _fixed_point(self, which: int, lam: float, init: np.ndarray):
        inv, nb = self._bidx[which]
        v = self._project(np.maximum(init, 1e-300))
        f = self.objective_nats(v, lam, which)
        tol = self.cfg.tol * LN2
        for it in range(1, self.cfg.max_iter + 1):
            vb = np.bincount(inv, v, minlength=nb)
            logm = (self.logp + lam * np.log(vb[inv])) / (1.0 + lam)
            cand = self._project(np.exp(logm - logm.max()))
            fc = self.objective_nats(cand, lam, which)
            t = 1.0
            while fc > f and t > 1e-6:
                t *= 0.5
                mixed = (1 - t) * v + t * cand
                fc = self.objective_nats(mixed, lam, which)
                if fc <= f:
                    cand = mixed
            if fc > f:
                return v, it
            done = f - fc < tol and self.residual(cand) < self.cfg.marginal_tol
            v, f = cand, fc
            if done:
                return v, it
        raise ConvergenceError("fixed-point iteration cap reached", best=self.full(v),
                               residual=self.residual(v))

    # ------------------------------------------------------- lam root finding
    def prime(self, whiches=WHICH):
        """Solve on the bracketing lam grid (kept out of cache eviction)."""
        for which in whiches:
            for lam in np.linspace(0.0, 1.0, self.cfg.bracket_points):
                key = (which, float(lam))
                self._pinned.add(key)
                self.solve(which, float(lam))

    def case_split(self, betas, r_target: float) -> CaseSplitResult:
        betas = tuple(float(b) for b in betas)
        if len(betas) != 3 or min(betas) < 0:
            raise DomainError(f"betas must be three nonnegative numbers, got {betas}")
        if not r_target >= 0:
            raise DomainError(f"r_target must be nonnegative, got {r_target}")
        active = [(i, b) for i, b in zip(WHICH, betas) if b > 0]
        info_p = self.info_at_p()
        r_max = sum(b * info_p[i] for i, b in active)
        if r_target >= r_max:
            return CaseSplitResult(0.0, "zero", 0.0, r_target, r_max, r_max)
        at_one = {i: self.solve(i, 1.0) for i, _ in active}
        r_hat = sum(b * at_one[i].info_term for i, b in active)
        if r_target <= r_hat:
            value = sum(b * (at_one[i].divergence_term + at_one[i].info_term) for i, b in active)
            return CaseSplitResult(max(value - r_target, 0.0), "linear", 1.0, r_target, r_hat,
                                   r_max, at_one)
        lam, sols = self._root(active, r_target)
        value = sum(b * sols[i].divergence_term for i, b in active)
        return CaseSplitResult(max(value, 0.0), "curved", lam, r_target, r_hat, r_max, sols)

    def weighted_info(self, active, lam: float):
        sols = {i: self.solve(i, lam) for i, _ in active}
        return sum(b * sols[i].info_term for i, b in active), sols

    def _root(self, active, r_target: float):
        self.prime([i for i, _ in active])
        grid = np.linspace(0.0, 1.0, self.cfg.bracket_points)
        vals = [self.weighted_info(active, float(l))[0] - r_target for l in grid]
        noise = 1e-9
        for k in range(1, len(vals)):
            if vals[k] > vals[k - 1] + noise:
                raise SolverError("weighted information not monotone in lam",
                                  bracket=(grid[k - 1], grid[k]))
        k = next(k for k in range(1, len(vals)) if vals[k] <= 0)
        lo, hi, hlo, hhi = float(grid[k - 1]), float(grid[k]), vals[k - 1], vals[k]
        if hlo < 0 or hhi > 0:
            raise SolverError("lam bracket does not straddle the target", bracket=(lo, hi))
        side = 0
        lam, sols = hi, None
        for _ in range(self.cfg.max_bisect):
            if hhi == hlo:
                lam = 0.5 * (lo + hi)
            else:
                lam = hi - hhi * (hi - lo) / (hhi - hlo)   # regula falsi (Illinois)
                if not lo < lam < hi:
                    lam = 0.5 * (lo + hi)
            h, sols = self.weighted_info(active, lam)
            h -= r_target
            if h > hlo + noise or h < hhi - noise:
                raise SolverError("weighted information not monotone in lam", bracket=(lo, hi))
            if abs(h) < self.cfg.r_tol or hi - lo < 1e-15:
                return lam, sols
            if h > 0:
                lo, hlo = lam, h
                if side == 1:
                    hhi *= 0.5
                side = 1
            else:
                hi, hhi = lam, h
                if side == -1:
                    hlo *= 0.5
                side = -1
        raise ConvergenceError("lam root finding did not converge", bracket=(lo, hi),
                               residual=h, best=sols)


# A few problems are kept alive so repeated module-level calls share caches.
_PROBLEMS: dict[tuple, DivInfoProblem] = {}


def get_problem(p_xyz, constraint: MarginalConstraint | None = None,
                cfg: SolverConfig | None = None) -> DivInfoProblem:
    p = np.ascontiguousarray(p_xyz, dtype=float)
    cons = constraint or MarginalConstraint.of(p)
    cfg = cfg or DEFAULT_CONFIG
    key = (p.shape, p.tobytes(), np.asarray(cons.px).tobytes(), np.asarray(cons.py).tobytes(), cfg)
    prob = _PROBLEMS.get(key)
    if prob is None:
        if len(_PROBLEMS) > 64:
            _PROBLEMS.clear()
        prob = _PROBLEMS[key] = DivInfoProblem(p, cons, cfg)
    return prob


def minimize_div_plus_info(p_xyz, constraint: MarginalConstraint | None, which: int, lam: float,
                           cfg: SolverConfig | None = None) -> SubproblemSolution:
    """Minimise D(V||P) + lam * I^which_V over V with the constraint's X/Y marginals."""
    return get_problem(p_xyz, constraint, cfg).solve(which, lam)


def solve_case_split(p_xyz, constraint: MarginalConstraint | None, betas, r_target: float,
                     cfg: SolverConfig | None = None) -> CaseSplitResult:
    """min over V_i of sum beta_i D(V_i||P) + |sum beta_i I^i_{V_i} - r|^+."""
    return get_problem(p_xyz, constraint, cfg).case_split(betas, r_target)


# ----------------------------------------------------------------- oracle
def _rref_pivots(a: np.ndarray, tol: float = 1e-10):
    a = a.astype(float).copy()
    m, n = a.shape
    pivots = []
    row = 0
    for col in range(n):
        if row >= m:
            break
        piv = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[piv, col]) < tol:
            continue
        a[[row, piv]] = a[[piv, row]]
        a[row] /= a[row, col]
        for r in range(m):
            if r != row:
                a[r] -= a[r, col] * a[row]
        pivots.append(col)
        row += 1
    return a[:row], pivots


def _vector_objective(vs: np.ndarray, p: np.ndarray, which: int, lam: float) -> np.ndarray:
    """Objective in bits for a batch of full joints vs of shape (B, nx, ny, nz)."""
    def ent(a, axes):
        m = a.sum(axis=axes) if axes else a
        m = m.reshape(m.shape[0], -1)
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(m > 0, m * np.log2(np.where(m > 0, m, 1.0)), 0.0)
        return -t.sum(axis=1)

    flat = vs.reshape(vs.shape[0], -1)
    pf = p.ravel()
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(flat > 0, flat * (np.log2(np.where(flat > 0, flat, 1.0))
                                           - np.log2(np.where(pf > 0, pf, 1.0))), 0.0)
    div = terms.sum(axis=1)
    h_x, h_y, h_z = ent(vs, (2, 3)), ent(vs, (1, 3)), ent(vs, (1, 2))
    h_xyz = ent(vs, ())
    if which == 1:
        info = h_x + ent(vs, (1,)) - h_xyz
    elif which == 2:
        info = h_y + ent(vs, (2,)) - h_xyz
    else:
        info = h_x + h_y + h_z - h_xyz
    return div + lam * info


def brute_force_oracle(p_xyz, constraint: MarginalConstraint | None, which: int, lam: float,
                       step: float = 0.002, budget: int = 200_000) -> float:
    """Grid-search minimum of D(V||P) + lam I^which over the constrained polytope.

    V is parameterised by the free cell probabilities left after eliminating
    the marginal equations; dependent cells follow exactly, so every evaluated
    point is feasible and the result is an upper bound on the true minimum.
    The search runs on nested grids (a coarse scan of the whole box, then local
    boxes around the incumbent) and ends on a grid of spacing ``step``. The
    lattice is shifted to contain the free coordinates of P.
    """
    p = np.asarray(p_xyz, dtype=float)
    if p.size > 12:
        raise RefusalError(f"alphabet product {p.size} > 12 is too large for the oracle")
    if step < 1e-3:
        raise DomainError("oracle step must be at least 1e-3")
    if which not in WHICH:
        raise UsageError(f"which must be one of {WHICH}")
    cons = constraint or MarginalConstraint.of(p)
    px, py = np.asarray(cons.px, float), np.asarray(cons.py, float)
    support = np.flatnonzero(p.ravel() > 0)
    xs, ys, _ = np.unravel_index(support, p.shape)
    n = support.size
    a = np.zeros((px.size + py.size, n))
    a[xs, np.arange(n)] = 1
    a[px.size + ys, np.arange(n)] = 1
    aug, pivots = _rref_pivots(np.hstack([a, np.concatenate([px, py])[:, None]]))
    if n in pivots:
        raise DomainError("marginal constraints are infeasible on the support of P")
    free = [c for c in range(n) if c not in pivots]
    coef = aug[:, free]
    rhs = aug[:, n]
    upper = np.minimum(px[xs], py[ys])[free]

    def assemble(theta):
        vals = np.empty((theta.shape[0], n))
        vals[:, free] = theta
        vals[:, pivots] = rhs[None, :] - theta @ coef.T
        ok = np.all(vals >= -1e-15, axis=1)
        full = np.zeros((theta.shape[0], p.size))
        full[:, support] = np.clip(vals, 0, None)
        return full.reshape((theta.shape[0],) + p.shape), ok

    def evaluate(axes_pts):
        best_val, best_theta = math.inf, None
        mesh = np.stack(np.meshgrid(*axes_pts, indexing="ij"), axis=-1).reshape(-1, len(axes_pts))
        for start in range(0, mesh.shape[0], 50_000):
            chunk = mesh[start:start + 50_000]
            vs, ok = assemble(chunk)
            if not np.any(ok):
                continue
            vals = _vector_objective(vs[ok], p, which, lam)
            k = int(np.argmin(vals))
            if vals[k] < best_val:
                best_val, best_theta = float(vals[k]), chunk[ok][k]
        return best_val, best_theta

    k = len(free)
    if k == 0:
        vs, _ = assemble(np.zeros((1, 0)))
        return float(_vector_objective(vs, p, which, lam)[0])

    per_dim = max(3, int(budget ** (1.0 / k)))
    half = max(1, (per_dim - 1) // 2)
    width = float(upper.max())
    levels = 0
    while step * (2 * half) ** levels < width / 2:
        levels += 1
    coarse = step * (2 * half) ** levels
    # lattice anchored at the free coordinates of P, so the reference point is a grid point
    anchor = np.clip(p.ravel()[support][free], 0, upper)
    best_val, theta = evaluate([np.unique(np.concatenate([[0.0, u], np.arange(a % coarse, u, coarse)]))
                                for a, u in zip(anchor, upper)])
    if theta is None:
        raise DomainError("no feasible grid point found")
    s = coarse
    while True:
        s_next = max(step, s / half)
        s = s_next
        for _ in range(50):     # recentre until the incumbent is interior
            axes_pts = [np.unique(np.clip(theta[i] + s * np.arange(-half, half + 1), 0, upper[i]))
                        for i in range(k)]
            val, cand = evaluate(axes_pts)
            if cand is None or val >= best_val - 1e-15:
                break
            moved = np.any(np.abs(cand - theta) >= s * half - 1e-15)
            best_val, theta = val, cand
            if not moved:
                break
        if s <= step:
            break
    return best_val
