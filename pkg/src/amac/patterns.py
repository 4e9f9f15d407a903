"""Error-pattern exponents, their envelope over pattern lengths, and rate sweeps.

An irreducible error pattern of length L starting with sender j has beta
weights (beta_1, beta_2, beta_12); its exponent at rates (R1, R2) is the case
split of the constrained solver at r = beta_1 R1 + beta_2 R2 + beta_12 (R1+R2).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import DomainError, UsageError
from .probability import Dist, compose, product
from .solver import CaseSplitResult, MarginalConstraint, SolverConfig, get_problem

TIE_TOL = 1e-9


@dataclass(frozen=True)
class IrreduciblePattern:
    L: int
    j: int

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise DomainError(f"pattern length must be a positive integer, got {self.L}")
        if self.j not in (1, 2):
            raise DomainError(f"j must be 1 or 2, got {self.j}")


@dataclass(frozen=True)
class BetaCoefficients:
    b1: float
    b2: float
    b12: float

    def __post_init__(self):
        if min(self.b1, self.b2, self.b12) < 0:
            raise DomainError("beta coefficients must be nonnegative")

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.b1, self.b2, self.b12)

    def rate(self, r1: float, r2: float) -> float:
        """The weighted rate combination b1 R1 + b2 R2 + b12 (R1 + R2)."""
        return self.b1 * r1 + self.b2 * r2 + self.b12 * (r1 + r2)


def beta_coefficients(L: int, j: int, alpha: float) -> BetaCoefficients:
    IrreduciblePattern(L, j)
    if not 0.0 <= alpha <= 1.0:
        raise DomainError(f"alpha must lie in [0, 1], got {alpha}")
    if L % 2 == 1:
        half = (L - 1) / 2
        return BetaCoefficients(1.0, 0.0, half) if j == 1 else BetaCoefficients(0.0, 1.0, half)
    if j == 1:
        return BetaCoefficients(1 - alpha, 1 - alpha, alpha + L / 2 - 1)
    return BetaCoefficients(alpha, alpha, L / 2 - alpha)


def e_k(k: int, alpha: float) -> float:
    """Relative length of subblock k: 1 - alpha for odd k, alpha for even k."""
    if k < 1:
        raise DomainError("subblock indices start at 1")
    return 1.0 - alpha if k % 2 == 1 else alpha


def betas_from_sets(s1: Iterable[int], s2: Iterable[int], s12: Iterable[int],
                    alpha: float, K: int | None = None) -> BetaCoefficients:
    s1, s2, s12 = set(s1), set(s2), set(s12)
    if s1 & s2 or s1 & s12 or s2 & s12:
        raise DomainError("S1, S2, S12 must be pairwise disjoint")
    if K is not None and any(k > 2 * K for k in s1 | s2 | s12):
        raise DomainError(f"subblock indices must lie in 1..{2 * K}")
    return BetaCoefficients(*(sum(e_k(k, alpha) for k in s) for s in (s1, s2, s12)))


def irreducible_sets(k0: int, L: int) -> tuple[set, set, set, int]:
    """S-sets of the irreducible pattern with support {k0, ..., k0+L}, and its j."""
    if k0 < 1 or L < 1:
        raise DomainError("need k0 >= 1 and L >= 1")
    s1, s2 = set(), set()
    (s1 if k0 % 2 == 1 else s2).add(k0)
    end = k0 + L
    (s1 if end % 2 == 0 else s2).add(end)
    return s1, s2, set(range(k0 + 1, end)), 1 if k0 % 2 == 1 else 2


# ------------------------------------------------------------------ queries
@dataclass(frozen=True)
class ExponentQuery:
    alpha: float
    px: Dist
    py: Dist
    w: np.ndarray          # shape (|X|, |Y|, |Z|)
    r1: float
    r2: float
    L: int = 1
    j: int = 1

    def __post_init__(self):
        if self.r1 < 0 or self.r2 < 0:
            raise DomainError("rates must be nonnegative")
        if not 0.0 <= self.alpha <= 1.0:
            raise DomainError("alpha must lie in [0, 1]")
        for name in ("px", "py"):
            if not isinstance(getattr(self, name), Dist):
                object.__setattr__(self, name, Dist(getattr(self, name)))
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "w", w)

    @property
    def r12(self) -> float:
        return self.r1 + self.r2

    def joint(self) -> np.ndarray:
        return compose(product(self.px, self.py), self.w)

    def at(self, **changes) -> "ExponentQuery":
        return replace(self, **changes)


def _problem(q: ExponentQuery, cfg: SolverConfig | None):
    return get_problem(q.joint(), MarginalConstraint(q.px, q.py), cfg)


def pattern_case_split(q: ExponentQuery, cfg: SolverConfig | None = None) -> CaseSplitResult:
    beta = beta_coefficients(q.L, q.j, q.alpha)
    return _problem(q, cfg).case_split(beta.as_tuple(), beta.rate(q.r1, q.r2))


def pattern_exponent(q: ExponentQuery, cfg: SolverConfig | None = None) -> float:
    """E^alpha(L, j) at rates (R1, R2), in bits."""
    return pattern_case_split(q, cfg).exponent


def general_pattern_exponent(s1, s2, s12, alpha: float, px, py, w, r1: float, r2: float,
                             K: int, cfg: SolverConfig | None = None) -> float:
    """Exponent of an arbitrary pattern given by its subblock index sets."""
    beta = betas_from_sets(s1, s2, s12, alpha, K)
    q = ExponentQuery(alpha, px, py, w, r1, r2)
    return _problem(q, cfg).case_split(beta.as_tuple(), beta.rate(r1, r2)).exponent


@dataclass(frozen=True)
class EnvelopeResult:
    value: float
    dominant: tuple[int, int]
    regime: str
    argmins: tuple = ()
    per_pattern: dict = field(default_factory=dict)   # (L, j) -> CaseSplitResult


def envelope_exponent(q: ExponentQuery, M: int, cfg: SolverConfig | None = None,
                      zero_rate_shortcut: bool = False) -> EnvelopeResult:
    """E^{alpha,M} = min over L in 1..M and j in {1, 2} of E^alpha(L, j).

    Ties within 1e-9 go to the smallest L, then j = 1; all tied patterns are
    listed in ``argmins``. With ``zero_rate_shortcut`` and R1 = R2 = 0 only
    the (1, 1) pattern is evaluated.
    """
    if M < 1:
        raise DomainError("M must be at least 1")
    prob = _problem(q, cfg)
    patterns = [(1, 1)] if zero_rate_shortcut and q.r1 == q.r2 == 0 else \
        [(L, j) for L in range(1, M + 1) for j in (1, 2)]
    results = {}
    for L, j in patterns:
        beta = beta_coefficients(L, j, q.alpha)
        results[(L, j)] = prob.case_split(beta.as_tuple(), beta.rate(q.r1, q.r2))
    best = min(res.exponent for res in results.values())
    ties = tuple(key for key, res in results.items() if res.exponent <= best + TIE_TOL)
    dom = ties[0]
    return EnvelopeResult(best, dom, results[dom].regime, ties, results)


# ------------------------------------------------------------------ sweeps
@dataclass
class SweepResult:
    rates: np.ndarray
    exponents: np.ndarray
    dominant_L: np.ndarray
    dominant_j: np.ndarray
    regimes: list
    K: int
    M: int
    alpha: float
    ray: tuple = (1.0, 1.0)
    per_pattern: np.ndarray | None = None      # (rates, M, 2) table when requested
    r_sup_exact: float = math.nan

    @property
    def effective_rates(self) -> np.ndarray:
        return self.rates * (1 - 1 / self.K)

    @property
    def positive(self) -> np.ndarray:
        return self.exponents > 0

    def _bracket(self):
        pos = np.flatnonzero(self.positive)
        if pos.size == 0 or pos[-1] + 1 >= self.rates.size:
            return None
        return pos[-1], pos[-1] + 1

    @property
    def r_sup(self) -> float:
        """Midpoint of the grid cell where the exponent first vanishes."""
        br = self._bracket()
        if br is None:
            return math.nan
        return 0.5 * (self.rates[br[0]] + self.rates[br[1]])

    @property
    def r_sup_interpolated(self) -> float:
        """Inverse linear interpolation between last positive and first zero point."""
        br = self._bracket()
        if br is None:
            return math.nan
        (a, b), (ea, eb) = (self.rates[list(br)], self.exponents[list(br)])
        return a + (b - a) * ea / (ea - eb)

    @property
    def r_sup_effective(self) -> float:
        return self.r_sup * (1 - 1 / self.K)

    def last_positive_index(self) -> int:
        pos = np.flatnonzero(self.positive)
        return int(pos[-1]) if pos.size else -1


def exact_r_sup(q: ExponentQuery, M: int, ray=(1.0, 1.0), cfg: SolverConfig | None = None) -> float:
    """Largest t with every E^alpha(L, j) positive at (R1, R2) = t * ray, for L <= M."""
    prob = _problem(q, cfg)
    info = prob.info_at_p()
    a, b = ray
    best = math.inf
    for L in range(1, M + 1):
        for j in (1, 2):
            beta = beta_coefficients(L, j, q.alpha)
            slope = beta.rate(a, b)
            if slope > 0:
                cap = beta.b1 * info[1] + beta.b2 * info[2] + beta.b12 * info[12]
                best = min(best, cap / slope)
    return best


def rate_sweep(template: ExponentQuery, rates: Sequence[float], M: int, K: int | None = None,
               cfg: SolverConfig | None = None, ray=(1.0, 1.0),
               per_pattern: bool = False) -> SweepResult:
    """Envelope exponent at (R1, R2) = R * ray for each R of a monotone grid."""
    rates = np.asarray(rates, dtype=float)
    if rates.ndim != 1 or np.any(np.diff(rates) <= 0):
        raise UsageError("rate grid must be strictly increasing")
    if np.any(rates < 0):
        raise DomainError("rates must be nonnegative")
    K = M if K is None else K
    exps = np.zeros(rates.size)
    dl = np.zeros(rates.size, dtype=int)
    dj = np.zeros(rates.size, dtype=int)
    regimes = []
    table = np.zeros((rates.size, M, 2)) if per_pattern else None
    for n, rate in enumerate(rates):
        q = template.at(r1=rate * ray[0], r2=rate * ray[1])
        env = envelope_exponent(q, M, cfg)
        exps[n] = env.value
        dl[n], dj[n] = env.dominant
        regimes.append(env.regime)
        if per_pattern:
            for (L, j), res in env.per_pattern.items():
                table[n, L - 1, j - 1] = res.exponent
    return SweepResult(rates, exps, dl, dj, regimes, K, M, template.alpha, tuple(ray), table,
                       exact_r_sup(template, M, ray, cfg))


# ---------------------------------------------------------- delay choices
@dataclass(frozen=True)
class DelayBounds:
    worst: float
    worst_alpha: float
    best: float
    best_alpha: float


def _optimize_alpha(f, sense: int, step: float) -> tuple[float, float]:
    """Grid search over alpha in [0, 1] followed by bounded scalar refinement."""
    grid = np.linspace(0.0, 1.0, int(round(1 / step)) + 1)
    vals = np.array([sense * f(a) for a in grid])
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)]
    res = minimize_scalar(lambda a: sense * f(a), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-6})
    if res.fun < vals[k]:
        return float(res.x), sense * float(res.fun)
    return float(grid[k]), sense * float(vals[k])


def best_worst_delay(template: ExponentQuery, K: int, cfg: SolverConfig | None = None,
                     alpha_step: float = 0.01) -> DelayBounds:
    """Worst case min_alpha E^{alpha,2K-2} and best case max_alpha E^{alpha,K}."""
    if K < 2:
        raise DomainError("K must be at least 2")

    def env(alpha, M):
        return envelope_exponent(template.at(alpha=float(alpha)), M, cfg).value

    wa, worst = _optimize_alpha(lambda a: env(a, 2 * K - 2), +1, alpha_step)
    ba, best = _optimize_alpha(lambda a: env(a, K), -1, alpha_step)
    return DelayBounds(worst, wa, best, ba)
