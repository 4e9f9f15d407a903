"""Randomized identity suites and solver-vs-oracle comparison."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .probability import (compose, couple_to_marginals, divergence, extend_coupling_to_channel,
                          multi_information, mutual_information, product, variational_distance)
from .solver import DEFAULT_CONFIG, MarginalConstraint, brute_force_oracle, get_problem
from .subtypes import jensen_shannon_split

IDENTITY_TOL = 1e-10
EXTENSION_DIV_TOL = 1e-9
ORACLE_TOL = 2e-3
LAMBDAS = (0.0, 0.25, 0.5, 1.0)


def random_instance(rng: np.random.Generator, shape=(2, 2, 2)):
    """Random full-support (P^X, P^Y, W) and P = (P^X x P^Y) o W."""
    nx, ny, nz = shape
    px = rng.dirichlet(np.ones(nx))
    py = rng.dirichlet(np.ones(ny))
    w = rng.dirichlet(np.ones(nz), size=(nx, ny))
    return px, py, w, compose(product(px, py), w)


def js_forms_gap(rng) -> float:
    m = int(rng.integers(2, 5))
    n = int(rng.integers(2, 40))
    d = int(rng.integers(1, n))
    v1, v2 = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(m))
    p = d / n * v1 + (n - d) / n * v2
    a = jensen_shannon_split(p, n, d, v1, v2, "entropy")
    b = jensen_shannon_split(p, n, d, v1, v2, "divergence")
    return abs(a - b)


def divergence_exchange_gap(rng) -> float:
    px, py, w, _ = random_instance(rng, tuple(rng.integers(2, 4, size=3)))
    vxy = couple_to_marginals(rng.dirichlet(np.ones(px.size * py.size)).reshape(px.size, py.size),
                              px, py)
    v = compose(vxy, rng.dirichlet(np.ones(w.shape[2]), size=w.shape[:2]))
    lhs = divergence(v, compose(vxy, w)) + mutual_information(vxy, [0], [1])
    return abs(lhs - divergence(v, compose(product(px, py), w)))


def decomposition_gap(rng) -> float:
    shape = tuple(rng.integers(2, 4, size=3))
    v = rng.dirichlet(np.ones(int(np.prod(shape)))).reshape(shape)
    full = multi_information(v)
    a = mutual_information(v, [0], [1, 2]) + mutual_information(v, [1], [2])
    b = mutual_information(v, [1], [0, 2]) + mutual_information(v, [0], [2])
    return max(abs(full - a), abs(full - b))


def coupling_violation(rng) -> float:
    """Largest violation among the marginal equalities and the distance bound."""
    nx, ny = rng.integers(2, 4, size=2)
    v = rng.dirichlet(np.ones(nx * ny)).reshape(nx, ny)
    px, py = rng.dirichlet(np.ones(nx)), rng.dirichlet(np.ones(ny))
    out = couple_to_marginals(v, px, py)
    bound = variational_distance(px, v.sum(1)) + variational_distance(py, v.sum(0))
    return max(np.abs(out.sum(1) - px).max(), np.abs(out.sum(0) - py).max(),
               variational_distance(out, v) - bound, -out.min(), 0.0)


def extension_violation(rng) -> tuple[float, float]:
    """(marginal / distance violation, divergence-bound violation)."""
    nx, ny, nz = 2, 2, 2
    w = rng.dirichlet(np.ones(nz), size=(nx, ny))
    v = rng.dirichlet(np.ones(nx * ny * nz)).reshape(nx, ny, nz)
    vxy = v.sum(axis=2)
    radius = (nx * ny) ** -2 * rng.uniform(0.01, 1.0)
    delta = rng.normal(size=(nx, ny))
    delta -= delta.mean()
    delta *= radius / np.abs(delta).sum()
    vxy_hat = vxy + delta
    if vxy_hat.min() < 0:
        vxy_hat = vxy                                   # stay on the simplex
    gap = variational_distance(vxy_hat, vxy)
    out = extend_coupling_to_channel(v, vxy_hat, w)
    struct = max(np.abs(out.sum(axis=2) - vxy_hat).max(),
                 variational_distance(out, v) - nx * ny * nz * math.sqrt(gap), 0.0)
    div = divergence(out, compose(vxy_hat, w)) - divergence(v, compose(vxy, w)) * (1 + math.sqrt(gap))
    return struct, max(div, 0.0)


def run_identity_suite(instances: int = 1000, seed: int = 0):
    """[(name, passed, worst deviation)] for each identity family."""
    rng = np.random.default_rng(seed)
    results = []
    for name, fn in (("js split forms", js_forms_gap),
                     ("divergence exchange", divergence_exchange_gap),
                     ("multi-information decomposition", decomposition_gap),
                     ("marginal coupling", coupling_violation)):
        worst = max(fn(rng) for _ in range(instances))
        results.append((name, bool(worst <= IDENTITY_TOL), float(worst)))
    pairs = [extension_violation(rng) for _ in range(instances)]
    s = max(p[0] for p in pairs)
    dv = max(p[1] for p in pairs)
    results.append(("channel extension", bool(s <= IDENTITY_TOL), float(s)))
    results.append(("channel extension divergence", bool(dv <= EXTENSION_DIV_TOL), float(dv)))
    return results


@dataclass(frozen=True)
class OracleReport:
    cases: int
    worst: float            # max |solver - oracle|
    max_excess: float       # max (solver - oracle); the oracle is an upper bound
    over_tol: int           # cases with |solver - oracle| > ORACLE_TOL

    @property
    def passed(self) -> bool:
        return self.over_tol == 0


def run_oracle_comparison(instances: int = 100, seed: int = 0, lambdas=LAMBDAS,
                          step: float = 0.002, cfg=DEFAULT_CONFIG) -> OracleReport:
    """Compare the solver with the grid oracle on random 2x2x2 instances."""
    rng = np.random.default_rng(seed)
    gaps = []
    for _ in range(instances):
        px, py, w, p = random_instance(rng)
        prob = get_problem(p, MarginalConstraint(px, py), cfg)
        for which in (1, 2, 12):
            for lam in lambdas:
                s = prob.solve(which, lam).objective
                o = brute_force_oracle(p, MarginalConstraint(px, py), which, lam, step=step)
                gaps.append(s - o)
    gaps = np.array(gaps)
    return OracleReport(gaps.size, float(np.abs(gaps).max()), float(gaps.max()),
                        int(np.sum(np.abs(gaps) > ORACLE_TOL)))
