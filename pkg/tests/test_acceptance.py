"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""
import itertools
import time

import numpy as np
import pytest

from amac.channels import pair_output_mac, sphere_packing_exponent
from amac.checks import random_instance, run_identity_suite, run_oracle_comparison
from amac.codes import DelayGeometry, all_message_tuples, build_code, type_counts
from amac.patterns import ExponentQuery, pattern_exponent, rate_sweep
from amac.probability import info_term
from amac.simulation import _Decoder, run_trials
from amac.solver import DivInfoProblem
from amac.subtypes import verify_expurgation

from conftest import ACCEPTANCE_LINES

K = 40
STEP = 0.002


def report(label, ok, detail):
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def sweep(study):
    t0 = time.perf_counter()
    q = ExponentQuery(0.5, study["p"], study["p"], study["w"], 0.0, 0.0)
    rates = np.round(np.arange(0, 0.4 + STEP / 2, STEP), 12)
    sw = rate_sweep(q, rates, M=K, K=K)
    return sw, time.perf_counter() - t0


def test_criterion_01_capacity(study):
    from amac.channels import capacity
    t0 = time.perf_counter()
    c, q = capacity(study["w1"])
    dt = time.perf_counter() - t0
    ok = abs(c - 0.761167) <= 1e-4 and np.allclose(q.probs, [0.543959, 0.456041], atol=1e-4) and dt < 1
    report("1", ok, f"C={c:.6f}, Q={np.round(q.probs, 6).tolist()}, {dt:.3f} s")


def test_criterion_02_input_law(study):
    p1 = study["p"].probs[1]
    q1 = study["q"].probs[1]
    ok = abs(p1 - 0.351746) <= 1e-5 and abs(2 * p1 * (1 - p1) - q1) <= 1e-12
    report("2", ok, f"P*(1)={p1:.7f}, 2p(1-p)-Q(1)={2 * p1 * (1 - p1) - q1:.1e}")


def test_criterion_03_sum_rate(study):
    t0 = time.perf_counter()
    i12 = info_term(study["P"], 12)
    dt = time.perf_counter() - t0
    report("3", abs(i12 - study["c"]) <= 1e-4 and dt < 1, f"I12={i12:.6f}, C={study['c']:.6f}")


def test_criterion_04_zero_crossing(study, sweep):
    sw, dt = sweep
    nominal, eff = sw.r_sup, sw.r_sup_effective
    c = study["c"]
    ok = (abs(nominal - 0.38889) <= STEP and abs(eff - 0.37917) <= STEP
          and eff < c / 2 < nominal and dt < 600)
    report("4", ok, f"R_sup={nominal:.5f} (exact {sw.r_sup_exact:.5f}), effective={eff:.5f}, "
                    f"C/2={c / 2:.5f}, sweep {dt:.0f} s")


def test_criterion_05_dominant_pattern(sweep):
    sw, _ = sweep
    low = sw.rates <= 0.29 + 1e-12
    last = sw.last_positive_index()
    ok = bool(np.all(sw.dominant_L[low] == 1)) and sw.dominant_L[last] == K
    report("5", ok, f"L_dom=1 on [0, 0.29]: {bool(np.all(sw.dominant_L[low] == 1))}, "
                    f"L_dom at R={sw.rates[last]:.3f} is {sw.dominant_L[last]}")


def test_criterion_06_beats_synchronism(study, sweep):
    sw, _ = sweep
    esp = np.array([sphere_packing_exponent(study["w1"], 2 * r) for r in sw.effective_rates])
    better = sw.rates[sw.exponents > esp + 1e-12]
    ok = better.size > 0
    detail = (f"envelope above E_sp(2 R_eff) for nominal R in [{better.min():.3f}, {better.max():.3f}]"
              if ok else "no witnessing rate")
    report("6", ok, detail)


def test_criterion_07_linear_region(study):
    q = ExponentQuery(0.5, study["p"], study["p"], study["w"], 0.0, 0.0, L=1, j=1)
    rates = np.round(np.arange(0, 0.29 + STEP / 2, STEP), 12)
    e = np.array([pattern_exponent(q.at(r1=r, r2=r)) for r in rates])
    secant = e[0] + (e[-1] - e[0]) / (rates[-1] - rates[0]) * (rates - rates[0])
    slope = (e[-1] - e[0]) / (rates[-1] - rates[0])
    dev = np.abs(e - secant).max()
    report("7", dev < 1e-4 and abs(slope + 1) < 1e-4, f"slope={slope:.8f}, max deviation {dev:.1e}")


def test_criterion_08_solver_vs_oracle():
    t0 = time.perf_counter()
    rep = run_oracle_comparison(100, seed=2024)
    dt = time.perf_counter() - t0
    report("8", rep.passed and dt < 300,
           f"worst |solver - oracle| = {rep.worst:.2e}, {rep.over_tol}/{rep.cases} cases over 2e-3, "
           f"max solver - oracle = {rep.max_excess:.1e}, {dt:.0f} s")


def test_criterion_09_exponent_structure():
    rng = np.random.default_rng(9)
    worst = {"increase": 0.0, "convexity": 0.0, "zero": 0.0, "affine": 0.0}
    for _ in range(20):
        *_, p = random_instance(rng)
        prob = DivInfoProblem(p)
        betas = tuple(rng.uniform(0, 2, size=3))
        info = prob.info_at_p()
        r_max = sum(b * info[i] for i, b in zip((1, 2, 12), betas))
        rs = np.linspace(0, 1.25 * r_max, 81)
        res = [prob.case_split(betas, r) for r in rs]
        e = np.array([x.exponent for x in res])
        worst["increase"] = max(worst["increase"], np.diff(e).max())
        worst["convexity"] = max(worst["convexity"], (2 * e[1:-1] - e[:-2] - e[2:]).max())
        worst["zero"] = max(worst["zero"], np.abs(e[rs >= r_max]).max())
        if np.any(e[rs < r_max * (1 - 1e-9)] <= 0):
            worst["zero"] = np.inf
        lin = rs <= res[0].r_hat
        worst["affine"] = max(worst["affine"], np.abs(e[lin] + rs[lin] - e[0]).max())
    ok = (worst["increase"] <= 1e-9 and worst["convexity"] <= 1e-6 and worst["zero"] == 0
          and worst["affine"] <= 1e-9)
    report("9", ok, ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


def test_criterion_10_expurgation():
    t0 = time.perf_counter()
    checks = verify_expurgation(16)
    dt = time.perf_counter() - t0
    ok = all(c.holds for c in checks) and dt < 60
    report("10", ok, f"{sum(c.holds for c in checks)}/{len(checks)} binary type classes, {dt:.1f} s")


def test_criterion_11a_zero_error_cases(study):
    single = build_code(8, 3, 0.0, 0.0, (5, 3), (5, 3), seed=11)
    t1 = run_trials(single, study["w"], 4, 10_000, seed=11)
    # noiseless pair output, synchronous, on a code where the truth is the unique maximiser
    code = build_code(10, 3, 0.2, 0.2, (5, 5), (5, 5), seed=0)
    g = DelayGeometry(10, 3, 0)
    dec = _Decoder(code, g, 4)
    sent = list(itertools.product(all_message_tuples(g, code.m1, 1),
                                  all_message_tuples(g, code.m2, 2)))
    z = np.array([2 * code.x_window(i, g) + code.y_window(j, g) for i, j in sent])
    unique = bool(np.all(dec.decode(z) == sent))
    t2 = run_trials(code, pair_output_mac().matrix, 0, 10_000, seed=12)
    ok = t1.errors == 0 and t2.errors == 0 and unique
    report("11a", ok, f"single hypothesis {t1.errors}/10000 errors, pair output {t2.errors}/10000 "
                      f"errors (exhaustive decode check {unique})")


@pytest.fixture(scope="module")
def tallies(study):
    out = {}
    p = study["p"].probs
    for n in (6, 12):
        code = build_code(n, 2, 1 / 6, 1 / 6, type_counts(p, n), type_counts(p, n), seed=6)
        out[n] = run_trials(code, study["w"], n // 2, 100_000, seed=6)
    return out


def test_criterion_11b_blocklength_direction(tallies):
    a, b = tallies[6], tallies[12]
    (alo, ahi), (blo, bhi) = a.wilson(), b.wilson()
    report("11b", bhi < alo, f"n=6 rate {a.error_rate:.4f} [{alo:.4f}, {ahi:.4f}], "
                             f"n=12 rate {b.error_rate:.4f} [{blo:.4f}, {bhi:.4f}]")


def test_criterion_11c_structure(study, tallies):
    runs = [(DelayGeometry(n, 2, n // 2), t) for n, t in tallies.items()]
    code = build_code(6, 4, 1 / 6, 1 / 6, (4, 2), (4, 2), seed=7)
    for D in (9, 15):                                  # l = 2 and l = 3
        runs.append((DelayGeometry(6, 4, D), run_trials(code, study["w"], D, 10_000, seed=D)))
    bad = 0
    total = 0
    for g, tally in runs:
        bound = 2 * max(g.l - 1, g.K - g.l)
        for (L1, L2), count in tally.patterns.items():
            total += count
            if g.l in L1 or g.K in L2 or len(L1) + len(L2) > 2 * g.K - 2:
                bad += count
        if tally.component_lengths and max(tally.component_lengths) > bound:
            bad += 1
        if tally.correct + sum(tally.patterns.values()) != tally.trials:
            bad += 1
    report("11c", bad == 0, f"{total} tallied error events, {bad} violations")


def test_criterion_12_identities():
    results = run_identity_suite(1000, seed=12)
    ok = all(r[1] for r in results)
    report("12", ok, "; ".join(f"{name} {worst:.1e}" for name, _, worst in results))


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
