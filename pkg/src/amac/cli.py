"""Command-line entry point: capacity, exponent, sweep, region, simulate, verify.

Exit codes: 0 success, 1 a verification check failed, 2 numerical failure,
3 usage or domain error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .channels import (MacChannel, bsc, capacity, pair_output_mac, sphere_packing_exponent,
                       xor_mac, xor_preimage_input, z_channel)
from .errors import AmacError, ConvergenceError, SolverError
from .patterns import ExponentQuery, envelope_exponent, exact_r_sup, pattern_case_split
from .probability import Dist
from .region import compound_region, pentagon, union_over_inputs
from .solver import SolverConfig

SCHEMA_VERSION = 1
SWEEP_COLUMNS = ["rate", "effective_rate", "exponent", "L_dom", "j_dom", "regime", "error"]
PATTERN_COLUMNS = ["rate", "effective_rate", "L", "j", "exponent", "regime"]
EXIT_OK, EXIT_CHECK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    """Validated parameters shared by the subcommands."""
    sigma: float = 0.101
    alpha: float = 0.5
    K: int = 40
    M: int | None = None
    inputs: tuple | None = None
    solver: dict = field(default_factory=dict)

    def channel(self) -> MacChannel:
        return xor_mac(z_channel(self.sigma))

    def input_laws(self) -> tuple[Dist, Dist]:
        if self.inputs is None:
            _, q = capacity(z_channel(self.sigma))
            p = xor_preimage_input(q)
            return p, p
        a, b = self.inputs
        return Dist(np.array([1 - a, a])), Dist(np.array([1 - b, b]))

    def solver_config(self) -> SolverConfig:
        return SolverConfig.from_mapping(self.solver)


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return "nan" if math.isnan(x) else ("inf" if math.isinf(x) else f"{x:.6f}")
    return str(x)


def _round(x):
    if isinstance(x, (float, np.floating)):
        return None if not math.isfinite(x) else round(float(x), 6)
    return x


def emit(args, rows: list[dict], columns: list[str], meta: dict | None = None):
    out = open(args.output, "w", newline="") if getattr(args, "output", None) else sys.stdout
    try:
        if getattr(args, "json", False):
            record = {"schema_version": SCHEMA_VERSION}
            record.update({k: _round(v) for k, v in (meta or {}).items()})
            record["rows"] = [{c: _round(r.get(c, "")) for c in columns} for r in rows]
            out.write(json.dumps(record, indent=2) + "\n")
        else:
            w = csv.writer(out, lineterminator="\n")
            w.writerow(columns)
            for r in rows:
                w.writerow([fmt(r.get(c, "")) for c in columns])
    finally:
        if out is not sys.stdout:
            out.close()


def _config(args) -> RunConfig:
    solver = {k: getattr(args, k) for k in ("tol", "r_tol", "method") if getattr(args, k, None)}
    return RunConfig(sigma=args.sigma, alpha=getattr(args, "alpha", 0.5), K=getattr(args, "K", 40),
                     M=getattr(args, "M", None),
                     inputs=tuple(args.input) if getattr(args, "input", None) else None,
                     solver=solver)


# ------------------------------------------------------------- commands
def cmd_capacity(args) -> int:
    if args.bsc is not None:
        w, label = bsc(args.bsc), f"bsc({args.bsc})"
    else:
        w, label = z_channel(args.z_channel), f"z({args.z_channel})"
    c, p = capacity(w, tol=args.tol or 1e-9)
    row = {"channel": label, "capacity": c}
    row.update({f"p{x}": float(v) for x, v in enumerate(p.probs)})
    emit(args, [row], list(row))
    return EXIT_OK


def _query(cfg: RunConfig, r1: float, r2: float, L: int = 1, j: int = 1) -> ExponentQuery:
    px, py = cfg.input_laws()
    return ExponentQuery(cfg.alpha, px, py, cfg.channel().matrix, r1, r2, L, j)


def cmd_exponent(args) -> int:
    cfg = _config(args)
    r1 = args.rate if args.r1 is None else args.r1
    r2 = args.rate if args.r2 is None else args.r2
    if args.L is not None:
        res = pattern_case_split(_query(cfg, r1, r2, args.L, args.j), cfg.solver_config())
        row = {"r1": r1, "r2": r2, "L": args.L, "j": args.j, "exponent": res.exponent,
               "regime": res.regime}
    else:
        M = cfg.M or cfg.K
        env = envelope_exponent(_query(cfg, r1, r2), M, cfg.solver_config())
        row = {"r1": r1, "r2": r2, "exponent": env.value, "L_dom": env.dominant[0],
               "j_dom": env.dominant[1], "regime": env.regime}
    row["effective_r1"] = r1 * (1 - 1 / cfg.K)
    row["effective_r2"] = r2 * (1 - 1 / cfg.K)
    emit(args, [row], list(row))
    return EXIT_OK


def _rate_grid(args) -> np.ndarray:
    m = int(round((args.rate_max - args.rate_min) / args.rate_step))
    return np.round(args.rate_min + args.rate_step * np.arange(m + 1), 12)


def cmd_sweep(args) -> int:
    cfg = _config(args)
    M = cfg.M or cfg.K
    scfg = cfg.solver_config()
    rows, long_rows = [], []
    template = _query(cfg, 0.0, 0.0)
    for rate in _rate_grid(args):
        eff = rate * (1 - 1 / cfg.K)
        row = {"rate": rate, "effective_rate": eff}
        try:
            env = envelope_exponent(template.at(r1=rate, r2=rate), M, scfg)
            row.update(exponent=env.value, L_dom=env.dominant[0], j_dom=env.dominant[1],
                       regime=env.regime, error="")
            for (L, j), res in sorted(env.per_pattern.items()):
                long_rows.append({"rate": rate, "effective_rate": eff, "L": L, "j": j,
                                  "exponent": res.exponent, "regime": res.regime})
        except AmacError as exc:
            row.update(exponent=math.nan, L_dom="", j_dom="", regime="", error=type(exc).__name__)
        if args.sync_bound:
            row["esp_2r"] = sphere_packing_exponent(z_channel(cfg.sigma), 2 * eff)
        rows.append(row)
    if args.per_pattern:
        emit(args, long_rows, PATTERN_COLUMNS)
    else:
        cols = SWEEP_COLUMNS + (["esp_2r"] if args.sync_bound else [])
        meta = {"sigma": cfg.sigma, "alpha": cfg.alpha, "K": cfg.K, "M": M,
                "r_sup_exact": exact_r_sup(template, M, cfg=scfg)}
        emit(args, rows, cols, meta)
    return EXIT_OK if all(not r["error"] for r in rows) else EXIT_NUMERIC


def cmd_region(args) -> int:
    cfg = _config(args)
    if args.scan is not None:
        fam = [xor_mac(z_channel(s)) for s in (args.compound or [cfg.sigma])]
        scan = union_over_inputs(fam[0].matrix, step=args.scan, family=[f.matrix for f in fam])
        rows = [{"r1": a, "r2": b} for a, b in scan.boundary]
        emit(args, rows, ["r1", "r2"])
        return EXIT_OK
    px, py = cfg.input_laws()
    if args.compound:
        pent = compound_region(px, py, [xor_mac(z_channel(s)).matrix for s in args.compound])
    else:
        pent = pentagon(px, py, cfg.channel().matrix)
    rows = [{"i1": pent.i1, "i2": pent.i2, "i12": pent.i12}]
    if args.vertices:
        emit(args, [{"r1": a, "r2": b} for a, b in pent.vertices()], ["r1", "r2"])
    else:
        emit(args, rows, ["i1", "i2", "i12"])
    return EXIT_OK


def cmd_simulate(args) -> int:
    from .codes import build_code, type_counts
    from .simulation import run_trials
    cfg = _config(args)
    px, py = cfg.input_laws()
    code = build_code(args.n, args.K, args.rates[0], args.rates[1], type_counts(px.probs, args.n),
                      type_counts(py.probs, args.n), args.code_seed)
    w = pair_output_mac().matrix if args.pair_output else cfg.channel().matrix
    D = args.D if args.D is not None else args.n // 2
    tally = run_trials(code, w, D, args.trials, args.seed)
    record = tally.to_dict()
    lo, hi = tally.wilson()
    record["wilson_95"] = [round(lo, 6), round(hi, 6)]
    text = json.dumps(record, indent=2) + "\n"
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .subtypes import verify_expurgation
    ok = True
    lines = []
    if args.balanced or not (args.identities or args.solver):
        checks = verify_expurgation(args.n_max)
        bad = [c for c in checks if not c.holds]
        ok &= not bad
        lines.append(f"balanced n<={args.n_max}: {len(checks) - len(bad)}/{len(checks)} "
                     f"type classes {'PASS' if not bad else 'FAIL'}")
    if args.identities:
        from .checks import run_identity_suite
        for name, passed, worst in run_identity_suite(args.instances, args.seed):
            ok &= passed
            lines.append(f"{name}: worst deviation {worst:.3e} {'PASS' if passed else 'FAIL'}")
    if args.solver:
        from .checks import run_oracle_comparison
        rep = run_oracle_comparison(args.instances, args.seed)
        ok &= rep.passed
        lines.append(f"solver vs oracle: worst gap {rep.worst:.3e}, {rep.over_tol}/{rep.cases} "
                     f"over tolerance, max solver - oracle {rep.max_excess:.1e} "
                     f"{'PASS' if rep.passed else 'FAIL'}")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------- parser
def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="amac", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser, required=True)

    def common(sp, channel=True, out=True):
        if channel:
            sp.add_argument("--sigma", "--z-channel", dest="sigma", type=float, default=0.101,
                            help="Z-channel crossover of the xor MAC")
            sp.add_argument("--input", nargs=2, type=float, metavar=("PX1", "PY1"),
                            help="P(1) of each sender (default: xor preimage of the capacity law)")
        if out:
            sp.add_argument("--json", action="store_true")
            sp.add_argument("--output", "-o")
        sp.add_argument("--tol", type=float)

    sp = sub.add_parser("capacity", help="single-user channel capacity")
    g = sp.add_mutually_exclusive_group()
    g.add_argument("--z-channel", type=float, default=0.101)
    g.add_argument("--bsc", type=float)
    common(sp, channel=False)
    sp.set_defaults(func=cmd_capacity)

    def exponent_args(sp):
        sp.add_argument("--alpha", type=float, default=0.5)
        sp.add_argument("--K", type=int, default=40)
        sp.add_argument("--M", type=int)
        sp.add_argument("--r-tol", type=float)
        sp.add_argument("--method", choices=["newton", "fixed-point"])

    sp = sub.add_parser("exponent", help="envelope or single-pattern exponent at one rate pair")
    common(sp)
    exponent_args(sp)
    sp.add_argument("--rate", type=float, default=0.0)
    sp.add_argument("--r1", type=float)
    sp.add_argument("--r2", type=float)
    sp.add_argument("--L", type=int)
    sp.add_argument("--j", type=int, default=1, choices=[1, 2])
    sp.set_defaults(func=cmd_exponent)

    sp = sub.add_parser("sweep", help="envelope exponent over a grid of equal rates")
    common(sp)
    exponent_args(sp)
    sp.add_argument("--rate-min", type=float, default=0.0)
    sp.add_argument("--rate-max", type=float, default=0.4)
    sp.add_argument("--rate-step", type=float, default=0.002)
    sp.add_argument("--sync-bound", action="store_true", help="add the E_sp(2R_eff) column")
    sp.add_argument("--per-pattern", action="store_true", help="long-format per-(L, j) rows")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("region", help="pentagon, compound region or union boundary")
    common(sp)
    sp.add_argument("--compound", nargs="+", type=float, metavar="SIGMA")
    sp.add_argument("--scan", type=float, metavar="STEP", help="scan binary inputs at this step")
    sp.add_argument("--vertices", action="store_true")
    sp.set_defaults(func=cmd_region)

    sp = sub.add_parser("simulate", help="Monte-Carlo error-pattern tally")
    common(sp)
    sp.add_argument("--n", type=int, default=8)
    sp.add_argument("--K", type=int, default=2)
    sp.add_argument("--D", type=int)
    sp.add_argument("--rates", nargs=2, type=float, default=[0.0, 0.0])
    sp.add_argument("--trials", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--code-seed", type=int, default=0)
    sp.add_argument("--pair-output", action="store_true", help="noiseless pair-output channel")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="exhaustive and randomized verification suites")
    sp.add_argument("--balanced", action="store_true")
    sp.add_argument("--n-max", type=int, default=16)
    sp.add_argument("--identities", action="store_true")
    sp.add_argument("--solver", action="store_true")
    sp.add_argument("--instances", type=int, default=100)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_verify)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConvergenceError, SolverError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except AmacError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
