"""Monte-Carlo error rates of short random AMAC codes at two block lengths."""
import argparse

from amac.channels import capacity, xor_mac, xor_preimage_input, z_channel
from amac.codes import build_code, type_counts
from amac.simulation import run_trials


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, default=0.101)
    ap.add_argument("--rate", type=float, default=1 / 6)
    ap.add_argument("--K", type=int, default=2)
    ap.add_argument("--n", type=int, nargs="+", default=[6, 12])
    ap.add_argument("--trials", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    _, q = capacity(z_channel(args.sigma))
    p = xor_preimage_input(q).probs
    w = xor_mac(z_channel(args.sigma)).matrix
    for n in args.n:
        code = build_code(n, args.K, args.rate, args.rate, type_counts(p, n), type_counts(p, n),
                          args.seed)
        tally = run_trials(code, w, n // 2, args.trials, args.seed)
        lo, hi = tally.wilson()
        top = tally.patterns.most_common(3)
        print(f"n={n:3d} M=({code.m1},{code.m2}) error rate {tally.error_rate:.5f} "
              f"[{lo:.5f}, {hi:.5f}] top patterns {top}")


if __name__ == "__main__":
    main()
