"""Side-by-side compliance verdicts: safety radius vs HDR vs Wasserstein.

Renders the comparison table for the three reference scenarios and, with
--seeds, sweeps seeds to show the verdict pattern is stable.

Run:  python scripts/three_way_table.py [--seeds 10] [--n 4000]
"""

import argparse

from hubspoke.stochastic import comparison_table


def render(rows):
    header = f"{'scenario':<12} {'safety radius':<22} {'HDR':<20} {'wasserstein':<22}"
    print(header)
    print("-" * len(header))
    for r in rows:
        print(f"{r.scenario:<12} "
              f"{r.radius_verdict + f' (r={r.radius:.3f})':<22} "
              f"{r.hdr_verdict + f' (mass={r.hdr_mass:.3f})':<20} "
              f"{r.cure_verdict + f' (W1={r.cure_mean:.4f})':<22}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=1)
    ap.add_argument("--n", type=int, default=4000)
    args = ap.parse_args()

    for seed in range(42, 42 + args.seeds):
        if args.seeds > 1:
            print(f"\nseed {seed}")
        render(comparison_table(seed=seed, n_samples=args.n))


if __name__ == "__main__":
    main()
