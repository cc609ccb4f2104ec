"""Randomized coherence-law sweep with adjustable size.

Draws random closed spaces, lattice maps and relations, and verifies
adjunction, Frobenius, functoriality and lax Beck-Chevalley on each
instance; strict Beck-Chevalley equality is asserted whenever the
pointwise-cartesian witness search succeeds.

Run:  python scripts/law_sweep.py [--instances 510] [--seed 7]
"""

import argparse
import time

from hubspoke.acceptance import criterion_3


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=510)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()

    t0 = time.perf_counter()
    ok, detail = criterion_3(instances=args.instances, seed=args.seed)
    dt = time.perf_counter() - t0
    print(f"{'PASS' if ok else 'FAIL'} [{dt:.1f}s] {detail}")


if __name__ == "__main__":
    main()
