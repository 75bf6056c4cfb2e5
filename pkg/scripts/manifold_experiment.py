"""Synthetic manifold experiment: LIME-LLM vs standard LIME under an OOD-sensitive classifier.

    python scripts/manifold_experiment.py --n 100 --seed 0 [--json out.json]
"""

import argparse
import json

from limelle.synthetic import manifold_comparison

def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--seeds", type=int, default=1, help="repeat over this many consecutive seeds")
    ap.add_argument("--lime-samples", type=int, default=1000)
    ap.add_argument("--no-ood", action="store_true")
    ap.add_argument("--filler-noise", type=float, default=0.0)
    ap.add_argument("--json")
    args = ap.parse_args()
    rows = [manifold_comparison(args.n, s, not args.no_ood, args.lime_samples, args.filler_noise)
            for s in range(args.seed, args.seed + args.seeds)]
    for r in rows:
        print(json.dumps(r))
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(rows, fh, indent=2)


if __name__ == "__main__":
    main()
