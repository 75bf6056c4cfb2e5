"""Write a planted-keyword instance file and a matching mock-backend run config.

    python scripts/make_synthetic.py --n 20 --out-dir runs/synthetic [--ood]
"""

import argparse
import json
from pathlib import Path

from limelle.synthetic import make_suite


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out-dir", default="runs/synthetic")
    ap.add_argument("--ood", action="store_true", help="mock classifier returns uniform output off the original lengths")
    args = ap.parse_args()

    suite = make_suite(n=args.n, seed=args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "synthetic.jsonl", "w") as fh:
        for rec in suite.records:
            fh.write(json.dumps(rec.to_dict()) + "\n")
    config = suite.run_config(ood=args.ood)
    (out / "run.json").write_text(json.dumps(config, indent=2) + "\n")
    print(f"wrote {out / 'synthetic.jsonl'} and {out / 'run.json'}")


if __name__ == "__main__":
    main()
