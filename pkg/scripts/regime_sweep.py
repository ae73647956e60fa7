"""Seed sweep over both government regimes.

Prints one row per regime with choice rates and event totals, and optionally
writes the per-seed summaries as JSON lines.

    python3 scripts/regime_sweep.py --seeds 50 --rounds 10 --out sweep.jsonl
"""

import argparse
import json
from collections import Counter

from ecexpect.scenario import REGIMES, build, default_config, load_config, run

FIELDS = ("floods", "compensations", "taxed", "repairs", "activations", "fulfilments", "violations")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config")
    ap.add_argument("--seeds", type=int, default=50)
    ap.add_argument("--rounds", type=int, default=10)
    ap.add_argument("--citizens", type=int, default=2)
    ap.add_argument("--out", help="JSON-lines file for per-seed summaries")
    args = ap.parse_args()

    base = load_config(args.config) if args.config else default_config()
    base = base.with_overrides(rounds=args.rounds, citizens=args.citizens)
    rows = []
    print(f"{'regime':<14}{'plain':>8}{'plateau':>9}" + "".join(f"{f:>14}" for f in FIELDS))
    for regime in REGIMES:
        totals, choices = Counter(), Counter()
        for seed in range(args.seeds):
            _, s = run(build(base.with_overrides(regime=regime, seed=seed)))
            rows.append(s)
            choices.update(s["choices"])
            totals.update({f: s[f] for f in FIELDS})
        made = sum(choices.values()) or 1
        print(
            f"{regime:<14}{choices['plain'] / made:>8.2f}{choices['plateau'] / made:>9.2f}"
            + "".join(f"{totals[f]:>14}" for f in FIELDS)
        )
    if args.out:
        with open(args.out, "w") as fh:
            for s in rows:
                fh.write(json.dumps(s) + "\n")


if __name__ == "__main__":
    main()
