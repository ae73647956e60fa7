"""Broken-promise experiment.

Under the rule-based regime, citizen c1 is moved to the plain, flooded and
then compensated in one round. The compensation violates the government's
no-compensation expectation. The script prints the per-round location
choices with revision switched on and off.

    python3 scripts/violation_revision.py --round 3
"""

import argparse

from ecexpect.checks import violation_run
from ecexpect.scenario import default_config


def choices_by_round(trace):
    out = {}
    for rec in trace:
        for agent, choice in rec["decisions"].items():
            out.setdefault(rec["round"], {})[agent] = choice
        for agent in rec["forced"]:
            out.setdefault(rec["round"], {})[agent] = "(forced)"
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--round", type=int, default=3, help="round of the broken promise")
    ap.add_argument("--rounds", type=int, default=8)
    args = ap.parse_args()

    cfg = default_config().with_overrides(rounds=args.rounds)
    for revision in (False, True):
        trace, summary = violation_run(revision, cfg, args.round)
        print(f"revision {'on' if revision else 'off'}: violations={summary['violations']} revisions={summary['revisions']}")
        for rnd, picks in sorted(choices_by_round(trace).items()):
            print(f"  round {rnd:>2}: " + ", ".join(f"{a}={c}" for a, c in sorted(picks.items())))
        for rec in trace:
            for cond, exp in rec["violations"]:
                print(f"  tick {rec['tick']:>3} violation: {cond} / {exp}")


if __name__ == "__main__":
    main()
