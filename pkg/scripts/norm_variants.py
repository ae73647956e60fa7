"""Social mechanisms side by side.

Runs the discretionary regime (where citizens settle on the plain) under each
variant and reports choices, violations and punishments.

    python3 scripts/norm_variants.py --rounds 5
"""

import argparse
import dataclasses

from ecexpect.scenario import VARIANTS, build, default_config, run


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rounds", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    base = default_config().with_overrides(regime="discretionary", rounds=args.rounds, seed=args.seed)
    print(f"{'variant':<20}{'punisher':>9}{'plain':>7}{'plateau':>9}{'violations':>12}{'fulfilments':>13}{'punishments':>13}")
    for variant in VARIANTS:
        for punisher in ((False, True) if variant == "second_order_norm" else (False,)):
            cfg = dataclasses.replace(base, variant=variant, punisher=punisher)
            _, s = run(build(cfg))
            print(
                f"{variant:<20}{str(punisher):>9}{s['plain_choice_rate']:>7.2f}{s['plateau_choice_rate']:>9.2f}"
                f"{s['violations']:>12}{s['fulfilments']:>13}{s['punishments']:>13}"
            )


if __name__ == "__main__":
    main()
