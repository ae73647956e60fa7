"""Command-line entry point.

Subcommands::

    ecexpect run        one simulation; JSON-lines trace and a JSON summary
    ecexpect sweep      one run per seed plus an aggregate summary
    ecexpect solve-game pure Nash and team-optimal profiles of game A or B
    ecexpect check      the built-in reproduction checks

Exit status is 0 on success, 1 on a usage, config or I/O error and 2 when a
check fails.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .game import pure_nash, team_optimal
from .scenario import REGIMES, VARIANTS, ConfigError, ScenarioConfig, build, default_config, load_config, run
from .terms import ParseError, parse_term

log = logging.getLogger("ecexpect")

EXIT_OK, EXIT_USAGE, EXIT_CHECK = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="config file (default: the shipped default.cfg)")
    p.add_argument("--regime", choices=REGIMES)
    p.add_argument("--rounds", type=int)
    p.add_argument("--citizens", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--variant", choices=VARIANTS)
    p.add_argument("--revision", choices=("on", "off"))


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ecexpect", description="Expectation-driven flood scenario simulator.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at debug level")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("run", help="run one simulation")
    _add_common(p)
    p.add_argument("--trace", type=Path, help="write the trace as JSON lines")
    p.add_argument("--summary", type=Path, help="write the summary JSON (default: stdout)")
    p.add_argument("--inject", action="append", default=[], metavar="TICK:EVENT", help="add an event at a tick")

    p = sub.add_parser("sweep", help="run a range of seeds")
    _add_common(p)
    p.add_argument("--seeds", type=int, default=10, help="number of seeds, starting at --seed (default 0)")
    p.add_argument("--out", type=Path, help="directory for per-seed summaries and aggregate.json")

    p = sub.add_parser("solve-game", help="equilibria of a configured game")
    p.add_argument("--config", type=Path)
    p.add_argument("--game", choices=("A", "B"), default="A")

    p = sub.add_parser("check", help="run the reproduction checks")
    p.add_argument("--config", type=Path)
    return parser


def _config(args) -> ScenarioConfig:
    cfg = load_config(args.config) if args.config is not None else default_config()
    overrides = {k: getattr(args, k, None) for k in ScenarioConfig.OVERRIDABLE}
    if overrides.get("revision") is not None:
        overrides["revision"] = overrides["revision"] == "on"
    return cfg.with_overrides(**overrides)


def parse_injection(text: str) -> tuple[int, object]:
    tick, sep, event = text.partition(":")
    if not sep:
        raise UsageError(f"--inject expects TICK:EVENT, got {text!r}")
    try:
        t = int(tick)
    except ValueError:
        raise UsageError(f"--inject: bad tick {tick!r}") from None
    if t < 0:
        raise UsageError("--inject: tick must not be negative")
    try:
        return t, parse_term(event)
    except ParseError as e:
        raise UsageError(f"--inject: {e}") from None


def _write(path: Optional[Path], text: str):
    if path is None:
        sys.stdout.write(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def cmd_run(args) -> int:
    cfg = _config(args)
    injections = [parse_injection(x) for x in args.inject]
    sim = build(cfg)
    for t, event in injections:
        if t == 0:
            raise UsageError("--inject: tick 0 is the setup tick and has already run")
        sim.inject(t, event)
    trace, summary = run(sim)
    if args.trace is not None:
        _write(args.trace, "".join(json.dumps(rec) + "\n" for rec in trace))
    _write(args.summary, json.dumps(summary, indent=2) + "\n")
    return EXIT_OK


def aggregate(summaries: list[dict]) -> dict:
    n = len(summaries)
    counts = ("floods", "compensations", "taxed", "repairs", "punishments", "activations", "fulfilments", "violations", "revisions")
    out = {"runs": n, "seeds": [s["seed"] for s in summaries]}
    for key in counts:
        out[key] = sum(s[key] for s in summaries)
    choices: dict = {}
    for s in summaries:
        for k, v in s["choices"].items():
            choices[k] = choices.get(k, 0) + v
    made = sum(choices.values())
    out["choices"] = dict(sorted(choices.items()))
    out["plain_choice_rate"] = choices.get("plain", 0) / made if made else 0.0
    out["plateau_choice_rate"] = choices.get("plateau", 0) / made if made else 0.0
    return out


def cmd_sweep(args) -> int:
    if args.seeds < 1:
        raise UsageError("--seeds must be positive")
    cfg = _config(args)
    first = cfg.seed
    summaries = []
    for seed in range(first, first + args.seeds):
        _, summary = run(build(cfg.with_overrides(seed=seed)))
        summaries.append(summary)
        if args.out is not None:
            _write(args.out / f"summary_seed{seed}.json", json.dumps(summary, indent=2) + "\n")
    agg = aggregate(summaries)
    _write(args.out / "aggregate.json" if args.out is not None else None, json.dumps(agg, indent=2) + "\n")
    return EXIT_OK


def _fmt(profile) -> str:
    return "(" + ", ".join(profile) + ")"


def cmd_solve_game(args) -> int:
    cfg = load_config(args.config) if args.config is not None else default_config()
    g = cfg.games[args.game]
    print(f"game {args.game} ({g.name}): players {', '.join(g.players)}")
    eq = pure_nash(g)
    if not eq:
        print("nash: none in pure strategies")
    for p in eq:
        pay = g.payoff(p)
        print(f"nash: {_fmt(p)} payoffs {_fmt(map(str, pay))} sum {sum(pay)}")
    best = team_optimal(g)
    pay = g.payoff(best)
    print(f"team_optimal: {_fmt(best)} payoffs {_fmt(map(str, pay))} sum {sum(pay)}")
    return EXIT_OK


def cmd_check(args) -> int:
    from .checks import run_all

    cfg = load_config(args.config) if args.config is not None else default_config()
    results = run_all(cfg)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_CHECK if failed else EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "solve-game": cmd_solve_game, "check": cmd_check}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
