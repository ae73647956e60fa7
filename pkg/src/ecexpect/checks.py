"""Reproduction checks for the shipped scenario.

Each check returns a :class:`CheckResult`. ``run_all`` is what ``ecexpect
check`` executes; the property-based checks (progression, inertia, flood cap)
live in the test suite because they take longer.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .game import NormalFormGame, pure_nash, team_optimal
from .scenario import (
    ScenarioConfig,
    build,
    default_config,
    round_tick,
    run,
)

__all__ = [
    "CheckResult",
    "check_nash",
    "check_regimes",
    "check_social_utility",
    "check_violation_revision",
    "check_norm_variants",
    "check_team_reasoning",
    "pd_game",
    "run_all",
    "CHECKS",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0
    facts: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.name} ({self.seconds:.2f}s) {self.detail}".rstrip()


def _timed(name: str, limit: Optional[float] = None):
    def wrap(fn: Callable[..., CheckResult]):
        def inner(*args, **kwargs) -> CheckResult:
            t0 = time.perf_counter()
            res = fn(*args, **kwargs)
            res.seconds = time.perf_counter() - t0
            res.name = name
            if limit is not None and res.seconds >= limit:
                res.passed = False
                res.detail += f" exceeded {limit}s"
            return res

        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        return inner

    return wrap


@_timed("nash", limit=1.0)
def check_nash(config: Optional[ScenarioConfig] = None) -> CheckResult:
    """Game A has the single equilibrium (plain, plain), game B (plateau, plateau)."""
    cfg = config or default_config()
    a, b = cfg.games["A"], cfg.games["B"]
    ea, eb = pure_nash(a), pure_nash(b)
    ok = (
        ea == [("plain", "plain")]
        and a.payoff(ea[0]) == (333, 333)
        and eb == [("plateau", "plateau")]
        and b.payoff(eb[0]) == (365, 365)
    )
    pa = [a.payoff(p) for p in ea]
    pb = [b.payoff(p) for p in eb]
    return CheckResult("", ok, f"A: {ea} {pa}; B: {eb} {pb}")


@_timed("social_utility")
def check_social_utility(config: Optional[ScenarioConfig] = None) -> CheckResult:
    cfg = config or default_config()
    sa = cfg.games["A"].social(("plain", "plain"))
    sb = cfg.games["B"].social(("plateau", "plateau"))
    return CheckResult("", sa == 666 and sb == 730, f"A(plain,plain)={sa}, B(plateau,plateau)={sb}")


@_timed("regimes", limit=5.0)
def check_regimes(config: Optional[ScenarioConfig] = None, seeds: int = 50) -> CheckResult:
    """Plateau always under the rule-based regime, plain always under discretion."""
    cfg = (config or default_config()).with_overrides(citizens=2, rounds=10)
    problems = []
    for seed in range(seeds):
        _, rb = run(build(cfg.with_overrides(seed=seed, regime="rule_based")))
        if rb["plateau_choice_rate"] != 1.0 or rb["taxed"] or rb["compensations"] or rb["violations"]:
            problems.append(f"rule_based seed {seed}: {rb}")
        _, dc = run(build(cfg.with_overrides(seed=seed, regime="discretionary")))
        if dc["plain_choice_rate"] != 1.0:
            problems.append(f"discretionary seed {seed}: {dc}")
    detail = f"{seeds} seeds x 2 regimes" if not problems else problems[0]
    return CheckResult("", not problems, detail)


def violation_run(revision: bool, config: Optional[ScenarioConfig] = None, round_no: int = 3):
    """Rule-based run in which c1 moves to the plain, is flooded and then
    compensated in ``round_no``, breaking the government's promise."""
    cfg = (config or default_config()).with_overrides(regime="rule_based", revision=revision)
    sim = build(cfg)
    sim.inject(
        round_tick(round_no, "choose_location"),
        "change_role(c1, citizens, citizens_plateaudwellerrole, citizens_plaindwellerrole)",
    )
    sim.inject(round_tick(round_no, "flood"), "flood")
    sim.inject(round_tick(round_no, "tax_compensate"), "compensate(c1, 100)")
    trace, summary = run(sim)
    return trace, summary


def _no_compensation(pair) -> bool:
    return pair[1].startswith("not(happ(compensate(")


def _choices_from(trace, first_round: int) -> set:
    return {v for rec in trace if rec["round"] >= first_round for v in rec["decisions"].values()}


@_timed("violation_revision")
def check_violation_revision(config: Optional[ScenarioConfig] = None) -> CheckResult:
    round_no = 3
    tick = round_tick(round_no, "tax_compensate")
    notes = []
    ok = True

    trace_on, _ = violation_run(True, config, round_no)
    rec = _at(trace_on, tick)
    active = [e for e in rec["activations"] if e.startswith("not(happ(compensate(")]
    viols = [v for v in rec["violations"] if _no_compensation(v)]
    if len(viols) != 1 or len(active) != 1:
        ok = False
    notes.append(f"{len(viols)} violation(s) for {len(active)} active expectation(s) at tick {tick}")
    later_on = _choices_from(trace_on, round_no + 1)
    if later_on != {"plain"}:
        ok = False
    notes.append(f"revision on: choices from round {round_no + 1} = {sorted(later_on)}")

    trace_off, _ = violation_run(False, config, round_no)
    baseline, _ = run(build((config or default_config()).with_overrides(regime="rule_based")))
    # forced agents make no decision of their own at the injected tick
    off = [rec["decisions"] for rec in trace_off]
    ref = [{a: c for a, c in b["decisions"].items() if a not in o["forced"]} for b, o in zip(baseline, trace_off)]
    if off != ref:
        ok = False
    notes.append(f"revision off: choices unchanged = {off == ref}")
    return CheckResult("", ok, "; ".join(notes))


def _at(trace, tick) -> dict:
    return next(rec for rec in trace if rec["tick"] == tick)


@_timed("norm_variants")
def check_norm_variants(config: Optional[ScenarioConfig] = None) -> CheckResult:
    """c1 is moved onto the plain in round 1 and must be flagged there."""
    base = (config or default_config()).with_overrides(regime="rule_based", rounds=2)
    move_tick = round_tick(1, "choose_location")
    on_plain = move_tick + 1
    move = "change_role(c1, citizens, citizens_plateaudwellerrole, citizens_plaindwellerrole)"
    notes, ok = [], True

    sim = build(base.with_overrides(variant="norm"))
    sim.inject(move_tick, move)
    trace, _ = run(sim)
    norm_viols = [
        (rec["tick"], v) for rec in trace for v in rec["violations"] if v[1] == "always(not(location(c1, plain)))"
    ]
    first = norm_viols[0][0] if norm_viols else None
    if first != on_plain:
        ok = False
    notes.append(f"norm: first violation at tick {first} (c1 on plain from tick {on_plain})")

    punish_exp = "happ(punish(c1))"
    for punisher, want in ((False, "violated"), (True, "fulfilled")):
        cfg = base.with_overrides(variant="second_order_norm")
        cfg = dataclasses.replace(cfg, punisher=punisher)
        sim = build(cfg)
        sim.inject(move_tick, move)
        trace, _ = run(sim)
        react = on_plain + 1
        rec = _at(trace, react)
        activated = punish_exp in rec["activations"]
        key = "violations" if want == "violated" else "fulfilments"
        hit = any(e == punish_exp for _, e in rec[key])
        punished = "punish(c1)" in rec["events"]
        good = activated and hit and punished == punisher
        ok &= good
        notes.append(f"second_order punisher={punisher}: activated={activated} {want}={hit} at tick {react}")
    return CheckResult("", ok, "; ".join(notes))


def pd_game(players=("citizen_1", "citizen_2")) -> NormalFormGame:
    """Prisoner's dilemma with R=2, T=3, S=0, P=1 over strategies c and d."""
    return NormalFormGame.symmetric_2x2(
        "c", "d", {("c", "c"): 2, ("c", "d"): 0, ("d", "c"): 3, ("d", "d"): 1}, players, "pd"
    )


@_timed("team_reasoning")
def check_team_reasoning(config: Optional[ScenarioConfig] = None) -> CheckResult:
    pd = pd_game()
    best = team_optimal(pd)
    nash = pure_nash(pd)
    base = config or default_config()
    games = {**base.games, "A": pd}
    cfg = dataclasses.replace(base, games=games, regime="discretionary", rounds=3)
    trace, _ = run(build(cfg.with_overrides(variant="team_reasoning")))
    choices = {v for rec in trace for v in rec["decisions"].values()}
    ok = best == ("c", "c") and pd.social(best) == 4 and nash == [("d", "d")] and choices == {"c"}
    return CheckResult("", ok, f"team_optimal={best} sum={pd.social(best)} nash={nash} agents chose {sorted(choices)}")


CHECKS = (
    check_nash,
    check_regimes,
    check_social_utility,
    check_violation_revision,
    check_norm_variants,
    check_team_reasoning,
)


def run_all(config: Optional[ScenarioConfig] = None) -> list[CheckResult]:
    return [c(config) for c in CHECKS]
