"""The plain-plateau flood scenario.

Citizens live on a flood-prone plain or a safe plateau. A government either
binds itself not to compensate flood damage (``rule_based``) or keeps the
discretion to tax plateau dwellers and compensate plain dwellers
(``discretionary``). Citizens pick a location by consulting the expectations
held in the Event Calculus state.

Each round runs six labelled ticks::

    receive_income -> choose_location -> flood -> tax_compensate -> repair -> consume

preceded once by an ``init`` tick in which everybody joins their institution.
"""

from __future__ import annotations

import configparser
import dataclasses
import logging
import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .engine import Engine, load_default_rules
from .formula import Fluent, Happ, StepObservation
from .game import GameError, NormalFormGame, pure_nash, team_optimal
from .monitor import Monitor, outcome_events, rules_in
from .terms import Atom, Compound, Num, Term, Var, match, parse_term

log = logging.getLogger(__name__)

__all__ = [
    "LABELS",
    "INIT_LABEL",
    "REGIMES",
    "VARIANTS",
    "ConfigError",
    "ScenarioConfig",
    "AgentRecord",
    "Simulation",
    "load_config",
    "default_config",
    "build",
    "run",
    "apply_variant",
    "choose_location",
    "government_act",
    "revise_on_violation",
    "round_tick",
    "summarise",
    "NO_COMPENSATION_RULE",
    "NORM_RULE",
    "TEAM_RULE",
]

LABELS = ("receive_income", "choose_location", "flood", "tax_compensate", "repair", "consume")
INIT_LABEL = "init"
REGIMES = ("rule_based", "discretionary")
VARIANTS = ("baseline", "norm", "second_order_norm", "team_reasoning")
LOCATIONS = ("plain", "plateau")

GOVERNMENT = "government_agent"
ROLE_OF_REGIME = {
    "rule_based": "rulesbasedregimerole",
    "discretionary": "discretionarybasedregimerole",
}
ROLE_OF_LOCATION = {
    "plain": "citizens_plaindwellerrole",
    "plateau": "citizens_plateaudwellerrole",
}
TEAM = "citizens_team"

NO_COMPENSATION_RULE = "exp_rule(damage(A, _), not(happ(compensate(A, _))))"
NORM_RULE = "exp_rule(member(A, citizens), never(location(A, plain)))"
SECOND_ORDER_RULE = "exp_rule(viol(member(A, citizens), never(location(A, plain))), {exp})"
TEAM_RULE = (
    "exp_rule(and([member(Ag, Team, Role), game(Team, G), team_optimal(Role, G, Act), @choose_location]),"
    " happ(Ag, Act))"
)

_NO_COMPENSATION_EXP = parse_term("not(happ(compensate(_, _)))")
_NORM_VIOLATION = parse_term("v(member(A, citizens), always(not(location(A, plain))))")


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def round_tick(round_no: int, label: str) -> int:
    """Absolute tick of ``label`` in round ``round_no`` (1-based)."""
    return 1 + (round_no - 1) * len(LABELS) + LABELS.index(label)


def tick_round(tick: int) -> int:
    return 0 if tick == 0 else (tick - 1) // len(LABELS) + 1


# --------------------------------------------------------------------------
# Configuration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioConfig:
    citizens: int = 2
    rounds: int = 10
    regime: str = "rule_based"
    flood_probability: Fraction = Fraction(1, 4)
    income: int = 400
    house_value: int = 300
    flood_damage: int = 100
    seed: int = 0
    variant: str = "baseline"
    revision: bool = False
    punisher: bool = False
    punish_expectation: str = "bare"
    initial_location: str = "plateau"
    games: dict = field(default_factory=dict)

    OVERRIDABLE = ("regime", "rounds", "citizens", "seed", "variant", "revision")

    def __post_init__(self):
        if not self.games:
            object.__setattr__(self, "games", default_games())
        self.validate()

    def validate(self):
        for name in ("citizens", "rounds", "income", "house_value", "flood_damage", "seed"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise ConfigError(name, f"expected an integer, got {value!r}")
        if self.citizens < 1:
            raise ConfigError("citizens", "must be positive")
        if self.rounds < 0:
            raise ConfigError("rounds", "must not be negative")
        for name in ("income", "house_value", "flood_damage"):
            if getattr(self, name) < 0:
                raise ConfigError(name, "must not be negative")
        if self.regime not in REGIMES:
            raise ConfigError("regime", f"must be one of {', '.join(REGIMES)}")
        if self.variant not in VARIANTS:
            raise ConfigError("variant", f"must be one of {', '.join(VARIANTS)}")
        if not isinstance(self.flood_probability, Fraction) or not 0 <= self.flood_probability <= 1:
            raise ConfigError("flood_probability", "must be a fraction in [0, 1]")
        if self.punish_expectation not in ("bare", "eventually"):
            raise ConfigError("punish_expectation", "must be 'bare' or 'eventually'")
        if self.initial_location not in LOCATIONS:
            raise ConfigError("initial_location", "must be plain or plateau")
        for gid in ("A", "B"):
            if gid not in self.games:
                raise ConfigError(f"game.{gid}", "missing")
        # a citizen keeps its game role when it switches between the games
        if self.games["A"].players != self.games["B"].players:
            raise ConfigError("game.B", "must name the same players as game.A")

    def with_overrides(self, **overrides) -> "ScenarioConfig":
        unknown = set(overrides) - set(self.OVERRIDABLE)
        if unknown:
            raise ConfigError(sorted(unknown)[0], "cannot be overridden")
        return dataclasses.replace(self, **{k: v for k, v in overrides.items() if v is not None})

    def describe(self) -> dict:
        return {
            "citizens": self.citizens,
            "rounds": self.rounds,
            "regime": self.regime,
            "flood_probability": str(self.flood_probability),
            "income": self.income,
            "house_value": self.house_value,
            "flood_damage": self.flood_damage,
            "seed": self.seed,
            "variant": self.variant,
            "revision": self.revision,
        }


def default_games() -> dict:
    # Off-diagonal cells are constructed: the published figures only give the
    # equilibrium cells. A keeps the dilemma ordering 400 > 365 > 333 > 300,
    # B makes the plateau strictly dominant.
    players = ("citizen_1", "citizen_2")
    game_a = NormalFormGame.symmetric_2x2(
        "plain",
        "plateau",
        {("plain", "plain"): 333, ("plain", "plateau"): 400, ("plateau", "plain"): 300, ("plateau", "plateau"): 365},
        players,
        "game_a",
    )
    game_b = NormalFormGame.symmetric_2x2(
        "plain",
        "plateau",
        {("plain", "plain"): 300, ("plain", "plateau"): 300, ("plateau", "plain"): 365, ("plateau", "plateau"): 365},
        players,
        "game_b",
    )
    return {"A": game_a, "B": game_b}


def _split(value: str) -> list[str]:
    return [x.strip() for x in value.replace(";", ",").split(",") if x.strip()]


def _parse_bool(name: str, value: str) -> bool:
    v = value.strip().lower()
    if v in ("on", "true", "yes", "1"):
        return True
    if v in ("off", "false", "no", "0"):
        return False
    raise ConfigError(name, f"expected on/off, got {value!r}")


def _parse_int(name: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(name, f"expected an integer, got {value!r}") from None


def _parse_game(section: configparser.SectionProxy, gid: str) -> NormalFormGame:
    where = f"game.{gid}"
    try:
        players = _split(section["players"])
    except KeyError:
        raise ConfigError(where, "missing 'players'") from None
    strategies = []
    for p in players:
        key = f"strategies.{p}" if f"strategies.{p}" in section else "strategies"
        if key not in section:
            raise ConfigError(where, f"no strategies for {p}")
        strategies.append(_split(section[key]))
    payoffs = {}
    for key, value in section.items():
        if key in ("players", "name") or key.startswith("strategies"):
            continue
        profile = tuple(_split(key))
        try:
            payoffs[profile] = tuple(int(x) for x in _split(value))
        except ValueError:
            raise ConfigError(where, f"bad payoff row {key} = {value}") from None
    try:
        return NormalFormGame(players, strategies, payoffs, section.get("name", f"game_{gid.lower()}"))
    except GameError as e:
        raise ConfigError(where, str(e)) from None


def load_config(source: Union[str, Path, None] = None, text: Optional[str] = None) -> ScenarioConfig:
    """Read a config file (or ``text``). Missing keys fall back to defaults."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    if text is not None:
        cp.read_string(text)
    else:
        path = Path(source)
        try:
            with open(path) as fh:
                cp.read_file(fh)
        except OSError as e:
            raise ConfigError("config", f"cannot read {path}: {e}") from None

    known = {f.name for f in dataclasses.fields(ScenarioConfig)} - {"games"}
    kwargs: dict = {}
    for section_name in ("scenario", "variant"):
        if not cp.has_section(section_name):
            continue
        for key, value in cp[section_name].items():
            name = {"name": "variant"}.get(key, key) if section_name == "variant" else key
            if name not in known:
                raise ConfigError(f"{section_name}.{key}", "unknown key")
            if name in ("regime", "variant", "punish_expectation", "initial_location"):
                kwargs[name] = value.strip()
            elif name in ("revision", "punisher"):
                kwargs[name] = _parse_bool(name, value)
            elif name == "flood_probability":
                try:
                    kwargs[name] = Fraction(value.strip())
                except (ValueError, ZeroDivisionError):
                    raise ConfigError(name, f"not a number: {value!r}") from None
            else:
                kwargs[name] = _parse_int(name, value)
    games = default_games()
    for gid in ("A", "B"):
        if cp.has_section(f"game.{gid}"):
            games[gid] = _parse_game(cp[f"game.{gid}"], gid)
    for s in cp.sections():
        if s not in ("scenario", "variant", "game.A", "game.B"):
            raise ConfigError(s, "unknown section")
    return ScenarioConfig(games=games, **kwargs)


def default_config_path():
    return resources.files("ecexpect.data").joinpath("default.cfg")


def default_config() -> ScenarioConfig:
    return load_config(text=default_config_path().read_text())


# --------------------------------------------------------------------------
# Agents and simulation state
# --------------------------------------------------------------------------


@dataclass
class AgentRecord:
    id: str
    institution: str
    role: str
    selected_game: str = "A"
    game_role: str = ""


def _rule_term(cond: str, exp: str) -> Term:
    return parse_term(f"exp_rule({cond}, {exp})")


class Simulation:
    def __init__(self, config: ScenarioConfig, rules=None):
        self.config = config
        self.engine = Engine(
            rules if rules is not None else load_default_rules(),
            constants={
                "initial_house_on_plain_value": config.house_value,
                "flood_causes_damage": config.flood_damage,
            },
            labels=frozenset(LABELS) | {INIT_LABEL},
            initial_label=INIT_LABEL,
        )
        self.monitor = Monitor()
        self.rng = random.Random(config.seed)
        self.citizens = [f"c{i}" for i in range(1, config.citizens + 1)]
        players = config.games["A"].players
        self.agents = {
            c: AgentRecord(c, "citizens", ROLE_OF_LOCATION[config.initial_location], game_role=players[i % len(players)])
            for i, c in enumerate(self.citizens)
        }
        self.government = AgentRecord(GOVERNMENT, "government", ROLE_OF_REGIME[config.regime], selected_game="")
        self.variant = "baseline"
        self.pending: list[Term] = []
        self.injections: dict[int, list[Term]] = {}
        self.trace: list[dict] = []
        self.location_rules: list[Term] = []
        self.revisions: list[tuple] = []
        self.team_members: set[str] = set()

    # -- helpers ------------------------------------------------------------

    def inject(self, tick: int, event: Union[str, Term]):
        """Add an exogenous event at ``tick``. An injected ``change_role`` or
        ``does`` event for a citizen replaces that citizen's own decision."""
        term = parse_term(event) if isinstance(event, str) else event
        self.injections.setdefault(tick, []).append(term)

    def game(self, agent: AgentRecord) -> NormalFormGame:
        return self.config.games[agent.selected_game]

    def nash_strategy(self, agent: AgentRecord) -> str:
        g = self.game(agent)
        idx = g.players.index(agent.game_role)
        eq = pure_nash(g)
        return eq[0][idx] if eq else g.strategies[idx][0]

    def location_rule_terms(self, game: NormalFormGame) -> list[Term]:
        """Rules expecting every citizen at its equilibrium location."""
        eq = pure_nash(game)
        if not eq or not all(s in LOCATIONS for s in eq[0]):
            return []
        profile = eq[0]
        if len(set(profile)) == 1:
            return [_rule_term("and([member(A, citizens), @choose_location])", f"next(location(A, {profile[0]}))")]
        return [
            _rule_term(
                f"and([member(A, citizens), game_role(A, {player}), @choose_location])",
                f"next(location(A, {loc}))",
            )
            for player, loc in zip(game.players, profile)
        ]

    def set_location_rules(self, game: NormalFormGame):
        new = self.location_rule_terms(game)
        if new == self.location_rules:
            return
        self.pending += [Compound("retract", (r,)) for r in self.location_rules]
        self.pending += [Compound("install", (r,)) for r in new]
        self.location_rules = new

    def location_of(self, citizen: str) -> Optional[str]:
        for s in self.engine.holds_at(Compound("location", (Atom(citizen), Var("L")))):
            return str(s["L"])
        return None

    # -- one tick -----------------------------------------------------------

    def _forced(self, injected: list[Term]) -> set[str]:
        out = set()
        for e in injected:
            if isinstance(e, Compound) and e.functor in ("change_role", "does") and str(e.args[0]) in self.agents:
                out.add(str(e.args[0]))
        return out

    def tick(self) -> dict:
        t = self.engine.time
        state = self.engine.current
        label = state.label
        injected = list(self.injections.get(t, ()))
        events: set[Term] = set(self.pending) | set(injected)
        self.pending = []
        forced = self._forced(injected)

        pre = StepObservation.of(state.fluents, events, label)
        rules = rules_in(state.fluents)
        self.monitor.activate(pre, rules, t)

        self._react(pre.violations, events)

        decisions: dict[str, str] = {}
        if label == "receive_income":
            events |= {Compound("receive_income", (Atom(c), Num(self.config.income))) for c in self.citizens}
        elif label == "choose_location":
            for c in self.citizens:
                if c in forced:
                    continue
                choice = self.decide(self.agents[c])
                decisions[c] = choice
                events |= self.action_events(c, choice)
        elif label == "flood":
            if self.rng.random() < self.config.flood_probability:
                events.add(Atom("flood"))
        elif label == "tax_compensate":
            events |= set(government_act(self.engine, self.config))
        elif label == "repair":
            events |= set(self.repairs())
        elif label == "consume":
            events |= {Compound("consumed", (Atom(c),)) for c in self.citizens}

        obs = StepObservation.of(state.fluents, events, label)
        out = self.monitor.progress(obs)
        self.pending += outcome_events(out)

        self.engine.step(events, self.next_label(label))
        after = self.engine.current.fluents
        record = {
            "tick": t,
            "round": tick_round(t),
            "label": label,
            "events": sorted(map(str, events)),
            "added": sorted(map(str, after - state.fluents)),
            "removed": sorted(map(str, state.fluents - after)),
            "activations": [str(a.exp) for a in out.activated],
            "fulfilments": [[str(c), str(e)] for c, e in out.fulfilments],
            "violations": [[str(c), str(e)] for c, e in out.violations],
            "decisions": decisions,
            "forced": sorted(forced),
        }
        self.trace.append(record)
        return record

    @staticmethod
    def next_label(label: str) -> str:
        if label == INIT_LABEL:
            return LABELS[0]
        return LABELS[(LABELS.index(label) + 1) % len(LABELS)]

    def _react(self, violations: frozenset, events: set):
        """Policies that respond to violations reported at this tick."""
        broken_promise = any(match(_NO_COMPENSATION_EXP, e) is not None for _, e in violations)
        if broken_promise and self.config.revision:
            for c in self.citizens:
                revise_on_violation(self, self.agents[c])
        if self.variant == "second_order_norm" and self.config.punisher:
            for pair in sorted(violations, key=str):
                s = match(_NORM_VIOLATION, Compound("v", pair))
                if s is not None:
                    events.add(Compound("punish", (s["A"],)))

    def decide(self, agent: AgentRecord) -> str:
        if agent.id in self.team_members:
            acts = [s["Act"] for s in self.monitor.expected_instances(Happ(Var("Act"), actor=Atom(agent.id)))]
            if acts:
                return str(sorted(acts, key=str)[0])
        return choose_location(agent, self.monitor, self.engine, self.nash_strategy(agent))

    def action_events(self, citizen: str, choice: str) -> set[Term]:
        out: set[Term] = set()
        if citizen in self.team_members:
            out.add(Compound("does", (Atom(citizen), Atom(choice))))
        current = self.location_of(citizen)
        if choice in LOCATIONS and choice != current:
            old = ROLE_OF_LOCATION.get(current, "none")
            out.add(
                Compound(
                    "change_role",
                    (Atom(citizen), Atom("citizens"), Atom(old), Atom(ROLE_OF_LOCATION[choice])),
                )
            )
            self.agents[citizen].role = ROLE_OF_LOCATION[choice]
        return out

    def repairs(self) -> list[Term]:
        out = []
        for s in self.engine.holds_at(parse_term("damage(A, D)")):
            who, damage = s["A"], s["D"].value
            wealth = [w["W"].value for w in self.engine.holds_at(Compound("wealth", (who, Var("W"))))]
            cost = min(damage, wealth[0]) if wealth else 0
            if cost > 0:
                out.append(Compound("repair", (who, Num(cost))))
        return out


# --------------------------------------------------------------------------
# Operations
# --------------------------------------------------------------------------


def build(config: ScenarioConfig, rules=None) -> Simulation:
    """Set up the engine, run the ``init`` tick and select each citizen's game."""
    sim = Simulation(config, rules)
    sim.engine.initially(Compound("wealth", (Atom(c), Num(0))) for c in sim.citizens)
    joins = [Compound("join", (Atom(GOVERNMENT), Atom("government"), Atom(sim.government.role)))]
    joins += [Compound("join", (Atom(c), Atom("citizens"), Atom(sim.agents[c].role))) for c in sim.citizens]
    sim.pending = joins
    sim.tick()

    promise = bool(sim.engine.holds_at(parse_term(NO_COMPENSATION_RULE)))
    for agent in sim.agents.values():
        agent.selected_game = "B" if promise else "A"
    sim.set_location_rules(config.games["B" if promise else "A"])
    if any(_has_game_role(r) for r in sim.location_rules):
        sim.pending += [
            Compound("install", (Compound("game_role", (Atom(a.id), Atom(a.game_role))),)) for a in sim.agents.values()
        ]
    apply_variant(sim, config.variant)
    return sim


def _has_game_role(rule: Term) -> bool:
    return "game_role(" in str(rule)


def apply_variant(sim: Simulation, variant: str) -> Simulation:
    """Install the expectation rules of a social mechanism. Takes effect from
    the next tick."""
    if variant not in VARIANTS:
        raise ConfigError("variant", f"unknown variant {variant!r}")
    installs: list[Term] = []
    if variant in ("norm", "second_order_norm"):
        installs.append(parse_term(NORM_RULE))
    if variant == "second_order_norm":
        exp = "happ(punish(A))"
        if sim.config.punish_expectation == "eventually":
            exp = f"eventually({exp})"
        installs.append(parse_term(SECOND_ORDER_RULE.format(exp=exp)))
    if variant == "team_reasoning":
        installs.append(parse_term(TEAM_RULE))
        ids = sorted({a.selected_game for a in sim.agents.values()})
        game = sim.config.games[ids[0]]
        profile = team_optimal(game)
        gname = Atom(game.name or f"game_{ids[0].lower()}")
        installs.append(Compound("game", (Atom(TEAM), gname)))
        for player, act in zip(game.players, profile):
            installs.append(Compound("team_optimal", (Atom(player), gname, Atom(act))))
        for agent in sim.agents.values():
            installs.append(Compound("member", (Atom(agent.id), Atom(TEAM), Atom(agent.game_role))))
            sim.team_members.add(agent.id)
    sim.pending += [Compound("install", (t,)) for t in installs]
    sim.variant = variant
    return sim


def choose_location(agent: AgentRecord, monitor: Monitor, engine: Engine, fallback: str) -> str:
    """The location most often expected of citizens; ``fallback`` (the agent's
    equilibrium strategy) on a tie or when nothing is expected."""
    if engine.current.label != "choose_location":
        raise RuntimeError(f"choose_location called at label {engine.current.label}")
    counts = Counter()
    for s in monitor.expected_instances(Fluent(Compound("location", (Var("A"), Var("L"))))):
        counts[str(s["L"])] += 1
    ranked = counts.most_common()
    if not ranked or (len(ranked) > 1 and ranked[0][1] == ranked[1][1]):
        return fallback
    return ranked[0][0]


def government_act(engine: Engine, config: ScenarioConfig) -> list[Term]:
    """Tax plateau dwellers to compensate recorded flood damage.

    Only a discretionary government acts. The total is split evenly; the
    remainder goes one unit each to the first payers in name order. With no
    plateau dweller nobody can be taxed, so nothing is paid.
    """
    if config.regime != "discretionary":
        return []
    damages = [(str(s["A"]), s["D"].value) for s in engine.holds_at(parse_term("damage(A, D)"))]
    payers = sorted(str(s["A"]) for s in engine.holds_at(parse_term("location(A, plateau)")))
    if not damages or not payers:
        return []
    events: list[Term] = [Compound("compensate", (Atom(a), Num(d))) for a, d in sorted(damages)]
    total = sum(d for _, d in damages)
    share, rest = divmod(total, len(payers))
    for i, payer in enumerate(payers):
        amount = share + (1 if i < rest else 0)
        if amount:
            events.append(Compound("taxed", (Atom(payer), Num(amount))))
    return events


def revise_on_violation(sim: Simulation, agent: AgentRecord) -> Simulation:
    """After a broken no-compensation promise, the agent concludes it is in
    the discretionary game after all."""
    if not sim.config.revision or agent.selected_game == "A":
        return sim
    agent.selected_game = "A"
    sim.revisions.append((sim.engine.time, agent.id))
    sim.set_location_rules(sim.config.games["A"])
    log.info("tick %d: %s revised to game A", sim.engine.time, agent.id)
    return sim


def run(sim: Simulation) -> tuple[list[dict], dict]:
    for _ in range(sim.config.rounds * len(LABELS)):
        sim.tick()
    trace = list(sim.trace) if sim.config.rounds else []
    return trace, summarise(sim.config, trace, sim)


def summarise(config: ScenarioConfig, trace: list[dict], sim: Optional[Simulation] = None) -> dict:
    choices: Counter = Counter()
    counts = Counter()
    for rec in trace:
        choices.update(rec["decisions"].values())
        for e in rec["events"]:
            head = e.split("(", 1)[0]
            counts[head] += 1
        counts["activations"] += len(rec["activations"])
        counts["fulfilments"] += len(rec["fulfilments"])
        counts["violations"] += len(rec["violations"])
    made = sum(choices.values())
    return {
        **config.describe(),
        "ticks": len(trace),
        "choices": dict(sorted(choices.items())),
        "plain_choice_rate": choices["plain"] / made if made else 0.0,
        "plateau_choice_rate": choices["plateau"] / made if made else 0.0,
        "floods": counts["flood"],
        "compensations": counts["compensate"],
        "taxed": counts["taxed"],
        "repairs": counts["repair"],
        "punishments": counts["punish"],
        "activations": counts["activations"],
        "fulfilments": counts["fulfilments"],
        "violations": counts["violations"],
        "revisions": len(sim.revisions) if sim is not None else 0,
    }
