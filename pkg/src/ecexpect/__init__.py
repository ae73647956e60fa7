"""Event Calculus with expectation monitoring, applied to a flood-risk
collective dilemma."""

from .engine import Engine, EffectRule, RuleError, State, load_default_rules, parse_rules
from .formula import (
    FALSE,
    TRUE,
    Formula,
    StepObservation,
    classify,
    parse_formula,
    progress,
    trace_eval,
)
from .game import GameError, NormalFormGame, pure_nash, team_optimal
from .monitor import ExpRule, Monitor
from .scenario import ScenarioConfig, Simulation, build, default_config, load_config, run
from .terms import Atom, Compound, Num, Var, match, parse_term

__version__ = "0.1.0"

__all__ = [
    "Atom",
    "Compound",
    "Num",
    "Var",
    "parse_term",
    "match",
    "Engine",
    "EffectRule",
    "RuleError",
    "State",
    "parse_rules",
    "load_default_rules",
    "Formula",
    "TRUE",
    "FALSE",
    "StepObservation",
    "parse_formula",
    "progress",
    "classify",
    "trace_eval",
    "ExpRule",
    "Monitor",
    "NormalFormGame",
    "GameError",
    "pure_nash",
    "team_optimal",
    "ScenarioConfig",
    "Simulation",
    "build",
    "run",
    "default_config",
    "load_config",
]
