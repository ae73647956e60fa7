"""Normal-form games: pure-strategy Nash equilibria and team-optimal profiles."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

__all__ = ["NormalFormGame", "pure_nash", "team_optimal", "GameError"]


class GameError(ValueError):
    pass


@dataclass(frozen=True)
class NormalFormGame:
    players: tuple
    strategies: tuple  # one tuple of strategy names per player
    payoffs: Mapping  # profile tuple -> payoff tuple
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "players", tuple(self.players))
        object.__setattr__(self, "strategies", tuple(tuple(s) for s in self.strategies))
        object.__setattr__(self, "payoffs", {tuple(k): tuple(v) for k, v in dict(self.payoffs).items()})
        if len(self.strategies) != len(self.players):
            raise GameError("need one strategy list per player")
        for player, strats in zip(self.players, self.strategies):
            if not strats:
                raise GameError(f"player {player} has no strategies")
            if len(set(strats)) != len(strats):
                raise GameError(f"player {player} has duplicate strategies")
        for profile in self.profiles():
            vec = self.payoffs.get(profile)
            if vec is None:
                raise GameError(f"no payoff for profile {profile}")
            if len(vec) != len(self.players):
                raise GameError(f"payoff for {profile} has {len(vec)} entries, expected {len(self.players)}")
        extra = set(self.payoffs) - set(self.profiles())
        if extra:
            raise GameError(f"payoffs given for unknown profiles {sorted(extra)}")

    def __hash__(self):
        return hash((self.name, self.players, self.strategies))

    def profiles(self) -> list[tuple]:
        """All joint profiles in lexicographic order of strategy indices."""
        return list(itertools.product(*self.strategies))

    def payoff(self, profile: Sequence[str]) -> tuple:
        return self.payoffs[tuple(profile)]

    def social(self, profile: Sequence[str]) -> int:
        return sum(self.payoff(profile))

    @classmethod
    def symmetric_2x2(cls, a: str, b: str, table: Mapping, players=("p1", "p2"), name: str = "") -> "NormalFormGame":
        """Build a symmetric two-player game from the row player's payoffs,
        ``table[(mine, theirs)]``."""
        payoffs = {}
        for x in (a, b):
            for y in (a, b):
                payoffs[(x, y)] = (table[(x, y)], table[(y, x)])
        return cls(players, ((a, b), (a, b)), payoffs, name)


def pure_nash(g: NormalFormGame) -> list[tuple]:
    """Profiles where no player gains strictly by deviating alone."""
    out = []
    for profile in g.profiles():
        pay = g.payoff(profile)
        stable = True
        for i, strats in enumerate(g.strategies):
            for alt in strats:
                if alt == profile[i]:
                    continue
                dev = profile[:i] + (alt,) + profile[i + 1 :]
                if g.payoff(dev)[i] > pay[i]:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            out.append(profile)
    return out


def team_optimal(g: NormalFormGame) -> tuple:
    """Profile with the largest payoff sum; the earliest profile wins ties."""
    best, best_sum = None, None
    for profile in g.profiles():
        total = g.social(profile)
        if best_sum is None or total > best_sum:
            best, best_sum = profile, total
    return best
