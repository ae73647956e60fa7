import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from ecexpect.checks import pd_game
from ecexpect.game import GameError, NormalFormGame, pure_nash, team_optimal


def test_default_games(cfg):
    a, b = cfg.games["A"], cfg.games["B"]
    assert pure_nash(a) == [("plain", "plain")] and a.payoff(("plain", "plain")) == (333, 333)
    assert pure_nash(b) == [("plateau", "plateau")] and b.payoff(("plateau", "plateau")) == (365, 365)
    assert team_optimal(b) == ("plateau", "plateau") and b.social(team_optimal(b)) == 730
    # the dilemma: equilibrium and team optimum differ in game A
    assert team_optimal(a) == ("plateau", "plateau") and a.social(team_optimal(a)) == 730


def test_game_a_is_a_prisoners_dilemma(cfg):
    a = cfg.games["A"]
    t = a.payoff(("plain", "plateau"))[0]
    r = a.payoff(("plateau", "plateau"))[0]
    p = a.payoff(("plain", "plain"))[0]
    s = a.payoff(("plateau", "plain"))[0]
    assert t > r > p > s


def test_constant_game_all_profiles_stable():
    g = NormalFormGame.symmetric_2x2("x", "y", {k: 1 for k in itertools.product("xy", repeat=2)})
    assert pure_nash(g) == g.profiles()
    assert team_optimal(g) == ("x", "x")


def test_matching_pennies_has_no_pure_equilibrium():
    # hand-checked: every cell has a player who gains by switching
    g = NormalFormGame(
        ("p1", "p2"),
        (("h", "t"), ("h", "t")),
        {("h", "h"): (1, -1), ("h", "t"): (-1, 1), ("t", "h"): (-1, 1), ("t", "t"): (1, -1)},
    )
    assert pure_nash(g) == []


def test_pd_team_optimum():
    g = pd_game()
    assert team_optimal(g) == ("c", "c") and g.social(("c", "c")) == 4
    assert pure_nash(g) == [("d", "d")]


def test_validation():
    with pytest.raises(GameError, match="no payoff"):
        NormalFormGame(("a", "b"), (("x",), ("x", "y")), {("x", "x"): (1, 1)})
    with pytest.raises(GameError, match="entries"):
        NormalFormGame(("a",), (("x",),), {("x",): (1, 2)})
    with pytest.raises(GameError, match="unknown"):
        NormalFormGame(("a",), (("x",),), {("x",): (1,), ("z",): (1,)})
    with pytest.raises(GameError):
        NormalFormGame(("a",), ((),), {})
    with pytest.raises(GameError):
        NormalFormGame(("a", "b"), (("x",),), {})


# -- random games against a brute-force oracle -----------------------------


def random_game(rng):
    n = rng.randint(2, 3)
    strategies = [tuple(f"s{j}" for j in range(rng.randint(2, 3))) for _ in range(n)]
    payoffs = {p: tuple(rng.randint(-9, 9) for _ in range(n)) for p in itertools.product(*strategies)}
    return NormalFormGame(tuple(f"p{i}" for i in range(n)), strategies, payoffs)


def oracle_nash(g):
    """Best-response sets computed per opponent profile."""
    stable = set(g.payoffs)
    for i, strats in enumerate(g.strategies):
        others = [s for j, s in enumerate(g.strategies) if j != i]
        for rest in itertools.product(*others):
            def full(x):
                return rest[:i] + (x,) + rest[i:]

            best = max(g.payoffs[full(x)][i] for x in strats)
            stable -= {full(x) for x in strats if g.payoffs[full(x)][i] < best}
    return stable


def test_nash_against_oracle_on_500_games():
    rng = random.Random(3)
    for _ in range(500):
        g = random_game(rng)
        got = pure_nash(g)
        assert set(got) == oracle_nash(g)
        assert got == sorted(got, key=g.profiles().index)


def test_team_optimal_is_maximal_on_500_games():
    rng = random.Random(4)
    for _ in range(500):
        g = random_game(rng)
        best = team_optimal(g)
        sums = [g.social(p) for p in g.profiles()]
        assert g.social(best) == max(sums)
        assert g.profiles().index(best) == sums.index(max(sums))


@given(st.integers(0, 2**32), st.integers(-20, 20), st.integers(0, 2))
def test_nash_invariant_under_payoff_translation(seed, c, who):
    g = random_game(random.Random(seed))
    who %= len(g.players)
    shifted = {p: tuple(v + (c if i == who else 0) for i, v in enumerate(vec)) for p, vec in g.payoffs.items()}
    h = NormalFormGame(g.players, g.strategies, shifted)
    assert set(pure_nash(h)) == set(pure_nash(g))
