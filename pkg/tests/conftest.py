import pytest

from ministone.cards import default_pool
from ministone import engine


@pytest.fixture(scope="session")
def pool():
    return default_pool()


def make_bt_state(pool, hero0="mage", hero1="hunter", active=0):
    """Hand-built battle state: empty boards/hands, both players on turn 1."""
    state = engine.GameState(
        pool.checksum, engine.STAGE_BT,
        [engine.PlayerState(hero0), engine.PlayerState(hero1)],
        turn_number=1, active_player=active, rng_state=123,
    )
    for p in state.players:
        p.turns_started = 1
        p.mana_cap = 1
        p.mana_current = 1
    return state


def add_minion(player, spec_id, attack, health, can_attack=True, taunt=False):
    m = engine.MinionInstance(spec_id, attack, health, can_attack, taunt)
    player.board.append(m)
    return m
