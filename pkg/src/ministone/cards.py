"""Card specs, effect grammar and the card pool file format.

A pool file is plain text: a header (`pool <name>` / `checksum <hex>`)
followed by one record per line. The checksum pins the exact card list so
checkpoints and replays can refuse to load against a different pool.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from importlib import resources

HEROES = ("mage", "hunter", "warrior")
HERO_RESTRICTIONS = ("common",) + HEROES
KINDS = ("minion", "spell", "weapon")
VERBS = ("none", "damage", "aoe_damage_enemy_minions", "heal", "draw", "buff", "gain_armor")
TARGET_CLASSES = ("none", "any_character", "friendly_minion", "enemy_hero")

# The Coin is a real card instance (zone conservation applies to it) but is
# never pickable in CB; its effect is engine special-cased (+1 temporary mana).
COIN_ID = 72


@dataclass(frozen=True, slots=True)
class EffectSpec:
    verb: str = "none"
    magnitude: int = 0
    target_class: str = "none"

    def validate(self) -> None:
        if self.verb not in VERBS:
            raise ValueError(f"unknown effect verb {self.verb!r}")
        if self.target_class not in TARGET_CLASSES:
            raise ValueError(f"unknown target class {self.target_class!r}")
        if self.verb == "none" and self.target_class != "none":
            raise ValueError("verb=none requires target_class=none")
        if self.verb == "draw" and not 1 <= self.magnitude <= 3:
            raise ValueError("draw magnitude must be in [1, 3]")
        if self.verb in ("damage", "heal") and not 1 <= self.magnitude <= 6:
            raise ValueError(f"{self.verb} magnitude must be in [1, 6]")


@dataclass(frozen=True, slots=True)
class CardSpec:
    id: int
    hero_restriction: str
    kind: str
    cost: int
    attack: int
    health_or_durability: int
    keywords: frozenset[str]
    effect: EffectSpec
    max_copies: int

    def validate(self) -> None:
        if self.hero_restriction not in HERO_RESTRICTIONS:
            raise ValueError(f"bad hero restriction {self.hero_restriction!r}")
        if self.kind not in KINDS:
            raise ValueError(f"bad kind {self.kind!r}")
        if not 0 <= self.cost <= 10:
            raise ValueError("cost must be in [0, 10]")
        if self.kind == "spell" and (self.attack or self.health_or_durability):
            raise ValueError("spells carry no attack/health")
        if self.kind in ("minion", "weapon"):
            if self.attack < 0:
                raise ValueError("attack must be >= 0")
            if self.health_or_durability < 1:
                raise ValueError("health/durability must be >= 1")
        if self.max_copies not in (0, 1, 2):
            raise ValueError("max_copies must be 0, 1 or 2")
        if not self.keywords <= {"taunt", "charge"}:
            raise ValueError(f"unknown keywords {self.keywords}")
        self.effect.validate()

    def to_line(self) -> str:
        kw = "+".join(sorted(self.keywords)) or "-"
        return " ".join(
            str(x)
            for x in (
                self.id, self.hero_restriction, self.kind, self.cost,
                self.attack, self.health_or_durability, kw,
                self.effect.verb, self.effect.magnitude, self.effect.target_class,
                self.max_copies,
            )
        )

    @classmethod
    def from_line(cls, line: str) -> "CardSpec":
        parts = line.split()
        if len(parts) != 11:
            raise ValueError(f"malformed card record: {line!r}")
        kw = frozenset() if parts[6] == "-" else frozenset(parts[6].split("+"))
        spec = cls(
            id=int(parts[0]),
            hero_restriction=parts[1],
            kind=parts[2],
            cost=int(parts[3]),
            attack=int(parts[4]),
            health_or_durability=int(parts[5]),
            keywords=kw,
            effect=EffectSpec(parts[7], int(parts[8]), parts[9]),
            max_copies=int(parts[10]),
        )
        spec.validate()
        return spec


class CardPool:
    """Immutable indexed card list with a content checksum."""

    def __init__(self, name: str, cards: list[CardSpec]):
        self.name = name
        self.cards = tuple(cards)
        ids = [c.id for c in cards]
        if ids != list(range(len(cards))):
            raise ValueError("card ids must be contiguous from 0")
        for c in cards:
            c.validate()
        self.checksum = hashlib.sha256(
            "\n".join(c.to_line() for c in cards).encode()
        ).hexdigest()
        self._by_hero = {
            h: tuple(c.id for c in cards if c.hero_restriction in ("common", h) and c.max_copies > 0)
            for h in HEROES
        }
        # (ids, max_copies) pairs for the CB legality hot path.
        self._vis_limits = {
            h: tuple((cid, self.cards[cid].max_copies) for cid in ids)
            for h, ids in self._by_hero.items()
        }

    def __len__(self) -> int:
        return len(self.cards)

    def spec(self, card_id: int) -> CardSpec:
        return self.cards[card_id]

    def visible_to(self, hero: str) -> tuple[int, ...]:
        """Pickable card ids for a hero during deck building."""
        return self._by_hero[hero]

    def pick_limits(self, hero: str) -> tuple[tuple[int, int], ...]:
        """(card id, max copies) pairs over the hero's pickable cards."""
        return self._vis_limits[hero]

    def to_text(self) -> str:
        lines = [f"pool {self.name}", f"checksum {self.checksum}"]
        lines += [c.to_line() for c in self.cards]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "CardPool":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if len(lines) < 3 or not lines[0].startswith("pool ") or not lines[1].startswith("checksum "):
            raise ValueError("malformed pool header")
        name = lines[0].split(None, 1)[1]
        claimed = lines[1].split(None, 1)[1]
        pool = cls(name, [CardSpec.from_line(ln) for ln in lines[2:]])
        if pool.checksum != claimed:
            raise ValueError(f"pool checksum mismatch: header {claimed}, actual {pool.checksum}")
        return pool


def _vanilla(i, hero, kind, cost, atk, hp, kw=(), verb="none", mag=0, tgt="none", copies=2):
    return CardSpec(i, hero, kind, cost, atk, hp, frozenset(kw), EffectSpec(verb, mag, tgt), copies)


def build_pool_v1() -> CardPool:
    """The pinned "ministone-v1" pool: 48 commons + 8 per hero + the Coin."""
    c = []
    # Vanilla minions.
    c.append(_vanilla(0, "common", "minion", 1, 1, 2))
    c.append(_vanilla(1, "common", "minion", 1, 2, 1))
    c.append(_vanilla(2, "common", "minion", 2, 2, 3))
    c.append(_vanilla(3, "common", "minion", 2, 3, 2))
    c.append(_vanilla(4, "common", "minion", 3, 3, 4))
    c.append(_vanilla(5, "common", "minion", 3, 4, 3))
    c.append(_vanilla(6, "common", "minion", 4, 4, 5))
    c.append(_vanilla(7, "common", "minion", 4, 5, 4))
    c.append(_vanilla(8, "common", "minion", 5, 5, 6))
    c.append(_vanilla(9, "common", "minion", 5, 6, 5))
    c.append(_vanilla(10, "common", "minion", 6, 6, 7))
    c.append(_vanilla(11, "common", "minion", 7, 7, 7, copies=1))
    c.append(_vanilla(12, "common", "minion", 8, 8, 8, copies=1))
    # Taunts.
    c.append(_vanilla(13, "common", "minion", 2, 1, 4, kw=("taunt",)))
    c.append(_vanilla(14, "common", "minion", 3, 2, 5, kw=("taunt",)))
    c.append(_vanilla(15, "common", "minion", 4, 3, 6, kw=("taunt",)))
    c.append(_vanilla(16, "common", "minion", 5, 4, 7, kw=("taunt",)))
    c.append(_vanilla(17, "common", "minion", 6, 5, 7, kw=("taunt",), copies=1))
    # Chargers.
    c.append(_vanilla(18, "common", "minion", 3, 3, 2, kw=("charge",)))
    c.append(_vanilla(19, "common", "minion", 4, 4, 2, kw=("charge",)))
    c.append(_vanilla(20, "common", "minion", 5, 5, 3, kw=("charge",)))
    c.append(_vanilla(21, "common", "minion", 6, 6, 4, kw=("charge",), copies=1))
    # Battlecry minions.
    c.append(_vanilla(22, "common", "minion", 2, 2, 2, verb="damage", mag=1, tgt="any_character"))
    c.append(_vanilla(23, "common", "minion", 3, 3, 3, verb="damage", mag=2, tgt="any_character"))
    c.append(_vanilla(24, "common", "minion", 4, 3, 3, verb="damage", mag=3, tgt="any_character"))
    c.append(_vanilla(25, "common", "minion", 3, 2, 2, verb="draw", mag=1))
    c.append(_vanilla(26, "common", "minion", 5, 4, 4, verb="draw", mag=1))
    c.append(_vanilla(27, "common", "minion", 4, 4, 3, verb="heal", mag=4, tgt="any_character"))
    c.append(_vanilla(28, "common", "minion", 2, 2, 1, verb="buff", mag=1, tgt="friendly_minion"))
    c.append(_vanilla(29, "common", "minion", 5, 4, 4, verb="buff", mag=2, tgt="friendly_minion"))
    c.append(_vanilla(30, "common", "minion", 6, 5, 5, verb="aoe_damage_enemy_minions", mag=1, copies=1))
    c.append(_vanilla(31, "common", "minion", 7, 6, 6, verb="damage", mag=3, tgt="any_character", copies=1))
    c.append(_vanilla(32, "common", "minion", 1, 1, 1, verb="heal", mag=2, tgt="any_character"))
    # Spells.
    c.append(_vanilla(33, "common", "spell", 1, 0, 0, verb="damage", mag=2, tgt="any_character"))
    c.append(_vanilla(34, "common", "spell", 2, 0, 0, verb="damage", mag=3, tgt="any_character"))
    c.append(_vanilla(35, "common", "spell", 3, 0, 0, verb="damage", mag=4, tgt="any_character"))
    c.append(_vanilla(36, "common", "spell", 4, 0, 0, verb="damage", mag=5, tgt="any_character"))
    c.append(_vanilla(37, "common", "spell", 2, 0, 0, verb="aoe_damage_enemy_minions", mag=1))
    c.append(_vanilla(38, "common", "spell", 4, 0, 0, verb="aoe_damage_enemy_minions", mag=2))
    c.append(_vanilla(39, "common", "spell", 6, 0, 0, verb="aoe_damage_enemy_minions", mag=3, copies=1))
    c.append(_vanilla(40, "common", "spell", 2, 0, 0, verb="draw", mag=2))
    c.append(_vanilla(41, "common", "spell", 4, 0, 0, verb="draw", mag=3))
    c.append(_vanilla(42, "common", "spell", 3, 0, 0, verb="heal", mag=6, tgt="any_character"))
    c.append(_vanilla(43, "common", "spell", 1, 0, 0, verb="buff", mag=2, tgt="friendly_minion"))
    c.append(_vanilla(44, "common", "spell", 3, 0, 0, verb="buff", mag=3, tgt="friendly_minion"))
    c.append(_vanilla(45, "common", "spell", 5, 0, 0, verb="damage", mag=6, tgt="enemy_hero", copies=1))
    # Weapons.
    c.append(_vanilla(46, "common", "weapon", 2, 2, 2))
    c.append(_vanilla(47, "common", "weapon", 4, 3, 2, copies=1))
    # Mage.
    c.append(_vanilla(48, "mage", "spell", 0, 0, 0, verb="damage", mag=1, tgt="any_character"))
    c.append(_vanilla(49, "mage", "spell", 2, 0, 0, verb="damage", mag=3, tgt="any_character"))
    c.append(_vanilla(50, "mage", "spell", 3, 0, 0, verb="aoe_damage_enemy_minions", mag=2))
    c.append(_vanilla(51, "mage", "spell", 4, 0, 0, verb="damage", mag=4, tgt="any_character"))
    c.append(_vanilla(52, "mage", "minion", 2, 3, 2))
    c.append(_vanilla(53, "mage", "minion", 4, 3, 5, verb="damage", mag=2, tgt="any_character"))
    c.append(_vanilla(54, "mage", "minion", 6, 4, 6, verb="aoe_damage_enemy_minions", mag=2, copies=1))
    c.append(_vanilla(55, "mage", "spell", 5, 0, 0, verb="draw", mag=3, copies=1))
    # Hunter.
    c.append(_vanilla(56, "hunter", "minion", 1, 2, 1, kw=("charge",)))
    c.append(_vanilla(57, "hunter", "spell", 2, 0, 0, verb="damage", mag=3, tgt="enemy_hero"))
    c.append(_vanilla(58, "hunter", "minion", 3, 4, 2, kw=("charge",)))
    c.append(_vanilla(59, "hunter", "minion", 2, 3, 1))
    c.append(_vanilla(60, "hunter", "spell", 4, 0, 0, verb="damage", mag=4, tgt="enemy_hero"))
    c.append(_vanilla(61, "hunter", "minion", 5, 5, 4, kw=("charge",), copies=1))
    c.append(_vanilla(62, "hunter", "weapon", 3, 3, 1))
    c.append(_vanilla(63, "hunter", "spell", 6, 0, 0, verb="damage", mag=6, tgt="enemy_hero", copies=1))
    # Warrior.
    c.append(_vanilla(64, "warrior", "spell", 1, 0, 0, verb="gain_armor", mag=3))
    c.append(_vanilla(65, "warrior", "weapon", 3, 3, 2))
    c.append(_vanilla(66, "warrior", "minion", 2, 2, 3, kw=("taunt",)))
    c.append(_vanilla(67, "warrior", "spell", 3, 0, 0, verb="gain_armor", mag=5))
    c.append(_vanilla(68, "warrior", "minion", 4, 3, 5, verb="gain_armor", mag=3))
    c.append(_vanilla(69, "warrior", "weapon", 5, 4, 2, copies=1))
    c.append(_vanilla(70, "warrior", "minion", 6, 5, 6, kw=("taunt",), copies=1))
    c.append(_vanilla(71, "warrior", "spell", 7, 0, 0, verb="aoe_damage_enemy_minions", mag=4, copies=1))
    # The Coin (engine special case; never pickable).
    c.append(_vanilla(COIN_ID, "common", "spell", 0, 0, 0, copies=0))
    return CardPool("ministone-v1", c)


_DEFAULT_POOL: CardPool | None = None


def default_pool() -> CardPool:
    """Load the packaged ministone-v1 pool (checksum-verified)."""
    global _DEFAULT_POOL
    if _DEFAULT_POOL is None:
        text = resources.files("ministone.data").joinpath("ministone_v1.txt").read_text()
        _DEFAULT_POOL = CardPool.from_text(text)
    return _DEFAULT_POOL
