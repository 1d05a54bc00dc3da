"""Game transformations: payoff shifts, action deletion, addition, replacement.

All operators are pure: they return a fresh game and never touch the input.
A tax on an action is a :class:`PriceOnly` with a negative adjustment.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .errors import (
    InfeasibleTransformError,
    LabelCollisionError,
    SpecFormatError,
    UnknownLabelError,
)
from .games import Game
from .qre import QreConfig


@dataclass(frozen=True)
class PriceOnly:
    """Additive payoff adjustments keyed by (player, action, delta).

    Each triple adds ``delta`` to that player's payoff in every profile where
    they play ``action``; action sets are untouched.  Repeated triples sum.
    An empty adjustment list is the identity transformation.
    """

    adjustments: tuple[tuple[str, str, float], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(
            self,
            "adjustments",
            tuple((str(p), str(a), float(d)) for p, a, d in self.adjustments),
        )

    def apply(self, game: Game) -> Game:
        payoffs = np.array(game.payoffs)
        for player, action, delta in self.adjustments:
            pi = game.player_index(player)
            ai = game.action_index(player, action)
            selector = tuple(
                ai if j == pi else slice(None) for j in range(game.n_players)
            ) + (pi,)
            payoffs[selector] += delta
        return Game(game.players, game.actions, payoffs)

    @classmethod
    def tax(cls, players: Sequence[str], action: str, amount: float) -> "PriceOnly":
        """Reduce the payoff from ``action`` by ``amount`` for each listed player."""
        return cls(tuple((p, action, -amount) for p in players))


@dataclass(frozen=True)
class Delete:
    """Remove one action from one player's feasible set."""

    player: str
    action: str

    def apply(self, game: Game) -> Game:
        pi = game.player_index(self.player)
        ai = game.action_index(self.player, self.action)
        if len(game.actions[pi]) == 1:
            raise InfeasibleTransformError(
                f"cannot delete {self.action!r}: it is player {self.player!r}'s last action"
            )
        actions = tuple(
            tuple(a for k, a in enumerate(acts) if not (j == pi and k == ai))
            for j, acts in enumerate(game.actions)
        )
        payoffs = np.delete(game.payoffs, ai, axis=pi)
        return Game(game.players, actions, payoffs)


def _extend_axis(
    game: Game,
    actions: tuple[tuple[str, ...], ...],
    payoffs: np.ndarray,
    pi: int,
    new_action: str,
    extension: Mapping[tuple[str, ...], Sequence[float]],
) -> Game:
    """Append ``new_action`` for player ``pi`` and fill the new profiles.

    ``extension`` must be keyed by full label profiles (player order, with
    ``new_action`` at position ``pi``) and be total over exactly those
    profiles.
    """
    new_actions = tuple(
        acts + (new_action,) if j == pi else acts for j, acts in enumerate(actions)
    )
    shape = tuple(len(a) for a in new_actions) + (game.n_players,)
    grown = np.zeros(shape)
    old_region = tuple(slice(0, len(a)) for a in actions) + (slice(None),)
    grown[old_region] = payoffs
    other_ranges = [
        range(len(acts)) for j, acts in enumerate(new_actions) if j != pi
    ]
    expected: set[tuple[str, ...]] = set()
    for combo in itertools.product(*other_ranges):
        combo = list(combo)
        idx = tuple(
            combo.pop(0) if j != pi else len(actions[pi]) for j in range(game.n_players)
        )
        labels = tuple(new_actions[j][idx[j]] for j in range(game.n_players))
        expected.add(labels)
        if labels not in extension:
            raise SpecFormatError(f"payoff extension is missing profile {labels}")
        values = tuple(float(v) for v in extension[labels])
        if len(values) != game.n_players:
            raise SpecFormatError(
                f"payoff extension for profile {labels} has {len(values)} entries, "
                f"expected {game.n_players}"
            )
        grown[idx] = values
    extra = set(tuple(k) for k in extension) - expected
    if extra:
        raise SpecFormatError(
            f"payoff extension contains profiles not introduced by the change: "
            f"{sorted(extra)[0]}"
        )
    return Game(game.players, new_actions, grown)


@dataclass(frozen=True)
class Add:
    """Give one player a new action, with payoffs for every new profile."""

    player: str
    action: str
    payoffs: Mapping[tuple[str, ...], Sequence[float]]

    def apply(self, game: Game) -> Game:
        pi = game.player_index(self.player)
        if self.action in game.actions[pi]:
            raise LabelCollisionError(
                f"player {self.player!r} already has an action {self.action!r}"
            )
        return _extend_axis(
            game, game.actions, np.array(game.payoffs), pi, self.action, self.payoffs
        )


@dataclass(frozen=True)
class Replace:
    """Swap one player's action for a fresh one, atomically.

    Equivalent to Delete followed by Add, except that a player whose only
    action is being replaced is fine: feasibility is judged on the result.
    """

    player: str
    old_action: str
    new_action: str
    payoffs: Mapping[tuple[str, ...], Sequence[float]]

    def apply(self, game: Game) -> Game:
        pi = game.player_index(self.player)
        ai = game.action_index(self.player, self.old_action)
        remaining = tuple(a for a in game.actions[pi] if a != self.old_action)
        if self.new_action in remaining:
            raise LabelCollisionError(
                f"player {self.player!r} already has an action {self.new_action!r}"
            )
        actions = tuple(
            remaining if j == pi else acts for j, acts in enumerate(game.actions)
        )
        payoffs = np.delete(game.payoffs, ai, axis=pi)
        return _extend_axis(game, actions, payoffs, pi, self.new_action, self.payoffs)


Transformation = Union[PriceOnly, Delete, Add, Replace]


@dataclass(frozen=True)
class Pipeline:
    """A sequence of transformations applied left to right."""

    steps: tuple["TransformationLike", ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "steps", tuple(self.steps))

    def apply(self, game: Game) -> Game:
        for step in self.steps:
            game = step.apply(game)
        return game


TransformationLike = Union[Transformation, Pipeline]


def identity() -> PriceOnly:
    """The do-nothing transformation."""
    return PriceOnly(())


def _flatten(t: TransformationLike) -> tuple[TransformationLike, ...]:
    if isinstance(t, Pipeline):
        return tuple(itertools.chain.from_iterable(_flatten(s) for s in t.steps))
    return (t,)


def compose(first: TransformationLike, second: TransformationLike) -> Pipeline:
    """Pipeline equal to applying ``first`` and then ``second``."""
    return Pipeline(_flatten(first) + _flatten(second))


def apply_transformation(t: TransformationLike, game: Game) -> Game:
    return t.apply(game)


def adapt_config(game: Game, cfg: QreConfig) -> QreConfig:
    """Fit a solver config to a transformed game.

    A player whose default action no longer exists has it remapped to the
    lexicographically first remaining action; being forced off the old
    default carries no switching cost, because the remapped action becomes
    the new default.  Everything else is unchanged.
    """
    defaults = dict(cfg.default_action)
    for player in game.players:
        acts = game.actions_of(player)
        if defaults.get(player) not in acts:
            defaults[player] = min(acts)
    adapted = QreConfig(
        beta={p: cfg.beta[p] for p in game.players},
        kappa={p: cfg.kappa[p] for p in game.players},
        default_action={p: defaults[p] for p in game.players},
    )
    adapted.validate_for(game)
    return adapted


# -- JSON transformation specs --------------------------------------------


def _parse_extension(
    entries: Sequence, players: Sequence[str], where: str
) -> dict[tuple[str, ...], tuple[float, ...]]:
    if not isinstance(entries, Sequence):
        raise SpecFormatError(f"{where}: 'payoffs' must be a list of entries")
    table: dict[tuple[str, ...], tuple[float, ...]] = {}
    for k, entry in enumerate(entries):
        if not isinstance(entry, Mapping) or "profile" not in entry or "values" not in entry:
            raise SpecFormatError(
                f"{where}: payoffs[{k}] must be an object with 'profile' and 'values'"
            )
        profile = entry["profile"]
        values = entry["values"]
        labels = []
        for player in players:
            if player not in profile:
                raise SpecFormatError(
                    f"{where}: payoffs[{k}] profile is missing player {player!r}"
                )
            labels.append(str(profile[player]))
        row = []
        for player in players:
            if player not in values:
                raise SpecFormatError(
                    f"{where}: payoffs[{k}] values are missing player {player!r}"
                )
            row.append(float(values[player]))
        table[tuple(labels)] = tuple(row)
    return table


def parse_transformation(obj, players: Sequence[str]) -> TransformationLike:
    """Build a transformation (or pipeline) from its JSON description.

    A list denotes a pipeline.  Objects use ``"type"`` of ``price`` /
    ``delete`` / ``add`` / ``replace``.
    """
    if isinstance(obj, Sequence) and not isinstance(obj, (str, Mapping)):
        return Pipeline(tuple(parse_transformation(item, players) for item in obj))
    if not isinstance(obj, Mapping):
        raise SpecFormatError("transformation spec must be an object or a list")
    kind = obj.get("type")
    if kind == "price":
        entries = obj.get("adjustments", [])
        if not isinstance(entries, Sequence):
            raise SpecFormatError("price transformation: 'adjustments' must be a list")
        triples = []
        for k, entry in enumerate(entries):
            try:
                triples.append(
                    (str(entry["player"]), str(entry["action"]), float(entry["delta"]))
                )
            except (KeyError, TypeError, ValueError):
                raise SpecFormatError(
                    f"price transformation: adjustments[{k}] needs "
                    "'player', 'action', and numeric 'delta'"
                ) from None
        return PriceOnly(tuple(triples))
    if kind == "delete":
        try:
            return Delete(str(obj["player"]), str(obj["action"]))
        except KeyError as exc:
            raise SpecFormatError(
                f"delete transformation is missing field {exc.args[0]!r}"
            ) from None
    if kind == "add":
        try:
            player, action = str(obj["player"]), str(obj["action"])
        except KeyError as exc:
            raise SpecFormatError(
                f"add transformation is missing field {exc.args[0]!r}"
            ) from None
        return Add(player, action, _parse_extension(obj.get("payoffs", []), players, "add"))
    if kind == "replace":
        try:
            player = str(obj["player"])
            old, new = str(obj["old"]), str(obj["new"])
        except KeyError as exc:
            raise SpecFormatError(
                f"replace transformation is missing field {exc.args[0]!r}"
            ) from None
        return Replace(
            player, old, new, _parse_extension(obj.get("payoffs", []), players, "replace")
        )
    raise SpecFormatError(
        f"unknown transformation type {kind!r}; expected price/delete/add/replace"
    )
