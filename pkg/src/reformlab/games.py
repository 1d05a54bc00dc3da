"""Finite normal-form games: payoff tables, mixed profiles, pure Nash enumeration.

Games are immutable once constructed.  Payoffs live in a dense array of shape
``(*action_counts, n_players)`` so that profile lookups are plain index
operations and transformed games can be built by slicing.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import NumericError, SpecFormatError, UnknownLabelError

# Absolute tolerance for "probabilities sum to one".
PROB_SUM_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Game:
    """A finite normal-form game with labeled players and actions.

    ``players`` is the canonical ordering used everywhere else in the
    library: pure profiles are tuples of action labels in player order, and
    ``payoffs[idx + (i,)]`` is player ``i``'s payoff at the profile with
    action indices ``idx``.
    """

    players: tuple[str, ...]
    actions: tuple[tuple[str, ...], ...]
    payoffs: np.ndarray

    def __post_init__(self) -> None:
        players = tuple(self.players)
        actions = tuple(tuple(acts) for acts in self.actions)
        object.__setattr__(self, "players", players)
        object.__setattr__(self, "actions", actions)
        if not players:
            raise SpecFormatError("a game needs at least one player")
        if len(set(players)) != len(players):
            raise SpecFormatError("player identifiers must be unique")
        if len(actions) != len(players):
            raise SpecFormatError("one action list per player is required")
        for player, acts in zip(players, actions):
            if not acts:
                raise SpecFormatError(f"player {player!r} has no actions")
            if len(set(acts)) != len(acts):
                raise SpecFormatError(f"duplicate action labels for player {player!r}")
        table = np.array(self.payoffs, dtype=float)
        expected = tuple(len(acts) for acts in actions) + (len(players),)
        if table.shape != expected:
            raise SpecFormatError(
                f"payoff table has shape {table.shape}, expected {expected}"
            )
        if not np.all(np.isfinite(table)):
            raise NumericError("payoff table contains non-finite values")
        table.setflags(write=False)
        object.__setattr__(self, "payoffs", table)

    # -- lookups ---------------------------------------------------------

    @property
    def n_players(self) -> int:
        return len(self.players)

    def player_index(self, player: str) -> int:
        try:
            return self.players.index(player)
        except ValueError:
            raise UnknownLabelError(f"unknown player {player!r}") from None

    def action_index(self, player: str, action: str) -> int:
        pi = self.player_index(player)
        try:
            return self.actions[pi].index(action)
        except ValueError:
            raise UnknownLabelError(
                f"unknown action {action!r} for player {player!r}"
            ) from None

    def actions_of(self, player: str) -> tuple[str, ...]:
        return self.actions[self.player_index(player)]

    def profiles(self) -> Iterator[tuple[str, ...]]:
        """All pure profiles as label tuples, in lexicographic index order."""
        return itertools.product(*self.actions)

    def payoff_vector(self, profile: Sequence[str] | Mapping[str, str]) -> tuple[float, ...]:
        """Payoffs of every player at a pure profile."""
        idx = self._profile_index(profile)
        return tuple(float(v) for v in self.payoffs[idx])

    def _profile_index(self, profile: Sequence[str] | Mapping[str, str]) -> tuple[int, ...]:
        if isinstance(profile, Mapping):
            labels = []
            for player in self.players:
                if player not in profile:
                    raise SpecFormatError(f"profile is missing player {player!r}")
                labels.append(profile[player])
        else:
            labels = list(profile)
            if len(labels) != self.n_players:
                raise SpecFormatError(
                    f"profile has {len(labels)} entries, expected {self.n_players}"
                )
        return tuple(
            self.action_index(player, label)
            for player, label in zip(self.players, labels)
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Game):
            return NotImplemented
        return (
            self.players == other.players
            and self.actions == other.actions
            and np.array_equal(self.payoffs, other.payoffs)
        )

    @classmethod
    def from_profile_table(
        cls,
        players: Sequence[str],
        actions: Mapping[str, Sequence[str]],
        table: Mapping[tuple[str, ...], Sequence[float]],
    ) -> "Game":
        """Build a game from a total map of pure profiles to payoff vectors.

        Raises :class:`SpecFormatError` if any profile of the action product
        is missing, duplicated, or carries a malformed payoff vector.
        """
        players = tuple(players)
        try:
            per_player = tuple(tuple(actions[p]) for p in players)
        except KeyError as exc:
            raise SpecFormatError(f"no action list for player {exc.args[0]!r}") from None
        shape = tuple(len(a) for a in per_player) + (len(players),)
        payoffs = np.full(shape, np.nan)
        seen: set[tuple[int, ...]] = set()
        stub = cls.__new__(cls)  # index helper without triggering validation
        object.__setattr__(stub, "players", players)
        object.__setattr__(stub, "actions", per_player)
        for profile, values in table.items():
            idx = stub._profile_index(profile)
            if idx in seen:
                raise SpecFormatError(f"duplicate payoff entry for profile {tuple(profile)}")
            seen.add(idx)
            values = tuple(values)
            if len(values) != len(players):
                raise SpecFormatError(
                    f"payoff vector for profile {tuple(profile)} has {len(values)} "
                    f"entries, expected {len(players)}"
                )
            payoffs[idx] = values
        if np.isnan(payoffs).any():
            for idx in itertools.product(*(range(len(a)) for a in per_player)):
                if np.isnan(payoffs[idx]).any():
                    missing = tuple(per_player[i][j] for i, j in enumerate(idx))
                    raise SpecFormatError(f"payoff table is missing profile {missing}")
        return cls(players, per_player, payoffs)


@dataclass(frozen=True, eq=False)
class MixedProfile:
    """Per-player probability vectors over that player's actions."""

    probs: Mapping[str, np.ndarray]

    def __post_init__(self) -> None:
        frozen: dict[str, np.ndarray] = {}
        for player, vec in self.probs.items():
            arr = np.array(vec, dtype=float)
            if arr.ndim != 1 or arr.size == 0:
                raise SpecFormatError(f"probability vector for {player!r} must be 1-d and non-empty")
            if np.any(arr < 0.0):
                raise SpecFormatError(f"negative probability for player {player!r}")
            if abs(float(arr.sum()) - 1.0) > PROB_SUM_TOL:
                raise SpecFormatError(
                    f"probabilities for player {player!r} sum to {arr.sum()!r}, not 1"
                )
            arr.setflags(write=False)
            frozen[player] = arr
        object.__setattr__(self, "probs", frozen)

    def __getitem__(self, player: str) -> np.ndarray:
        try:
            return self.probs[player]
        except KeyError:
            raise UnknownLabelError(f"no distribution for player {player!r}") from None

    def __contains__(self, player: str) -> bool:
        return player in self.probs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, MixedProfile):
            return NotImplemented
        return self.probs.keys() == other.probs.keys() and all(
            np.array_equal(self.probs[p], other.probs[p]) for p in self.probs
        )

    def validate_for(self, game: Game) -> None:
        for player, vec in self.probs.items():
            expected = len(game.actions_of(player))
            if vec.size != expected:
                raise SpecFormatError(
                    f"distribution for player {player!r} has {vec.size} entries, "
                    f"expected {expected}"
                )

    def as_dict(self) -> dict[str, list[float]]:
        return {player: [float(x) for x in vec] for player, vec in self.probs.items()}

    @classmethod
    def uniform(cls, game: Game) -> "MixedProfile":
        return cls(
            {
                player: np.full(len(acts), 1.0 / len(acts))
                for player, acts in zip(game.players, game.actions)
            }
        )

    @classmethod
    def point(cls, game: Game, profile: Sequence[str] | Mapping[str, str]) -> "MixedProfile":
        """Degenerate profile putting mass one on a pure profile."""
        idx = game._profile_index(profile)
        probs = {}
        for i, player in enumerate(game.players):
            vec = np.zeros(len(game.actions[i]))
            vec[idx[i]] = 1.0
            probs[player] = vec
        return cls(probs)


def expected_payoff(
    game: Game, player: str, action: str, others: MixedProfile
) -> float:
    """Expectation of the player's payoff for a fixed own action.

    The expectation is over the product distribution of the other players'
    mixes; the focal player's own entry in ``others``, if present, is
    ignored.
    """
    pi = game.player_index(player)
    ai = game.action_index(player, action)
    arr = np.take(game.payoffs[..., pi], ai, axis=pi)
    # Contract highest-numbered axes first so lower axis positions stay valid.
    for j in range(game.n_players - 1, -1, -1):
        if j == pi:
            continue
        vec = others[game.players[j]]
        if vec.size != len(game.actions[j]):
            raise SpecFormatError(
                f"distribution for player {game.players[j]!r} has {vec.size} "
                f"entries, expected {len(game.actions[j])}"
            )
        axis = j if j < pi else j - 1
        arr = np.tensordot(arr, vec, axes=([axis], [0]))
    return float(arr)


def pure_nash(game: Game) -> list[tuple[str, ...]]:
    """All pure profiles where no player gains strictly by deviating.

    Uses the weak-inequality convention: a profile survives unless some
    unilateral deviation is *strictly* profitable.
    """
    counts = [len(acts) for acts in game.actions]
    payoffs = game.payoffs
    equilibria: list[tuple[str, ...]] = []
    for idx in itertools.product(*(range(c) for c in counts)):
        stable = True
        for i in range(game.n_players):
            own = payoffs[idx + (i,)]
            for alt in range(counts[i]):
                if alt == idx[i]:
                    continue
                dev = idx[:i] + (alt,) + idx[i + 1 :]
                if payoffs[dev + (i,)] > own:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            equilibria.append(tuple(game.actions[i][j] for i, j in enumerate(idx)))
    return equilibria


# -- JSON game files -----------------------------------------------------


def parse_game(obj: Mapping) -> Game:
    """Build a game from the JSON object layout used by game spec files.

    Layout: ``{"players": [...], "actions": {player: [labels]},
    "payoffs": [{"profile": {player: label}, "values": {player: number}}]}``.
    The payoff list must cover every profile exactly once.
    """
    if not isinstance(obj, Mapping):
        raise SpecFormatError("game description must be a JSON object")
    for field in ("players", "actions", "payoffs"):
        if field not in obj:
            raise SpecFormatError(f"game description is missing field {field!r}")
    players = obj["players"]
    if not isinstance(players, Sequence) or isinstance(players, str):
        raise SpecFormatError("field 'players' must be a list of identifiers")
    players = tuple(str(p) for p in players)
    actions_obj = obj["actions"]
    if not isinstance(actions_obj, Mapping):
        raise SpecFormatError("field 'actions' must map players to label lists")
    actions = {}
    for player in players:
        if player not in actions_obj:
            raise SpecFormatError(f"field 'actions' is missing player {player!r}")
        labels = actions_obj[player]
        if not isinstance(labels, Sequence) or isinstance(labels, str):
            raise SpecFormatError(f"actions for player {player!r} must be a list")
        actions[player] = tuple(str(a) for a in labels)
    entries = obj["payoffs"]
    if not isinstance(entries, Sequence):
        raise SpecFormatError("field 'payoffs' must be a list of entries")
    table: dict[tuple[str, ...], tuple[float, ...]] = {}
    for k, entry in enumerate(entries):
        if not isinstance(entry, Mapping) or "profile" not in entry or "values" not in entry:
            raise SpecFormatError(
                f"payoffs[{k}] must be an object with 'profile' and 'values'"
            )
        profile_obj = entry["profile"]
        values_obj = entry["values"]
        if not isinstance(profile_obj, Mapping) or not isinstance(values_obj, Mapping):
            raise SpecFormatError(f"payoffs[{k}]: 'profile' and 'values' must be objects")
        labels = []
        for player in players:
            if player not in profile_obj:
                raise SpecFormatError(f"payoffs[{k}]: profile is missing player {player!r}")
            labels.append(str(profile_obj[player]))
        values = []
        for player in players:
            if player not in values_obj:
                raise SpecFormatError(f"payoffs[{k}]: values are missing player {player!r}")
            value = values_obj[player]
            if not isinstance(value, (int, float)) or isinstance(value, bool):
                raise SpecFormatError(f"payoffs[{k}]: value for {player!r} is not a number")
            value = float(value)
            if not np.isfinite(value):
                raise SpecFormatError(f"payoffs[{k}]: value for {player!r} is not finite")
            values.append(value)
        key = tuple(labels)
        if key in table:
            raise SpecFormatError(f"payoffs[{k}]: duplicate entry for profile {key}")
        table[key] = tuple(values)
    return Game.from_profile_table(players, actions, table)


def load_game(path: str | Path) -> Game:
    """Load a game spec file, reporting JSON syntax errors with line/column."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    except OSError as exc:
        raise SpecFormatError(f"{path}: {exc.strerror or exc}") from None
    try:
        return parse_game(obj)
    except SpecFormatError as exc:
        raise SpecFormatError(f"{path}: {exc}") from None
