"""Meta-games: voting over game transformations, with selfish or social payoffs.

Players pick meta-actions (e.g. Approve/Reject); a rule maps each meta-profile
to a transformation of the base game; an inner solver evaluates the
transformed game; meta-payoffs are the inner equilibrium payoffs minus
implementation costs.  Social (hyper) payoffs add weighted sums of the other
players' meta-payoffs, which is what lets a single spiteful voter block a
reform that benefits everyone.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import CapacityError, EvaluationError, SpecFormatError
from .games import Game, MixedProfile, load_game, parse_game
from .qre import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    QreConfig,
    QreResult,
    _symmetric_binary_match,
    equilibrium_payoffs,
    solve_binary,
    solve_qre,
)
from .transforms import (
    PriceOnly,
    TransformationLike,
    adapt_config,
    identity,
    parse_transformation,
)

APPROVE = "Approve"
REJECT = "Reject"
DEFAULT_ENV = "none"
DEFAULT_MAX_PROFILES = 1_000_000


@dataclass(frozen=True)
class MetaProfile:
    """One meta-action per player, plus the environment's move."""

    moves: tuple[str, ...]
    env: str = DEFAULT_ENV

    def __post_init__(self) -> None:
        object.__setattr__(self, "moves", tuple(self.moves))

    def with_move(self, index: int, move: str) -> "MetaProfile":
        moves = list(self.moves)
        moves[index] = move
        return MetaProfile(tuple(moves), self.env)


@dataclass(frozen=True)
class SelectionRule:
    """Inner equilibrium selection: solver config plus multiplicity policy."""

    config: QreConfig
    policy: str = "nearest"
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    damping: float | None = None


def zero_costs(y: MetaProfile) -> tuple[float, ...]:
    return (0.0,) * len(y.moves)


@dataclass(frozen=True, eq=False)
class MetaGame:
    """Base game plus the meta layer that rewrites it."""

    base_game: Game
    meta_actions: tuple[tuple[str, ...], ...]
    rule: Callable[[MetaProfile], TransformationLike]
    selection: SelectionRule
    costs: Callable[[MetaProfile], Sequence[float]] = zero_costs
    weights: np.ndarray | None = None
    env_moves: tuple[str, ...] = (DEFAULT_ENV,)
    env_strategic: bool = False
    env_payoff: Callable[[MetaProfile], float] | None = None

    def __post_init__(self) -> None:
        m = self.base_game.n_players
        meta_actions = tuple(tuple(acts) for acts in self.meta_actions)
        if len(meta_actions) != m:
            raise SpecFormatError("one meta-action list per player is required")
        for player, acts in zip(self.base_game.players, meta_actions):
            if not acts:
                raise SpecFormatError(f"player {player!r} has no meta-actions")
            if len(set(acts)) != len(acts):
                raise SpecFormatError(f"duplicate meta-actions for player {player!r}")
        object.__setattr__(self, "meta_actions", meta_actions)
        env_moves = tuple(self.env_moves)
        if not env_moves:
            raise SpecFormatError("the environment needs at least one move")
        object.__setattr__(self, "env_moves", env_moves)
        if self.weights is None:
            w = np.zeros((m, m))
        else:
            w = np.array(self.weights, dtype=float)
        if w.shape != (m, m):
            raise SpecFormatError(f"weight matrix must be {m}x{m}, got {w.shape}")
        if np.any(np.diag(w) != 0.0):
            raise SpecFormatError("weight matrix must have a zero diagonal")
        if not np.all(np.isfinite(w)):
            raise SpecFormatError("weight matrix contains non-finite values")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.env_strategic and self.env_payoff is None:
            raise SpecFormatError("a strategic environment needs an env_payoff function")
        self.selection.config.validate_for(self.base_game)

    @property
    def n_players(self) -> int:
        return self.base_game.n_players

    def profiles(self):
        """All meta-profiles in lexicographic order (players first, then env)."""
        for moves in itertools.product(*self.meta_actions):
            for e in self.env_moves:
                yield MetaProfile(moves, e)

    def profile_count(self) -> int:
        count = len(self.env_moves)
        for acts in self.meta_actions:
            count *= len(acts)
        return count


@dataclass(frozen=True)
class MetaOutcome:
    """Everything computed for a single meta-profile."""

    profile: MetaProfile
    transformed_game: Game
    inner_result: QreResult
    pi: tuple[float, ...]
    V: tuple[float, ...]
    H: tuple[float, ...]
    gamma_unique: bool


def _select_inner(game: Game, cfg: QreConfig, sel: SelectionRule) -> QreResult:
    """Solve the inner game, routing the binary pattern through root selection."""
    params = _symmetric_binary_match(game, cfg)
    if params is not None and not params.contraction_certified:
        scalar = solve_binary(
            params, init_p=0.5, tol=sel.tol, max_iter=sel.max_iter, policy=sel.policy
        )
        di = game.actions[0].index(cfg.default_action[game.players[0]])
        vec = np.empty(2)
        vec[di] = scalar.p
        vec[1 - di] = 1.0 - scalar.p
        profile = MixedProfile({p: vec for p in game.players})
        return QreResult(
            profile=profile,
            residual=scalar.residual,
            iterations=scalar.iterations,
            converged=scalar.converged,
            unique_certified=False,
        )
    return solve_qre(
        game, cfg, damping=sel.damping, tol=sel.tol, max_iter=sel.max_iter
    )


def evaluate(mg: MetaGame, y: MetaProfile) -> MetaOutcome:
    """Apply the rule at ``y``, solve the inner game, and build V and H.

    ``V_i = pi_i - C_i(y)`` where ``pi_i`` is the expected effective payoff at
    the inner equilibrium (switching costs and any taxes included), and
    ``H_i = V_i + sum_j w_ij V_j``.
    """
    transformed = mg.rule(y).apply(mg.base_game)
    cfg = adapt_config(transformed, mg.selection.config)
    inner = _select_inner(transformed, cfg, mg.selection)
    if not inner.converged:
        raise EvaluationError(
            f"inner solve did not converge at meta-profile {y.moves} "
            f"(env {y.env!r}); residual {inner.residual:.3e}",
            profile=y,
            residual=inner.residual,
        )
    pi = equilibrium_payoffs(transformed, cfg, inner.profile)
    costs = tuple(float(c) for c in mg.costs(y))
    if len(costs) != mg.n_players:
        raise SpecFormatError(
            f"cost function returned {len(costs)} entries for {mg.n_players} players"
        )
    if any(c < 0.0 or not math.isfinite(c) for c in costs):
        raise SpecFormatError(f"costs at meta-profile {y.moves} must be finite and >= 0")
    v = tuple(p - c for p, c in zip(pi, costs))
    w = mg.weights
    h = tuple(
        v[i] + sum(w[i, j] * v[j] for j in range(mg.n_players) if j != i)
        for i in range(mg.n_players)
    )
    return MetaOutcome(
        profile=y,
        transformed_game=transformed,
        inner_result=inner,
        pi=pi,
        V=v,
        H=h,
        gamma_unique=inner.unique_certified,
    )


def enumerate_outcomes(
    mg: MetaGame, max_profiles: int = DEFAULT_MAX_PROFILES
) -> dict[MetaProfile, MetaOutcome]:
    """Evaluate every meta-profile, guarded against oversized spaces."""
    count = mg.profile_count()
    if count > max_profiles:
        raise CapacityError(
            f"meta-profile space has {count} profiles, exceeding the guard of "
            f"{max_profiles}"
        )
    return {y: evaluate(mg, y) for y in mg.profiles()}


def _equilibria(
    mg: MetaGame,
    outcomes: Mapping[MetaProfile, MetaOutcome],
    payoff_of: Callable[[MetaOutcome], Sequence[float]],
) -> list[MetaProfile]:
    found = []
    for y, outcome in outcomes.items():
        values = payoff_of(outcome)
        stable = True
        for i in range(mg.n_players):
            for alt in mg.meta_actions[i]:
                if alt == y.moves[i]:
                    continue
                if payoff_of(outcomes[y.with_move(i, alt)])[i] > values[i]:
                    stable = False
                    break
            if not stable:
                break
        if stable and mg.env_strategic:
            base_env = mg.env_payoff(y)
            for e in mg.env_moves:
                if e == y.env:
                    continue
                if mg.env_payoff(MetaProfile(y.moves, e)) > base_env:
                    stable = False
                    break
        if stable:
            found.append(y)
    return found


def meta_nash(
    mg: MetaGame, max_profiles: int = DEFAULT_MAX_PROFILES
) -> list[MetaProfile]:
    """Pure equilibria of the meta-game under selfish meta-payoffs V.

    Exhaustive: a profile survives unless some player (or the environment,
    when strategic) strictly gains by a unilateral deviation.
    """
    outcomes = enumerate_outcomes(mg, max_profiles)
    return _equilibria(mg, outcomes, lambda o: o.V)


def hyper_meta_nash(
    mg: MetaGame, max_profiles: int = DEFAULT_MAX_PROFILES
) -> list[MetaProfile]:
    """Pure equilibria under social payoffs H; the environment still uses its own payoff."""
    outcomes = enumerate_outcomes(mg, max_profiles)
    return _equilibria(mg, outcomes, lambda o: o.H)


# -- voting rules ----------------------------------------------------------


def unanimity_rule(
    reform: TransformationLike,
) -> Callable[[MetaProfile], TransformationLike]:
    """Implement the reform iff every player chooses Approve; else status quo."""

    def rule(y: MetaProfile) -> TransformationLike:
        if all(move == APPROVE for move in y.moves):
            return reform
        return identity()

    return rule


def majority_rule(
    reform: TransformationLike, threshold: int
) -> Callable[[MetaProfile], TransformationLike]:
    """Implement the reform iff at least ``threshold`` players choose Approve."""
    if threshold < 1:
        raise SpecFormatError("majority threshold must be at least 1")

    def rule(y: MetaProfile) -> TransformationLike:
        if threshold > len(y.moves):
            raise SpecFormatError(
                f"majority threshold {threshold} exceeds the {len(y.moves)} players"
            )
        votes = sum(1 for move in y.moves if move == APPROVE)
        return reform if votes >= threshold else identity()

    return rule


def approve_cost_table(
    costs: Sequence[float],
) -> Callable[[MetaProfile], tuple[float, ...]]:
    """Charge each player their entry whenever they vote Approve."""
    costs = tuple(float(c) for c in costs)

    def table(y: MetaProfile) -> tuple[float, ...]:
        return tuple(
            c if move == APPROVE else 0.0 for c, move in zip(costs, y.moves)
        )

    return table


def check_blocking(
    gains: Sequence[float], weights: np.ndarray | Sequence[Sequence[float]]
) -> tuple[bool, ...]:
    """Which players' spite makes them reject a reform that helps everyone.

    ``gains`` are the per-player payoff improvements from the reform, all
    required strictly positive.  Player ``i`` blocks when
    ``sum_j w_ij * gains_j < -gains_i``: their weighted loss from others'
    gains outweighs their own gain, so a unilateral Reject raises H_i.
    """
    gains = tuple(float(g) for g in gains)
    if any(g <= 0.0 for g in gains):
        raise SpecFormatError("blocking test requires strictly positive gains for every player")
    w = np.array(weights, dtype=float)
    n = len(gains)
    if w.shape != (n, n):
        raise SpecFormatError(f"weight matrix must be {n}x{n}, got {w.shape}")
    verdicts = []
    for i in range(n):
        social = sum(float(w[i, j]) * gains[j] for j in range(n) if j != i)
        verdicts.append(social < -gains[i])
    return tuple(verdicts)


@dataclass(frozen=True)
class ReformSupport:
    """Outcome of testing whether unanimous approval is self-enforcing.

    ``deviation_condition`` compares each player's gain against the cost gap
    between approving and their actual unilateral rejection; it holds for
    everyone exactly when Approve-all is a (selfish) meta-equilibrium.
    ``cost_gap_condition`` is the coarser test against the all-Reject cost
    profile; the two coincide whenever costs depend only on whether the
    reform is implemented.
    """

    supportable: bool
    approve_all_in_meta_nash: bool
    reform_payoffs: tuple[float, ...]
    status_quo_payoffs: tuple[float, ...]
    gains: tuple[float, ...]
    deviation_condition: tuple[bool, ...]
    cost_gap_condition: tuple[bool, ...]
    profile: MetaProfile


def check_reform_supportable(
    mg: MetaGame, max_profiles: int = DEFAULT_MAX_PROFILES
) -> ReformSupport:
    """Test unanimous approval in a MetaGame whose meta-actions are Approve/Reject."""
    for player, acts in zip(mg.base_game.players, mg.meta_actions):
        if set(acts) != {APPROVE, REJECT}:
            raise SpecFormatError(
                f"player {player!r} must have exactly the meta-actions "
                f"{APPROVE!r} and {REJECT!r}"
            )
    if len(mg.env_moves) != 1:
        raise SpecFormatError("reform-support check requires a passive, single-move environment")
    env = mg.env_moves[0]
    n = mg.n_players
    outcomes = enumerate_outcomes(mg, max_profiles)
    approve_all = MetaProfile((APPROVE,) * n, env)
    reject_all = MetaProfile((REJECT,) * n, env)
    reform_pi = outcomes[approve_all].pi
    status_pi = outcomes[reject_all].pi
    gains = tuple(r - s for r, s in zip(reform_pi, status_pi))
    cost_approve = tuple(float(c) for c in mg.costs(approve_all))
    cost_reject = tuple(float(c) for c in mg.costs(reject_all))
    cost_gap = tuple(
        gains[i] > cost_approve[i] - cost_reject[i] for i in range(n)
    )
    deviation = []
    for i in range(n):
        dev = approve_all.with_move(i, REJECT)
        v_stay = reform_pi[i] - cost_approve[i]
        v_leave = outcomes[dev].pi[i] - float(mg.costs(dev)[i])
        deviation.append(v_stay >= v_leave)
    deviation = tuple(deviation)
    member = approve_all in meta_nash(mg, max_profiles)
    return ReformSupport(
        supportable=all(deviation),
        approve_all_in_meta_nash=member,
        reform_payoffs=reform_pi,
        status_quo_payoffs=status_pi,
        gains=gains,
        deviation_condition=deviation,
        cost_gap_condition=cost_gap,
        profile=approve_all,
    )


# -- builders ---------------------------------------------------------------


def _trivial_game(players: Sequence[str], payoffs: Sequence[float]) -> Game:
    players = tuple(players)
    table = np.array(payoffs, dtype=float).reshape((1,) * len(players) + (len(players),))
    return Game(players, tuple(("stay",) for _ in players), table)


def reform_vote_metagame(
    status_quo_payoffs: Sequence[float],
    reform_payoffs: Sequence[float],
    rule: str | int = "unanimity",
    approve_costs: Sequence[float] | None = None,
    costs: Callable[[MetaProfile], Sequence[float]] | None = None,
    weights: np.ndarray | Sequence[Sequence[float]] | None = None,
    players: Sequence[str] | None = None,
) -> MetaGame:
    """A vote over moving from one exogenous payoff vector to another.

    The base game gives each player a single action paying the status-quo
    vector; the reform is a payoff shift to the reform vector, so the inner
    solve is exact and the meta layer is driven purely by the vote.  ``rule``
    is ``"unanimity"`` or an integer approval threshold.
    """
    status_quo = tuple(float(x) for x in status_quo_payoffs)
    reform_vec = tuple(float(x) for x in reform_payoffs)
    if len(reform_vec) != len(status_quo):
        raise SpecFormatError("status-quo and reform payoff vectors differ in length")
    if players is None:
        players = tuple(f"P{i + 1}" for i in range(len(status_quo)))
    players = tuple(players)
    if len(players) != len(status_quo):
        raise SpecFormatError("player list does not match the payoff vectors")
    base = _trivial_game(players, status_quo)
    shift = PriceOnly(
        tuple(
            (player, "stay", reform_vec[i] - status_quo[i])
            for i, player in enumerate(players)
        )
    )
    if rule == "unanimity":
        phi = unanimity_rule(shift)
    elif isinstance(rule, int):
        phi = majority_rule(shift, rule)
    else:
        raise SpecFormatError(f"unknown rule {rule!r}; expected 'unanimity' or a threshold")
    if costs is None:
        costs = (
            approve_cost_table(approve_costs) if approve_costs is not None else zero_costs
        )
    elif approve_costs is not None:
        raise SpecFormatError("pass either approve_costs or costs, not both")
    return MetaGame(
        base_game=base,
        meta_actions=tuple((APPROVE, REJECT) for _ in players),
        rule=phi,
        selection=SelectionRule(QreConfig.symmetric(base, beta=1.0, kappa=0.0)),
        costs=costs,
        weights=weights,
    )


def metagame_from_payoff_table(
    players: Sequence[str],
    meta_actions: Sequence[Sequence[str]],
    payoff_table: Mapping[tuple[str, ...], Sequence[float]],
    costs: Callable[[MetaProfile], Sequence[float]] | None = None,
    weights: np.ndarray | Sequence[Sequence[float]] | None = None,
) -> MetaGame:
    """A meta-game whose gross payoffs are given directly per move profile.

    Useful for exercising the equilibrium definitions on arbitrary tables;
    realized as payoff shifts on a trivial base game so that the inner
    evaluation is exact.
    """
    players = tuple(players)
    base = _trivial_game(players, (0.0,) * len(players))
    table = {
        tuple(moves): tuple(float(v) for v in values)
        for moves, values in payoff_table.items()
    }

    def rule(y: MetaProfile) -> TransformationLike:
        if y.moves not in table:
            raise SpecFormatError(f"payoff table is missing meta-profile {y.moves}")
        values = table[y.moves]
        return PriceOnly(
            tuple((player, "stay", values[i]) for i, player in enumerate(players))
        )

    return MetaGame(
        base_game=base,
        meta_actions=tuple(tuple(acts) for acts in meta_actions),
        rule=rule,
        selection=SelectionRule(QreConfig.symmetric(base, beta=1.0, kappa=0.0)),
        costs=costs if costs is not None else zero_costs,
        weights=weights,
    )


# -- JSON meta-game configs --------------------------------------------------


def _parse_weights(obj, players: Sequence[str]) -> np.ndarray:
    n = len(players)
    w = np.zeros((n, n))
    if obj is None:
        return w
    if isinstance(obj, Mapping):
        index = {p: i for i, p in enumerate(players)}
        for src, row in obj.items():
            if src not in index:
                raise SpecFormatError(f"weights reference unknown player {src!r}")
            if not isinstance(row, Mapping):
                raise SpecFormatError(f"weights for player {src!r} must be an object")
            for dst, value in row.items():
                if dst not in index:
                    raise SpecFormatError(f"weights reference unknown player {dst!r}")
                if dst == src:
                    raise SpecFormatError("weights must not include self-weights")
                w[index[src], index[dst]] = float(value)
        return w
    rows = list(obj)
    if len(rows) != n or any(len(row) != n for row in rows):
        raise SpecFormatError(f"weight matrix must be {n}x{n}")
    return np.array(rows, dtype=float)


def _parse_selection(obj, game: Game) -> SelectionRule:
    obj = obj or {}
    if not isinstance(obj, Mapping):
        raise SpecFormatError("field 'qre' must be an object")
    beta = obj.get("beta", 1.0)
    kappa = obj.get("kappa", 0.0)
    default_action = obj.get("default_action")
    if isinstance(default_action, Mapping):
        default_action = {str(k): str(v) for k, v in default_action.items()}
    cfg = QreConfig.symmetric(game, beta=float(beta), kappa=float(kappa),
                              default_action=default_action)
    return SelectionRule(
        config=cfg,
        policy=str(obj.get("policy", "nearest")),
        tol=float(obj.get("tol", DEFAULT_TOL)),
        max_iter=int(obj.get("max_iter", DEFAULT_MAX_ITER)),
        damping=obj.get("damping"),
    )


def parse_metagame(obj: Mapping, base_dir=None) -> MetaGame:
    """Build a meta-game from its JSON description.

    Two layouts are accepted.  A payoff-vote layout gives
    ``status_quo_payoffs`` and ``reform_payoffs`` plus a rule.  A game-backed
    layout gives ``base_game`` (inline object or a file path) and a
    ``reform`` transformation spec; the rule is ``"unanimity"`` or
    ``{"type": "majority", "threshold": k}``.
    """
    if not isinstance(obj, Mapping):
        raise SpecFormatError("meta-game description must be a JSON object")

    if "status_quo_payoffs" in obj or "reform_payoffs" in obj:
        for key in ("status_quo_payoffs", "reform_payoffs"):
            if key not in obj:
                raise SpecFormatError(f"meta-game description is missing field {key!r}")
        players = obj.get("players")
        status = obj["status_quo_payoffs"]
        reform = obj["reform_payoffs"]
        if isinstance(status, Mapping):
            if players is None:
                players = list(status.keys())
            status = [status[p] for p in players]
            reform = [reform[p] for p in players]
        if players is None:
            players = [f"P{i + 1}" for i in range(len(status))]
        rule = obj.get("rule", "unanimity")
        if isinstance(rule, Mapping):
            if rule.get("type") != "majority" or "threshold" not in rule:
                raise SpecFormatError("rule object must be {'type': 'majority', 'threshold': k}")
            rule = int(rule["threshold"])
        elif rule != "unanimity":
            raise SpecFormatError(f"unknown rule {rule!r}")
        approve_costs = obj.get("approve_costs")
        if isinstance(approve_costs, Mapping):
            approve_costs = [approve_costs[p] for p in players]
        return reform_vote_metagame(
            status,
            reform,
            rule=rule,
            approve_costs=approve_costs,
            weights=_parse_weights(obj.get("weights"), tuple(players)),
            players=players,
        )

    if "base_game" not in obj:
        raise SpecFormatError(
            "meta-game description needs either payoff vectors or a 'base_game'"
        )
    base_obj = obj["base_game"]
    if isinstance(base_obj, str):
        from pathlib import Path

        path = Path(base_obj)
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        base = load_game(path)
    else:
        base = parse_game(base_obj)
    players = base.players
    if "reform" not in obj:
        raise SpecFormatError("game-backed meta-game description is missing field 'reform'")
    reform = parse_transformation(obj["reform"], players)
    rule_obj = obj.get("rule", "unanimity")
    if rule_obj == "unanimity":
        phi = unanimity_rule(reform)
    elif isinstance(rule_obj, Mapping) and rule_obj.get("type") == "majority":
        if "threshold" not in rule_obj:
            raise SpecFormatError("majority rule needs a 'threshold'")
        phi = majority_rule(reform, int(rule_obj["threshold"]))
    else:
        raise SpecFormatError(f"unknown rule {rule_obj!r}")
    meta_actions = obj.get("meta_actions")
    if meta_actions is None:
        meta_actions = tuple((APPROVE, REJECT) for _ in players)
    else:
        if not isinstance(meta_actions, Mapping):
            raise SpecFormatError("field 'meta_actions' must map players to move lists")
        try:
            meta_actions = tuple(tuple(meta_actions[p]) for p in players)
        except KeyError as exc:
            raise SpecFormatError(
                f"meta_actions is missing player {exc.args[0]!r}"
            ) from None
    costs_obj = obj.get("costs")
    if costs_obj is None:
        costs = zero_costs
    elif isinstance(costs_obj, Mapping) and "approve" in costs_obj:
        approve = costs_obj["approve"]
        if isinstance(approve, Mapping):
            approve = [approve[p] for p in players]
        costs = approve_cost_table([float(c) for c in approve])
    else:
        raise SpecFormatError("field 'costs' must be an object with an 'approve' entry")
    return MetaGame(
        base_game=base,
        meta_actions=meta_actions,
        rule=phi,
        selection=_parse_selection(obj.get("qre"), base),
        costs=costs,
        weights=_parse_weights(obj.get("weights"), players),
    )
