"""Logit quantal-response equilibria with switching costs.

Two solvers live here.  ``solve_qre`` handles arbitrary finite games by
damped simultaneous iteration of the logit response map.  ``solve_binary``
handles the symmetric 2x2 coordination model in its scalar form, where the
equilibrium condition reduces to ``p = 1 / (1 + exp(beta * delta(p)))`` and a
contraction certificate ``beta * (alpha + gamma) < 4`` guarantees uniqueness.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ContractionError, NumericError, SpecFormatError, UnknownLabelError
from .games import Game, MixedProfile, expected_payoff

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100_000
# exp() overflows just above 709; beyond that the logistic saturates to 0/1.
_EXP_CLIP = 709.0

SELECTION_POLICIES = ("lowest", "highest", "nearest")


@dataclass(frozen=True)
class QreConfig:
    """Per-player solver inputs: precision, switching cost, default action.

    A player pays ``kappa`` whenever they play anything other than their
    ``default_action``; ``beta`` scales payoff differences inside the logit
    response (0 means uniformly random choice).
    """

    beta: Mapping[str, float]
    kappa: Mapping[str, float]
    default_action: Mapping[str, str]

    def __post_init__(self) -> None:
        beta = dict(self.beta)
        kappa = dict(self.kappa)
        default = dict(self.default_action)
        for name, table in (("beta", beta), ("kappa", kappa)):
            for player, value in table.items():
                value = float(value)
                if not math.isfinite(value) or value < 0.0:
                    raise SpecFormatError(
                        f"{name} for player {player!r} must be finite and >= 0, got {value!r}"
                    )
                table[player] = value
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "default_action", default)

    def validate_for(self, game: Game) -> None:
        for player in game.players:
            for name, table in (
                ("beta", self.beta),
                ("kappa", self.kappa),
                ("default_action", self.default_action),
            ):
                if player not in table:
                    raise SpecFormatError(f"{name} is missing player {player!r}")
        for player, action in self.default_action.items():
            game.action_index(player, action)

    @classmethod
    def symmetric(
        cls,
        game: Game,
        beta: float = 1.0,
        kappa: float = 0.0,
        default_action: str | Mapping[str, str] | None = None,
    ) -> "QreConfig":
        """Same beta/kappa for every player; default is each first-listed action."""
        if default_action is None:
            defaults = {p: acts[0] for p, acts in zip(game.players, game.actions)}
        elif isinstance(default_action, str):
            defaults = {p: default_action for p in game.players}
        else:
            defaults = dict(default_action)
        cfg = cls(
            beta={p: beta for p in game.players},
            kappa={p: kappa for p in game.players},
            default_action=defaults,
        )
        cfg.validate_for(game)
        return cfg


@dataclass(frozen=True)
class QreResult:
    """Fixed point returned by :func:`solve_qre`."""

    profile: MixedProfile
    residual: float
    iterations: int
    converged: bool
    unique_certified: bool


def effective_payoff(
    game: Game, cfg: QreConfig, player: str, action: str, others: MixedProfile
) -> float:
    """Expected payoff minus the switching cost when off the default action."""
    value = expected_payoff(game, player, action, others)
    if action != cfg.default_action[player]:
        value -= cfg.kappa[player]
    return value


def _effective_vector(
    game: Game, cfg: QreConfig, sigma: Sequence[np.ndarray], pi: int
) -> np.ndarray:
    """Effective payoffs of every action of player ``pi`` given mixes ``sigma``."""
    arr = game.payoffs[..., pi]
    for j in range(game.n_players - 1, -1, -1):
        if j == pi:
            continue
        arr = np.tensordot(arr, sigma[j], axes=([j if j < pi else j], [0]))
    player = game.players[pi]
    default = cfg.default_action[player]
    kappa = cfg.kappa[player]
    if kappa != 0.0:
        arr = arr.copy()
        di = game.actions[pi].index(default)
        arr -= kappa
        arr[di] += kappa
    return arr


def _logit(values: np.ndarray, beta: float) -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NumericError("effective payoffs are not finite")
    z = beta * values
    z = z - z.max()
    e = np.exp(z)
    return e / e.sum()


def logit_response(
    game: Game, cfg: QreConfig, others: MixedProfile, player: str
) -> np.ndarray:
    """Logit choice probabilities of one player against the others' mixes.

    Computed with max-subtraction so that no overflow occurs even when
    ``beta * |payoff|`` is large; ties in effective payoffs yield the exact
    uniform vector.
    """
    pi = game.player_index(player)
    values = np.array(
        [
            effective_payoff(game, cfg, player, action, others)
            for action in game.actions[pi]
        ]
    )
    return _logit(values, cfg.beta[player])


def _symmetric_binary_match(game: Game, cfg: QreConfig) -> "BinaryCoordParams | None":
    """Interpret (game, cfg) as the symmetric binary coordination model.

    Returns the scalar parameters when the game is 2x2 with identical action
    lists, the payoff table is symmetric, and both players share beta, kappa,
    and default action; otherwise None.  Any tax is already baked into the
    payoff entries, so the returned parameters carry ``tax=0``.
    """
    if game.n_players != 2 or any(len(a) != 2 for a in game.actions):
        return None
    if game.actions[0] != game.actions[1]:
        return None
    p1, p2 = game.players
    if cfg.beta[p1] != cfg.beta[p2] or cfg.kappa[p1] != cfg.kappa[p2]:
        return None
    if cfg.default_action[p1] != cfg.default_action[p2]:
        return None
    u1 = game.payoffs[..., 0]
    u2 = game.payoffs[..., 1]
    if not np.array_equal(u1, u2.T):
        return None
    di = game.actions[0].index(cfg.default_action[p1])
    oi = 1 - di
    try:
        return BinaryCoordParams(
            a=float(u1[di, di]),
            b=float(u1[oi, oi]),
            c=float(u1[di, oi]),
            d=float(u1[oi, di]),
            kappa=cfg.kappa[p1],
            beta=cfg.beta[p1],
            tax=0.0,
        )
    except (SpecFormatError, ValueError):
        return None


def solve_qre(
    game: Game,
    cfg: QreConfig,
    init: MixedProfile | None = None,
    damping: float | None = None,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> QreResult:
    """Damped simultaneous iteration of the logit response map.

    Each step replaces ``sigma`` by ``(1 - damping) * sigma +
    damping * response(sigma)`` and stops when the sup-norm residual
    ``|sigma - response(sigma)|`` drops to ``tol``.  When damping is not
    given it defaults to 1.0 if a uniqueness certificate applies and 0.5
    otherwise.  Non-convergence is reported via the ``converged`` flag, not
    an exception.

    ``unique_certified`` is set when the response map is provably a
    contraction: either it is constant (every player has a single action, or
    every beta is zero) or the game matches the symmetric binary pattern and
    ``beta * (alpha + gamma) < 4`` holds.
    """
    if tol <= 0.0:
        raise SpecFormatError("tol must be positive")
    cfg.validate_for(game)
    constant_map = all(len(acts) == 1 for acts in game.actions) or all(
        cfg.beta[p] == 0.0 for p in game.players
    )
    params = _symmetric_binary_match(game, cfg)
    certified = constant_map or (params is not None and params.contraction_certified)
    if damping is None:
        damping = 1.0 if certified else 0.5
    if not 0.0 < damping <= 1.0:
        raise SpecFormatError("damping must lie in (0, 1]")
    if init is None:
        init = MixedProfile.uniform(game)
    init.validate_for(game)
    sigma = [np.array(init[p], dtype=float) for p in game.players]
    betas = [cfg.beta[p] for p in game.players]

    residual = math.inf
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        target = [
            _logit(_effective_vector(game, cfg, sigma, i), betas[i])
            for i in range(game.n_players)
        ]
        residual = max(
            float(np.max(np.abs(s - t))) for s, t in zip(sigma, target)
        )
        if residual <= tol:
            converged = True
            break
        if damping == 1.0:
            sigma = target
        else:
            sigma = [
                (1.0 - damping) * s + damping * t for s, t in zip(sigma, target)
            ]
    profile = MixedProfile(
        {p: sigma[i] for i, p in enumerate(game.players)}
    )
    return QreResult(
        profile=profile,
        residual=residual,
        iterations=iterations,
        converged=converged,
        unique_certified=certified,
    )


def equilibrium_payoffs(
    game: Game, cfg: QreConfig, profile: MixedProfile
) -> tuple[float, ...]:
    """Expected effective payoff of each player at a mixed profile.

    Switching costs are charged in proportion to the probability of playing
    off the default action; any taxes are already part of the payoff table.
    """
    cfg.validate_for(game)
    profile.validate_for(game)
    sigma = [np.array(profile[p], dtype=float) for p in game.players]
    out = []
    for i, player in enumerate(game.players):
        values = _effective_vector(game, cfg, sigma, i)
        out.append(float(np.dot(sigma[i], values)))
    return tuple(out)


# -- symmetric binary coordination model ----------------------------------


@dataclass(frozen=True)
class BinaryCoordParams:
    """Parameters of the symmetric 2x2 coordination model with a taxed default.

    Payoff matrix rows are the focal player's action (default first):
    ``(default, default) -> a``, ``(default, other) -> c``,
    ``(other, default) -> d``, ``(other, other) -> b``, with ``b > a`` so the
    non-default outcome is jointly better.  ``tax`` is levied on the default
    action of both players; ``kappa`` is paid for playing the other action.
    """

    a: float
    b: float
    c: float
    d: float
    kappa: float = 0.0
    beta: float = 1.0
    tax: float = 0.0

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d", "kappa", "beta", "tax"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise SpecFormatError(f"parameter {name!r} must be finite")
            object.__setattr__(self, name, value)
        if not self.a > self.c:
            raise SpecFormatError("need a > c (coordinating on the default beats mismatch)")
        if not self.b > self.d:
            raise SpecFormatError("need b > d (coordinating on the alternative beats mismatch)")
        if not self.b > self.a:
            raise SpecFormatError("need b > a (the alternative outcome dominates)")
        if not self.a - self.d > 0.0:
            raise SpecFormatError("need a > d (derived gap gamma must be positive)")
        if self.kappa < 0.0:
            raise SpecFormatError("kappa must be >= 0")
        if self.beta < 0.0:
            raise SpecFormatError("beta must be >= 0")
        if self.tax < 0.0:
            raise SpecFormatError("tax must be >= 0")

    @property
    def alpha(self) -> float:
        return self.b - self.c

    @property
    def gamma(self) -> float:
        return self.a - self.d

    @property
    def slope(self) -> float:
        return self.alpha + self.gamma

    @property
    def contraction_certified(self) -> bool:
        """``beta * (alpha + gamma) < 4``: the scalar logit map is a contraction."""
        return self.beta * self.slope < 4.0

    def with_tax(self, tax: float) -> "BinaryCoordParams":
        return dataclasses.replace(self, tax=tax)


@dataclass(frozen=True)
class BinaryResult:
    """Scalar fixed point of the binary model.

    ``p`` is the equilibrium probability of the (taxed) default action.
    ``fixed_points`` lists every root found; it is a singleton whenever the
    contraction certificate holds.
    """

    p: float
    residual: float
    iterations: int
    converged: bool
    unique_certified: bool
    fixed_points: tuple[float, ...]


def payoff_gap(params: BinaryCoordParams, p: float) -> float:
    """Effective-payoff advantage of the alternative action at belief ``p``.

    Equals ``alpha - kappa - p * (alpha + gamma) + tax``; see
    :func:`reformlab.coordination.delta` for the public alias.
    """
    return params.alpha - params.kappa - p * params.slope + params.tax


def logistic_map(params: BinaryCoordParams, p: float) -> float:
    """One application of ``p -> 1 / (1 + exp(beta * payoff_gap(p)))``.

    Exponents beyond the float range short-circuit to the 0/1 limit, so very
    large taxes underflow to probability 0 instead of overflowing.
    """
    z = params.beta * payoff_gap(params, p)
    if z > _EXP_CLIP:
        return 0.0
    if z < -_EXP_CLIP:
        return 1.0
    return 1.0 / (1.0 + math.exp(z))


def fixed_point_gap(params: BinaryCoordParams, p: float) -> float:
    """Root function ``F(p) = p - logistic_map(p)`` whose zeros are equilibria."""
    return p - logistic_map(params, p)


def _newton_polish(params: BinaryCoordParams, p: float, rounds: int = 50) -> float:
    """Tighten a near-root of F with guarded Newton steps (monotone improvement only)."""
    best = p
    best_gap = abs(fixed_point_gap(params, best))
    for _ in range(rounds):
        if best_gap == 0.0:
            break
        ell = logistic_map(params, best)
        slope = 1.0 - params.beta * params.slope * ell * (1.0 - ell)
        if slope == 0.0:
            break
        candidate = best - fixed_point_gap(params, best) / slope
        candidate = min(1.0, max(0.0, candidate))
        candidate_gap = abs(fixed_point_gap(params, candidate))
        if candidate_gap >= best_gap:
            break
        best, best_gap = candidate, candidate_gap
    return best


def find_all_fixed_points(
    params: BinaryCoordParams, grid_size: int = 10_001
) -> tuple[float, ...]:
    """All fixed points of the binary logit map on [0, 1].

    Scans ``F(p) = p - L(p)`` on a uniform grid, bisects every sign-change
    bracket down to width 1e-12, and deduplicates roots within 1e-9.  Under
    the contraction certificate exactly one root exists.
    """
    if grid_size < 2:
        raise SpecFormatError("grid_size must be at least 2")
    xs = [i / (grid_size - 1) for i in range(grid_size)]
    fs = [fixed_point_gap(params, x) for x in xs]
    roots: list[float] = []
    for i in range(grid_size - 1):
        lo, hi = xs[i], xs[i + 1]
        flo, fhi = fs[i], fs[i + 1]
        if flo == 0.0:
            roots.append(lo)
            continue
        if fhi == 0.0:
            continue  # picked up as the next bracket's left endpoint
        if (flo < 0.0) == (fhi < 0.0):
            continue
        while hi - lo > 1e-12:
            mid = 0.5 * (lo + hi)
            fmid = fixed_point_gap(params, mid)
            if fmid == 0.0:
                lo = hi = mid
                break
            if (fmid < 0.0) == (flo < 0.0):
                lo, flo = mid, fmid
            else:
                hi = mid
        roots.append(0.5 * (lo + hi))
    if fs[-1] == 0.0:
        roots.append(xs[-1])
    roots.sort()
    deduped: list[float] = []
    for r in roots:
        if not deduped or r - deduped[-1] > 1e-9:
            deduped.append(r)
    return tuple(deduped)


def _select_root(roots: Sequence[float], policy: str, init_p: float) -> float:
    if policy == "lowest":
        return roots[0]
    if policy == "highest":
        return roots[-1]
    if policy == "nearest":
        return min(roots, key=lambda r: (abs(r - init_p), r))
    raise SpecFormatError(
        f"unknown selection policy {policy!r}; expected one of {SELECTION_POLICIES}"
    )


def solve_binary(
    params: BinaryCoordParams,
    init_p: float = 0.5,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    policy: str = "nearest",
    grid_size: int = 10_001,
) -> BinaryResult:
    """Equilibrium probability of the default action in the binary model.

    Under the contraction certificate the logit map is iterated from
    ``init_p`` (and polished with guarded Newton steps), which finds the
    unique fixed point.  Otherwise every fixed point is enumerated and one is
    returned according to ``policy`` (lowest / highest / nearest to
    ``init_p``); the result then carries ``unique_certified=False`` and the
    full root list so callers cannot silently depend on the selection.
    """
    if not 0.0 <= init_p <= 1.0:
        raise SpecFormatError("init_p must lie in [0, 1]")
    if tol <= 0.0:
        raise SpecFormatError("tol must be positive")
    if policy not in SELECTION_POLICIES:
        raise SpecFormatError(
            f"unknown selection policy {policy!r}; expected one of {SELECTION_POLICIES}"
        )
    if params.contraction_certified:
        p = init_p
        converged = False
        iterations = 0
        for iterations in range(1, max_iter + 1):
            target = logistic_map(params, p)
            if abs(p - target) <= tol:
                converged = True
                break
            p = target
        if converged:
            p = _newton_polish(params, p)
        residual = abs(fixed_point_gap(params, p))
        return BinaryResult(
            p=p,
            residual=residual,
            iterations=iterations,
            converged=converged and residual <= tol,
            unique_certified=True,
            fixed_points=(p,),
        )
    roots = find_all_fixed_points(params, grid_size)
    polished = tuple(_newton_polish(params, r) for r in roots)
    p = _select_root(polished, policy, init_p)
    residual = abs(fixed_point_gap(params, p))
    return BinaryResult(
        p=p,
        residual=residual,
        iterations=0,
        converged=residual <= tol,
        unique_certified=False,
        fixed_points=polished,
    )


@dataclass(frozen=True)
class StaticsGradients:
    """Implicit-function derivatives of the equilibrium probability ``p*``."""

    p_star: float
    d_kappa: float
    d_tax: float
    d_alpha: float
    d_gamma: float

    def signs(self) -> tuple[int, int, int, int]:
        sign = lambda x: (x > 0) - (x < 0)
        return (
            sign(self.d_kappa),
            sign(self.d_tax),
            sign(self.d_alpha),
            sign(self.d_gamma),
        )


def comparative_statics(
    params: BinaryCoordParams,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> StaticsGradients:
    """Analytic sensitivities of ``p*`` to kappa, the tax, alpha, and gamma.

    With ``L = L(p*)`` and ``F_p = 1 - beta * (alpha + gamma) * L * (1 - L)``:

    * ``dp*/dkappa =  beta * L(1-L) / F_p``
    * ``dp*/dtax   = -beta * L(1-L) / F_p``
    * ``dp*/dalpha = -beta * (1-p*) * L(1-L) / F_p``
    * ``dp*/dgamma =  beta * p* * L(1-L) / F_p``

    Requires the contraction certificate, which keeps ``F_p`` positive and
    pins the signs (+, -, -, +); otherwise :class:`ContractionError`.
    """
    if not params.contraction_certified:
        raise ContractionError(
            "comparative statics need beta * (alpha + gamma) < 4; "
            f"got {params.beta * params.slope:.6g}"
        )
    result = solve_binary(params, tol=tol, max_iter=max_iter)
    p_star = result.p
    ell = logistic_map(params, p_star)
    lw = ell * (1.0 - ell)
    f_p = 1.0 - params.beta * params.slope * lw
    base = params.beta * lw / f_p
    return StaticsGradients(
        p_star=p_star,
        d_kappa=base,
        d_tax=-base,
        d_alpha=-params.beta * (1.0 - p_star) * lw / f_p,
        d_gamma=params.beta * p_star * lw / f_p,
    )


def finite_difference_statics(
    params: BinaryCoordParams,
    h: float = 1e-5,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> StaticsGradients:
    """Finite-difference counterpart of :func:`comparative_statics`.

    Re-solves the fixed point at perturbed parameters; central differences
    where the perturbation stays feasible, forward differences at a domain
    boundary (kappa or tax within ``h`` of zero).  Alpha is varied through
    ``b`` and gamma through ``a`` so the other gap stays put.
    """
    if not params.contraction_certified:
        raise ContractionError(
            "finite-difference statics need beta * (alpha + gamma) < 4; "
            f"got {params.beta * params.slope:.6g}"
        )

    def solve_at(**changes: float) -> float:
        return solve_binary(
            dataclasses.replace(params, **changes), tol=tol, max_iter=max_iter
        ).p

    def diff(field: str, base: float, lower_bound: float | None) -> float:
        if lower_bound is not None and base - h < lower_bound:
            return (solve_at(**{field: base + h}) - solve_at(**{field: base})) / h
        return (
            solve_at(**{field: base + h}) - solve_at(**{field: base - h})
        ) / (2.0 * h)

    p_star = solve_binary(params, tol=tol, max_iter=max_iter).p
    return StaticsGradients(
        p_star=p_star,
        d_kappa=diff("kappa", params.kappa, 0.0),
        d_tax=diff("tax", params.tax, 0.0),
        d_alpha=diff("b", params.b, None),
        d_gamma=diff("a", params.a, None),
    )
