"""Closed-form utilities for the symmetric binary coordination model.

Covers the payoff-gap function, the critical tax that pushes the equilibrium
to one half, tax sweeps with welfare accounting, and the welfare comparison
between taxing the default action and deleting it outright.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractionError, SpecFormatError
from .games import Game
from .qre import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    BinaryCoordParams,
    QreConfig,
    payoff_gap,
    solve_binary,
)

WELFARE_MODES = ("expected-full", "expected-game", "revenue-recycled")


def coordination_game(
    a: float, b: float, c: float, d: float, players: tuple[str, str] = ("P1", "P2")
) -> Game:
    """The symmetric 2x2 game on actions X (status quo) and Y.

    Rows are the focal player's action: ``(X,X) -> a``, ``(X,Y) -> c``,
    ``(Y,X) -> d``, ``(Y,Y) -> b``.
    """
    payoffs = np.array(
        [
            [[a, a], [c, d]],
            [[d, c], [b, b]],
        ],
        dtype=float,
    )
    return Game(players, (("X", "Y"), ("X", "Y")), payoffs)


def binary_game(params: BinaryCoordParams) -> Game:
    """The full 2x2 game matching the scalar parameters, tax included."""
    return coordination_game(
        params.a - params.tax, params.b, params.c - params.tax, params.d
    )


def binary_config(params: BinaryCoordParams, game: Game | None = None) -> QreConfig:
    """Symmetric solver config for the binary model: default X, shared beta/kappa."""
    if game is None:
        game = binary_game(params)
    return QreConfig.symmetric(
        game, beta=params.beta, kappa=params.kappa, default_action="X"
    )


def delta(params: BinaryCoordParams, p: float) -> float:
    """Effective-payoff advantage of the alternative action at belief ``p``.

    ``alpha - kappa - p * (alpha + gamma) + tax`` with ``alpha = b - c`` and
    ``gamma = a - d``; affine in ``p`` with slope ``-(alpha + gamma)``.
    """
    if not 0.0 <= p <= 1.0:
        raise SpecFormatError("p must lie in [0, 1]")
    return payoff_gap(params, p)


def critical_tax(params: BinaryCoordParams) -> float:
    """The tax at which the symmetric equilibrium sits exactly at one half.

    ``kappa - (alpha - gamma) / 2``.  May be negative, meaning the default
    action is already the minority choice untaxed; the value is returned
    as-is since that sign is informative.
    """
    return params.kappa - (params.alpha - params.gamma) / 2.0


def welfare(params: BinaryCoordParams, p: float, mode: str = "expected-full") -> float:
    """Per-player welfare at the symmetric mix ``p``.

    ``expected-game``: the expected game payoff
    ``p^2 a + p(1-p)(c+d) + (1-p)^2 b`` with no switching-cost or tax terms.
    ``expected-full``: subtracts the expected switching cost ``(1-p) kappa``
    and the expected tax burden ``p * tax``.
    ``revenue-recycled``: as expected-full but with the tax handed back as a
    lump sum (only the switching-cost term remains subtracted).
    """
    if not 0.0 <= p <= 1.0:
        raise SpecFormatError("p must lie in [0, 1]")
    base = (
        p * p * params.a
        + p * (1.0 - p) * (params.c + params.d)
        + (1.0 - p) * (1.0 - p) * params.b
    )
    if mode == "expected-game":
        return base
    if mode == "expected-full":
        return base - (1.0 - p) * params.kappa - p * params.tax
    if mode == "revenue-recycled":
        return base - (1.0 - p) * params.kappa
    raise SpecFormatError(f"unknown welfare mode {mode!r}; expected one of {WELFARE_MODES}")


@dataclass(frozen=True)
class SweepRow:
    """One line of a tax sweep: ``t = math.inf`` marks the deletion row."""

    t: float
    p: float
    sw: float
    fixed_point_count: int

    @property
    def is_deletion(self) -> bool:
        return math.isinf(self.t)


def deletion_row(params: BinaryCoordParams, mode: str = "expected-full") -> SweepRow:
    """The outcome of deleting the default action: ``p = 0`` exactly.

    With the default gone, the forced move to the alternative carries no
    switching cost and nothing is left to tax, so welfare is the full
    coordination payoff ``b`` in every accounting mode.
    """
    stripped = dataclasses.replace(params, kappa=0.0, tax=0.0)
    return SweepRow(
        t=math.inf,
        p=0.0,
        sw=welfare(stripped, 0.0, mode),
        fixed_point_count=1,
    )


def sweep_tax(
    params: BinaryCoordParams,
    taxes: list[float] | tuple[float, ...],
    include_deletion: bool = False,
    mode: str = "expected-full",
    policy: str = "nearest",
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> list[SweepRow]:
    """Equilibrium probability and welfare for each tax level.

    ``taxes`` must be nonnegative and sorted ascending.  The ``tax`` field of
    ``params`` is ignored; each row re-solves at its own tax.  The number of
    fixed points found is recorded per row (always 1 under the contraction
    certificate).
    """
    taxes = [float(t) for t in taxes]
    if any(t < 0.0 for t in taxes):
        raise SpecFormatError("taxes must be nonnegative")
    if any(t2 < t1 for t1, t2 in zip(taxes, taxes[1:])):
        raise SpecFormatError("taxes must be sorted in ascending order")
    if mode not in WELFARE_MODES:
        raise SpecFormatError(f"unknown welfare mode {mode!r}; expected one of {WELFARE_MODES}")
    rows = []
    for t in taxes:
        at_t = params.with_tax(t)
        result = solve_binary(at_t, tol=tol, max_iter=max_iter, policy=policy)
        if not result.converged:
            raise ContractionError(
                f"tax sweep failed to converge at t={t}; residual {result.residual:.3e}"
            )
        rows.append(
            SweepRow(
                t=t,
                p=result.p,
                sw=welfare(at_t, result.p, mode),
                fixed_point_count=len(result.fixed_points),
            )
        )
    if include_deletion:
        rows.append(deletion_row(params, mode))
    return rows


@dataclass(frozen=True)
class ThresholdReport:
    """Which instrument wins on net welfare, and the best tax found."""

    dominant: str  # "deletion" or "taxation"
    deletion_welfare: float
    best_tax: float
    best_tax_welfare: float


def tax_vs_deletion_threshold(
    params: BinaryCoordParams,
    deletion_cost: float,
    tax_cost=None,
    mode: str = "expected-full",
    max_tax: float = 100.0,
    grid_points: int = 1001,
    policy: str = "nearest",
) -> ThresholdReport:
    """Compare deleting the default action against the best available tax.

    Deletion nets ``b - deletion_cost``.  The tax side is a grid search over
    ``grid_points`` taxes in ``[0, max_tax]`` of ``welfare(p_t) -
    tax_cost(t)``; no finite tax drives ``p_t`` all the way to zero, so with
    a positive switching cost and free deletion the deletion side strictly
    wins.  Requires the contraction certificate so the welfare-of-tax curve
    is single-valued.
    """
    if not params.contraction_certified:
        raise ContractionError(
            "threshold search needs beta * (alpha + gamma) < 4; "
            f"got {params.beta * params.slope:.6g}"
        )
    if grid_points < 2 or max_tax <= 0.0 or not math.isfinite(max_tax):
        raise SpecFormatError("tax grid must span a positive range with at least 2 points")
    if mode not in WELFARE_MODES:
        raise SpecFormatError(f"unknown welfare mode {mode!r}; expected one of {WELFARE_MODES}")
    if tax_cost is None:
        tax_cost = lambda t: 0.0
    deletion_net = params.b - deletion_cost
    best_tax = 0.0
    best_net = -math.inf
    for k in range(grid_points):
        t = max_tax * k / (grid_points - 1)
        at_t = params.with_tax(t)
        p_t = solve_binary(at_t, policy=policy).p
        net = welfare(at_t, p_t, mode) - float(tax_cost(t))
        if net > best_net:
            best_net = net
            best_tax = t
    dominant = "deletion" if deletion_net > best_net else "taxation"
    return ThresholdReport(
        dominant=dominant,
        deletion_welfare=deletion_net,
        best_tax=best_tax,
        best_tax_welfare=best_net,
    )
