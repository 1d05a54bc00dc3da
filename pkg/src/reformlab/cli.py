"""Command-line surface: solve games, sweep taxes, check reform equilibria.

Commands write deterministic CSV (and optional SVG) files into the output
directory and print a human-readable summary; ``--format csv`` switches the
stdout rendering to the same CSV.  Exit codes: 0 success, 1 input error,
2 numeric or capacity failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib.resources import files as resource_files
from pathlib import Path
from typing import Mapping, Sequence

from .chart import tax_sweep_svg
from .coordination import (
    WELFARE_MODES,
    critical_tax,
    sweep_tax,
)
from .errors import (
    CapacityError,
    ContractionError,
    EvaluationError,
    InfeasibleTransformError,
    LabelCollisionError,
    NumericError,
    SpecFormatError,
    UnknownLabelError,
)
from .games import parse_game
from .metagame import (
    APPROVE,
    DEFAULT_MAX_PROFILES,
    REJECT,
    check_blocking,
    check_reform_supportable,
    enumerate_outcomes,
    hyper_meta_nash,
    meta_nash,
    parse_metagame,
)
from .qre import (
    BinaryCoordParams,
    QreConfig,
    comparative_statics,
    finite_difference_statics,
    solve_qre,
)
from .transforms import PriceOnly

_INPUT_ERRORS = (
    SpecFormatError,
    UnknownLabelError,
    LabelCollisionError,
    InfeasibleTransformError,
)
_NUMERIC_ERRORS = (ContractionError, CapacityError, EvaluationError, NumericError)


class _Parser(argparse.ArgumentParser):
    """argparse variant that reports usage problems with exit code 1."""

    def error(self, message: str) -> None:  # noqa: D401 - argparse contract
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _fmt(value) -> str:
    """Stable scalar formatting: 17 significant digits for floats."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _load_json(path: str | Path):
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(
            f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from None
    except OSError as exc:
        raise SpecFormatError(f"{path}: {exc.strerror or exc}") from None


def _out_dir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise SpecFormatError(f"cannot create output directory {out}: {exc}") from None
    return out


def _write_text(path: Path, text: str) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _provenance(command: str, settings: Mapping[str, object]) -> list[str]:
    lines = [f"# reformlab {command}"]
    for key in sorted(settings):
        lines.append(f"# {key}={_fmt(settings[key])}")
    return lines


# -- solve -------------------------------------------------------------------


def _config_from(obj: Mapping, args) -> tuple[float, float, object, float]:
    qre_obj = obj.get("qre", {})
    if not isinstance(qre_obj, Mapping):
        raise SpecFormatError("field 'qre' must be an object")
    beta = args.beta if args.beta is not None else float(qre_obj.get("beta", 1.0))
    kappa = args.kappa if args.kappa is not None else float(qre_obj.get("kappa", 0.0))
    defaults = qre_obj.get("default_action")
    if defaults is not None and not isinstance(defaults, Mapping):
        raise SpecFormatError("field 'qre.default_action' must map players to actions")
    tax = args.tax if args.tax is not None else float(qre_obj.get("tax", 0.0))
    if tax < 0.0:
        raise SpecFormatError("tax must be >= 0")
    return beta, kappa, defaults, tax


def cmd_solve(args) -> int:
    obj = _load_json(args.game)
    game = parse_game(obj)
    beta, kappa, defaults, tax = _config_from(obj, args)
    cfg = QreConfig.symmetric(game, beta=beta, kappa=kappa, default_action=defaults)
    if tax > 0.0:
        levy = PriceOnly(
            tuple((p, cfg.default_action[p], -tax) for p in game.players)
        )
        game = levy.apply(game)
    result = solve_qre(game, cfg, tol=args.tol, max_iter=args.max_iter,
                       damping=args.damping)

    settings = {
        "game": str(args.game),
        "beta": beta,
        "kappa": kappa,
        "tax": tax,
        "tol": args.tol,
        "max_iter": args.max_iter,
    }
    lines = _provenance("solve", settings)
    lines.append(f"# residual={_fmt(result.residual)}")
    lines.append(f"# iterations={result.iterations}")
    lines.append(f"# converged={_fmt(result.converged)}")
    lines.append(f"# unique_certified={_fmt(result.unique_certified)}")
    lines.append("player,action,probability")
    for player in game.players:
        vec = result.profile[player]
        for action, prob in zip(game.actions_of(player), vec):
            lines.append(f"{player},{action},{_fmt(float(prob))}")
    csv_text = "\n".join(lines) + "\n"
    out = _out_dir(args)
    _write_text(out / "equilibrium.csv", csv_text)

    if args.format == "csv":
        print(csv_text, end="")
    else:
        for player in game.players:
            vec = result.profile[player]
            mix = "  ".join(
                f"{action}={float(prob):.6f}"
                for action, prob in zip(game.actions_of(player), vec)
            )
            print(f"player {player}: {mix}")
        print(
            f"residual={result.residual:.3e}  iterations={result.iterations}  "
            f"converged={result.converged}  unique_certified={result.unique_certified}"
        )
    print(f"wrote {out / 'equilibrium.csv'}")
    if not result.converged:
        print("error: solver did not converge", file=sys.stderr)
        return 2
    return 0


# -- tax sweeps ----------------------------------------------------------------


def _binary_params_from(obj: Mapping, args) -> BinaryCoordParams:
    required = ("a", "b", "c", "d")
    for key in required:
        if key not in obj:
            raise SpecFormatError(f"binary model file is missing field {key!r}")
    beta = args.beta if args.beta is not None else float(obj.get("beta", 1.0))
    kappa = args.kappa if args.kappa is not None else float(obj.get("kappa", 0.0))
    return BinaryCoordParams(
        a=float(obj["a"]),
        b=float(obj["b"]),
        c=float(obj["c"]),
        d=float(obj["d"]),
        kappa=kappa,
        beta=beta,
    )


def _parse_taxes(text: str) -> list[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise SpecFormatError(f"cannot parse tax list {text!r}") from None


def _run_sweep(command: str, obj: Mapping, args) -> int:
    params = _binary_params_from(obj, args)
    if args.taxes is not None:
        taxes = _parse_taxes(args.taxes)
    else:
        taxes = [float(t) for t in obj.get("taxes", [])]
    include_deletion = args.deletion or bool(obj.get("deletion", False))
    mode = args.welfare_mode or str(obj.get("welfare_mode", "expected-full"))
    rows = sweep_tax(params, taxes, include_deletion=include_deletion, mode=mode)
    tbar = critical_tax(params)

    settings = {
        "a": params.a,
        "b": params.b,
        "c": params.c,
        "d": params.d,
        "kappa": params.kappa,
        "beta": params.beta,
        "deletion": include_deletion,
        "welfare_mode": mode,
    }
    lines = _provenance(command, settings)
    lines.append(f"# critical_tax={_fmt(tbar)}")
    lines.append("t,p,sw,fixed_points")
    for row in rows:
        t_field = "deletion" if row.is_deletion else _fmt(row.t)
        lines.append(
            f"{t_field},{_fmt(row.p)},{_fmt(row.sw)},{row.fixed_point_count}"
        )
    csv_text = "\n".join(lines) + "\n"
    out = _out_dir(args)
    _write_text(out / "sweep.csv", csv_text)
    written = [out / "sweep.csv"]
    if args.svg:
        svg_text = tax_sweep_svg(rows, critical=tbar if tbar >= 0 else None)
        _write_text(out / "sweep.svg", svg_text)
        written.append(out / "sweep.svg")

    if args.format == "csv":
        print(csv_text, end="")
    else:
        print(f"{'t':>10}  {'p_t':>8}  {'SW(p_t)':>8}  {'roots':>5}")
        for row in rows:
            t_field = "deletion" if row.is_deletion else f"{row.t:.4g}"
            print(
                f"{t_field:>10}  {row.p:>8.2f}  {row.sw:>8.2f}  "
                f"{row.fixed_point_count:>5}"
            )
        print(f"critical tax: {tbar:.6g}")
    for path in written:
        print(f"wrote {path}")
    return 0


def cmd_sweep_tax(args) -> int:
    obj = _load_json(args.game)
    return _run_sweep("sweep-tax", obj, args)


def cmd_reproduce_table(args) -> int:
    text = resource_files("reformlab").joinpath("data/reproduce_table.json").read_text(
        encoding="utf-8"
    )
    obj = json.loads(text)
    return _run_sweep("reproduce-table", obj, args)


# -- comparative statics -------------------------------------------------------


def cmd_comparative_statics(args) -> int:
    obj = _load_json(args.game)
    params = _binary_params_from(obj, args)
    if args.tax is not None:
        if args.tax < 0.0:
            raise SpecFormatError("tax must be >= 0")
        params = params.with_tax(args.tax)
    elif "tax" in obj:
        params = params.with_tax(float(obj["tax"]))
    analytic = comparative_statics(params)
    numeric = finite_difference_statics(params)
    degenerate = params.beta == 0.0

    names = ("kappa", "tax", "alpha", "gamma")
    expected = ("+", "-", "-", "+")
    an_values = (analytic.d_kappa, analytic.d_tax, analytic.d_alpha, analytic.d_gamma)
    fd_values = (numeric.d_kappa, numeric.d_tax, numeric.d_alpha, numeric.d_gamma)

    settings = {
        "a": params.a,
        "b": params.b,
        "c": params.c,
        "d": params.d,
        "kappa": params.kappa,
        "beta": params.beta,
        "tax": params.tax,
    }
    lines = _provenance("comparative-statics", settings)
    lines.append(f"# p_star={_fmt(analytic.p_star)}")
    lines.append("parameter,analytic,finite_difference,relative_error,expected_sign,check")
    report = []
    all_pass = True
    for name, want, an, fd in zip(names, expected, an_values, fd_values):
        rel = abs(an - fd) / max(abs(fd), 1e-300)
        if degenerate and an == 0.0:
            check = "degenerate-PASS"
        else:
            got = "+" if an > 0 else "-" if an < 0 else "0"
            check = "PASS" if got == want else "FAIL"
        all_pass = all_pass and check.endswith("PASS")
        lines.append(f"{name},{_fmt(an)},{_fmt(fd)},{_fmt(rel)},{want},{check}")
        report.append((name, an, fd, rel, want, check))
    csv_text = "\n".join(lines) + "\n"
    out = _out_dir(args)
    _write_text(out / "comparative_statics.csv", csv_text)

    if args.format == "csv":
        print(csv_text, end="")
    else:
        print(f"p* = {analytic.p_star:.12g}")
        print(
            f"{'parameter':<10} {'analytic':>15} {'finite-diff':>15} "
            f"{'rel-error':>10} {'expected':>8}  check"
        )
        for name, an, fd, rel, want, check in report:
            print(
                f"{name:<10} {an:>15.8e} {fd:>15.8e} {rel:>10.2e} {want:>8}  {check}"
            )
    print(f"wrote {out / 'comparative_statics.csv'}")
    return 0 if all_pass else 2


# -- meta-games ------------------------------------------------------------------


def _max_profiles() -> int:
    raw = os.environ.get("METAGAME_MAX_PROFILES")
    if raw is None:
        return DEFAULT_MAX_PROFILES
    try:
        return int(raw)
    except ValueError:
        raise SpecFormatError(
            f"METAGAME_MAX_PROFILES must be an integer, got {raw!r}"
        ) from None


def cmd_meta(args) -> int:
    obj = _load_json(args.meta)
    mg = parse_metagame(obj, base_dir=Path(args.meta).parent)
    guard = _max_profiles()
    outcomes = enumerate_outcomes(mg, guard)
    selfish = set(meta_nash(mg, guard))
    social = set(hyper_meta_nash(mg, guard))
    players = mg.base_game.players

    uncertified = sum(1 for o in outcomes.values() if not o.gamma_unique)
    settings = {"meta": str(args.meta), "max_profiles": guard}
    lines = _provenance("meta", settings)
    header = ["profile", "env", "in_meta_nash", "in_hyper_meta_nash"]
    header += [f"V_{p}" for p in players] + [f"H_{p}" for p in players]
    lines.append(",".join(header))
    for y, outcome in outcomes.items():
        row = [
            "+".join(y.moves),
            y.env,
            _fmt(y in selfish),
            _fmt(y in social),
        ]
        row += [_fmt(v) for v in outcome.V]
        row += [_fmt(h) for h in outcome.H]
        lines.append(",".join(row))
    csv_text = "\n".join(lines) + "\n"
    out = _out_dir(args)
    _write_text(out / "meta.csv", csv_text)

    def describe(y) -> str:
        outcome = outcomes[y]
        v = ", ".join(f"{x:.6g}" for x in outcome.V)
        h = ", ".join(f"{x:.6g}" for x in outcome.H)
        env = "" if len(mg.env_moves) == 1 else f"  env={y.env}"
        return f"  ({', '.join(y.moves)}){env}  V=({v})  H=({h})"

    if args.format == "csv":
        print(csv_text, end="")
    else:
        if uncertified:
            print(
                f"warning: inner equilibrium selection uncertified for {uncertified} "
                "profile(s); the configured root-selection policy was applied"
            )
        print("Meta-Nash equilibria (selfish payoffs V):")
        listed = [y for y in outcomes if y in selfish]
        print("\n".join(describe(y) for y in listed) if listed else "  <none>")
        print("Hyper-Meta-Nash equilibria (social payoffs H):")
        listed = [y for y in outcomes if y in social]
        print("\n".join(describe(y) for y in listed) if listed else "  <none>")

        unanimity_shape = all(
            set(acts) == {APPROVE, REJECT} for acts in mg.meta_actions
        ) and obj.get("rule", "unanimity") == "unanimity"
        if unanimity_shape:
            support = check_reform_supportable(mg, guard)
            print("Unanimous-reform check:")
            print(
                f"  gains (reform - status quo): "
                f"({', '.join(f'{g:.6g}' for g in support.gains)})"
            )
            print(
                f"  deviation condition per player: "
                f"{', '.join(str(b) for b in support.deviation_condition)}"
            )
            print(
                f"  cost-gap condition per player:  "
                f"{', '.join(str(b) for b in support.cost_gap_condition)}"
            )
            print(f"  Approve-all is a Meta-Nash equilibrium: {support.approve_all_in_meta_nash}")
            if all(g > 0.0 for g in support.gains):
                verdicts = check_blocking(support.gains, mg.weights)
                for player, blocks in zip(players, verdicts):
                    print(f"  player {player} blocks under social payoffs: {blocks}")
                in_social = support.profile in social
                print(f"  Approve-all is a Hyper-Meta-Nash equilibrium: {in_social}")
            else:
                print("  blocking check skipped: gains are not strictly positive")
    print(f"wrote {out / 'meta.csv'}")
    return 0


# -- parser --------------------------------------------------------------------


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", default="out", help="output directory (default: out)")
    sub.add_argument(
        "--format",
        choices=("csv", "table"),
        default="table",
        help="stdout rendering (files are always CSV)",
    )


def _add_binary_overrides(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--beta", type=float, default=None, help="override precision beta")
    sub.add_argument("--kappa", type=float, default=None, help="override switching cost kappa")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="reformlab",
        description=(
            "Logit equilibria with switching costs, tax/deletion comparisons, "
            "and reform meta-games."
        ),
    )
    commands = parser.add_subparsers(dest="command", required=True)

    solve = commands.add_parser("solve", help="solve one game for its logit equilibrium")
    solve.add_argument("--game", required=True, help="game spec file (JSON)")
    _add_binary_overrides(solve)
    solve.add_argument(
        "--tax",
        type=float,
        default=None,
        help="tax levied on each player's default action",
    )
    solve.add_argument("--damping", type=float, default=None)
    solve.add_argument("--tol", type=float, default=1e-12)
    solve.add_argument("--max-iter", type=int, default=100_000)
    _add_common(solve)
    solve.set_defaults(func=cmd_solve)

    sweep = commands.add_parser("sweep-tax", help="solve the binary model over a tax grid")
    sweep.add_argument("--game", required=True, help="binary model parameter file (JSON)")
    _add_binary_overrides(sweep)
    sweep.add_argument("--taxes", default=None, help="comma-separated taxes, ascending")
    sweep.add_argument("--deletion", action="store_true", help="append the deletion row")
    sweep.add_argument("--svg", action="store_true", help="also write an SVG chart")
    sweep.add_argument("--welfare-mode", choices=WELFARE_MODES, default=None)
    _add_common(sweep)
    sweep.set_defaults(func=cmd_sweep_tax)

    statics = commands.add_parser(
        "comparative-statics",
        help="analytic vs finite-difference sensitivities of the binary model",
    )
    statics.add_argument("--game", required=True, help="binary model parameter file (JSON)")
    _add_binary_overrides(statics)
    statics.add_argument("--tax", type=float, default=None)
    _add_common(statics)
    statics.set_defaults(func=cmd_comparative_statics)

    meta = commands.add_parser("meta", help="enumerate meta-game equilibria")
    meta.add_argument("--meta", required=True, help="meta-game config file (JSON)")
    _add_common(meta)
    meta.set_defaults(func=cmd_meta)

    repro = commands.add_parser(
        "reproduce-table",
        help="run the built-in example tax sweep (a=6 b=7 c=1 d=2 kappa=1.5 beta=0.3836)",
    )
    repro.add_argument("--svg", action="store_true", help="also write an SVG chart")
    repro.add_argument("--welfare-mode", choices=WELFARE_MODES, default=None)
    repro.set_defaults(
        func=cmd_reproduce_table, beta=None, kappa=None, taxes=None, deletion=False
    )
    _add_common(repro)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except _NUMERIC_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
