"""Command-line entry points: parse, solve, evaluate, verify, sweep.

stdout carries data, stderr carries diagnostics.  Exit codes: 0 ok,
1 property failure, 2 parse/validation error, 3 enumeration cap exceeded,
4 unknown suite, 5 bad sweep specification.
"""

from __future__ import annotations

import argparse
import sys
import time

import numpy as np

from .errors import (
    CapExceededError,
    ModelValidationError,
    PosgParseError,
    UnknownSuiteError,
)
from .evaluate import evaluate_occupancy, simulate
from .model import CRITERIA, PosgModel, classify, parse_posg, reinterpret_criterion
from .occupancy import initial_occupancy
from .policies import policy_from_json, policy_to_json
from .sampling import random_joint_policy
from .solve import (
    DEFAULT_TOLERANCE,
    induced_normal_form,
    matrix_game_value,
    solve_dec,
    solve_stackelberg,
    solve_zero_sum,
    stackelberg_from_matrices,
)
from .verify import report_lines, run_suite

EXIT_OK = 0
EXIT_PROPERTY_FAILURE = 1
EXIT_PARSE = 2
EXIT_CAP = 3
EXIT_UNKNOWN_SUITE = 4
EXIT_BAD_SWEEP = 5


class _SweepSpecError(Exception):
    pass


def _load_model(args) -> PosgModel:
    with open(args.model, "r", encoding="utf-8") as fh:
        model = parse_posg(fh.read())
    if getattr(args, "start", None):
        if len(args.start) != model.n_states:
            raise ModelValidationError(
                f"--start needs {model.n_states} probabilities, got {len(args.start)}"
            )
        model = model.with_start(args.start)
    if getattr(args, "horizon", None):
        model = model.with_horizon(args.horizon)
    if getattr(args, "criterion", None):
        model = reinterpret_criterion(model, args.criterion)
    return model


def _fmt(x: float) -> str:
    return f"{x + 0.0 if x != 0 else 0.0:.10g}"


def cmd_parse(args) -> int:
    model = _load_model(args)
    print(f"agents: {model.n_agents}")
    print(f"states: {' '.join(model.states)}")
    for i in range(model.n_agents):
        print(f"actions_{i + 1}: {' '.join(model.actions[i])}")
    for i in range(model.n_agents):
        print(f"observations_{i + 1}: {' '.join(model.private_obs[i])}")
    print(f"public_observations: {' '.join(model.public_obs)}")
    print(f"discount: {_fmt(model.discount)}")
    print(f"horizon: {model.horizon}")
    print(f"start: {' '.join(_fmt(p) for p in model.start)}")
    print(f"criterion: {model.criterion}")
    print(f"classified: {classify(model)}")
    print(f"reward_bound: {_fmt(model.reward_bound)}")
    return EXIT_OK


def cmd_solve(args) -> int:
    model = _load_model(args)
    started = time.monotonic()
    caps = {}
    if args.cap:
        caps = {"cap_per_agent": args.cap, "cap_joint": args.cap}
    if model.criterion == "zerosum":
        tolerance = args.tolerance if args.tolerance is not None else DEFAULT_TOLERANCE
        eq = solve_zero_sum(model, tolerance=tolerance, **caps)
    elif model.criterion == "common":
        eq = solve_dec(model, **caps)
    elif model.criterion == "stackelberg":
        eq = solve_stackelberg(model, **caps)
    else:
        raise ModelValidationError(
            "no solver for criterion 'general'; pass --criterion to choose one"
        )
    runtime = time.monotonic() - started
    print(f"criterion: {eq.criterion}")
    print(f"horizon: {model.horizon}")
    for i, v in enumerate(eq.values):
        print(f"value_{i + 1}: {_fmt(v)}")
    for i, mix in enumerate(eq.mixtures):
        text = " ".join(f"{idx}:{_fmt(w)}" for idx, w in sorted(mix.items()))
        print(f"mixture_{i + 1}: {text}")
    print(f"method: {eq.metadata.get('method', '')}")
    print(f"runtime_s: {runtime:.3f}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model = _load_model(args)
    if args.policy:
        with open(args.policy, "r", encoding="utf-8") as fh:
            policy = policy_from_json(model, fh.read())
    else:
        rng = np.random.default_rng(args.seed)
        policy = random_joint_policy(model, rng)
        print("policy: random behavioral (seeded)", file=sys.stderr)
    s0 = initial_occupancy(model)
    for i in range(model.n_agents):
        print(f"value_{i + 1}: {_fmt(evaluate_occupancy(model, policy, s0, i))}")
    if args.episodes:
        result = simulate(model, policy, args.episodes, args.seed)
        for i in range(model.n_agents):
            print(
                f"simulated_{i + 1}: mean={_fmt(result.means[i])} "
                f"stderr={_fmt(result.stderrs[i])} episodes={result.episodes}"
            )
    if args.dump_policy:
        with open(args.dump_policy, "w", encoding="utf-8") as fh:
            fh.write(policy_to_json(model, policy))
    return EXIT_OK


def cmd_verify(args) -> int:
    model = _load_model(args)
    kwargs = {}
    if args.tolerance:
        kwargs = {"tolerance_solver": args.tolerance}
    reports = run_suite(
        model,
        suites=args.suite,
        seed=args.seed,
        n_samples=args.samples,
        fixture=args.model,
        **kwargs,
    )
    sys.stdout.write(report_lines(reports) if reports else "")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_PROPERTY_FAILURE


def cmd_sweep(args) -> int:
    model = _load_model(args)
    if model.n_states != 2:
        raise _SweepSpecError(
            f"belief-grid sweeps need exactly 2 states, model has {model.n_states}"
        )
    if args.grid < 2:
        raise _SweepSpecError("--grid must be at least 2")
    rows = []
    header = "belief,value"
    for b in np.linspace(0.0, 1.0, args.grid):
        m = model.with_start([float(b), float(1.0 - b)])
        if m.criterion == "zerosum":
            (A,), _ = induced_normal_form(m, m.horizon, [0])
            sol = matrix_game_value(
                A, args.tolerance if args.tolerance is not None else DEFAULT_TOLERANCE
            )
            components = A.min(axis=1)
            if not rows:
                header += "," + ",".join(
                    f"component_{j}" for j in range(components.shape[0])
                )
            rows.append(
                ",".join([_fmt(b), _fmt(sol.value)] + [_fmt(v) for v in components])
            )
        elif m.criterion == "common":
            rows.append(f"{_fmt(b)},{_fmt(solve_dec(m).values[0])}")
        elif m.criterion == "stackelberg":
            (L, F), _ = induced_normal_form(m, m.horizon, [0, 1])
            value, _, _ = stackelberg_from_matrices(L, F)
            rows.append(f"{_fmt(b)},{_fmt(value)}")
        else:
            raise _SweepSpecError("sweep needs a zerosum/common/stackelberg criterion")
    text = header + "\n" + "\n".join(rows) + "\n"
    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.output} ({args.grid} points)", file=sys.stderr)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ogs",
        description="Occupancy-state planning and verification for finite-horizon POSGs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, criterion=True):
        p.add_argument("model", help="path to a .posg model file")
        p.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
        p.add_argument("--tolerance", type=float, default=None, help="tolerance override")
        p.add_argument("--cap", type=int, default=None, help="enumeration cap override")
        p.add_argument("--horizon", type=int, default=None, help="horizon override")
        p.add_argument(
            "--start", type=float, nargs="+", default=None, help="start belief override"
        )
        if criterion:
            p.add_argument(
                "--criterion",
                choices=CRITERIA,
                default=None,
                help="reinterpret the game under this criterion "
                "(rebuilds opponent rewards from agent 1's table)",
            )

    p = sub.add_parser("parse", help="parse and validate a model, print a summary")
    common(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("solve", help="solve for the model's criterion at the start belief")
    common(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="evaluate a joint policy exactly and by simulation")
    common(p)
    p.add_argument("--policy", default=None, help="policy JSON file (default: seeded random)")
    p.add_argument("--episodes", type=int, default=0, help="Monte Carlo episodes")
    p.add_argument("--dump-policy", default=None, help="write the evaluated policy as JSON")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", help="run numerical verification suites")
    common(p)
    p.add_argument(
        "--suite",
        default="all",
        help="comma-separated: sufficiency, slave, master, lipschitz, controls, or all",
    )
    p.add_argument("--samples", type=int, default=50, help="samples per check")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="value curve over a belief grid, as CSV")
    common(p)
    p.add_argument("--grid", type=int, default=101, help="number of belief points")
    p.add_argument("--output", default=None, help="CSV output path (default stdout)")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (PosgParseError, ModelValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAP
    except UnknownSuiteError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN_SUITE
    except _SweepSpecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_SWEEP


if __name__ == "__main__":
    sys.exit(main())
