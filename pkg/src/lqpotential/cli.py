"""Command-line interface.

Exit codes: 0 when the verdict holds or the solver converged, 1 when a
verdict fails or the solver stops early, 2 for unreadable or invalid input.
"""

import argparse
import sys

import numpy as np

from . import io
from .examples import (
    CournotParams,
    FormationParams,
    make_cournot,
    make_formation,
    make_scalar_coupled,
    reference_cournot_params,
)
from .game import GameSpecError, InformationStructure, PolicyError, check_policy, policy_from_flat
from .optimizer import DescentConfig, Status, run_policy_gradient
from .potential import (
    build_potential_problem,
    check_c1_c2,
    check_identical_interest,
    jacobian_symmetry_check,
)
from .validation import check_lambdas
from .verification import certify_nash

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _emit(payload):
    sys.stdout.write(io.dumps(payload) + "\n")


def _structure(value):
    try:
        return InformationStructure.parse(value)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def cmd_check(args):
    game = io.load_game(args.spec)
    if args.criterion == "identical":
        report = check_identical_interest(game, args.tol)
    elif args.criterion == "c1c2":
        report = check_c1_c2(game, args.tol)
    else:
        report = jacobian_symmetry_check(
            game, structure=args.structure, tol=args.tol, n_probe=args.probes, seed=args.seed
        )
    _emit(report.to_dict())
    return EXIT_OK if report.verdict else EXIT_FAIL


def cmd_jacobian(args):
    game = io.load_game(args.spec)
    policy = None
    if args.policy:
        policy = check_policy(game, io.load_policy(args.policy))
    report = jacobian_symmetry_check(
        game,
        policy=policy,
        structure=None if policy is not None else args.structure,
        fd_step=args.fd_step,
        tol=args.tol,
        n_probe=args.probes,
        seed=args.seed,
    )
    _emit(report.to_dict())
    return EXIT_OK if report.verdict else EXIT_FAIL


def _c1c2_gate(game, tol):
    report = check_c1_c2(game, tol)
    if not report.verdict:
        _emit({"status": "NotPotential", "report": report.to_dict()})
    return report.verdict


def cmd_build_potential(args):
    game = io.load_game(args.spec)
    if not _c1c2_gate(game, args.tol):
        return EXIT_FAIL
    problem = build_potential_problem(game, args.tol)
    if args.output:
        io.write_json(problem.to_dict(), args.output)
        _emit({"written": args.output})
    else:
        _emit(problem.to_dict())
    return EXIT_OK


def cmd_solve(args):
    game = io.load_game(args.spec)
    if not _c1c2_gate(game, args.tol):
        return EXIT_FAIL
    problem = build_potential_problem(game, args.tol)
    structure = InformationStructure.DECOUPLED_STATE_FEEDBACK
    init = None
    if args.init != "zero":
        init = check_policy(game, io.load_policy(args.init))
        if init.structure is not structure:
            raise PolicyError("initial policy must use DecoupledStateFeedback")
        init = init.flat()
    config = DescentConfig(
        lambdas=check_lambdas(args.lambdas, game.n_agents),
        c1=args.c1,
        c2=args.c2,
        grad_tol=args.grad_tol,
        max_iters=args.max_iters,
        max_bisection=args.max_bisection,
        initial_trial_step=args.initial_step,
        initial_policy=init,
    )
    k, trace = run_policy_gradient(problem, config)
    policy = policy_from_flat(game, structure, k)
    if args.trace:
        trace.write_csv(args.trace)
    if args.plot_data:
        io.write_json(trace.plot_data(), args.plot_data)
    if args.policy_out:
        io.save_policy(policy, args.policy_out)
    _emit(
        {
            "status": trace.status.value,
            "message": trace.message,
            "iterations": trace.n_iter,
            "potential": trace.potential[-1],
            "grad_norm": trace.grad_norm[-1],
            "k": k,
            "policy": policy.to_dict(),
        }
    )
    return EXIT_OK if trace.status is Status.CONVERGED else EXIT_FAIL


def cmd_verify(args):
    game = io.load_game(args.spec)
    policy = check_policy(game, io.load_policy(args.policy))
    report = certify_nash(
        game,
        policy,
        tol=args.tol,
        n_deviations=args.deviations,
        radius=args.radius,
        seed=args.seed,
        slack=args.slack,
    )
    _emit(report.to_dict())
    return EXIT_OK if report.verdict else EXIT_FAIL


def _cournot_game(args):
    base = reference_cournot_params()
    if args.paper:
        return make_cournot(base)
    N = args.n_agents or base.n_agents
    T = args.horizon or base.horizon
    alpha = args.alpha if args.alpha else [2.0 - t / max(T - 1, 1) for t in range(T)]
    params = CournotParams(
        n_agents=N,
        horizon=T,
        final_costs=args.final_costs or (base.final_costs if N == base.n_agents else np.ones(N)),
        alpha=alpha,
        linear_price_offsets=args.price_offset,
        init_mean=args.mean or (base.init_mean if N == base.n_agents else np.ones(N)),
        init_vars=args.vars or (base.init_vars if N == base.n_agents else np.ones(N)),
    )
    return make_cournot(params)


def _formation_game(args):
    N, T = args.n_agents or 2, args.horizon or 5
    if args.weights:
        weights = np.asarray(args.weights, dtype=float)
        if weights.size != N * N:
            raise GameSpecError(f"--weights needs {N * N} values")
        weights = weights.reshape(N, N)
    else:
        weights = np.full((N, N), args.symmetric_weights)
    np.fill_diagonal(weights, 0.0)
    return make_formation(
        FormationParams(
            n_agents=N, block_dim=args.block_dim, horizon=T, weights=weights, action_cost=args.action_cost
        )
    )


def _scalar_coupled_game(args):
    q1 = np.array([1.0, 1.0, 1.0])
    q2 = np.array([1.0, 2.0, 1.5])
    r1 = np.array([[[1.0, 0.2], [0.2, 0.5]]] * 2)
    r2 = np.array([[[0.5, 0.3], [0.3, 1.0]]] * 2)
    if args.identical:
        q2, r2 = q1, r1
    elif args.open_loop_potential:
        q2 = q1
        r2 = r2.copy()
        r2[:, 0, 1] = r2[:, 1, 0] = r1[:, 0, 1]
    return make_scalar_coupled(q1, q2, r1, r2, a=args.a, b1=args.b1, b2=args.b2)


def cmd_example(args):
    builders = {"cournot": _cournot_game, "formation": _formation_game, "scalar-coupled": _scalar_coupled_game}
    game = builders[args.family](args)
    if args.output:
        io.save_game(game, args.output)
        _emit({"written": args.output, "decoupled": game.decoupled})
    else:
        _emit(game.to_dict())
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="lqpotential", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="run a potential-game criterion")
    p.add_argument("spec")
    p.add_argument("--criterion", choices=["identical", "c1c2", "jacobian"], default="c1c2")
    p.add_argument("--structure", type=_structure, default=InformationStructure.DECOUPLED_STATE_FEEDBACK)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--probes", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("jacobian", help="pseudo-gradient Jacobian symmetry test")
    p.add_argument("spec")
    p.add_argument("--structure", type=_structure, default=InformationStructure.DECOUPLED_STATE_FEEDBACK)
    p.add_argument("--policy", help="evaluation point (policy JSON)")
    p.add_argument("--fd-step", type=float, default=1e-4)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--probes", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_jacobian)

    p = sub.add_parser("build-potential", help="assemble the structured LQ problem")
    p.add_argument("spec")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_build_potential)

    p = sub.add_parser("solve", help="masked policy gradient with Wolfe steps")
    p.add_argument("spec")
    p.add_argument("--lambda", dest="lambdas", type=float, nargs="+")
    p.add_argument("--c1", type=float, default=1e-4)
    p.add_argument("--c2", type=float, default=0.9)
    p.add_argument("--grad-tol", type=float, default=1e-3)
    p.add_argument("--max-iters", type=int, default=50_000)
    p.add_argument("--max-bisection", type=int, default=100)
    p.add_argument("--initial-step", type=float, default=1.0)
    p.add_argument("--init", default="zero", help="'zero' or a policy JSON path")
    p.add_argument("--tol", type=float, default=1e-9, help="C1/C2 agreement tolerance")
    p.add_argument("--trace", help="write the per-step trace CSV here")
    p.add_argument("--plot-data", help="write iterate-wise plot data JSON here")
    p.add_argument("--policy-out", help="write the final policy JSON here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="certify a candidate Nash equilibrium")
    p.add_argument("spec")
    p.add_argument("--policy", required=True)
    p.add_argument("--tol", type=float, default=1e-3)
    p.add_argument("--deviations", type=int, default=100)
    p.add_argument("--radius", type=float, default=0.1)
    p.add_argument("--slack", type=float, default=1e-8)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("example", help="write a spec for a built-in game family")
    p.add_argument("family", choices=["cournot", "formation", "scalar-coupled"])
    p.add_argument("-o", "--output")
    p.add_argument("-N", "--n-agents", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--paper", action="store_true", help="cournot: the three-firm experiment instance")
    p.add_argument("--final-costs", type=float, nargs="+")
    p.add_argument("--alpha", type=float, nargs="+")
    p.add_argument("--price-offset", type=float, default=0.0)
    p.add_argument("--mean", type=float, nargs="+")
    p.add_argument("--vars", type=float, nargs="+")
    p.add_argument("--block-dim", type=int, default=1)
    p.add_argument("--symmetric-weights", type=float, default=1.0)
    p.add_argument("--weights", type=float, nargs="+", help="formation: row-major N x N weights")
    p.add_argument("--action-cost", type=float, default=1.0)
    p.add_argument("--identical", action="store_true")
    p.add_argument("--open-loop-potential", action="store_true")
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b1", type=float, default=1.0)
    p.add_argument("--b2", type=float, default=1.0)
    p.set_defaults(func=cmd_example)
    return parser


_DEFAULT_TOL = {"identical": 1e-9, "c1c2": 1e-9, "jacobian": 1e-5}


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "check" and args.tol is None:
        args.tol = _DEFAULT_TOL[args.criterion]
    try:
        return args.func(args)
    except (GameSpecError, PolicyError, ValueError) as exc:
        _emit({"error": str(exc)})
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
