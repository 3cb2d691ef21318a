"""Command-line entry point.

Subcommands map one-to-one onto the studies:

- ``simulate``       one path at the smallest (epsilon, lam) cell; exports the
                     trajectory and the jump skeleton; for zero noise and a
                     linear nonlinearity the run is gated against the exact
                     diagonal recursion and the continuum flow.
- ``inequalities``   pointwise, variational and noise-hypothesis audits.
- ``lambda-study``   coupled Cauchy contraction along the lambda ladder.
- ``eps-study``      coupled Cauchy contraction along the epsilon ladder.
- ``apriori``        moment bound, uniformity in lambda, exponential shape.
- ``uniqueness``     solver-configuration independence + perturbation decay.

Exit codes: 0 all checks passed, 1 at least one check failed (reports are
still written), 2 usage or scenario errors, 3 numerical failure (inner
iteration or quadrature did not converge).

Every run writes ``report.json``, one CSV per table, ``scenario.txt`` (the
canonical scenario) and ``metadata.json``; only the metadata carries a
timestamp, so reports and tables are byte-identical across reruns.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import (
    apriori_study,
    eps_cauchy_study,
    lambda_cauchy_study,
    uniqueness_check,
    _constants_used,
)
from .noise import audit_h2_h3, export_noise_path, path_seed, sample_noise_path
from .nonlinearity import verify_psi_inequalities
from .operators import QuadratureToleranceError
from .reporting import PropertyCheck, StudyReport, Table
from .scenario import (
    ScenarioError,
    build_plan,
    load_scenario,
    scenario_hash,
    serialize_scenario,
)
from .spaces import F_STAR, L2, norm
from .stepper import StepperConvergenceError, solve_regularized_path
from .variational import check_variational_conditions

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="levypme",
        description="Simulation and verification harness for jump-driven "
        "monotone SPDE regularization cascades.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("simulate", "simulate one path at the smallest regularization cell"),
        ("inequalities", "audit the pointwise/variational/noise hypotheses"),
        ("lambda-study", "coupled Cauchy study along the lambda ladder"),
        ("eps-study", "coupled Cauchy study along the epsilon ladder"),
        ("apriori", "moment bound along the lambda ladder"),
        ("uniqueness", "solver-configuration independence check"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--scenario", required=True, help="scenario file (key = value)")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--paths", type=int, default=None, help="override path count")
        p.add_argument("--step", type=float, default=None, help="override step size")
    return parser


# -- simulate ---------------------------------------------------------------------


def _linear_oracle_checks(plan, traj, epsilon, lam) -> list:
    """Exact gates available when the drift is diagonal (linear psi, no noise).

    The scheme then reduces mode-by-mode to x -> x / (1 + dt kappa_k); the
    trajectory must match that recursion to 1e-10 and stay within the provable
    one-sided distance of the continuum flow exp(-kappa_k t) x.
    """
    slope = plan.psi.linear_slope
    kappa = (epsilon + plan.op.eigenvalues) * (slope + lam)
    dts = np.diff(traj.times)
    factors = 1.0 / (1.0 + dts[:, None] * kappa[None, :])
    oracle = plan.initial.coefficients[None, :] * np.concatenate(
        [np.ones((1, kappa.size)), np.cumprod(factors, axis=0)]
    )
    discrete_gap = float(np.sqrt(((traj.states - oracle) ** 2).sum(axis=1)).max())

    horizon = float(traj.times[-1])
    continuum = plan.initial.coefficients * np.exp(-kappa * horizon)
    actual = float(np.sqrt(((traj.states[-1] - continuum) ** 2).sum()))
    # Per mode: 0 <= prod(1+dt kappa)^-1 - e^(-kappa t) <= e^(-kappa t) * t h kappa^2 / 2.
    h = float(dts.max())
    per_mode = np.abs(plan.initial.coefficients) * np.exp(-kappa * horizon) * (
        0.5 * horizon * h * kappa**2
    )
    bound = float(np.sqrt((per_mode**2).sum())) + 1e-12
    return [
        PropertyCheck(
            name="linear_recursion_oracle",
            passed=bool(discrete_gap <= 1e-10),
            detail=f"sup l2 gap to diagonal recursion {discrete_gap:.3e} <= 1e-10",
        ),
        PropertyCheck(
            name="continuum_flow_bound",
            passed=bool(actual <= bound),
            detail=(
                f"terminal gap to exp flow {actual:.3e} <= derived bound {bound:.3e}"
            ),
        ),
    ]


def _run_simulate(plan, scenario) -> tuple[StudyReport, dict]:
    epsilon = plan.epsilon_ladder[-1]
    lam = plan.lambda_ladder[-1]
    noise_path = sample_noise_path(plan.noise, plan.horizon, path_seed(plan.master_seed, 0))
    config = plan.step_config(epsilon, lam)
    traj = solve_regularized_path(
        plan.op, plan.psi, plan.noise, noise_path, config, plan.horizon, plan.initial
    )

    checks = [
        PropertyCheck(
            name="solver_converged",
            passed=True,
            detail=f"{traj.times.size} grid rows, {noise_path.jump_count} jumps",
        )
    ]
    if plan.psi.linear_slope is not None and noise_path.jump_count == 0 and (
        not plan.noise.coefficient.state_dependent
    ) and plan.noise.h2_closed_form(plan.op) == 0.0:
        checks.extend(_linear_oracle_checks(plan, traj, epsilon, lam))

    final = traj.final_field()
    base_times = traj.times[traj.base_mask]
    summary_rows = tuple(
        zip(
            base_times.tolist(),
            np.sqrt(traj.running_sup_squared(L2)).tolist(),
            traj.running_integral_squared(L2).tolist(),
        )
    )
    report = StudyReport(
        kind="simulate",
        parameters={
            "epsilon": epsilon,
            "lam": lam,
            "horizon": plan.horizon,
            "step_size": plan.step_size,
            "master_seed": plan.master_seed,
            "psi_kind": plan.psi.kind,
            "modes": int(plan.op.mode_count),
            "jumps": int(noise_path.jump_count),
        },
        constants_used=_constants_used(plan, epsilon, lam),
        checks=checks,
        extra={
            "final_norm_l2": norm(plan.op, final, L2),
            "final_norm_fstar": norm(plan.op, final, F_STAR),
            "sup_norm_l2": traj.sup_norm(L2),
        },
        tables=[
            Table(
                name="norm_summary",
                columns=("t", "running_sup_l2", "running_integral_l2_sq"),
                rows=summary_rows,
            )
        ],
    )
    artifacts = {"trajectory": traj, "noise_path": noise_path, "model": plan.noise}
    return report, artifacts


# -- inequalities ----------------------------------------------------------------


def _run_inequalities(plan, scenario) -> tuple[StudyReport, dict]:
    epsilon = plan.epsilon_ladder[-1]
    psi_report = verify_psi_inequalities(plan.psi)
    var_report = check_variational_conditions(plan.op, plan.psi, plan.noise, epsilon)
    noise_report = audit_h2_h3(plan.op, plan.noise)

    checks = [
        PropertyCheck(
            name="psi_pointwise",
            passed=psi_report.passed,
            detail=(
                f"min pair slack {psi_report.min_pair_slack:.3e}, "
                f"min self slack {psi_report.min_self_slack:.3e} "
                f"over {psi_report.sample_count} samples"
            ),
        )
    ]
    rows = []
    for cond in var_report.conditions:
        if cond.skipped_reason is not None:
            detail = f"skipped: {cond.skipped_reason}"
        else:
            detail = (
                f"min slack {cond.min_slack:.3e} over {cond.checked} samples"
                + (f"; witness {cond.witness}" if cond.witness else "")
            )
        checks.append(PropertyCheck(name=cond.name, passed=cond.passed, detail=detail))
        rows.append(
            (
                cond.name,
                cond.checked,
                cond.min_slack,
                cond.violation_count,
                cond.skipped_reason or "",
            )
        )
    checks.append(
        PropertyCheck(
            name="noise_h2_h3",
            passed=noise_report.passed,
            detail=(
                f"h2 empirical {noise_report.h2_empirical:.6g} <= "
                f"closed form {noise_report.h2_closed_form:.6g}; "
                f"h3 empirical {noise_report.h3_empirical:.6g} <= "
                f"closed form {noise_report.h3_closed_form:.6g}"
            ),
        )
    )

    report = StudyReport(
        kind="inequalities",
        parameters={
            "epsilon": epsilon,
            "psi_kind": plan.psi.kind,
            "noise_kind": plan.noise.coefficient.__class__.__name__,
            "modes": int(plan.op.mode_count),
        },
        constants_used=_constants_used(plan, epsilon, plan.lambda_ladder[-1]),
        checks=checks,
        extra={
            "h2_empirical": noise_report.h2_empirical,
            "h3_empirical": noise_report.h3_empirical,
            "min_pair_slack": psi_report.min_pair_slack,
            "min_self_slack": psi_report.min_self_slack,
        },
        tables=[
            Table(
                name="variational_conditions",
                columns=("condition", "checked", "min_slack", "violations", "skipped"),
                rows=tuple(rows),
            )
        ],
    )
    return report, {}


# -- driver -----------------------------------------------------------------------


def _dispatch(command: str, plan, scenario) -> tuple[StudyReport, dict]:
    if command == "simulate":
        return _run_simulate(plan, scenario)
    if command == "inequalities":
        return _run_inequalities(plan, scenario)
    if command == "lambda-study":
        return lambda_cauchy_study(plan, plan.epsilon_ladder[-1]), {}
    if command == "eps-study":
        return eps_cauchy_study(plan), {}
    if command == "apriori":
        return apriori_study(plan, plan.epsilon_ladder[-1]), {}
    if command == "uniqueness":
        return uniqueness_check(plan, plan.epsilon_ladder[-1]), {}
    raise AssertionError(command)


def _write_outputs(out_dir: Path, report, artifacts, scenario, args) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    report.write(out_dir)
    (out_dir / "scenario.txt").write_text(serialize_scenario(scenario))
    if "trajectory" in artifacts:
        artifacts["trajectory"].export(out_dir / "trajectory.csv")
    if "noise_path" in artifacts:
        export_noise_path(
            artifacts["noise_path"], artifacts["model"], out_dir / "noise_path.csv"
        )
    metadata = {
        "command": args.command,
        "created": datetime.now(timezone.utc).isoformat(),
        "scenario_file": str(args.scenario),
        "scenario_hash": scenario_hash(scenario),
        "version": __version__,
        "overrides": {
            k: v
            for k, v in (("seed", args.seed), ("paths", args.paths), ("step", args.step))
            if v is not None
        },
    }
    (out_dir / "metadata.json").write_text(
        json.dumps(metadata, sort_keys=True, indent=2) + "\n"
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    try:
        scenario = load_scenario(args.scenario)
    except FileNotFoundError:
        print(f"error: scenario file not found: {args.scenario}", file=sys.stderr)
        return 2
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    try:
        plan = build_plan(
            scenario, paths=args.paths, step_size=args.step, master_seed=args.seed
        )
        report, artifacts = _dispatch(args.command, plan, scenario)
    except (StepperConvergenceError, QuadratureToleranceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    _write_outputs(Path(args.out), report, artifacts, scenario, args)

    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        print(f"[{status}] {check.name}: {check.detail}")
    print(
        f"{args.command}: {'all checks passed' if report.passed else 'CHECKS FAILED'}; "
        f"outputs in {args.out}"
    )
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
