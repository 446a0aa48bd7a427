"""Command-line interface: run, sweep, validate, rate."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import analysis, harness, models
from .fem import assemble
from .integrator import NewmarkParams, stable_dt
from .medium import (
    MediumParams,
    potential_nonlinearity,
    pressure_nonlinearity,
    stability_parameter,
)
from .mesh import interval_mesh


def _apply_newmark_overrides(config: harness.SweepConfig, args) -> harness.SweepConfig:
    updates = {}
    if args.cfl is not None:
        updates["newmark"] = dataclasses.replace(config.newmark, cfl=args.cfl)
    if getattr(args, "deltas", None):
        updates["deltas"] = tuple(float(d) for d in args.deltas.split(","))
    if args.tau is not None:
        updates["overrides"] = {**config.overrides, "tau": args.tau}
    if args.out is not None:
        updates["output_dir"] = args.out
    if getattr(args, "parallelism", None) is not None:
        updates["parallelism"] = args.parallelism
    if args.seed is not None:
        updates["seed"] = args.seed
    return dataclasses.replace(config, **updates) if updates else config


def _cmd_sweep(args) -> int:
    config = _apply_newmark_overrides(harness.parse_config(args.config), args)
    result = harness.run_sweep(config)
    for record in result.records:
        if record.error is not None:
            print(f"delta={record.delta:g}  FAILED: {record.error}")
        else:
            print(f"delta={record.delta:g}  err_rel={record.err_rel:.6e}  max_fp={record.max_fp_iters}")
    if result.fit is not None:
        print(f"fitted rate: err ~ delta^{result.fit.slope:.4f}")
    out_dir = config.output_dir
    if out_dir is not None:
        for path in harness.write_outputs(result, out_dir):
            print(f"wrote {path}")
    return 0 if all(r.error is None for r in result.records) else 1


def _cmd_run(args) -> int:
    config = _apply_newmark_overrides(harness.parse_config(args.config), args)
    delta = args.delta if args.delta is not None else config.deltas[0]
    spec = models.make_problem(config.scenario, delta, **config.overrides)
    result = harness.run_problem(
        spec,
        config.newmark,
        delta_bar=config.resolved_delta_bar if config.deltas[-1] >= delta else delta,
        snapshot_times=config.snapshot_times,
    )
    print(
        f"{spec.name}: delta={delta:g} steps={result.steps} dt={result.dt:.6e} "
        f"max_fp={result.max_fp_iters}"
    )
    emax = float(result.trajectory.energy.max())
    print(f"max energy {emax:.6e}, final energy {result.trajectory.energy[-1]:.6e}")
    if config.output_dir is not None:
        out = Path(config.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        for t_snap, state in sorted(result.snapshots.items()):
            path = out / f"snapshot_delta{harness._fmt(delta)}_t{harness._fmt(t_snap)}.csv"
            harness.write_snapshot_csv(path, result.mesh, state)
            print(f"wrote {path}")
    return 0


def _cmd_rate(args) -> int:
    records = harness.read_sweep_csv(args.sweep_csv)
    try:
        fit = analysis.fit_rate(records)
    except analysis.InsufficientDataError as exc:
        print(f"cannot fit rate: {exc}", file=sys.stderr)
        return 1
    payload = harness.rate_payload(fit)
    text = json.dumps(payload, indent=2, sort_keys=True)
    if args.out is not None:
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}")
    else:
        print(text)
    return 0


def _validate_checks(quick: bool):
    """Yield (name, ok, detail) for the built-in oracle battery."""
    mesh = interval_mesh(1.0, 2)
    ops = assemble(mesh)
    mass_ok = np.allclose(ops.mass.toarray(), [[1.0 / 3.0]], rtol=1e-14)
    stiff_ok = np.allclose(ops.stiffness.toarray(), [[4.0]], rtol=1e-14)
    yield ("interval element matrices", mass_ok and stiff_ok, "M=[[1/3]], K=[[4]] on 2 elements")

    water = MediumParams(tau=1.5e-5, c=1500.0, delta=0.0, rho=1000.0, b_over_a=5.0)
    k = pressure_nonlinearity(water)
    kok = math.isclose(k, 3.5 / (1000.0 * 1500.0**2), rel_tol=1e-14)
    kap = potential_nonlinearity(water)
    kapok = math.isclose(kap, 5.0 / 1500.0**2, rel_tol=1e-14)
    yield ("derived nonlinearity coefficients", kok and kapok, f"k={k:.6e}, kappa={kap:.6e}")

    gamma = stability_parameter(water.with_delta(1e-3))
    gok = math.isclose(gamma, 1.0 - 1.5e-5 * 1500.0**2 / (1e-3 + 1.5e-5 * 1500.0**2), rel_tol=1e-14)
    yield ("stability parameter", gok and stability_parameter(water) == 0.0, f"gamma(1e-3)={gamma:.6e}")

    params = NewmarkParams()
    dt = stable_dt(water, 1e-2, 0.01, params)
    dok = math.isclose(dt, 0.1 * 0.01 / (1500.0 + math.sqrt(1e-2 / 1.5e-5)), rel_tol=1e-14)
    yield ("stable time step", dok, f"dt={dt:.6e} for h=0.01, delta_bar=1e-2")

    lam, _ = analysis.interval_eigenpair(0.4, 1)
    roots = analysis.characteristic_roots(water, lam)
    tau = water.tau
    res = max(
        abs(tau * s**3 + water.alpha0 * s**2 + water.b * lam * s + water.c**2 * lam)
        for s in roots
    )
    scale = max(abs(tau * s**3) for s in roots)
    rok = res <= 1e-10 * max(scale, 1.0)
    yield ("characteristic cubic roots", rok, f"max residual {res:.3e}")

    spec = models.standing_mode_scenario(0.0, n_elements=40, final_time=4.0e-5)
    run = harness.run_problem(spec, NewmarkParams())
    drift = float(np.abs(run.trajectory.energy_z / run.trajectory.energy_z[0] - 1.0).max())
    yield ("inviscid z-energy conservation", drift < 0.05, f"relative drift {drift:.3e}")

    lin = models.channel_1d_scenario(0.0, nonlinear=False, n_elements=60, final_time=7.0e-6)
    nl = models.channel_1d_scenario(0.0, nonlinear=True, n_elements=60, final_time=7.0e-6)
    run_lin = harness.run_problem(lin, params)
    run_nl = harness.run_problem(nl, params)
    fp_ok = run_lin.max_fp_iters == 1 and run_nl.max_fp_iters >= 2
    yield ("fixed-point bookkeeping", fp_ok, f"linear {run_lin.max_fp_iters}, nonlinear {run_nl.max_fp_iters}")

    if not quick:
        spec = models.standing_mode_scenario(0.0, n_elements=300, final_time=1.0e-4)
        run = harness.run_problem(spec, params)
        mesh = run.mesh
        lam, phi = analysis.interval_eigenpair(1.0, 1)
        vals, d1, d2 = analysis.modal_solution(run.spec.medium, lam, (1.0, 0.0, 0.0), run.trajectory.times[-1])
        approx = run.final_state.u[mesh.interior_nodes]
        exact = float(vals) * phi(mesh.nodes[mesh.interior_nodes])
        rel = float(np.abs(approx - exact).max() / np.abs(exact).max())
        yield ("modal closed-form agreement", rel < 5e-3, f"relative sup error {rel:.3e}")


def _cmd_validate(args) -> int:
    failures = 0
    for name, ok, detail in _validate_checks(args.quick):
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {name}: {detail}")
        failures += 0 if ok else 1
    if failures:
        print(f"{failures} check(s) failed")
        return 1
    print("all checks passed")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mgtsim",
        description="Finite-element simulator for third-order-in-time acoustic wave equations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tau", type=float, default=None, help="override relaxation time")
    common.add_argument("--cfl", type=float, default=None, help="override CFL number")
    common.add_argument("--out", default=None, help="override output directory")
    common.add_argument("--seed", type=int, default=None, help="recorded in run metadata")

    p_run = sub.add_parser("run", parents=[common], help="run a single simulation")
    p_run.add_argument("config", help="INI configuration file")
    p_run.add_argument("--delta", type=float, default=None, help="sound diffusivity for this run")
    p_run.set_defaults(fn=_cmd_run)

    p_sweep = sub.add_parser("sweep", parents=[common], help="run a diffusivity sweep")
    p_sweep.add_argument("config", help="INI configuration file")
    p_sweep.add_argument("--deltas", default=None, help="comma-separated deltas (first must be 0)")
    p_sweep.add_argument("--parallelism", type=int, default=None, help="worker processes")
    p_sweep.set_defaults(fn=_cmd_sweep)

    p_val = sub.add_parser("validate", help="run the built-in oracle battery")
    p_val.add_argument("--quick", action="store_true", help="skip the slower checks")
    p_val.set_defaults(fn=_cmd_validate)

    p_rate = sub.add_parser("rate", help="fit the convergence rate of an existing sweep.csv")
    p_rate.add_argument("sweep_csv", help="sweep CSV produced by the sweep command")
    p_rate.add_argument("--out", default=None, help="write the fit as JSON here")
    p_rate.set_defaults(fn=_cmd_rate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
