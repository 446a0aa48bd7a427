"""Run orchestration: single simulations, diffusivity sweeps, file outputs.

A sweep runs one scenario at several sound diffusivities delta (the first is
always 0, the inviscid reference), with one shared time step sized for the
largest diffusivity, and reports the relative energy-norm distance of every
run to the reference.  Outputs are plain CSV/JSON files with deterministic,
parallelism-independent bytes.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import multiprocessing
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .analysis import (
    InsufficientDataError,
    RateFit,
    SweepRecord,
    Trajectory,
    energy_norm_error,
    energy_sample,
    fit_rate,
)
from .fem import assemble, load_vector
from .integrator import (
    AcousticState,
    FixedPointDivergenceError,
    NewmarkParams,
    NewmarkStepper,
    SolverFailureError,
    stable_dt,
)
from .mesh import Mesh
from .models import ProblemSpec, make_problem, nonlinear_load_builder


@dataclass
class RunResult:
    """One finished simulation with its recorded history."""

    spec: ProblemSpec
    mesh: Mesh
    dt: float
    steps: int
    trajectory: Trajectory
    snapshots: dict
    final_state: AcousticState
    max_fp_iters: int

    @property
    def h(self) -> float:
        return self.mesh.h


def _resolve_coefficient(value, nodes):
    if value is None or np.isscalar(value):
        return value
    if callable(value):
        return np.asarray(value(nodes), dtype=float)
    return np.asarray(value, dtype=float)


def run_problem(
    spec: ProblemSpec,
    newmark: NewmarkParams | None = None,
    dt: float | None = None,
    delta_bar: float | None = None,
    snapshot_times=(),
) -> RunResult:
    """Integrate one problem from 0 to spec.final_time.

    dt, when not given, is the CFL-bounded step for delta_bar (defaulting to
    the problem's own delta) rounded so the horizon is an integer number of
    steps; an explicit dt must divide the horizon.  Snapshot times are
    attached to the nearest time step.
    """
    params = newmark if newmark is not None else NewmarkParams()
    mesh = spec.build_mesh()
    ops = assemble(mesh)
    medium = spec.medium
    horizon = spec.final_time
    if dt is None:
        dbar = medium.delta if delta_bar is None else delta_bar
        if dbar < medium.delta:
            raise ValueError(f"delta_bar {dbar!r} is smaller than the run's delta {medium.delta!r}")
        dt = stable_dt(medium, dbar, mesh.h, params, final_time=horizon)
    n_steps = int(round(horizon / dt))
    if n_steps < 1 or abs(n_steps * dt - horizon) > 1e-9 * horizon:
        raise ValueError(f"dt {dt!r} does not divide final_time {horizon!r}")
    for t_snap in snapshot_times:
        if not 0.0 <= t_snap <= horizon * (1.0 + 1e-12):
            raise ValueError(f"snapshot time {t_snap!r} outside [0, {horizon!r}]")

    u_full, ut_full, utt_full = spec.initial_state(mesh)
    u = mesh.restrict(u_full).copy()
    u_t = mesh.restrict(ut_full).copy()
    u_tt = mesh.restrict(utt_full).copy()

    stepper = NewmarkStepper(
        ops,
        medium,
        params,
        dt,
        alpha=_resolve_coefficient(spec.alpha, mesh.nodes),
        mu=_resolve_coefficient(spec.mu, mesh.nodes),
        eta=_resolve_coefficient(spec.eta, mesh.nodes),
    )
    nl_load = nonlinear_load_builder(spec, ops)

    if spec.source is not None:
        base_load = load_vector(ops, np.asarray(spec.source.spatial(mesh.nodes), dtype=float))
        time_factor = spec.source.time_factor

        def load_at(t):
            return time_factor(t) * base_load

    else:
        load_at = None

    load0 = load_at(0.0) if load_at is not None else None
    g0 = nl_load(u, u_t, u_tt) if nl_load is not None else None
    total0 = None
    if load0 is not None or g0 is not None:
        total0 = (load0 if load0 is not None else 0.0) + (g0 if g0 is not None else 0.0)
    u_ttt = stepper.initial_jerk(u, u_t, u_tt, total0)

    times = np.arange(n_steps + 1) * dt
    times[-1] = horizon
    ni = mesh.n_interior
    ut_hist = np.empty((n_steps + 1, ni))
    utt_hist = np.empty((n_steps + 1, ni))
    energy = np.empty(n_steps + 1)
    energy_z = np.empty(n_steps + 1)
    fp_iters = np.ones(n_steps, dtype=np.int64)

    snap_steps: dict[int, list[float]] = {}
    for t_snap in snapshot_times:
        i_snap = min(max(int(round(t_snap / dt)), 0), n_steps)
        snap_steps.setdefault(i_snap, []).append(t_snap)
    snapshots: dict[float, AcousticState] = {}

    def record(i, jerk):
        ut_hist[i] = u_t
        utt_hist[i] = u_tt
        sample = energy_sample(times[i], medium, ops.mass, ops.stiffness, u, u_t, u_tt)
        energy[i] = sample.energy
        energy_z[i] = sample.energy_z
        if i in snap_steps:
            state = AcousticState(
                t=float(times[i]),
                u=mesh.scatter(u),
                u_t=mesh.scatter(u_t),
                u_tt=mesh.scatter(u_tt),
                u_ttt=mesh.scatter(jerk),
            )
            for t_snap in snap_steps[i]:
                snapshots[t_snap] = state

    record(0, u_ttt)
    for i in range(1, n_steps + 1):
        f_next = load_at(times[i]) if load_at is not None else None
        (u, u_t, u_tt, u_ttt), iters = stepper.step_nonlinear(u, u_t, u_tt, u_ttt, f_next, nl_load)
        fp_iters[i - 1] = iters
        record(i, u_ttt)

    trajectory = Trajectory(
        times=times,
        u_t=ut_hist,
        u_tt=utt_hist,
        mass=ops.mass,
        stiffness=ops.stiffness,
        energy=energy,
        energy_z=energy_z,
        fp_iters=fp_iters,
    )
    final_state = AcousticState(
        t=float(times[-1]),
        u=mesh.scatter(u),
        u_t=mesh.scatter(u_t),
        u_tt=mesh.scatter(u_tt),
        u_ttt=mesh.scatter(u_ttt),
    )
    return RunResult(
        spec=spec,
        mesh=mesh,
        dt=dt,
        steps=n_steps,
        trajectory=trajectory,
        snapshots=snapshots,
        final_state=final_state,
        max_fp_iters=int(fp_iters.max(initial=1)),
    )


@dataclass(frozen=True)
class SweepConfig:
    """Declarative description of a diffusivity sweep.

    deltas must be strictly ascending and start at 0 (the reference run).
    delta_bar (default: max of deltas) sizes the shared time step; pinning it
    explicitly makes subset sweeps reproduce superset rows bit for bit.
    seed is recorded for provenance; all computations are deterministic.
    """

    scenario: str
    deltas: tuple[float, ...]
    overrides: dict = field(default_factory=dict)
    snapshot_times: tuple[float, ...] = ()
    newmark: NewmarkParams = NewmarkParams()
    delta_bar: float | None = None
    parallelism: int = 1
    output_dir: str | None = None
    seed: int | None = None

    def __post_init__(self):
        ds = self.deltas
        if len(ds) == 0:
            raise ValueError("deltas must not be empty")
        if ds[0] != 0.0:
            raise ValueError(f"first delta must be 0 (inviscid reference), got {ds[0]!r}")
        if any(b <= a for a, b in zip(ds, ds[1:])):
            raise ValueError(f"deltas must be strictly ascending, got {ds!r}")
        if self.delta_bar is not None and self.delta_bar < ds[-1]:
            raise ValueError(f"delta_bar {self.delta_bar!r} must cover max delta {ds[-1]!r}")
        if self.parallelism < 1:
            raise ValueError(f"parallelism must be >= 1, got {self.parallelism!r}")

    @property
    def resolved_delta_bar(self) -> float:
        return self.delta_bar if self.delta_bar is not None else self.deltas[-1]


@dataclass
class SweepResult:
    config: SweepConfig
    dt: float
    h: float
    steps: int
    records: list
    fit: RateFit | None
    reference: RunResult
    snapshots: dict


_SWEEP_CTX: tuple | None = None


def _run_one_delta(config: SweepConfig, delta: float, dt: float, reference: Trajectory):
    spec = make_problem(config.scenario, delta, **config.overrides)
    steps = len(reference.times) - 1
    try:
        result = run_problem(spec, config.newmark, dt=dt, snapshot_times=config.snapshot_times)
        err = energy_norm_error(result.trajectory, reference)
        record = SweepRecord(
            delta=delta,
            err_rel=err,
            dt=dt,
            h=result.h,
            steps=result.steps,
            max_fp_iters=result.max_fp_iters,
        )
        return record, result.snapshots
    except (SolverFailureError, FixedPointDivergenceError) as exc:
        mesh_h = spec.build_mesh().h
        record = SweepRecord(
            delta=delta,
            err_rel=math.nan,
            dt=dt,
            h=mesh_h,
            steps=steps,
            max_fp_iters=0,
            error=str(exc),
        )
        return record, {}


def _sweep_worker(delta: float):
    config, dt, reference = _SWEEP_CTX
    return _run_one_delta(config, delta, dt, reference)


def run_sweep(config: SweepConfig) -> SweepResult:
    """Run the reference and all positive-delta runs, collect errors and rate.

    The inviscid run executes first (its trajectory is the comparison
    baseline); the remaining deltas run serially or in a fork pool, with
    identical numerics either way.  A solver failure or fixed-point breakdown
    in one delta yields an error-marker row and does not abort the others.
    """
    global _SWEEP_CTX
    ref_spec = make_problem(config.scenario, config.deltas[0], **config.overrides)
    mesh = ref_spec.build_mesh()
    dt = stable_dt(
        ref_spec.medium,
        config.resolved_delta_bar,
        mesh.h,
        config.newmark,
        final_time=ref_spec.final_time,
    )
    reference = run_problem(ref_spec, config.newmark, dt=dt, snapshot_times=config.snapshot_times)
    ref_record = SweepRecord(
        delta=config.deltas[0],
        err_rel=0.0,
        dt=dt,
        h=reference.h,
        steps=reference.steps,
        max_fp_iters=reference.max_fp_iters,
    )
    records = [ref_record]
    snapshots = {config.deltas[0]: reference.snapshots}

    rest = list(config.deltas[1:])
    if rest:
        if config.parallelism > 1:
            _SWEEP_CTX = (config, dt, reference.trajectory)
            try:
                ctx = multiprocessing.get_context("fork")
                with ctx.Pool(min(config.parallelism, len(rest))) as pool:
                    outcomes = pool.map(_sweep_worker, rest)
            finally:
                _SWEEP_CTX = None
        else:
            outcomes = [_run_one_delta(config, d, dt, reference.trajectory) for d in rest]
        for delta, (record, snaps) in zip(rest, outcomes):
            records.append(record)
            snapshots[delta] = snaps

    try:
        fit = fit_rate(records)
    except InsufficientDataError:
        fit = None
    return SweepResult(
        config=config,
        dt=dt,
        h=reference.h,
        steps=reference.steps,
        records=records,
        fit=fit,
        reference=reference,
        snapshots=snapshots,
    )


def _fmt(value: float) -> str:
    return repr(float(value))


SWEEP_CSV_HEADER = ["delta", "err_rel", "dt", "h", "steps", "max_fp_iters", "error"]


def write_sweep_csv(path, records) -> None:
    """One row per delta; err_rel is empty for failed runs (error column says why)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SWEEP_CSV_HEADER)
        for r in records:
            err = "" if r.error is not None else _fmt(r.err_rel)
            writer.writerow(
                [_fmt(r.delta), err, _fmt(r.dt), _fmt(r.h), r.steps, r.max_fp_iters, r.error or ""]
            )


def read_sweep_csv(path) -> list:
    """Parse a sweep CSV back into SweepRecord rows."""
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in SWEEP_CSV_HEADER[:6] if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"sweep CSV {path} is missing columns {missing}")
        for row in reader:
            err_text = row["err_rel"].strip()
            records.append(
                SweepRecord(
                    delta=float(row["delta"]),
                    err_rel=float(err_text) if err_text else math.nan,
                    dt=float(row["dt"]),
                    h=float(row["h"]),
                    steps=int(row["steps"]),
                    max_fp_iters=int(row["max_fp_iters"]),
                    error=(row.get("error") or "").strip() or None,
                )
            )
    return records


def write_snapshot_csv(path, mesh: Mesh, state: AcousticState) -> None:
    """Nodal fields at one time: columns x[,y],u,u_t,u_tt over all nodes."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if mesh.dim == 1:
            writer.writerow(["x", "u", "u_t", "u_tt"])
            for i in range(mesh.n_nodes):
                writer.writerow(
                    [_fmt(mesh.nodes[i]), _fmt(state.u[i]), _fmt(state.u_t[i]), _fmt(state.u_tt[i])]
                )
        else:
            writer.writerow(["x", "y", "u", "u_t", "u_tt"])
            for i in range(mesh.n_nodes):
                writer.writerow(
                    [
                        _fmt(mesh.nodes[i, 0]),
                        _fmt(mesh.nodes[i, 1]),
                        _fmt(state.u[i]),
                        _fmt(state.u_t[i]),
                        _fmt(state.u_tt[i]),
                    ]
                )


def rate_payload(fit: RateFit | None) -> dict:
    if fit is None:
        return {"slope": None, "intercept": None, "ratios": {}, "max_ratio_deviation": None}
    return {
        "slope": fit.slope,
        "intercept": fit.intercept,
        "ratios": {_fmt(d): r for d, r in sorted(fit.ratios.items())},
        "max_ratio_deviation": fit.max_ratio_deviation,
    }


def write_outputs(result: SweepResult, out_dir) -> list:
    """Write sweep.csv, rate.json, run_meta.json and all snapshot CSVs."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    sweep_path = out / "sweep.csv"
    write_sweep_csv(sweep_path, result.records)
    written.append(sweep_path)

    rate_path = out / "rate.json"
    with open(rate_path, "w") as fh:
        json.dump(rate_payload(result.fit), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(rate_path)

    config = result.config
    meta = {
        "scenario": config.scenario,
        "overrides": {k: config.overrides[k] for k in sorted(config.overrides)},
        "deltas": list(config.deltas),
        "delta_bar": config.resolved_delta_bar,
        "snapshot_times": list(config.snapshot_times),
        "parallelism": config.parallelism,
        "seed": config.seed,
        "newmark": {
            "a3": config.newmark.a3,
            "beta": config.newmark.beta,
            "gamma": config.newmark.gamma,
            "cfl": config.newmark.cfl,
            "fp_tol": config.newmark.fp_tol,
            "fp_max_iter": config.newmark.fp_max_iter,
        },
        "dt": result.dt,
        "h": result.h,
        "steps": result.steps,
        "n_nodes": result.reference.mesh.n_nodes,
        "final_time": result.reference.spec.final_time,
        "runs": [
            {
                "delta": r.delta,
                "status": "failed" if r.error is not None else "ok",
                "err_rel": None if r.error is not None else r.err_rel,
                "max_fp_iters": r.max_fp_iters,
                "error": r.error,
            }
            for r in result.records
        ],
    }
    meta_path = out / "run_meta.json"
    with open(meta_path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(meta_path)

    mesh = result.reference.mesh
    for delta in config.deltas:
        for t_snap, state in sorted(result.snapshots.get(delta, {}).items()):
            snap_path = out / f"snapshot_delta{_fmt(delta)}_t{_fmt(t_snap)}.csv"
            write_snapshot_csv(snap_path, mesh, state)
            written.append(snap_path)
    return written


def _parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _parse_floats(text: str) -> tuple[float, ...]:
    items = [p for chunk in text.split(",") for p in chunk.split()] if text else []
    return tuple(float(p) for p in items if p)


def parse_config(path) -> SweepConfig:
    """Read a sweep configuration from an INI file.

    Sections: [scenario] (key ``name`` plus scenario keyword overrides),
    [sweep] (deltas, delta_bar, snapshot_times, parallelism, seed),
    [newmark] (a3, beta, gamma, cfl, fp_tol, fp_max_iter), [output] (dir).
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = parser.read(path)
    if not read:
        raise FileNotFoundError(f"config file {path!r} not found or unreadable")
    if "scenario" not in parser:
        raise ValueError(f"config {path!r} has no [scenario] section")
    scen = dict(parser["scenario"])
    try:
        name = scen.pop("name")
    except KeyError:
        raise ValueError(f"config {path!r} is missing scenario name") from None
    overrides = {key: _parse_value(value) for key, value in scen.items()}

    sweep = parser["sweep"] if "sweep" in parser else {}
    deltas = _parse_floats(sweep.get("deltas", "0"))
    snapshot_times = _parse_floats(sweep.get("snapshot_times", ""))
    delta_bar_text = (sweep.get("delta_bar") or "").strip()
    delta_bar = float(delta_bar_text) if delta_bar_text else None
    parallelism = int(sweep.get("parallelism", "1"))
    seed_text = (sweep.get("seed") or "").strip()
    seed = int(seed_text) if seed_text else None

    nm_kwargs = {}
    if "newmark" in parser:
        for key in ("a3", "beta", "gamma", "cfl", "fp_tol"):
            if key in parser["newmark"]:
                nm_kwargs[key] = float(parser["newmark"][key])
        if "fp_max_iter" in parser["newmark"]:
            nm_kwargs["fp_max_iter"] = int(parser["newmark"]["fp_max_iter"])
    newmark = NewmarkParams(**nm_kwargs)

    output_dir = None
    if "output" in parser and (parser["output"].get("dir") or "").strip():
        output_dir = parser["output"]["dir"].strip()

    return SweepConfig(
        scenario=name,
        deltas=deltas,
        overrides=overrides,
        snapshot_times=snapshot_times,
        newmark=newmark,
        delta_bar=delta_bar,
        parallelism=parallelism,
        output_dir=output_dir,
        seed=seed,
    )
