"""Figure rendering for sweep harness outputs.

Four figure kinds, selected by FigureSpec.kind:

- profile_overlay: pressure profiles u(x) from 1D snapshot CSVs, one curve
  per input file, on a shared axis.
- z_profile: the shifted variable z = tau*u_t + u for each input profile.
  The relaxation time comes from params["tau"]; plotted in the same pressure
  units as the overlay.
- convergence: relative error against delta from sweep.csv.  Linear axes by
  default (the error curve is a straight line through the origin when the
  rate is 1); params["loglog"] switches to log-log.  The fitted slope is
  annotated on the axes, taken from a rate.json given as a second input or
  fitted here by least squares on the log-log points.
- field2d: one nodal field of a 2D snapshot as a heatmap.  Node layouts that
  form a tensor grid use pcolormesh; anything else falls back to a
  triangulated surface.

Rendering is deterministic: fixed Agg backend, fixed SVG hash salt, text
kept as text, no timestamps in the output metadata.  The same spec over the
same inputs produces byte-identical images, which the golden-image tests
rely on.

Pressure is converted to MPa for display only (params["unit_scale"],
default 1e-6); nothing upstream of the axes is rescaled.
"""

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .io import SchemaMismatchError, read_rate, read_snapshot, read_sweep

KINDS = ("profile_overlay", "z_profile", "convergence", "field2d")

# One style for every figure so reruns are byte-identical and text stays
# searchable in the SVG output.
STYLE = {
    "figure.figsize": (6.4, 4.2),
    "figure.dpi": 100,
    "savefig.dpi": 100,
    "font.size": 10,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "lines.linewidth": 1.4,
    "legend.framealpha": 0.9,
    "svg.fonttype": "none",
    "svg.hashsalt": "plotkit",
}

PRESSURE_SCALE = 1e-6  # Pa -> MPa, display only

FIELD_LABELS = {"u": "pressure [MPa]", "u_t": "u_t [Pa/s]", "u_tt": "u_tt [Pa/s^2]"}


@dataclass(frozen=True)
class FigureSpec:
    """One figure: what kind, which input files, where the image goes."""

    kind: str
    inputs: tuple
    output: str
    labels: tuple = ()
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "inputs", tuple(str(p) for p in self.inputs))
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if not self.inputs:
            raise ValueError("inputs must name at least one file")
        if self.labels and len(self.labels) != len(self.inputs):
            raise ValueError(
                f"got {len(self.labels)} labels for {len(self.inputs)} inputs; need none or one each"
            )
        if not str(self.output):
            raise ValueError("output path must not be empty")
        if self.kind == "field2d" and len(self.inputs) != 1:
            raise ValueError(f"field2d takes exactly one snapshot file, got {len(self.inputs)}")
        if self.kind == "convergence" and len(self.inputs) > 2:
            raise ValueError("convergence takes sweep.csv plus an optional rate.json")
        if self.kind == "z_profile":
            tau = self.params.get("tau")
            if not isinstance(tau, (int, float)) or not math.isfinite(tau) or tau <= 0:
                raise ValueError(f"z_profile needs params['tau'] > 0, got {tau!r}")
        scale = self.params.get("unit_scale", PRESSURE_SCALE)
        if not isinstance(scale, (int, float)) or not math.isfinite(scale) or scale <= 0:
            raise ValueError(f"params['unit_scale'] must be a positive number, got {scale!r}")
        fld = self.params.get("field", "u")
        if fld not in FIELD_LABELS:
            raise ValueError(f"params['field'] must be one of {tuple(FIELD_LABELS)}, got {fld!r}")


def load_figure_spec(path) -> FigureSpec:
    """Read a FigureSpec from a JSON file.

    Relative input and output paths are resolved against the directory that
    contains the spec file, so a spec can live next to its data.
    """
    path = Path(path)
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: figure spec must be a JSON object")
    unknown = set(raw) - {"kind", "inputs", "output", "labels", "params"}
    if unknown:
        raise ValueError(f"{path}: unknown figure spec fields {sorted(unknown)}")
    try:
        kind = raw["kind"]
        inputs = raw["inputs"]
        output = raw["output"]
    except KeyError as exc:
        raise ValueError(f"{path}: figure spec is missing required field {exc.args[0]!r}") from None
    if isinstance(inputs, (str, Path)):
        inputs = [inputs]
    base = path.parent
    resolved = tuple(str(base / p) if not Path(p).is_absolute() else str(p) for p in inputs)
    out = str(output)
    if not Path(out).is_absolute():
        out = str(base / out)
    return FigureSpec(
        kind=kind,
        inputs=resolved,
        output=out,
        labels=tuple(raw.get("labels") or ()),
        params=dict(raw.get("params") or {}),
    )


def _labels(spec: FigureSpec):
    if spec.labels:
        return spec.labels
    return tuple(Path(p).stem for p in spec.inputs)


def _scale(spec: FigureSpec) -> float:
    return float(spec.params.get("unit_scale", PRESSURE_SCALE))


def _pressure_label(spec: FigureSpec, quantity="pressure") -> str:
    if spec.params.get("unit_scale", PRESSURE_SCALE) == PRESSURE_SCALE:
        return f"{quantity} [MPa]"
    return quantity


def _profiles_1d(spec: FigureSpec):
    for path in spec.inputs:
        snap = read_snapshot(path)
        if "y" in snap:
            raise SchemaMismatchError(
                f"{path}: column 'y' present; {spec.kind} takes 1D snapshots"
            )
        yield path, snap


def _render_profile_overlay(ax, spec: FigureSpec):
    scale = _scale(spec)
    for (path, snap), label in zip(_profiles_1d(spec), _labels(spec)):
        ax.plot(snap["x"], snap["u"] * scale, label=label)
    ax.set_xlabel("x [m]")
    ax.set_ylabel(_pressure_label(spec))
    ax.legend(loc="best")


def _render_z_profile(ax, spec: FigureSpec):
    tau = float(spec.params["tau"])
    scale = _scale(spec)
    for (path, snap), label in zip(_profiles_1d(spec), _labels(spec)):
        z = tau * snap["u_t"] + snap["u"]
        ax.plot(snap["x"], z * scale, label=label)
    ax.set_xlabel("x [m]")
    ax.set_ylabel(_pressure_label(spec, "z = tau u_t + u"))
    ax.legend(loc="best")


def _render_convergence(ax, spec: FigureSpec):
    sweep = read_sweep(spec.inputs[0])
    mask = (sweep["delta"] > 0) & np.isfinite(sweep["err_rel"])
    if not mask.any():
        raise SchemaMismatchError(
            f"{spec.inputs[0]}: no usable rows (need delta > 0 with a finite err_rel)"
        )
    order = np.argsort(sweep["delta"][mask])
    deltas = sweep["delta"][mask][order]
    errs = sweep["err_rel"][mask][order]

    slope = None
    if len(spec.inputs) > 1:
        slope = read_rate(spec.inputs[1]).get("slope")
    if slope is None and len(deltas) >= 2:
        slope = float(np.polyfit(np.log(deltas), np.log(errs), 1)[0])

    label = spec.labels[0] if spec.labels else None
    ax.plot(deltas, errs, marker="o", label=label)
    if spec.params.get("loglog"):
        ax.set_xscale("log")
        ax.set_yscale("log")
    else:
        # Linear axes: a rate-1 sweep reads as a straight line through 0.
        ax.set_xlim(left=0.0)
        ax.set_ylim(bottom=0.0)
    if slope is not None:
        ax.annotate(
            f"slope = {slope:.3f}",
            xy=(0.05, 0.92),
            xycoords="axes fraction",
            fontsize=11,
        )
    ax.set_xlabel("delta [m^2/s]")
    ax.set_ylabel("relative error (energy norm)")
    if label:
        ax.legend(loc="lower right")


def _as_grid(x, y, vals):
    """Reshape scattered nodes to a tensor grid, or None if they are not one."""
    xu = np.unique(x)
    yu = np.unique(y)
    if len(xu) * len(yu) != len(vals):
        return None
    order = np.lexsort((x, y))
    if not (
        np.array_equal(x[order], np.tile(xu, len(yu)))
        and np.array_equal(y[order], np.repeat(yu, len(xu)))
    ):
        return None
    return xu, yu, vals[order].reshape(len(yu), len(xu))


def _render_field2d(ax, spec: FigureSpec):
    path = spec.inputs[0]
    snap = read_snapshot(path)
    if "y" not in snap:
        raise SchemaMismatchError(f"{path}: missing required column 'y' (field2d needs 2D data)")
    name = spec.params.get("field", "u")
    vals = snap[name] * (_scale(spec) if name == "u" else 1.0)
    vmax = float(np.max(np.abs(vals))) or 1.0
    grid = _as_grid(snap["x"], snap["y"], vals)
    if grid is not None:
        xu, yu, v = grid
        image = ax.pcolormesh(xu, yu, v, shading="gouraud", cmap="RdBu_r", vmin=-vmax, vmax=vmax)
    else:
        image = ax.tripcolor(
            snap["x"], snap["y"], vals, shading="gouraud", cmap="RdBu_r", vmin=-vmax, vmax=vmax
        )
    label = FIELD_LABELS[name] if name != "u" else _pressure_label(spec)
    ax.figure.colorbar(image, ax=ax, label=label)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.grid(False)


_RENDERERS = {
    "profile_overlay": _render_profile_overlay,
    "z_profile": _render_z_profile,
    "convergence": _render_convergence,
    "field2d": _render_field2d,
}

# Timestamp-bearing metadata stripped per format so reruns are byte-identical.
_METADATA = {".svg": {"Date": None}, ".pdf": {"CreationDate": None}, ".ps": {"CreationDate": None}}


def render(spec: FigureSpec) -> Path:
    """Render one figure and write it to spec.output; returns the output path."""
    out = Path(spec.output)
    with matplotlib.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            _RENDERERS[spec.kind](ax, spec)
            if spec.params.get("title"):
                ax.set_title(str(spec.params["title"]))
            out.parent.mkdir(parents=True, exist_ok=True)
            fig.savefig(out, metadata=_METADATA.get(out.suffix.lower()), bbox_inches="tight")
        finally:
            plt.close(fig)
    return out
