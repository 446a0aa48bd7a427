"""Problem definitions: equations, domains, initial data, sources, scenarios.

A ProblemSpec is a declarative description of one simulation; the harness
turns it into meshes, operators and a time loop.  Scenarios mirror the two
study set-ups (a 1D high-intensity channel and a 2D forced domain) plus
potential-form variants, and are delta-agnostic except for medium.delta.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .fem import FemOperators, kuznetsov_rhs, westervelt_rhs
from .medium import MediumParams, NonlinearityParams
from .mesh import Mesh, interval_mesh, square_triangle_mesh


class Equation(enum.Enum):
    """Which third-order model the nonlinearity coefficients refer to."""

    GENERALIZED_MGT = "generalized_mgt"
    WESTERVELT_PRESSURE = "westervelt_pressure"
    KUZNETSOV_POTENTIAL = "kuznetsov_potential"
    WESTERVELT_POTENTIAL = "westervelt_potential"


@dataclass(frozen=True)
class DomainSpec:
    """Mesh recipe: an interval (dim=1) or a square (dim=2)."""

    dim: int
    size: float
    n_elements: int | None = None
    spacing: float | None = None

    def __post_init__(self):
        if self.dim == 1:
            if self.n_elements is None:
                raise ValueError("1D domain needs n_elements")
        elif self.dim == 2:
            if self.spacing is None:
                raise ValueError("2D domain needs spacing")
        else:
            raise ValueError(f"dim must be 1 or 2, got {self.dim!r}")

    def build(self) -> Mesh:
        if self.dim == 1:
            return interval_mesh(self.size, self.n_elements)
        return square_triangle_mesh(self.size, self.spacing)


@dataclass(frozen=True)
class SeparableSource:
    """Source f(x, t) = spatial(x) * time_factor(t)."""

    spatial: Callable[[np.ndarray], np.ndarray]
    time_factor: Callable[[float], float]


@dataclass(frozen=True)
class ProblemSpec:
    """Everything needed to run one simulation.

    initial_* are callables sampled on the mesh nodes (None means zero);
    sampled fields are clamped to exactly 0 on the boundary.  alpha, mu, eta
    are the variable coefficients of the generalized linear part: scalars or
    callables on nodes (alpha=None uses medium.alpha0).
    """

    name: str
    equation: Equation
    medium: MediumParams
    nonlinearity: NonlinearityParams
    domain: DomainSpec
    final_time: float
    initial_u: Callable | None = None
    initial_ut: Callable | None = None
    initial_utt: Callable | None = None
    source: SeparableSource | None = None
    alpha: object = None
    mu: object = 0.0
    eta: object = 0.0

    def __post_init__(self):
        if not self.final_time > 0.0:
            raise ValueError(f"final_time must be positive, got {self.final_time!r}")
        if self.equation is Equation.GENERALIZED_MGT and not self.nonlinearity.is_linear:
            raise ValueError("GENERALIZED_MGT is linear; nonlinearity coefficients must be zero")
        if self.equation is Equation.WESTERVELT_PRESSURE and (
            self.nonlinearity.kappa != 0.0 or self.nonlinearity.sigma != 0.0
        ):
            raise ValueError("pressure-form problems use only the k coefficient")
        if self.equation in (Equation.KUZNETSOV_POTENTIAL, Equation.WESTERVELT_POTENTIAL) and (
            self.nonlinearity.k != 0.0
        ):
            raise ValueError("potential-form problems use only kappa and sigma")

    def build_mesh(self) -> Mesh:
        return self.domain.build()

    def with_delta(self, delta: float) -> "ProblemSpec":
        """Same problem with only the sound diffusivity replaced."""
        return dataclasses.replace(self, medium=self.medium.with_delta(delta))

    def initial_state(self, mesh: Mesh):
        """Sampled (u, u_t, u_tt) on full nodes, boundary entries forced to 0."""
        fields = []
        for fn in (self.initial_u, self.initial_ut, self.initial_utt):
            if fn is None:
                fields.append(np.zeros(mesh.n_nodes))
            else:
                values = np.asarray(fn(mesh.nodes), dtype=float)
                if values.shape != (mesh.n_nodes,):
                    raise ValueError(f"initial field has shape {values.shape}, expected ({mesh.n_nodes},)")
                values = values.copy()
                values[mesh.boundary_nodes] = 0.0
                fields.append(values)
        return tuple(fields)


def nonlinear_load_builder(spec: ProblemSpec, ops: FemOperators):
    """Callback (u, u_t, u_tt interior) -> interior nonlinear load, or None if linear.

    The returned closure scatters interior iterates into full-node buffers
    (boundary stays 0) and evaluates the equation's quadratic terms.
    Kuznetsov and Westervelt-potential problems share the same code path.
    """
    nl = spec.nonlinearity
    if nl.is_linear:
        return None
    mesh = ops.mesh
    idx = mesh.interior_nodes
    buf_u = np.zeros(mesh.n_nodes)
    buf_ut = np.zeros(mesh.n_nodes)
    buf_utt = np.zeros(mesh.n_nodes)
    if spec.equation is Equation.WESTERVELT_PRESSURE:
        rhs = westervelt_rhs
    elif spec.equation in (Equation.KUZNETSOV_POTENTIAL, Equation.WESTERVELT_POTENTIAL):
        rhs = kuznetsov_rhs
    else:
        return None

    def load(u, u_t, u_tt):
        buf_u[idx] = u
        buf_ut[idx] = u_t
        buf_utt[idx] = u_tt
        return rhs(ops, nl, buf_u, buf_ut, buf_utt)

    return load


def gaussian_1d(center: float, width: float, amplitude: float):
    """amplitude * exp(-(x - center)^2 / (2*width^2)) on 1D nodes."""

    def fn(x):
        xs = np.asarray(x)
        return amplitude * np.exp(-((xs - center) ** 2) / (2.0 * width * width))

    return fn


def gaussian_2d(center, widths, amplitude: float):
    """Anisotropic Gaussian on (x, y) node arrays."""
    cx, cy = center
    wx, wy = widths

    def fn(nodes):
        pts = np.asarray(nodes)
        return amplitude * np.exp(
            -((pts[:, 0] - cx) ** 2) / (2.0 * wx * wx) - ((pts[:, 1] - cy) ** 2) / (2.0 * wy * wy)
        )

    return fn


def water_medium(delta: float, tau: float, alpha0: float = 1.0) -> MediumParams:
    """Water at standard conditions: c=1500 m/s, rho=1000 kg/m^3, B/A=5."""
    return MediumParams(tau=tau, c=1500.0, delta=delta, rho=1000.0, b_over_a=5.0, alpha0=alpha0)


def channel_1d_scenario(
    delta: float,
    tau: float = 1.5e-5,
    amplitude: float = 1.0e8,
    nonlinear: bool = True,
    n_elements: int = 600,
    final_time: float = 7.0e-5,
) -> ProblemSpec:
    """High-intensity pressure pulse in a water channel (0, 0.4).

    Gaussian initial pressure (center 0.2 m, width 0.01 m, default peak
    100 MPa), zero initial velocity and acceleration, no source; Westervelt
    pressure form (or its k=0 linear reduction with nonlinear=False).
    """
    medium = water_medium(delta, tau)
    nl = NonlinearityParams.westervelt_pressure(medium) if nonlinear else NonlinearityParams.linear()
    return ProblemSpec(
        name="channel_1d",
        equation=Equation.WESTERVELT_PRESSURE,
        medium=medium,
        nonlinearity=nl,
        domain=DomainSpec(dim=1, size=0.4, n_elements=n_elements),
        final_time=final_time,
        initial_u=gaussian_1d(0.2, 0.01, amplitude),
    )


def source_2d_scenario(
    delta: float,
    tau: float = 1.5e-5,
    spacing: float = 0.01,
    amplitude: float = 1.0e10,
    final_time: float = 1.5e-4,
) -> ProblemSpec:
    """Linear 2D run on (0, 0.5)^2 driven by a modulated Gaussian source.

    f(x, y, t) = amplitude * exp(-(x-0.25)^2/(2*0.02^2) - (y-0.25)^2/(2*0.01^2))
                 * sin(2*pi*2e4*t), zero initial data.
    """
    medium = water_medium(delta, tau)
    w = 2.0 * math.pi * 2.0e4
    return ProblemSpec(
        name="source_2d",
        equation=Equation.GENERALIZED_MGT,
        medium=medium,
        nonlinearity=NonlinearityParams.linear(),
        domain=DomainSpec(dim=2, size=0.5, spacing=spacing),
        final_time=final_time,
        source=SeparableSource(
            spatial=gaussian_2d((0.25, 0.25), (0.02, 0.01), amplitude),
            time_factor=lambda t: math.sin(w * t),
        ),
    )


def kuznetsov_scenario(
    delta: float,
    tau: float = 1.5e-5,
    sigma: float | None = None,
    kappa: float | None = None,
    amplitude: float = 1.0e-2,
    n_elements: int = 600,
    final_time: float = 7.0e-5,
) -> ProblemSpec:
    """Kuznetsov potential-form analogue of the 1D channel.

    The unknown is the acoustic velocity potential; the initial bump uses a
    small amplitude (potential units).  kappa defaults to (B/A)/c^2 and sigma
    to 2; passing explicit values overrides both.
    """
    medium = water_medium(delta, tau)
    if kappa is None:
        kappa = NonlinearityParams.kuznetsov_potential(medium).kappa
    if sigma is None:
        sigma = 2.0
    return ProblemSpec(
        name="kuznetsov_1d",
        equation=Equation.KUZNETSOV_POTENTIAL,
        medium=medium,
        nonlinearity=NonlinearityParams(kappa=kappa, sigma=sigma),
        domain=DomainSpec(dim=1, size=0.4, n_elements=n_elements),
        final_time=final_time,
        initial_u=gaussian_1d(0.2, 0.01, amplitude),
    )


def westervelt_potential_scenario(
    delta: float,
    tau: float = 1.5e-5,
    amplitude: float = 1.0e-2,
    n_elements: int = 600,
    final_time: float = 7.0e-5,
) -> ProblemSpec:
    """Westervelt equation in potential form: the Kuznetsov code path with
    kappa = (1 + B/(2A))/c^2 and sigma = 0."""
    medium = water_medium(delta, tau)
    nl = NonlinearityParams.westervelt_potential(medium)
    base = kuznetsov_scenario(
        delta,
        tau=tau,
        sigma=nl.sigma,
        kappa=nl.kappa,
        amplitude=amplitude,
        n_elements=n_elements,
        final_time=final_time,
    )
    return dataclasses.replace(base, name="westervelt_potential_1d", equation=Equation.WESTERVELT_POTENTIAL)


def standing_mode_scenario(
    delta: float,
    tau: float = 1.5e-5,
    length: float = 1.0,
    mode: int = 1,
    n_elements: int = 150,
    amplitude: float = 1.0,
    final_time: float = 2.0e-4,
    c: float = 1500.0,
) -> ProblemSpec:
    """Single Dirichlet eigenmode of the linear equation on an interval.

    Used as a cross-check against the closed-form modal solution.
    """
    k = mode

    def phi(x):
        return amplitude * np.sin(k * math.pi * np.asarray(x) / length)

    medium = MediumParams(tau=tau, c=c, delta=delta)
    return ProblemSpec(
        name="standing_mode_1d",
        equation=Equation.GENERALIZED_MGT,
        medium=medium,
        nonlinearity=NonlinearityParams.linear(),
        domain=DomainSpec(dim=1, size=length, n_elements=n_elements),
        final_time=final_time,
        initial_u=phi,
    )


SCENARIOS: dict[str, Callable[..., ProblemSpec]] = {
    "channel_1d": channel_1d_scenario,
    "source_2d": source_2d_scenario,
    "kuznetsov_1d": kuznetsov_scenario,
    "westervelt_potential_1d": westervelt_potential_scenario,
    "standing_mode_1d": standing_mode_scenario,
}


def make_problem(scenario: str, delta: float, **overrides) -> ProblemSpec:
    """Instantiate a named scenario at a given diffusivity."""
    try:
        factory = SCENARIOS[scenario]
    except KeyError:
        raise ValueError(f"unknown scenario {scenario!r}; known: {sorted(SCENARIOS)}") from None
    return factory(delta, **overrides)
