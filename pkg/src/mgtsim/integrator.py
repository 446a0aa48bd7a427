"""Implicit Newmark-type time stepping for third-order-in-time systems.

The semi-discrete system (interior nodes, homogeneous Dirichlet) is

    tau*M*u_ttt + M_alpha*u_tt + b*K*u_t + c^2*K*u - M_mu*u_t - M_eta*u = F(t) + N(u, u_t, u_tt)

with b = delta + tau*c^2.  A predictor-corrector Newmark scheme in the jerk
advances (u, u_t, u_tt, u_ttt); the corrector solves one sparse SPD system per
step with a matrix factorized once per (dt, coefficients) and reused.
Quadratic nonlinearities N are resolved by fixed-point iteration with the
right-hand side frozen at the previous iterate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fem import FemOperators, weighted_mass
from .medium import MediumParams


class SolverFailureError(RuntimeError):
    """The implicit step matrix is not SPD within tolerance or cannot be factorized."""


class FixedPointDivergenceError(RuntimeError):
    """The nonlinear fixed-point iteration diverged or hit the iteration cap."""


@dataclass(frozen=True)
class NewmarkParams:
    """Parameters of the third-order Newmark predictor-corrector.

    (a3, beta, gamma) weight the jerk in the corrector updates of
    (u, u_t, u_tt); the defaults (1/12, 1/4, 1/2) give the second-order
    scheme used throughout.  cfl scales the stability-motivated time step,
    fp_tol and fp_max_iter control the nonlinear fixed-point loop.
    """

    a3: float = 1.0 / 12.0
    beta: float = 0.25
    gamma: float = 0.5
    cfl: float = 0.1
    fp_tol: float = 1e-8
    fp_max_iter: int = 50

    def __post_init__(self):
        if not 0.0 < self.a3 <= 1.0 / 6.0:
            raise ValueError(f"a3 must lie in (0, 1/6], got {self.a3!r}")
        if not 0.0 < self.beta <= 0.5:
            raise ValueError(f"beta must lie in (0, 1/2], got {self.beta!r}")
        if not 0.0 < self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in (0, 1], got {self.gamma!r}")
        if not self.cfl > 0.0:
            raise ValueError(f"cfl must be positive, got {self.cfl!r}")
        if not self.fp_tol > 0.0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol!r}")
        if self.fp_max_iter < 1:
            raise ValueError(f"fp_max_iter must be >= 1, got {self.fp_max_iter!r}")


@dataclass(frozen=True)
class AcousticState:
    """Solution snapshot (u, u_t, u_tt, u_ttt) on full nodes at time t."""

    t: float
    u: np.ndarray
    u_t: np.ndarray
    u_tt: np.ndarray
    u_ttt: np.ndarray

    def __post_init__(self):
        n = self.u.shape[0]
        for name in ("u_t", "u_tt", "u_ttt"):
            if getattr(self, name).shape != (n,):
                raise ValueError(f"{name} must have shape ({n},)")
        for name in ("u", "u_t", "u_tt", "u_ttt"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValueError(f"{name} contains non-finite entries")


def stable_dt(
    medium: MediumParams,
    delta_bar: float,
    h: float,
    params: NewmarkParams,
    final_time: float | None = None,
) -> float:
    """CFL-scaled time step dt = cfl*h / (c + sqrt(delta_bar/tau)).

    delta_bar is the largest diffusivity of the runs meant to share this step
    (a sweep uses one dt for all its deltas).  With final_time given, dt is
    rounded down so that final_time/dt is an integer.
    """
    if delta_bar < 0.0:
        raise ValueError(f"delta_bar must be nonnegative, got {delta_bar!r}")
    if not h > 0.0:
        raise ValueError(f"h must be positive, got {h!r}")
    raw = params.cfl * h / (medium.c + math.sqrt(delta_bar / medium.tau))
    if final_time is None:
        return raw
    if not final_time > 0.0:
        raise ValueError(f"final_time must be positive, got {final_time!r}")
    n = max(1, math.ceil(final_time / raw - 1e-12))
    return final_time / n


def predict(u, u_t, u_tt, u_ttt, dt: float, params: NewmarkParams):
    """Newmark predictors: Taylor expansions with the new jerk's share left out."""
    u_p = u + dt * u_t + (0.5 * dt * dt) * u_tt + (dt**3 * (1.0 / 6.0 - params.a3)) * u_ttt
    ut_p = u_t + dt * u_tt + (dt * dt * (0.5 - params.beta)) * u_ttt
    utt_p = u_tt + (dt * (1.0 - params.gamma)) * u_ttt
    return u_p, ut_p, utt_p


def correct(u_p, ut_p, utt_p, jerk, dt: float, params: NewmarkParams):
    """Corrector updates: add the new jerk's weighted share to the predictors."""
    return (
        u_p + (dt**3 * params.a3) * jerk,
        ut_p + (dt * dt * params.beta) * jerk,
        utt_p + (dt * params.gamma) * jerk,
    )


def _spd_factorize(matrix: sp.spmatrix, label: str):
    """Cholesky-like factorization with an SPD certificate.

    Symmetrized LU without partial pivoting succeeds with positive pivots
    exactly when the matrix is SPD; non-positive pivots or breakdown raise
    SolverFailureError.
    """
    a = matrix.tocsc()
    asym = abs(a - a.T).max()
    scale = abs(a).max()
    if scale == 0.0 or not np.isfinite(scale):
        raise SolverFailureError(f"{label}: matrix is zero or non-finite")
    if asym > 1e-12 * scale:
        raise SolverFailureError(f"{label}: matrix is not symmetric (rel. asymmetry {asym / scale:.3e})")
    try:
        lu = spla.splu(
            a,
            permc_spec="MMD_AT_PLUS_A",
            diag_pivot_thresh=0.0,
            options={"SymmetricMode": True},
        )
    except RuntimeError as exc:
        raise SolverFailureError(f"{label}: factorization failed ({exc})") from exc
    pivots = lu.U.diagonal()
    if not np.all(np.isfinite(pivots)) or np.min(pivots) <= 0.0:
        raise SolverFailureError(f"{label}: matrix is not positive definite (min pivot {np.min(pivots):.3e})")
    return lu


class NewmarkStepper:
    """Factorized stepper for one (mesh, medium, dt, coefficient-field) combination.

    alpha, mu, eta may be scalars (constant coefficients) or full-node arrays
    (P1 fields, integrated exactly into weighted mass matrices).  alpha
    defaults to medium.alpha0; mu and eta default to 0.
    """

    def __init__(
        self,
        ops: FemOperators,
        medium: MediumParams,
        params: NewmarkParams,
        dt: float,
        alpha=None,
        mu=0.0,
        eta=0.0,
    ):
        if not dt > 0.0:
            raise ValueError(f"dt must be positive, got {dt!r}")
        self.ops = ops
        self.medium = medium
        self.params = params
        self.dt = dt
        self.mass = ops.mass
        self.stiffness = ops.stiffness

        if alpha is None:
            alpha = medium.alpha0
        self.mass_alpha = self._coeff_mass(alpha)
        self.mass_mu = self._coeff_mass(mu, zero_ok=True)
        self.mass_eta = self._coeff_mass(eta, zero_ok=True)

        c2 = medium.c * medium.c
        b = medium.b
        system = self.medium.tau * self.mass + (dt * params.gamma) * self.mass_alpha
        system = system + (dt * dt * params.beta * b + dt**3 * params.a3 * c2) * self.stiffness
        if self.mass_mu is not None:
            system = system - (dt * dt * params.beta) * self.mass_mu
        if self.mass_eta is not None:
            system = system - (dt**3 * params.a3) * self.mass_eta
        self._system_lu = _spd_factorize(system, "step matrix")
        self._mass_lu = _spd_factorize(self.mass, "mass matrix")

    def _coeff_mass(self, coeff, zero_ok: bool = False):
        if np.isscalar(coeff):
            if coeff == 0.0 and zero_ok:
                return None
            if coeff == 1.0:
                return self.mass
            return (float(coeff) * self.mass).tocsr()
        return self.ops.reduce(weighted_mass(self.ops, coeff))

    def residual(self, u, u_t, u_tt) -> np.ndarray:
        """Left-hand side applied to a state, without the jerk term."""
        c2 = self.medium.c * self.medium.c
        r = self.mass_alpha @ u_tt + self.medium.b * (self.stiffness @ u_t) + c2 * (self.stiffness @ u)
        if self.mass_mu is not None:
            r = r - self.mass_mu @ u_t
        if self.mass_eta is not None:
            r = r - self.mass_eta @ u
        return r

    def initial_jerk(self, u, u_t, u_tt, load=None) -> np.ndarray:
        """Consistent u_ttt from the equation at the initial time."""
        rhs = -self.residual(u, u_t, u_tt)
        if load is not None:
            rhs = rhs + load
        return self._mass_lu.solve(rhs) / self.medium.tau

    def _solve_jerk(self, u_p, ut_p, utt_p, load) -> np.ndarray:
        rhs = -self.residual(u_p, ut_p, utt_p)
        if load is not None:
            rhs = rhs + load
        return self._system_lu.solve(rhs)

    def step_linear(self, u, u_t, u_tt, u_ttt, load=None):
        """Advance one step; load is F(t+dt) on interior nodes (or None for 0).

        Returns (u, u_t, u_tt, u_ttt) at t+dt.
        """
        u_p, ut_p, utt_p = predict(u, u_t, u_tt, u_ttt, self.dt, self.params)
        jerk = self._solve_jerk(u_p, ut_p, utt_p, load)
        u2, ut2, utt2 = correct(u_p, ut_p, utt_p, jerk, self.dt, self.params)
        return u2, ut2, utt2, jerk

    def _fp_norm(self, du_t, du_tt) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            a = float(du_tt @ (self.mass @ du_tt))
            b = float(du_t @ (self.stiffness @ du_t))
        return math.sqrt(max(a, 0.0)) + math.sqrt(max(b, 0.0))

    def step_nonlinear(self, u, u_t, u_tt, u_ttt, load=None, nonlinear_load=None):
        """Advance one step resolving a quadratic nonlinearity by fixed point.

        nonlinear_load(u, u_t, u_tt) -> interior load of the frozen nonlinear
        terms; None means the equation is linear and the step delegates to
        step_linear with a reported iteration count of 1.  Returns
        ((u, u_t, u_tt, u_ttt), iterations).
        """
        if nonlinear_load is None:
            return self.step_linear(u, u_t, u_tt, u_ttt, load), 1
        params = self.params
        u_p, ut_p, utt_p = predict(u, u_t, u_tt, u_ttt, self.dt, params)
        frozen = (u, u_t, u_tt)
        prev = None
        for iteration in range(1, params.fp_max_iter + 1):
            with np.errstate(over="ignore", invalid="ignore"):
                g = nonlinear_load(*frozen)
                total = g if load is None else load + g
                jerk = self._solve_jerk(u_p, ut_p, utt_p, total)
                cand = correct(u_p, ut_p, utt_p, jerk, self.dt, params)
            if not (np.all(np.isfinite(cand[1])) and np.all(np.isfinite(cand[2]))):
                raise FixedPointDivergenceError(
                    f"fixed-point iteration produced non-finite values at iteration {iteration}"
                )
            if prev is not None:
                diff = self._fp_norm(cand[1] - prev[1], cand[2] - prev[2])
                size = self._fp_norm(cand[1], cand[2])
                if diff <= params.fp_tol * max(size, 1e-300):
                    return (cand[0], cand[1], cand[2], jerk), iteration
            prev = cand
            frozen = cand
        raise FixedPointDivergenceError(
            f"fixed-point iteration did not converge within {params.fp_max_iter} iterations "
            f"(tol {params.fp_tol:g})"
        )


def integrate_scalar_mode(
    medium: MediumParams,
    lam: float,
    a0: float,
    a1: float,
    a2: float,
    dt: float,
    n_steps: int,
    params: NewmarkParams = NewmarkParams(),
) -> np.ndarray:
    """Newmark integration of the scalar modal equation

        tau*a''' + alpha0*a'' + b*lam*a' + c^2*lam*a = 0

    starting from (a, a', a'') = (a0, a1, a2) with consistent a'''.
    Returns an array of shape (n_steps+1, 4) with rows (a, a', a'', a''').
    Same predictor-corrector algebra as the PDE stepper; used as a
    cross-check oracle for single-mode runs.
    """
    tau, c2, b, al = medium.tau, medium.c * medium.c, medium.b, medium.alpha0
    lhs = tau + dt * params.gamma * al + (dt * dt * params.beta * b + dt**3 * params.a3 * c2) * lam
    out = np.empty((n_steps + 1, 4))
    a3v = -(al * a2 + b * lam * a1 + c2 * lam * a0) / tau
    state = (a0, a1, a2, a3v)
    out[0] = state
    for i in range(1, n_steps + 1):
        a_p, a1_p, a2_p = predict(*state, dt, params)
        jerk = -(al * a2_p + b * lam * a1_p + c2 * lam * a_p) / lhs
        a_n, a1_n, a2_n = correct(a_p, a1_p, a2_p, jerk, dt, params)
        state = (a_n, a1_n, a2_n, jerk)
        out[i] = state
    return out
