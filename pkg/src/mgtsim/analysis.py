"""Energies, error norms, convergence-rate fits and closed-form modal oracles.

The energy norm used for the vanishing-diffusivity study is

    ||u||_E = sup_t ||u_tt(t)||_{L2} + sup_t ||grad u_t(t)||_{L2}

evaluated discretely at every recorded time step; the L2 and gradient norms
are the mass-matrix and stiffness-matrix (semi)norms of the interior
coefficient vectors, which are exact for P1 fields.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .medium import MediumParams


class DegenerateReferenceError(ValueError):
    """Relative error requested against a reference with (numerically) zero energy norm."""


class InsufficientDataError(ValueError):
    """Too few usable data points for a rate fit."""


class IllConditionedRootsError(ArithmeticError):
    """Characteristic roots are too close to separate reliably (but not exactly equal)."""


def matrix_norm(matrix, v: np.ndarray) -> float:
    """sqrt(v' A v) for an SPD (or positive-semidefinite) sparse matrix."""
    with np.errstate(over="ignore", invalid="ignore"):
        sq = float(v @ (matrix @ v))
    return math.sqrt(max(sq, 0.0)) if math.isfinite(sq) else math.inf


@dataclass(frozen=True)
class EnergySample:
    """Pointwise-in-time energy bookkeeping of one state.

    energy is the third-order energy
        E(t) = tau^2/2*||u_tt||^2 + tau^2*c^2/2*||grad u_t||^2 + c^2/2*||grad u||^2,
    energy_z the wave energy of z = tau*u_t + u,
        Ez(t) = 1/2*||z_t||^2 + c^2/2*||grad z||^2,
    and the two norms are the sup-norm trackers of the energy-space components.
    """

    t: float
    energy: float
    energy_z: float
    norm_utt_mass: float
    norm_ut_stiff: float


def energy_sample(t, medium: MediumParams, mass, stiffness, u, u_t, u_tt) -> EnergySample:
    """Energies of interior-node coefficient vectors (u, u_t, u_tt) at time t."""
    c2 = medium.c * medium.c
    tau2 = medium.tau * medium.tau
    n_utt = matrix_norm(mass, u_tt)
    n_ut_k = matrix_norm(stiffness, u_t)
    n_u_k = matrix_norm(stiffness, u)
    e = 0.5 * tau2 * n_utt**2 + 0.5 * tau2 * c2 * n_ut_k**2 + 0.5 * c2 * n_u_k**2
    z = medium.tau * u_t + u
    z_t = medium.tau * u_tt + u_t
    with np.errstate(over="ignore", invalid="ignore"):
        e_z = 0.5 * float(z_t @ (mass @ z_t)) + 0.5 * c2 * float(z @ (stiffness @ z))
    return EnergySample(t=t, energy=e, energy_z=e_z, norm_utt_mass=n_utt, norm_ut_stiff=n_ut_k)


@dataclass
class Trajectory:
    """Per-step history of one run on the interior nodes.

    u_t and u_tt have shape (n_steps + 1, n_interior); energy and energy_z are
    the corresponding energy series, fp_iters the per-step fixed-point
    iteration counts (all ones for linear runs).
    """

    times: np.ndarray
    u_t: np.ndarray
    u_tt: np.ndarray
    mass: object
    stiffness: object
    energy: np.ndarray
    energy_z: np.ndarray
    fp_iters: np.ndarray

    def _sup_norms(self, u_t, u_tt) -> float:
        mtt = self.mass @ u_tt.T
        sq_tt = np.einsum("ij,ji->i", u_tt, mtt)
        kt = self.stiffness @ u_t.T
        sq_t = np.einsum("ij,ji->i", u_t, kt)
        return float(np.sqrt(np.maximum(sq_tt, 0.0)).max() + np.sqrt(np.maximum(sq_t, 0.0)).max())

    def energy_norm(self) -> float:
        """sup_t ||u_tt||_M + sup_t ||u_t||_K over all recorded steps."""
        return self._sup_norms(self.u_t, self.u_tt)


def energy_norm_error(run: Trajectory, reference: Trajectory) -> float:
    """Relative energy-norm distance ||run - reference||_E / ||reference||_E.

    Both trajectories must be sampled on the identical time grid and mesh.
    """
    if run.u_t.shape != reference.u_t.shape or not np.array_equal(run.times, reference.times):
        raise ValueError("trajectories are not sampled on the same time grid and mesh")
    denom = reference.energy_norm()
    if not denom > 1e-300:
        raise DegenerateReferenceError(f"reference energy norm {denom!r} is numerically zero")
    num = reference._sup_norms(run.u_t - reference.u_t, run.u_tt - reference.u_tt)
    return num / denom


@dataclass(frozen=True)
class SweepRecord:
    """One row of a diffusivity sweep."""

    delta: float
    err_rel: float
    dt: float
    h: float
    steps: int
    max_fp_iters: int
    error: str | None = None


@dataclass(frozen=True)
class RateFit:
    """Log-log rate fit err ~ C * delta^slope with linearity diagnostics."""

    slope: float
    intercept: float
    ratios: dict
    max_ratio_deviation: float


def fit_rate(records, min_points: int = 3) -> RateFit:
    """Least-squares slope of log(err) vs log(delta) over usable sweep rows.

    Rows with delta <= 0, nonpositive or non-finite errors, or error markers
    are skipped; fewer than min_points distinct usable deltas raise
    InsufficientDataError.
    """
    pairs = sorted(
        {
            (r.delta, r.err_rel)
            for r in records
            if r.error is None and r.delta > 0.0 and math.isfinite(r.err_rel) and r.err_rel > 0.0
        }
    )
    if len({d for d, _ in pairs}) < min_points:
        raise InsufficientDataError(
            f"need at least {min_points} usable (delta, err) points, got {len(pairs)}"
        )
    logs_d = np.log([d for d, _ in pairs])
    logs_e = np.log([e for _, e in pairs])
    slope, intercept = np.polyfit(logs_d, logs_e, 1)
    ratios = {d: e / d for d, e in pairs}
    values = np.array(list(ratios.values()))
    mean = values.mean()
    max_dev = float(np.abs(values - mean).max() / abs(mean)) if mean != 0.0 else math.inf
    return RateFit(slope=float(slope), intercept=float(intercept), ratios=ratios, max_ratio_deviation=max_dev)


def _cubic_roots_monic(a: float, b: float, c: float):
    """Roots of s^3 + a*s^2 + b*s + c with a numerically careful Cardano.

    Trigonometric branch for three real roots; sign-safe cube roots and the
    t2 = -p/(3*t1) identity avoid cancellation in the one-real-root branch.
    """
    ofs = a / 3.0
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    if p == 0.0 and q == 0.0:
        return [complex(-ofs)] * 3
    disc = 0.25 * q * q + p**3 / 27.0
    if disc <= 0.0:
        # three real roots
        m2 = 2.0 * math.sqrt(-p / 3.0)
        arg = -4.0 * q / m2**3
        phi = math.acos(min(1.0, max(-1.0, arg))) / 3.0
        ys = [m2 * math.cos(phi - 2.0 * math.pi * k / 3.0) for k in range(3)]
        return [complex(y - ofs) for y in ys]
    sq = math.sqrt(disc)
    u3 = -0.5 * q - sq if q >= 0.0 else -0.5 * q + sq
    t1 = math.copysign(abs(u3) ** (1.0 / 3.0), u3)
    t2 = -p / (3.0 * t1) if t1 != 0.0 else 0.0
    y1 = t1 + t2
    re = -0.5 * (t1 + t2)
    im = 0.5 * math.sqrt(3.0) * (t1 - t2)
    return [complex(y1 - ofs), complex(re - ofs, im), complex(re - ofs, -im)]


def _polish_root(a: float, b: float, c: float, s: complex) -> complex:
    for _ in range(2):
        f = ((s + a) * s + b) * s + c
        df = (3.0 * s + 2.0 * a) * s + b
        if df == 0:
            break
        step = f / df
        if not (cmath.isfinite(step)):
            break
        s = s - step
    return s


def characteristic_roots(medium: MediumParams, lam: float):
    """Roots of tau*s^3 + alpha0*s^2 + b*lam*s + c^2*lam = 0, sorted by (Re, Im).

    lam is a (nonnegative) Dirichlet-Laplacian eigenvalue.
    """
    if lam < 0.0:
        raise ValueError(f"lam must be nonnegative, got {lam!r}")
    tau = medium.tau
    a = medium.alpha0 / tau
    b = medium.b * lam / tau
    c = medium.c * medium.c * lam / tau
    if lam == 0.0:
        return sorted([0.0 + 0.0j, 0.0 + 0.0j, complex(-a)], key=lambda s: (s.real, s.imag))
    roots = [_polish_root(a, b, c, s) for s in _cubic_roots_monic(a, b, c)]
    # enforce exact conjugacy of complex pairs (coefficients are real)
    complexes = [s for s in roots if s.imag != 0.0]
    if len(complexes) == 2:
        reals = [s for s in roots if s.imag == 0.0]
        lead = max(complexes, key=lambda s: abs(s.imag))
        roots = reals + [lead, lead.conjugate()]
    return sorted(roots, key=lambda s: (s.real, s.imag))


def modal_solution(medium: MediumParams, lam: float, init, t):
    """Closed-form modal amplitude of the linear equation for one eigenvalue.

    init = (a0, a1, a2) prescribes (a, a', a'')(0); returns (a, a', a'') at the
    times in t (scalar or array).  Distinct characteristic roots use the
    exponential basis via a complex Vandermonde solve; exactly repeated roots
    use the polynomial-times-exponential basis.  Nearly repeated roots (relative
    separation below 1e-8) raise IllConditionedRootsError.
    """
    roots = characteristic_roots(medium, lam)
    t_arr = np.asarray(t, dtype=float)
    a0, a1, a2 = (float(x) for x in init)
    scale = max(max(abs(s) for s in roots), 1.0)
    seps = [abs(roots[0] - roots[1]), abs(roots[0] - roots[2]), abs(roots[1] - roots[2])]
    groups: list[tuple[complex, int]] = []
    for s in roots:
        if groups and abs(s - groups[-1][0]) == 0.0:
            groups[-1] = (groups[-1][0], groups[-1][1] + 1)
        else:
            groups.append((s, 1))
    if len(groups) < 3 or all(sep / scale >= 1e-8 for sep in seps):
        pass
    else:
        raise IllConditionedRootsError(
            f"characteristic roots {roots} are nearly repeated (relative separation "
            f"{min(seps) / scale:.3e})"
        )

    # basis functions f with rows (f(0), f'(0), f''(0)) per column
    basis: list[tuple[complex, int]] = []  # (root, power of t)
    for s, mult in groups:
        for power in range(mult):
            basis.append((s, power))
    cols = []
    for s, power in basis:
        f0 = 1.0 if power == 0 else 0.0
        if power == 0:
            f1 = s
            f2 = s * s
        elif power == 1:
            f1 = 1.0
            f2 = 2.0 * s
        else:
            f1 = 0.0
            f2 = 2.0
        cols.append([f0, f1, f2])
    vm = np.array(cols, dtype=complex).T
    coeff = np.linalg.solve(vm, np.array([a0, a1, a2], dtype=complex))

    val = np.zeros(t_arr.shape, dtype=complex)
    d1 = np.zeros(t_arr.shape, dtype=complex)
    d2 = np.zeros(t_arr.shape, dtype=complex)
    for g, (s, power) in zip(coeff, basis):
        e = np.exp(s * t_arr)
        tp = t_arr**power
        val += g * tp * e
        if power == 0:
            d1 += g * s * e
            d2 += g * s * s * e
        else:
            tpm1 = t_arr ** (power - 1)
            d1 += g * (power * tpm1 + s * tp) * e
            tpm2 = t_arr ** (power - 2) if power >= 2 else np.zeros_like(t_arr)
            d2 += g * (power * (power - 1) * tpm2 + 2.0 * s * power * tpm1 + s * s * tp) * e
    return val.real, d1.real, d2.real


def interval_eigenpair(length: float, k: int):
    """k-th Dirichlet eigenpair of -Lap on (0, length): lam and phi(x)."""
    if k < 1:
        raise ValueError(f"mode number must be >= 1, got {k!r}")
    lam = (k * math.pi / length) ** 2

    def phi(x):
        return np.sin(k * math.pi * np.asarray(x) / length)

    return lam, phi


def square_eigenpair(side: float, kx: int, ky: int):
    """(kx, ky) Dirichlet eigenpair of -Lap on (0, side)^2 for (x, y) node arrays."""
    if kx < 1 or ky < 1:
        raise ValueError(f"mode numbers must be >= 1, got {(kx, ky)!r}")
    lam = (math.pi / side) ** 2 * (kx * kx + ky * ky)

    def phi(nodes):
        pts = np.asarray(nodes)
        return np.sin(kx * math.pi * pts[:, 0] / side) * np.sin(ky * math.pi * pts[:, 1] / side)

    return lam, phi
