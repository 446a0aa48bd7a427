"""Energies, error norms, rate fitting, and the closed-form modal oracle."""

import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from mgtsim import (
    DegenerateReferenceError,
    IllConditionedRootsError,
    InsufficientDataError,
    MediumParams,
    SweepRecord,
    Trajectory,
    assemble,
    characteristic_roots,
    energy_norm_error,
    energy_sample,
    fit_rate,
    interval_eigenpair,
    interval_mesh,
    matrix_norm,
    modal_solution,
    square_eigenpair,
)

WATER = MediumParams(tau=1.5e-5, c=1500.0, rho=1000.0, b_over_a=5.0)

# published relative energy-norm errors of the viscous-to-inviscid comparison
PAPER_1D = [
    (1e-5, 1.90988704083639e-06),
    (1e-4, 1.9098797837469e-05),
    (1e-3, 0.000190980721004107),
    (1e-2, 0.00190908136705375),
]
PAPER_2D = [
    (1e-6, 1.32555750399122e-07),
    (1e-5, 1.32555697863721e-06),
    (1e-4, 1.32555166724341e-05),
    (1e-3, 0.000132549855745382),
    (1e-2, 0.001324967537783),
]


def test_matrix_norm_hand_value():
    m = sp.csr_matrix(np.array([[1.0 / 3.0]]))
    assert matrix_norm(m, np.array([2.0])) == pytest.approx(math.sqrt(4.0 / 3.0), rel=1e-15)


def test_matrix_norm_nonfinite():
    m = sp.csr_matrix(np.array([[1.0]]))
    assert matrix_norm(m, np.array([math.inf])) == math.inf


def test_energy_zero_state():
    ops = assemble(interval_mesh(1.0, 2))
    z = np.zeros(1)
    s = energy_sample(0.0, WATER, ops.mass, ops.stiffness, z, z, z)
    assert (s.energy, s.energy_z, s.norm_utt_mass, s.norm_ut_stiff) == (0.0, 0.0, 0.0, 0.0)
    assert s.t == 0.0


def test_energy_indicator_example():
    # u = indicator of the single interior node, c = 1: E = c^2/2 u'Ku = 2
    ops = assemble(interval_mesh(1.0, 2))
    medium = MediumParams(tau=1.5e-5, c=1.0)
    u = np.array([1.0])
    z = np.zeros(1)
    s = energy_sample(0.0, medium, ops.mass, ops.stiffness, u, z, z)
    assert s.energy == pytest.approx(2.0, rel=1e-14)
    assert s.energy_z == pytest.approx(2.0, rel=1e-14)
    assert s.norm_utt_mass == 0.0
    assert s.norm_ut_stiff == 0.0


@given(scale=st.floats(min_value=0.1, max_value=100.0), seed=st.integers(0, 2**16))
@settings(max_examples=25, deadline=None)
def test_energy_quadratic_scaling(scale, seed):
    ops = assemble(interval_mesh(1.0, 12))
    rng = np.random.default_rng(seed)
    u, ut, utt = rng.standard_normal((3, ops.mass.shape[0]))
    base = energy_sample(0.0, WATER, ops.mass, ops.stiffness, u, ut, utt)
    scaled = energy_sample(
        0.0, WATER, ops.mass, ops.stiffness, scale * u, scale * ut, scale * utt
    )
    assert scaled.energy == pytest.approx(scale**2 * base.energy, rel=1e-10)
    assert scaled.energy_z == pytest.approx(scale**2 * base.energy_z, rel=1e-10)


@given(seed=st.integers(0, 2**16))
@settings(max_examples=30, deadline=None)
def test_shifted_energy_bound(seed):
    # Ez = 1/2||tau*u_tt + u_t||_M^2 + c^2/2||tau*u_t + u||_K^2; by Cauchy-Schwarz
    # each squared sum is <= 2(1+tau)^2 (sum of the two squared norms), so
    # Ez <= (1+tau)^2 max(1, c^2) (||u_tt||_M^2 + ||u_t||_M^2 + ||u_t||_K^2 + ||u||_K^2)
    ops = assemble(interval_mesh(1.0, 10))
    rng = np.random.default_rng(seed)
    u, ut, utt = rng.standard_normal((3, ops.mass.shape[0]))
    s = energy_sample(0.0, WATER, ops.mass, ops.stiffness, u, ut, utt)
    bound = (
        (1.0 + WATER.tau) ** 2
        * max(1.0, WATER.c**2)
        * (
            matrix_norm(ops.mass, utt) ** 2
            + matrix_norm(ops.mass, ut) ** 2
            + matrix_norm(ops.stiffness, ut) ** 2
            + matrix_norm(ops.stiffness, u) ** 2
        )
    )
    assert s.energy_z <= bound * (1.0 + 1e-12)


def tiny_trajectory(u_t_rows, u_tt_rows):
    ops = assemble(interval_mesh(1.0, 2))
    u_t = np.asarray(u_t_rows, dtype=float)
    n = u_t.shape[0]
    return Trajectory(
        times=np.linspace(0.0, 1.0, n),
        u_t=u_t,
        u_tt=np.asarray(u_tt_rows, dtype=float),
        mass=ops.mass,
        stiffness=ops.stiffness,
        energy=np.zeros(n),
        energy_z=np.zeros(n),
        fp_iters=np.ones(n, dtype=np.int64),
    )


def test_trajectory_energy_norm_hand_value():
    # M = [1/3], K = [4]: sup ||u_tt||_M = |b|/sqrt(3), sup ||u_t||_K = 2|a|
    a, b = 0.7, -1.2
    traj = tiny_trajectory([[0.0], [a]], [[b], [0.0]])
    assert traj.energy_norm() == pytest.approx(abs(b) / math.sqrt(3.0) + 2.0 * abs(a), rel=1e-13)


def test_energy_norm_error_identity_and_guards():
    traj = tiny_trajectory([[0.1], [0.2]], [[0.3], [0.4]])
    assert energy_norm_error(traj, traj) == 0.0

    zero = tiny_trajectory([[0.0], [0.0]], [[0.0], [0.0]])
    with pytest.raises(DegenerateReferenceError):
        energy_norm_error(traj, zero)

    short = tiny_trajectory([[0.1]], [[0.3]])
    with pytest.raises(ValueError):
        energy_norm_error(short, traj)


def test_energy_norm_error_scaling():
    ref = tiny_trajectory([[0.5], [1.0]], [[0.25], [2.0]])
    run = tiny_trajectory([[0.5 * 1.01], [1.0 * 1.01]], [[0.25 * 1.01], [2.0 * 1.01]])
    assert energy_norm_error(run, ref) == pytest.approx(0.01, rel=1e-10)


def records_from(pairs):
    return [SweepRecord(d, e, 1.0, 1.0, 1, 1) for d, e in pairs]


def test_fit_rate_exact_linear_law():
    fit = fit_rate(records_from([(d, 0.19 * d) for d in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2)]))
    assert fit.slope == pytest.approx(1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(math.log(0.19), abs=1e-12)
    assert fit.max_ratio_deviation <= 1e-12


def test_fit_rate_published_1d_errors():
    fit = fit_rate(records_from(PAPER_1D))
    assert fit.slope == pytest.approx(0.999943376777985, rel=1e-9)
    assert fit.max_ratio_deviation < 5e-4


def test_fit_rate_published_2d_errors():
    fit = fit_rate(records_from(PAPER_2D))
    assert fit.slope == pytest.approx(0.9999594189786606, rel=1e-9)
    assert fit.max_ratio_deviation < 1e-3


def test_fit_rate_requires_three_points():
    with pytest.raises(InsufficientDataError):
        fit_rate(records_from([(1e-4, 1e-5), (1e-3, 1e-4)]))


def test_fit_rate_skips_failed_records():
    recs = records_from(PAPER_1D)
    recs.append(SweepRecord(1e-1, float("nan"), 1.0, 1.0, 1, 0, error="diverged"))
    fit = fit_rate(recs)
    assert fit.slope == pytest.approx(0.999943376777985, rel=1e-9)
    bad = [SweepRecord(d, float("nan"), 1.0, 1.0, 1, 0, error="x") for d in (1e-4, 1e-3, 1e-2)]
    with pytest.raises(InsufficientDataError):
        fit_rate(bad)


def test_characteristic_roots_inviscid_factorization():
    # delta = 0, alpha = 1: tau s^3 + s^2 + tau c^2 lam s + c^2 lam = (tau s + 1)(s^2 + c^2 lam)
    lam, _ = interval_eigenpair(0.4, 1)
    roots = characteristic_roots(WATER, lam)
    reals = [s for s in roots if s.imag == 0.0]
    pair = sorted((s for s in roots if s.imag != 0.0), key=lambda s: s.imag)
    assert len(reals) == 1 and len(pair) == 2
    assert reals[0].real == pytest.approx(-1.0 / WATER.tau, rel=1e-12)
    omega = WATER.c * math.sqrt(lam)
    assert pair[1].imag == pytest.approx(omega, rel=1e-12)
    assert pair[0] == pair[1].conjugate()
    assert abs(pair[1].real) <= 1e-8 * omega


def test_characteristic_roots_vieta_sum():
    lam, _ = interval_eigenpair(0.4, 3)
    roots = characteristic_roots(WATER, lam)
    total = sum(roots)
    assert abs(total - (-1.0 / WATER.tau)) <= 1e-12 * (1.0 / WATER.tau)
    assert abs(total.imag) <= 1e-12 * (1.0 / WATER.tau)


@pytest.mark.parametrize(
    "medium,lam",
    [
        (WATER.with_delta(1e-3), (math.pi / 0.4) ** 2),
        (WATER.with_delta(1e-1), (2 * math.pi / 0.4) ** 2),
        (MediumParams(tau=2.0, c=0.5, delta=0.3, alpha0=1.7), 9.0),
        (MediumParams(tau=1e-6, c=340.0, delta=1e-5), 1.0e4),
    ],
)
def test_characteristic_roots_residual(medium, lam):
    roots = characteristic_roots(medium, lam)
    b = medium.b
    for s in roots:
        resid = medium.tau * s**3 + medium.alpha0 * s**2 + b * lam * s + medium.c**2 * lam
        scale = max(
            abs(medium.tau * s**3), abs(medium.alpha0 * s**2), abs(b * lam * s), medium.c**2 * lam
        )
        assert abs(resid) <= 1e-9 * scale


def test_characteristic_roots_negative_lam_rejected():
    with pytest.raises(ValueError):
        characteristic_roots(WATER, -1.0)


def ivp_reference(medium, lam, init, t_end):
    b = medium.b

    def rhs(t, y):
        return [
            y[1],
            y[2],
            (-(medium.alpha0 * y[2]) - b * lam * y[1] - medium.c**2 * lam * y[0]) / medium.tau,
        ]

    return solve_ivp(
        rhs, (0.0, t_end), list(init), rtol=1e-13, atol=1e-30, method="DOP853"
    )


def test_modal_solution_zero_init():
    a, a1, a2 = modal_solution(WATER, 100.0, (0.0, 0.0, 0.0), np.linspace(0.0, 1e-4, 5))
    for arr in (a, a1, a2):
        np.testing.assert_array_equal(arr, 0.0)


def test_modal_solution_matches_integrated_reference():
    medium = WATER.with_delta(1e-3)
    lam, _ = interval_eigenpair(0.4, 1)
    t_end = 1e-5
    sol = ivp_reference(medium, lam, (1.0, 0.0, 0.0), t_end)
    a, a1, a2 = modal_solution(medium, lam, (1.0, 0.0, 0.0), t_end)
    assert float(a) == pytest.approx(sol.y[0, -1], rel=1e-9)
    assert float(a1) == pytest.approx(sol.y[1, -1], rel=1e-9)
    assert float(a2) == pytest.approx(sol.y[2, -1], rel=1e-9)


def test_modal_solution_initial_conditions():
    medium = WATER.with_delta(1e-4)
    lam = 500.0
    init = (0.3, -2.0, 7.5)
    a, a1, a2 = modal_solution(medium, lam, init, np.array([0.0, 1e-6]))
    # IC reproduction is limited by the conditioning of the Vandermonde solve
    # (root magnitudes span ~1/tau vs c*sqrt(lam))
    assert a[0] == pytest.approx(init[0], rel=1e-6, abs=1e-12)
    assert a1[0] == pytest.approx(init[1], rel=1e-6)
    assert a2[0] == pytest.approx(init[2], rel=1e-6)


def test_modal_solution_zero_lam_polynomial_branch():
    # lam = 0: roots {0, 0, -alpha/tau}, basis {1, t, exp(-alpha t / tau)}
    medium = MediumParams(tau=2.0, c=3.0, delta=0.5, alpha0=1.5)
    roots = characteristic_roots(medium, 0.0)
    assert sorted(s.real for s in roots) == pytest.approx([-0.75, 0.0, 0.0], abs=1e-15)
    t_end = 0.5
    sol = ivp_reference(medium, 0.0, (1.0, 2.0, 3.0), t_end)
    a, _, _ = modal_solution(medium, 0.0, (1.0, 2.0, 3.0), t_end)
    assert float(a) == pytest.approx(sol.y[0, -1], rel=1e-10)


def test_modal_solution_exact_double_root():
    # tau=1, c=1, delta=1.25, alpha=6, lam=4: characteristic polynomial
    # (s+1)^2 (s+4), double root resolved with the polynomial basis
    medium = MediumParams(tau=1.0, c=1.0, delta=1.25, alpha0=6.0)
    roots = characteristic_roots(medium, 4.0)
    assert min(abs(roots[i] - roots[j]) for i in range(3) for j in range(i + 1, 3)) == 0.0
    t_end = 0.7
    init = (1.0, -0.5, 2.0)
    sol = ivp_reference(medium, 4.0, init, t_end)
    a, a1, _ = modal_solution(medium, 4.0, init, t_end)
    assert float(a) == pytest.approx(sol.y[0, -1], rel=1e-10)
    assert float(a1) == pytest.approx(sol.y[1, -1], rel=1e-10)


def test_modal_solution_near_double_root_rejected():
    # (s+1)^2 (s+2) with rounded coefficients: roots split by ~1e-8 and the
    # Vandermonde system is declared unreliable
    medium = MediumParams(tau=1.0, c=1.0, delta=1.5, alpha0=4.0)
    with pytest.raises(IllConditionedRootsError):
        modal_solution(medium, 2.0, (1.0, 0.0, 0.0), 0.5)


def test_interval_eigenpair():
    lam, phi = interval_eigenpair(0.4, 2)
    assert lam == pytest.approx((2.0 * math.pi / 0.4) ** 2, rel=1e-15)
    x = np.linspace(0.0, 0.4, 9)
    vals = phi(x)
    assert abs(vals[0]) <= 1e-14 and abs(vals[-1]) <= 1e-14
    assert vals[1] == pytest.approx(math.sin(2.0 * math.pi * 0.05 / 0.4), rel=1e-14)


def test_square_eigenpair():
    lam, phi = square_eigenpair(0.5, 1, 2)
    assert lam == pytest.approx((math.pi / 0.5) ** 2 * (1 + 4), rel=1e-14)
    vals = phi(np.array([[0.0, 0.3], [0.25, 0.125]]))
    assert abs(vals[0]) <= 1e-14
    assert vals[1] == pytest.approx(
        math.sin(math.pi * 0.5) * math.sin(2.0 * math.pi * 0.25), rel=1e-13
    )
