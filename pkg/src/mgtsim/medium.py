"""Physical parameters of the acoustic medium and derived model coefficients.

All quantities are SI.  The third-order models share the linear part

    tau*u_ttt + alpha0*u_tt - (delta + tau*c^2)*Lap(u_t) - c^2*Lap(u) = f

and differ only in the quadratic nonlinearity, whose coefficients live in
:class:`NonlinearityParams`.  Setting every nonlinearity coefficient to zero
recovers the linear equation; ``delta=0`` is the inviscid limit.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class MediumParams:
    """Constant coefficients of the propagation medium.

    Parameters
    ----------
    tau : float
        Thermal relaxation time [s]; must be positive.
    c : float
        Small-signal speed of sound [m/s]; must be positive.
    delta : float
        Sound diffusivity [m^2/s]; nonnegative (0 is the inviscid limit).
    rho : float
        Mass density [kg/m^3]; must be positive.
    b_over_a : float
        Parameter of nonlinearity B/A of the medium; nonnegative.
    alpha0 : float
        Coefficient multiplying u_tt (1 for the classical equations).
    """

    tau: float
    c: float
    delta: float = 0.0
    rho: float = 1000.0
    b_over_a: float = 0.0
    alpha0: float = 1.0

    def __post_init__(self):
        for name in ("tau", "c", "delta", "rho", "b_over_a", "alpha0"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
        if self.tau <= 0.0:
            raise ValueError(f"tau must be positive, got {self.tau!r}")
        if self.c <= 0.0:
            raise ValueError(f"c must be positive, got {self.c!r}")
        if self.delta < 0.0:
            raise ValueError(f"delta must be nonnegative, got {self.delta!r}")
        if self.rho <= 0.0:
            raise ValueError(f"rho must be positive, got {self.rho!r}")
        if self.b_over_a < 0.0:
            raise ValueError(f"b_over_a must be nonnegative, got {self.b_over_a!r}")

    @property
    def b(self) -> float:
        """Combined diffusivity b = delta + tau*c^2 multiplying -Lap(u_t)."""
        return self.delta + self.tau * self.c * self.c

    def with_delta(self, delta: float) -> "MediumParams":
        """Copy of this medium with only the sound diffusivity replaced."""
        return dataclasses.replace(self, delta=delta)


def pressure_nonlinearity(medium: MediumParams) -> float:
    """Coefficient k of the Westervelt pressure-form term (1/2)*(k*u^2)_tt.

    k = (1 + B/(2A)) / (rho * c^2), units 1/Pa.
    """
    return (1.0 + 0.5 * medium.b_over_a) / (medium.rho * medium.c * medium.c)


def potential_nonlinearity(medium: MediumParams) -> float:
    """Coefficient kappa of the Kuznetsov term (1/2)*(kappa*u_t^2)_t.

    kappa = (B/A) / c^2 for the velocity-potential form.
    """
    return medium.b_over_a / (medium.c * medium.c)


def westervelt_potential_coefficients(medium: MediumParams) -> tuple[float, float]:
    """(kappa, sigma) that reproduce Westervelt dynamics in potential form.

    The Westervelt equation for the velocity potential is the Kuznetsov code
    path with the local-term coefficient kappa = (1 + B/(2A)) / c^2 and the
    gradient-term coefficient sigma = 0.
    """
    kappa = (1.0 + 0.5 * medium.b_over_a) / (medium.c * medium.c)
    return kappa, 0.0


def stability_parameter(medium: MediumParams) -> float:
    """gamma = alpha0 - tau*c^2 / (delta + tau*c^2).

    Positive gamma means uniform-in-time energy decay; gamma = 0 (the inviscid
    limit with alpha0 = 1) is the marginal, energy-conserving case.
    """
    return medium.alpha0 - medium.tau * medium.c * medium.c / medium.b


def stability_class(medium: MediumParams) -> str:
    """Classify the medium as 'stable', 'marginal' or 'unstable' by gamma."""
    gamma = stability_parameter(medium)
    if gamma > 0.0:
        return "stable"
    if gamma == 0.0:
        return "marginal"
    return "unstable"


@dataclass(frozen=True)
class NonlinearityParams:
    """Coefficients of the quadratic nonlinearities; all zero means linear.

    k      multiplies the pressure-form term (1/2)*(k*u^2)_tt,
    kappa  multiplies the potential-form term (1/2)*(kappa*u_t^2)_t,
    sigma  multiplies the potential-form term (1/2)*(sigma*|grad u|^2)_t.
    """

    k: float = 0.0
    kappa: float = 0.0
    sigma: float = 0.0

    def __post_init__(self):
        for name in ("k", "kappa", "sigma"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")

    @property
    def is_linear(self) -> bool:
        return self.k == 0.0 and self.kappa == 0.0 and self.sigma == 0.0

    @classmethod
    def linear(cls) -> "NonlinearityParams":
        return cls()

    @classmethod
    def westervelt_pressure(cls, medium: MediumParams) -> "NonlinearityParams":
        return cls(k=pressure_nonlinearity(medium))

    @classmethod
    def kuznetsov_potential(cls, medium: MediumParams, sigma: float = 2.0) -> "NonlinearityParams":
        return cls(kappa=potential_nonlinearity(medium), sigma=sigma)

    @classmethod
    def westervelt_potential(cls, medium: MediumParams) -> "NonlinearityParams":
        kappa, sigma = westervelt_potential_coefficients(medium)
        return cls(kappa=kappa, sigma=sigma)
