"""Two-state constant-velocity filter over corridor position.

State is (position, velocity) with a symmetric 2x2 covariance carried as
(p00, p01, p11). The process model is discrete white-noise acceleration:

    x' = x + v dt            Q = q * [[dt^4/4, dt^3/2],
    v' = v                            [dt^3/2, dt^2  ]]

with q the acceleration-noise variance. Measurements are direct position
(or, for self-reports, direct speed) with variance r. The arithmetic is
written out scalar-by-scalar: a 2-state filter spends its time in Python
call overhead otherwise, and the closed forms are exact.
"""

from __future__ import annotations


class NumericalConditioningError(RuntimeError):
    """Covariance lost symmetry or positive semidefiniteness."""


_PSD_TOL = 1e-9


def predict(
    x: float, v: float, p00: float, p01: float, p11: float, dt: float, accel_var: float
) -> tuple[float, float, float, float, float]:
    """Constant-velocity prediction over dt with process noise accel_var."""
    x = x + v * dt
    dt2 = dt * dt
    q00 = accel_var * dt2 * dt2 * 0.25
    q01 = accel_var * dt2 * dt * 0.5
    q11 = accel_var * dt2
    p00 = p00 + 2.0 * dt * p01 + dt2 * p11 + q00
    p01 = p01 + dt * p11 + q01
    p11 = p11 + q11
    return x, v, p00, p01, p11


def update_position(
    x: float, v: float, p00: float, p01: float, p11: float, z: float, meas_var: float
) -> tuple[float, float, float, float, float]:
    """Linear-Gaussian correction with a position measurement."""
    s = p00 + meas_var
    if s <= 0.0:
        raise NumericalConditioningError(f"innovation variance {s} not positive")
    y = z - x
    k0 = p00 / s
    k1 = p01 / s
    x = x + k0 * y
    v = v + k1 * y
    new_p00 = (1.0 - k0) * p00
    new_p01 = (1.0 - k0) * p01
    new_p11 = p11 - k1 * p01
    _check_psd(new_p00, new_p01, new_p11)
    return x, v, new_p00, new_p01, new_p11


def update_velocity(
    x: float, v: float, p00: float, p01: float, p11: float, z: float, meas_var: float
) -> tuple[float, float, float, float, float]:
    """Linear-Gaussian correction with a direct speed measurement."""
    s = p11 + meas_var
    if s <= 0.0:
        raise NumericalConditioningError(f"innovation variance {s} not positive")
    y = z - v
    k0 = p01 / s
    k1 = p11 / s
    x = x + k0 * y
    v = v + k1 * y
    new_p00 = p00 - k0 * p01
    new_p01 = (1.0 - k1) * p01
    new_p11 = (1.0 - k1) * p11
    _check_psd(new_p00, new_p01, new_p11)
    return x, v, new_p00, new_p01, new_p11


def fuse_position_estimate(
    x: float, v: float, p00: float, p01: float, p11: float, z: float, z_var: float
) -> tuple[float, float, float, float, float]:
    """Inverse-variance fusion of an external position estimate.

    Identical algebra to a position measurement update, so the fused
    position variance is the harmonic combination p00*z_var/(p00+z_var),
    never larger than either input.
    """
    return update_position(x, v, p00, p01, p11, z, z_var)


def nees(
    x: float, v: float, p00: float, p01: float, p11: float, true_x: float, true_v: float
) -> float:
    """Normalized estimation error squared, e' P^-1 e (2 dof)."""
    det = p00 * p11 - p01 * p01
    if det <= 0.0:
        raise NumericalConditioningError(f"covariance determinant {det} not positive")
    e0 = x - true_x
    e1 = v - true_v
    return (p11 * e0 * e0 - 2.0 * p01 * e0 * e1 + p00 * e1 * e1) / det


def _check_psd(p00: float, p01: float, p11: float) -> None:
    scale = max(abs(p00), abs(p11), 1.0)
    if p00 < -_PSD_TOL * scale or p11 < -_PSD_TOL * scale:
        raise NumericalConditioningError(f"negative variance: p00={p00}, p11={p11}")
    if p00 * p11 - p01 * p01 < -_PSD_TOL * scale * scale:
        raise NumericalConditioningError(
            f"covariance not PSD: p00={p00}, p01={p01}, p11={p11}"
        )
