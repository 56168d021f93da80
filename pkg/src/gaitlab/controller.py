"""Output-following gait controller.

The controlled outputs are the hip and swing-knee relative angles
``y = (th2 - th3, th3 - th4)``.  After each impact the hip output follows a
quintic from ``-alpha`` to ``alpha`` whose initial rate matches the post-impact
velocity, and the swing knee dips by ``gamma`` along a sin^3 bump.  Torques are
chosen so that ``y'' = v`` exactly, with ``v`` the target's second derivative,
so no PD terms are needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .errors import DegenerateConfigurationError, InvalidParameterError
from .params import GaitParams, PhysicalParams

__all__ = [
    "GaitParams",
    "TrajectoryCoeffs",
    "compute_coeffs",
    "desired_output",
    "accel_command",
    "control_input_full",
    "control_input_reduced",
    "quintic_basis",
]


@dataclass(frozen=True)
class TrajectoryCoeffs:
    """Quintic hip-trajectory coefficients for one step.

    ``a`` holds ``a0..a5``; ``T`` is the settling time they were built for.
    """

    a: tuple
    theta1_minus: float
    T: float

    def as_array(self) -> np.ndarray:
        return np.array(self.a, dtype=float)


def quintic_basis(T: float) -> tuple[np.ndarray, np.ndarray]:
    """Coefficient vectors ``(P, Q)`` with ``a = alpha * P + (xi - 1) * thetadot1_minus * Q``."""
    P = np.array([-1.0, 0.0, 0.0, 20.0 / T**3, -30.0 / T**4, 12.0 / T**5])
    Q = np.array([0.0, 1.0, 0.0, -6.0 / T**2, 8.0 / T**3, -3.0 / T**4])
    return P, Q


def compute_coeffs(gait: GaitParams, xi: float, thetadot1_minus: float,
                   T: float | None = None) -> TrajectoryCoeffs:
    """Quintic coefficients for the step following an impact at ``thetadot1_minus``.

    Must be recomputed at every impact since ``a1, a3, a4, a5`` depend on the
    pre-impact stance velocity.
    """
    T = gait.settling_time if T is None else T
    if not T > 0:
        raise InvalidParameterError(f"settling time must be positive, got {T!r}")
    alpha = gait.alpha
    c = (xi - 1.0) * thetadot1_minus
    a = (
        -alpha,
        c,
        0.0,
        (20.0 * alpha - 6.0 * c * T) / T**3,
        (-30.0 * alpha + 8.0 * c * T) / T**4,
        (12.0 * alpha - 3.0 * c * T) / T**5,
    )
    return TrajectoryCoeffs(a, float(thetadot1_minus), float(T))


def desired_output(gait: GaitParams, coeffs: TrajectoryCoeffs, t: float):
    """Target output and its first two time derivatives at time ``t`` after impact.

    Returns
    -------
    y, ydot, yddot : ndarray, shape (2,)
    """
    T = coeffs.T
    if t > T:
        return np.array([gait.alpha, -gait.beta]), np.zeros(2), np.zeros(2)
    a0, a1, a2, a3, a4, a5 = coeffs.a
    y1 = a0 + t * (a1 + t * (a2 + t * (a3 + t * (a4 + t * a5))))
    yd1 = a1 + t * (2 * a2 + t * (3 * a3 + t * (4 * a4 + t * 5 * a5)))
    ydd1 = 2 * a2 + t * (6 * a3 + t * (12 * a4 + t * 20 * a5))
    w = math.pi / T
    s, c = math.sin(w * t), math.cos(w * t)
    y2 = -gait.beta - gait.gamma * s**3
    yd2 = -gait.gamma * 3.0 * s * s * c * w
    ydd2 = -gait.gamma * w * w * (6.0 * s * c * c - 3.0 * s**3)
    return np.array([y1, y2]), np.array([yd1, yd2]), np.array([ydd1, ydd2])


def accel_command(gait: GaitParams, coeffs: TrajectoryCoeffs, t: float) -> np.ndarray:
    """Acceleration command ``v`` (the target's second derivative)."""
    return desired_output(gait, coeffs, t)[2]


def control_input_full(p: PhysicalParams, gait: GaitParams, q, qdot, v) -> np.ndarray:
    """Torques ``(0, u2, u3)`` that make the constrained 6-DOF model produce ``y'' = v``.

    The stance knee is locked, so ``u1`` is left at zero; its role is taken by
    the knee-lock multiplier.
    """
    try:
        _, u, _ = K.servo_accel(p.as_array(), np.ascontiguousarray(q, dtype=float),
                                np.ascontiguousarray(qdot, dtype=float),
                                np.ascontiguousarray(v, dtype=float))
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigurationError("output decoupling matrix is singular") from exc
    return u


def control_input_reduced(p: PhysicalParams, gait: GaitParams, linsys, qbar, v) -> np.ndarray:
    """Reduced-model torques ``(u2, u3)`` achieving ``y'' = v`` on the linearized 3-DOF model.

    ``linsys`` supplies ``Mbar``, ``Gbar``, ``gbeta`` and ``Sbar``.
    """
    Minv = np.linalg.inv(linsys.Mbar)
    S = linsys.Sbar
    W = S.T @ Minv @ S
    rhs = np.asarray(v, dtype=float) + S.T @ Minv @ (linsys.Gbar @ np.asarray(qbar, dtype=float)
                                                     + linsys.gbeta)
    return np.linalg.solve(W, rhs)
