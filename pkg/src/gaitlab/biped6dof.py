"""Exact nonlinear model of the planar 6-DOF kneed biped.

Generalized coordinates are ``q = (x, z, th1, th2, th3, th4)``: the stance-foot
position followed by the absolute angles (from vertical-up) of the stance shank,
stance thigh, swing thigh and swing shank.  Every frame is mass-balanced about
the hip, so the inertia matrix only couples the stance-leg angles to the foot
translation and there are no velocity terms once the contact constraints hold.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import DegenerateConfigurationError, InvalidImpactError
from .params import GaitParams, PhysicalParams

__all__ = [
    "PhysicalParams",
    "FullState",
    "ConstraintForces",
    "mass_matrix",
    "velocity_matrix",
    "gravity_vector",
    "constrained_accel",
    "swing_foot_position",
    "impact_jacobian",
    "impact_velocity",
    "impact_map",
    "xi_coefficient",
    "xi_terms",
    "kinetic_energy",
    "potential_energy",
    "total_energy",
    "impact_theta2",
    "impact_posture",
    "post_impact_state",
    "DRIVE_MATRIX",
    "CONTACT_JACOBIAN",
    "OUTPUT_MATRIX",
]

DRIVE_MATRIX = K.S_DRIVE
CONTACT_JACOBIAN = K.J_CONTACT
OUTPUT_MATRIX = K.H_OUT


@dataclass
class FullState:
    """Configuration, velocity and time since the last impact."""

    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.q = np.asarray(self.q, dtype=float).reshape(6)
        self.qdot = np.asarray(self.qdot, dtype=float).reshape(6)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.qdot])

    @classmethod
    def from_vector(cls, s, t=0.0) -> "FullState":
        s = np.asarray(s, dtype=float)
        return cls(s[:6].copy(), s[6:].copy(), t)


@dataclass(frozen=True)
class ConstraintForces:
    """Stance contact multipliers: ground reaction (Fx, Fz) and the knee-lock force."""

    Fx: float
    Fz: float
    knee_force: float

    @classmethod
    def from_array(cls, lam) -> "ConstraintForces":
        return cls(float(lam[0]), float(lam[1]), float(lam[2]))

    def as_array(self) -> np.ndarray:
        return np.array([self.Fx, self.Fz, self.knee_force])


def _q(q) -> np.ndarray:
    return np.ascontiguousarray(q, dtype=float).reshape(6)


def mass_matrix(p: PhysicalParams, q) -> np.ndarray:
    """Constant-structure inertia matrix M(q) (symmetric, 6x6)."""
    return K.mass_matrix(p.as_array(), _q(q))


def velocity_matrix(p: PhysicalParams, q, qdot) -> np.ndarray:
    """Velocity-coupling matrix C(q, qdot); C @ qdot are the centrifugal terms."""
    return K.velocity_matrix(p.as_array(), _q(q), _q(qdot))


def gravity_vector(p: PhysicalParams, q) -> np.ndarray:
    return K.gravity_vector(p.as_array(), _q(q))


def constrained_accel(p: PhysicalParams, q, qdot, u) -> tuple[np.ndarray, ConstraintForces]:
    """Accelerations and multipliers of the stance-constrained dynamics.

    Solves the 9x9 saddle-point system built from M, C, g, S and the stance
    constraint Jacobian, so the returned ``qddot`` satisfies ``Jc @ qddot = 0``
    up to the linear solve's roundoff.

    Parameters
    ----------
    p : PhysicalParams
    q, qdot : array_like, shape (6,)
    u : array_like, shape (3,)
        Joint torques (stance knee, hip, swing knee).

    Returns
    -------
    qddot : ndarray, shape (6,)
    forces : ConstraintForces
    """
    try:
        qdd, lam = K.constrained_accel(p.as_array(), _q(q), _q(qdot),
                                       np.ascontiguousarray(u, dtype=float).reshape(3))
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigurationError("singular constrained-dynamics system") from exc
    return qdd, ConstraintForces.from_array(lam)


def swing_foot_position(p: PhysicalParams, q) -> tuple[float, float]:
    """Swing-foot position (x_bar, z_bar) in the world frame."""
    return K.swing_foot(p.as_array(), _q(q))


def impact_jacobian(p: PhysicalParams, q) -> np.ndarray:
    """4x6 Jacobian of the post-impact constraints (fore-foot sticks, both knees locked)."""
    L1, L2 = p.L1, p.L2
    _, _, t1, t2, t3, t4 = _q(q)
    return np.array([
        [1.0, 0.0, L1 * math.cos(t1), L2 * math.cos(t2), -L2 * math.cos(t3), -L1 * math.cos(t4)],
        [0.0, 1.0, -L1 * math.sin(t1), -L2 * math.sin(t2), L2 * math.sin(t3), L1 * math.sin(t4)],
        [0.0, 0.0, 1.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 1.0, -1.0],
    ])


def impact_velocity(p: PhysicalParams, q, qdot) -> tuple[np.ndarray, np.ndarray]:
    """Solve the inelastic collision for the post-impact velocity before relabeling.

    Returns ``(qdot_plus, impulse)`` from the 10x10 system
    ``M qdot+ - J_I^T lam = M qdot-``, ``J_I qdot+ = 0``.
    """
    q = _q(q)
    M = mass_matrix(p, q)
    J = impact_jacobian(p, q)
    A = np.zeros((10, 10))
    A[:6, :6] = M
    A[:6, 6:] = -J.T
    A[6:, :6] = J
    rhs = np.zeros(10)
    rhs[:6] = M @ _q(qdot)
    try:
        sol = np.linalg.solve(A, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateConfigurationError("singular impact system") from exc
    return sol[:6], sol[6:]


def _relabel(q, qdot_plus, p):
    xb, zb = swing_foot_position(p, q)
    q_new = np.array([xb, zb, q[5], q[4], q[3], q[2]])
    qd_new = np.array([0.0, 0.0, qdot_plus[5], qdot_plus[4], qdot_plus[3], qdot_plus[2]])
    return q_new, qd_new


def impact_map(p: PhysicalParams, gait: GaitParams, q, qdot, ground: float | None = None,
               tol: float = 1e-6) -> tuple[np.ndarray, np.ndarray]:
    """Inelastic fore-foot impact followed by the stance/swing exchange.

    The old swing foot becomes the new contact point and the link angles are
    relabeled ``(th1, th2, th3, th4) <- (th4, th3, th2, th1)``.

    Parameters
    ----------
    ground : float, optional
        World height of the ground under the landing foot; defaults to the
        current stance-foot height.
    tol : float
        Tolerance on the impact-posture preconditions.

    Raises
    ------
    InvalidImpactError
        If the swing foot is not on the ground or a knee is not at ``beta``.
    """
    q = _q(q)
    qdot = _q(qdot)
    if ground is None:
        ground = q[1]
    _, zb = swing_foot_position(p, q)
    if abs(zb - ground) > tol:
        raise InvalidImpactError(f"swing foot {zb - ground:+.3e} m off the ground")
    if abs(q[2] - q[3] - gait.beta) > tol or abs(q[4] - q[5] + gait.beta) > tol:
        raise InvalidImpactError("knees are not locked at beta")
    qd_plus, _ = impact_velocity(p, q, qdot)
    return _relabel(q, qd_plus, p)


def xi_terms(p: PhysicalParams, gait: GaitParams) -> tuple[float, float]:
    """Numerator and denominator of the post-impact stance-velocity ratio."""
    m1, m2, L1, L2, I1, I2, m = p.m1, p.m2, p.L1, p.L2, p.I1, p.I2, p.m
    cb = math.cos(gait.beta)
    num = (m1 * (m1 + m2) * L2**2 + m2 * (I1 + I2)
           + m2 * m * math.cos(gait.alpha) * (L1**2 + L2**2 + 2.0 * L1 * L2 * cb))
    den = ((m1 + m2) * (m1 + 2.0 * m2) * L2**2 + m2 * (m * L1**2 + I1 + I2)
           + 2.0 * m2 * m * L1 * L2 * cb)
    return num, den


def xi_coefficient(p: PhysicalParams, gait: GaitParams) -> float:
    """Ratio of post-impact to pre-impact stance angular velocity."""
    num, den = xi_terms(p, gait)
    return num / den


def kinetic_energy(p: PhysicalParams, q, qdot) -> float:
    qdot = _q(qdot)
    return 0.5 * float(qdot @ mass_matrix(p, q) @ qdot)


def potential_energy(p: PhysicalParams, q) -> float:
    """Gravitational energy; the whole-body COM sits on the hip joint."""
    _, z, t1, t2, _, _ = _q(q)
    return p.m * p.g * (z + p.L1 * math.cos(t1) + p.L2 * math.cos(t2))


def total_energy(p: PhysicalParams, q, qdot) -> float:
    return kinetic_energy(p, q, qdot) + potential_energy(p, q)


def leg_polar(p: PhysicalParams, beta: float) -> tuple[float, float]:
    # Foot-to-hip vector of a leg locked at beta: length and lean offset from the thigh angle.
    reach = math.hypot(p.L1 * math.sin(beta), p.L1 * math.cos(beta) + p.L2)
    offset = math.atan2(p.L1 * math.sin(beta), p.L1 * math.cos(beta) + p.L2)
    return reach, offset


def stance_upright(p: PhysicalParams, beta: float, theta2: float) -> bool:
    """True while the hip is above the stance foot.

    Uses the lean angle itself rather than the hip height, so a leg that has
    rotated past horizontal is never mistaken for upright again.
    """
    return abs(theta2 + leg_polar(p, beta)[1]) < 0.5 * math.pi


def impact_theta2(p: PhysicalParams, gait: GaitParams, ground: float = 0.0) -> float:
    """Stance-thigh angle at which the locked-knee swing foot touches ``ground``.

    ``ground`` is relative to the stance foot.  Closed form from the two legs
    being rigid copies of each other rotated by ``alpha``.
    """
    reach, offset = leg_polar(p, gait.beta)
    s = -ground / (2.0 * reach * math.sin(gait.alpha / 2.0))
    if abs(s) > 1.0:
        raise InvalidImpactError("ground offset unreachable by the impact posture")
    return gait.alpha / 2.0 - offset + math.asin(s)


def impact_posture(p: PhysicalParams, gait: GaitParams, theta2: float,
                   x: float = 0.0, z: float = 0.0) -> np.ndarray:
    """Configuration with both knees at beta and the hip opened to alpha."""
    t3 = theta2 - gait.alpha
    return np.array([x, z, theta2 + gait.beta, theta2, t3, t3 + gait.beta])


def post_impact_state(p: PhysicalParams, gait: GaitParams, thetadot1_minus: float,
                      ground: float = 0.0) -> FullState:
    """State just after an impact from the target posture with all links at ``thetadot1_minus``."""
    q_minus = impact_posture(p, gait, impact_theta2(p, gait, ground))
    qd_minus = np.array([0.0, 0.0, 1.0, 1.0, 1.0, 1.0]) * thetadot1_minus
    q_plus, qd_plus = impact_map(p, gait, q_minus, qd_minus, ground=ground)
    # Re-origin so the new stance foot sits at (0, 0).
    q_plus[0] = 0.0
    q_plus[1] = 0.0
    return FullState(q_plus, qd_plus, 0.0)
