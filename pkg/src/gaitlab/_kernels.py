"""Compiled scalar kernels for the 6-DOF model.

Everything here takes the packed parameter vector ``pv = [m1, m2, L1, L2, I1, I2, g]``
and plain float64 arrays so that numba can compile it in nopython mode.  The public,
dataclass-based API lives in :mod:`gaitlab.biped6dof`; the integrator calls these
directly to keep the inner loop out of the interpreter.
"""

import numpy as np
from numba import njit

# Output map y = H q  (hip and swing-knee relative angles).
H_OUT = np.array(
    [[0.0, 0.0, 0.0, 1.0, -1.0, 0.0],
     [0.0, 0.0, 0.0, 0.0, 1.0, -1.0]]
)

# Driving matrix S; columns are u1, u2, u3.
S_DRIVE = np.array(
    [[0.0, 0.0, 0.0],
     [0.0, 0.0, 0.0],
     [1.0, 0.0, 0.0],
     [-1.0, 1.0, 0.0],
     [0.0, -1.0, 1.0],
     [0.0, 0.0, -1.0]]
)

# Stance contact (x, z fixed) plus stance-knee lock.
J_CONTACT = np.array(
    [[1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
     [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
     [0.0, 0.0, 1.0, -1.0, 0.0, 0.0]]
)


@njit(cache=True)
def mass_matrix(pv, q):
    m1, m2, L1, L2, I1, I2 = pv[0], pv[1], pv[2], pv[3], pv[4], pv[5]
    m = 2.0 * (m1 + m2)
    c1, s1 = np.cos(q[2]), np.sin(q[2])
    c2, s2 = np.cos(q[3]), np.sin(q[3])
    c12 = np.cos(q[2] - q[3])
    M = np.zeros((6, 6))
    M[0, 0] = m
    M[0, 2] = m * L1 * c1
    M[0, 3] = m * L2 * c2
    M[1, 1] = m
    M[1, 2] = -m * L1 * s1
    M[1, 3] = -m * L2 * s2
    M[2, 2] = m * L1 * L1 + I1
    M[2, 3] = m * L1 * L2 * c12
    M[3, 3] = (m1 + 2.0 * m2) * m * L2 * L2 / (2.0 * m2) + I2
    M[4, 4] = m1 * m * L2 * L2 / (2.0 * m2) + I2
    M[5, 5] = I1
    for i in range(6):
        for j in range(i):
            M[i, j] = M[j, i]
    return M


@njit(cache=True)
def velocity_matrix(pv, q, qd):
    m1, m2, L1, L2 = pv[0], pv[1], pv[2], pv[3]
    m = 2.0 * (m1 + m2)
    c1, s1 = np.cos(q[2]), np.sin(q[2])
    c2, s2 = np.cos(q[3]), np.sin(q[3])
    s12 = np.sin(q[2] - q[3])
    C = np.zeros((6, 6))
    C[0, 2] = -m * L1 * qd[2] * s1
    C[0, 3] = -m * L2 * qd[3] * s2
    C[1, 2] = -m * L1 * qd[2] * c1
    C[1, 3] = -m * L2 * qd[3] * c2
    C[2, 3] = m * L1 * L2 * qd[3] * s12
    C[3, 2] = -m * L1 * L2 * qd[2] * s12
    return C


@njit(cache=True)
def gravity_vector(pv, q):
    m1, m2, L1, L2, g = pv[0], pv[1], pv[2], pv[3], pv[6]
    m = 2.0 * (m1 + m2)
    G = np.zeros(6)
    G[1] = m * g
    G[2] = -m * g * L1 * np.sin(q[2])
    G[3] = -m * g * L2 * np.sin(q[3])
    return G


@njit(cache=True)
def kkt_matrix(pv, q):
    K = np.zeros((9, 9))
    K[:6, :6] = mass_matrix(pv, q)
    K[:6, 6:] = -J_CONTACT.T
    K[6:, :6] = J_CONTACT
    return K


@njit(cache=True)
def constrained_accel(pv, q, qd, u):
    rhs = np.zeros(9)
    rhs[:6] = S_DRIVE @ u - velocity_matrix(pv, q, qd) @ qd - gravity_vector(pv, q)
    sol = np.linalg.solve(kkt_matrix(pv, q), rhs)
    return sol[:6].copy(), sol[6:].copy()


@njit(cache=True)
def swing_foot(pv, q):
    L1, L2 = pv[2], pv[3]
    xb = q[0] + L1 * np.sin(q[2]) + L2 * np.sin(q[3]) - L2 * np.sin(q[4]) - L1 * np.sin(q[5])
    zb = q[1] + L1 * np.cos(q[2]) + L2 * np.cos(q[3]) - L2 * np.cos(q[4]) - L1 * np.cos(q[5])
    return xb, zb


@njit(cache=True)
def accel_command(ctrl, t):
    """Second derivative of the target output; ``ctrl = [alpha, beta, gamma, T, a0..a5]``."""
    v = np.zeros(2)
    T = ctrl[3]
    if t > T:
        return v
    v[0] = 6.0 * ctrl[7] * t + 12.0 * ctrl[8] * t * t + 20.0 * ctrl[9] * t * t * t
    w = np.pi / T
    s, c = np.sin(w * t), np.cos(w * t)
    v[1] = -ctrl[2] * w * w * (6.0 * s * c * c - 3.0 * s * s * s)
    return v


@njit(cache=True)
def servo_accel(pv, q, qd, v):
    """Torques giving y'' = v, returned with the resulting q'' and multipliers.

    The constrained dynamics are affine in u, so one factorisation solves the
    drift (u = 0) and the two unit-torque responses together.
    """
    rhs = np.zeros((9, 3))
    rhs[:6, 0] = -velocity_matrix(pv, q, qd) @ qd - gravity_vector(pv, q)
    rhs[:6, 1] = S_DRIVE[:, 1]
    rhs[:6, 2] = S_DRIVE[:, 2]
    X = np.linalg.solve(kkt_matrix(pv, q), rhs)
    B = H_OUT @ np.ascontiguousarray(X[:6, 1:])
    drift = H_OUT @ np.ascontiguousarray(X[:6, 0])
    u23 = np.linalg.solve(B, v - drift)
    sol = X[:, 0] + X[:, 1] * u23[0] + X[:, 2] * u23[1]
    u = np.zeros(3)
    u[1] = u23[0]
    u[2] = u23[1]
    return sol[:6].copy(), u, sol[6:].copy()


@njit(cache=True)
def closed_loop_rhs(pv, ctrl, t, s):
    q = s[:6]
    qd = s[6:]
    qdd, u, lam = servo_accel(pv, q, qd, accel_command(ctrl, t))
    ds = np.empty(12)
    ds[:6] = qd
    ds[6:] = qdd
    return ds, u, lam


@njit(cache=True)
def rk4_step(pv, ctrl, t, s, h):
    """One classical RK4 step; also returns torque and multipliers at the start state."""
    k1, u, lam = closed_loop_rhs(pv, ctrl, t, s)
    k2, _, _ = closed_loop_rhs(pv, ctrl, t + 0.5 * h, s + 0.5 * h * k1)
    k3, _, _ = closed_loop_rhs(pv, ctrl, t + 0.5 * h, s + 0.5 * h * k2)
    k4, _, _ = closed_loop_rhs(pv, ctrl, t + h, s + h * k3)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), u, lam


@njit(cache=True)
def project(s, x0, z0, beta):
    """Put (x, z, theta1) and their rates back on the stance constraint manifold."""
    out = s.copy()
    out[0] = x0
    out[1] = z0
    out[2] = s[3] + beta
    out[6] = 0.0
    out[7] = 0.0
    out[8] = s[9]
    return out


@njit(cache=True)
def advance(pv, ctrl, t, s, h, x0, z0, beta):
    s_new, u, lam = rk4_step(pv, ctrl, t, s, h)
    s_new = project(s_new, x0, z0, beta)
    xb, zb = swing_foot(pv, s_new[:6])
    return s_new, u, lam, xb, zb
