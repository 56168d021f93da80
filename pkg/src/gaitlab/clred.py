"""Controlled linearized reduced (CLRed) model and closed-form step prediction.

With the stance knee locked and the foot pinned, the 6-DOF model collapses onto
``qbar = (th2, th3, th4)`` with a constant inertia matrix and no velocity terms.
Linearizing the only nonlinear term (the gravity torque on ``th2``) about an
expansion point and substituting the output-following input makes each step
phase an LTI system, so one step reduces to a matrix exponential, a few
precomputed convolution integrals and a scalar root find.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import expm

from .biped6dof import impact_theta2, leg_polar, stance_upright, xi_coefficient
from .controller import quintic_basis
from .errors import GaitFailure, InvalidImpactError, InvalidLinearizationError
from .hybrid_sim import StepRecord, steady_descriptors
from .params import GaitParams, PhysicalParams, TerrainProfile

__all__ = [
    "V_REDUCTION",
    "S_REDUCED",
    "ReducedState",
    "LinearizationConfig",
    "EtaIntegrals",
    "LinearizedSystem",
    "reduce",
    "reduced_gravity",
    "reduced_gravity_slope",
    "linearize_gravity",
    "build_state_space",
    "precompute_etas",
    "clred_expm",
    "propagate_controlled",
    "controlled_samples",
    "propagate_fall",
    "reduced_zbar",
    "reduced_xbar",
    "impact_time",
    "clred_step_map",
    "StepOutcome",
    "walkability",
    "WalkabilityResult",
    "step_length",
    "fall_constants",
    "post_impact_vector",
    "steady_walk",
]

# qdot = V @ qbar_dot on the stance constraint manifold.
V_REDUCTION = np.array(
    [[0.0, 0.0, 0.0],
     [0.0, 0.0, 0.0],
     [1.0, 0.0, 0.0],
     [1.0, 0.0, 0.0],
     [0.0, 1.0, 0.0],
     [0.0, 0.0, 1.0]]
)

S_REDUCED = np.array(
    [[1.0, 0.0],
     [-1.0, 1.0],
     [0.0, -1.0]]
)

N_PANELS = 64
GL_NODES = 8
FALL_HORIZON = 10.0
_EPS = np.finfo(float).eps


@dataclass
class ReducedState:
    qbar: np.ndarray
    qbar_dot: np.ndarray

    def __post_init__(self):
        self.qbar = np.asarray(self.qbar, dtype=float).reshape(3)
        self.qbar_dot = np.asarray(self.qbar_dot, dtype=float).reshape(3)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.qbar, self.qbar_dot])

    @classmethod
    def from_full(cls, q, qdot) -> "ReducedState":
        q = np.asarray(q, dtype=float)
        qdot = np.asarray(qdot, dtype=float)
        return cls(q[3:6], qdot[3:6])

    def to_full(self, gait: GaitParams, x: float = 0.0, z: float = 0.0):
        """Full coordinates with the stance foot at ``(x, z)`` and the stance knee at beta."""
        t2, t3, t4 = self.qbar
        q = np.array([x, z, t2 + gait.beta, t2, t3, t4])
        return q, V_REDUCTION @ self.qbar_dot


@dataclass(frozen=True)
class LinearizationConfig:
    """Expansion point of the gravity linearization.

    Either ``theta2_star`` is given directly or it is ``kappa * beta``.
    """

    kappa: Optional[float] = -0.5
    theta2_star: Optional[float] = None

    def __post_init__(self):
        if self.kappa is None and self.theta2_star is None:
            raise InvalidLinearizationError("need kappa or theta2_star")

    def expansion_point(self, beta: float) -> float:
        if self.theta2_star is not None:
            return float(self.theta2_star)
        return float(self.kappa) * beta

    def to_dict(self) -> dict:
        return {"kappa": self.kappa, "theta2_star": self.theta2_star}


def reduced_mass_matrix(p: PhysicalParams, beta: float) -> np.ndarray:
    m, m1, m2, L1, L2 = p.m, p.m1, p.m2, p.L1, p.L2
    M11 = (m * L1**2 + (m1 + 2.0 * m2) * m * L2**2 / (2.0 * m2)
           + 2.0 * m * L1 * L2 * math.cos(beta) + p.I1 + p.I2)
    return np.diag([M11, m1 * m * L2**2 / (2.0 * m2) + p.I2, p.I1])


def reduced_gravity(p: PhysicalParams, theta2, beta: float):
    """Gravity torque on the stance thigh, the only nonzero entry of the reduced gravity."""
    return -p.m * p.g * (p.L1 * np.sin(theta2 + beta) + p.L2 * np.sin(theta2))


def reduced_gravity_slope(p: PhysicalParams, theta2, beta: float):
    return -p.m * p.g * (p.L1 * np.cos(theta2 + beta) + p.L2 * np.cos(theta2))


def reduce(p: PhysicalParams, gait: GaitParams):
    """Reduced inertia matrix and the reduced gravity as a function of ``th2``.

    Returns
    -------
    Mbar : ndarray, shape (3, 3)
    gbar : callable
        ``gbar(theta2) -> ndarray (3,)``.
    """
    beta = gait.beta

    def gbar(theta2):
        return np.array([reduced_gravity(p, theta2, beta), 0.0, 0.0])

    return reduced_mass_matrix(p, beta), gbar


def linearize_gravity(p: PhysicalParams, gait: GaitParams, cfg: LinearizationConfig):
    """Tangent-line gravity ``Gbar @ qbar + gbeta`` about the expansion point."""
    beta = gait.beta
    ts = cfg.expansion_point(beta)
    slope = reduced_gravity_slope(p, ts, beta)
    Gbar = np.zeros((3, 3))
    Gbar[0, 0] = slope
    gbeta = np.array([reduced_gravity(p, ts, beta) - slope * ts, 0.0, 0.0])
    return Gbar, gbeta


def fall_constants(p: PhysicalParams, gait: GaitParams, theta2_star: float):
    """Closed-form ``(N2, N3, D2)`` of the fall-phase stiffness and forcing."""
    m1, m2, L1, L2, g, m = p.m1, p.m2, p.L1, p.L2, p.g, p.m
    beta = gait.beta
    cosine = L1 * math.cos(theta2_star + beta) + L2 * math.cos(theta2_star)
    sine = L1 * math.sin(theta2_star + beta) + L2 * math.sin(theta2_star)
    N2 = m2 * (m1 + m2) * g * cosine
    N3 = m2 * (m1 + m2) * g * sine - m2 * (m1 + m2) * g * theta2_star * cosine
    D2 = ((m1 + m2)**2 * L2**2 + m2 * ((m1 + m2) * L1**2 + p.I1 + p.I2)
          + m2 * m * L1 * L2 * math.cos(beta))
    return N2, N3, D2


def _w_matrix() -> np.ndarray:
    W = np.zeros((3, 3))
    W[:, 0] = 1.0
    return W


_W = _w_matrix()


def clred_expm(omega: float, t) -> np.ndarray:
    """``exp(A t)`` for the CLRed state matrix, exact for its rank-one structure.

    The lower-left block of ``A`` is ``omega**2 * W`` with ``W`` the 3x3 matrix
    whose first column is ones; ``W @ W = W`` makes the series sum to
    cosh/sinh terms.  ``t`` may be a scalar or an array (result gets a
    leading axis).
    """
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    wt = omega * t
    ch = np.cosh(wt) - 1.0
    sh = np.sinh(wt)
    # sinh(w t)/w - t, evaluated by series when w t is small to avoid cancellation.
    small = np.abs(wt) < 1e-3
    shw = np.where(small, t * wt**2 / 6.0 * (1.0 + wt**2 / 20.0),
                   np.divide(sh, omega, out=np.zeros_like(sh), where=omega != 0) - t)
    n = t.shape[0]
    E = np.zeros((n, 6, 6))
    eye = np.eye(3)
    E[:, :3, :3] = eye + ch[:, None, None] * _W
    E[:, 3:, 3:] = eye + ch[:, None, None] * _W
    E[:, :3, 3:] = t[:, None, None] * eye + shw[:, None, None] * _W
    E[:, 3:, :3] = (omega * sh)[:, None, None] * _W
    return E[0] if scalar else E


@dataclass(frozen=True)
class EtaIntegrals:
    """Convolution integrals for one settling time ``T``.

    The totals satisfy ``x(T) = exp(A T) (x+ + eta1 + eta2a + thd * eta2b + eta3)``.
    The ``*_partial`` arrays hold the same integrals up to each of the
    ``N_PANELS`` uniform sample times ``t_k = k T / N_PANELS`` (k = 1..N).
    """

    T: float
    eta1: np.ndarray
    eta2a: np.ndarray
    eta2b: np.ndarray
    eta3: np.ndarray
    sample_times: np.ndarray
    eta1_partial: np.ndarray
    eta2a_partial: np.ndarray
    eta2b_partial: np.ndarray
    eta3_partial: np.ndarray
    exp_samples: np.ndarray

    def eta2(self, thetadot1_minus: float) -> np.ndarray:
        return self.eta2a + thetadot1_minus * self.eta2b


@dataclass(frozen=True)
class LinearizedSystem:
    """CLRed realization for one (physical, gait, expansion point) triple."""

    p: PhysicalParams
    gait: GaitParams
    cfg: LinearizationConfig
    theta2_star: float
    xi: float
    Mbar: np.ndarray
    Sbar: np.ndarray
    Gbar: np.ndarray
    gbeta: np.ndarray
    A: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    b3: np.ndarray
    omega: float
    b1_scalar: float
    structured: bool
    etas: Optional[EtaIntegrals] = None

    def expm(self, t) -> np.ndarray:
        if self.structured:
            return clred_expm(self.omega, t)
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return expm(self.A * float(t))
        return np.array([expm(self.A * tk) for tk in t])

    def with_settling_time(self, T: float) -> "LinearizedSystem":
        """Same realization with the integrals recomputed for settling time ``T``."""
        if self.etas is not None and self.etas.T == T:
            return self
        return replace(self, etas=precompute_etas(self.p, self.gait, self.cfg, self, T))


def build_state_space(p: PhysicalParams, gait: GaitParams, cfg: LinearizationConfig,
                      T: float | None = None, with_etas: bool = True) -> LinearizedSystem:
    """Assemble the closed-loop LTI model and (optionally) its step integrals.

    Raises
    ------
    InvalidLinearizationError
        If the fall-phase stiffness ``omega**2`` is not positive.
    """
    Mbar, _ = reduce(p, gait)
    Gbar, gbeta = linearize_gravity(p, gait, cfg)
    S = S_REDUCED
    Minv = np.linalg.inv(Mbar)
    Winv = np.linalg.inv(S.T @ Minv @ S)
    P = Minv @ (S @ Winv @ S.T @ Minv - np.eye(3))
    A = np.zeros((6, 6))
    A[:3, 3:] = np.eye(3)
    A[3:, :3] = P @ Gbar
    b1 = np.concatenate([np.zeros(3), P @ gbeta])
    B = Minv @ S @ Winv
    b2 = np.concatenate([np.zeros(3), B[:, 0]])
    b3 = np.concatenate([np.zeros(3), B[:, 1]])

    omega2 = A[3, 0]
    if not omega2 > 0:
        raise InvalidLinearizationError(f"fall-phase stiffness omega^2 = {omega2:.4g} <= 0")
    omega = math.sqrt(omega2)
    low = A[3:, :3]
    scale = max(1.0, abs(omega2))
    structured = bool(np.allclose(low, omega2 * _W, rtol=0, atol=1e-12 * scale)
                      and np.allclose(b1[3:], b1[3], rtol=0, atol=1e-12 * max(1.0, abs(b1[3]))))
    sys = LinearizedSystem(
        p=p, gait=gait, cfg=cfg, theta2_star=cfg.expansion_point(gait.beta),
        xi=xi_coefficient(p, gait), Mbar=Mbar, Sbar=S, Gbar=Gbar, gbeta=gbeta,
        A=A, b1=b1, b2=b2, b3=b3, omega=omega, b1_scalar=float(b1[3]), structured=structured,
    )
    if with_etas:
        sys = sys.with_settling_time(gait.settling_time if T is None else T)
    return sys


def _knee_command_basis(t, T):
    # Second derivative of sin^3(pi t / T); the knee command is -gamma times this.
    w = math.pi / T
    s, c = np.sin(w * t), np.cos(w * t)
    return w * w * (6.0 * s * c * c - 3.0 * s**3)


def precompute_etas(p: PhysicalParams, gait: GaitParams, cfg: LinearizationConfig,
                    linsys: LinearizedSystem, T: float | None = None) -> EtaIntegrals:
    """Integrals of ``exp(-A tau) b_k v_k(tau)`` over ``[0, T]`` by composite Gauss-Legendre.

    The hip command is affine in the pre-impact velocity, so its integral is
    split as ``eta2a + thetadot1_minus * eta2b`` and never needs quadrature at
    run time.
    """
    T = gait.settling_time if T is None else float(T)
    nodes, weights = leggauss(GL_NODES)
    h = T / N_PANELS
    left = np.arange(N_PANELS) * h
    tau = (left[:, None] + 0.5 * h * (nodes[None, :] + 1.0)).ravel()
    wts = np.tile(0.5 * h * weights, N_PANELS)

    E = linsys.expm(-tau)
    k1 = E @ linsys.b1
    k2 = E @ linsys.b2
    k3 = E @ linsys.b3

    P, Q = quintic_basis(T)
    # hip command v2 = 6 a3 t + 12 a4 t^2 + 20 a5 t^3 with a = alpha P + (xi - 1) thd Q
    v2P = 6 * P[3] * tau + 12 * P[4] * tau**2 + 20 * P[5] * tau**3
    v2Q = 6 * Q[3] * tau + 12 * Q[4] * tau**2 + 20 * Q[5] * tau**3
    v3 = -gait.gamma * _knee_command_basis(tau, T)

    def panels(integrand):
        return (wts[:, None] * integrand).reshape(N_PANELS, GL_NODES, 6).sum(axis=1)

    p1 = panels(k1)
    p2a = panels(k2 * (gait.alpha * v2P)[:, None])
    p2b = panels(k2 * ((linsys.xi - 1.0) * v2Q)[:, None])
    p3 = panels(k3 * v3[:, None])
    c1, c2a, c2b, c3 = (np.cumsum(x, axis=0) for x in (p1, p2a, p2b, p3))
    times = (np.arange(N_PANELS) + 1) * h
    return EtaIntegrals(
        T=T, eta1=c1[-1].copy(), eta2a=c2a[-1].copy(), eta2b=c2b[-1].copy(), eta3=c3[-1].copy(),
        sample_times=times, eta1_partial=c1, eta2a_partial=c2a, eta2b_partial=c2b,
        eta3_partial=c3, exp_samples=linsys.expm(times),
    )


def propagate_controlled(linsys: LinearizedSystem, x_plus, thetadot1_minus: float,
                         T: float | None = None) -> np.ndarray:
    """State at the end of the controlled phase, ``exp(A T)(x+ + eta1 + eta2 + eta3)``."""
    sys = linsys if T is None else linsys.with_settling_time(T)
    e = sys.etas
    total = np.asarray(x_plus, dtype=float) + e.eta1 + e.eta2(thetadot1_minus) + e.eta3
    return e.exp_samples[-1] @ total


def controlled_samples(linsys: LinearizedSystem, x_plus, thetadot1_minus: float) -> np.ndarray:
    """States at the uniform sample times of the controlled phase, shape (N_PANELS, 6)."""
    e = linsys.etas
    acc = (np.asarray(x_plus, dtype=float)[None, :] + e.eta1_partial + e.eta2a_partial
           + thetadot1_minus * e.eta2b_partial + e.eta3_partial)
    return np.einsum("kij,kj->ki", e.exp_samples, acc)


def propagate_fall(linsys: LinearizedSystem, xbar, dt: float) -> np.ndarray:
    """Closed-form fall-phase solution of the 2-D ``(th2, th2dot)`` system after ``dt``."""
    w = linsys.omega
    th, thd = float(xbar[0]), float(xbar[1])
    shift = linsys.b1_scalar / w**2
    ch, sh = math.cosh(w * dt), math.sinh(w * dt)
    a = th + shift
    return np.array([ch * a + sh / w * thd - shift, w * sh * a + ch * thd])


def reduced_zbar(p: PhysicalParams, gait: GaitParams, theta2):
    """Swing-foot height with both knees at beta and the hip opened to alpha."""
    a, b = gait.alpha, gait.beta
    return (p.L1 * np.cos(theta2 + b) + p.L2 * np.cos(theta2)
            - p.L2 * np.cos(theta2 - a) - p.L1 * np.cos(theta2 - a + b))


def reduced_xbar(p: PhysicalParams, gait: GaitParams, theta2):
    a, b = gait.alpha, gait.beta
    return (p.L1 * np.sin(theta2 + b) + p.L2 * np.sin(theta2)
            - p.L2 * np.sin(theta2 - a) - p.L1 * np.sin(theta2 - a + b))


def step_length(p: PhysicalParams, gait: GaitParams, theta2_minus: float) -> float:
    """Horizontal foot-to-foot distance at the impact posture."""
    return float(reduced_xbar(p, gait, theta2_minus))


def impact_time(p: PhysicalParams, gait: GaitParams, linsys: LinearizedSystem, xbar_T,
                dh: float = 0.0, horizon: float = FALL_HORIZON, T: float | None = None):
    """Fall duration until the swing foot reaches ``dh``, by bracketing and bisection.

    Returns
    -------
    dt_star, theta2_minus, theta2dot_minus : float

    Raises
    ------
    InvalidImpactError
        If the swing foot is already at or below ``dh`` at the start.
    GaitFailure
        ``no-impact`` if no crossing happens within ``horizon`` seconds or
        the robot tips over backwards first.
    """
    offset = leg_polar(p, gait.beta)[1]
    quarter = 0.5 * math.pi

    def landed(dt):
        # The linear fall is unbounded while zbar is periodic in th2, so the
        # lean angle decides first: past horizontal forward means the foot
        # came down on the way, past horizontal backward means it never will.
        th = propagate_fall(linsys, xbar_T, dt)[0]
        lean = th + offset
        if lean >= quarter:
            return True, False
        if lean <= -quarter:
            return False, True
        return reduced_zbar(p, gait, th) - dh <= 0.0, False

    th0 = float(xbar_T[0])
    if not stance_upright(p, gait.beta, th0):
        raise GaitFailure("no-impact", None, "stance leg fell over during the controlled phase")
    if reduced_zbar(p, gait, th0) - dh <= 0.0:
        raise InvalidImpactError("swing foot already on the ground at the end of control")
    if T is None:
        T = linsys.etas.T if linsys.etas is not None else gait.settling_time
    lo, hi = 0.0, T / 8.0
    while True:
        down, backward = landed(hi)
        if backward:
            raise GaitFailure("no-impact", None, "stance leg fell over backwards before landing")
        if down:
            break
        if hi >= horizon:
            raise GaitFailure("no-impact", None, f"no landing within {horizon} s of falling")
        lo = hi
        hi = min(2.0 * hi, horizon)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if landed(mid)[0]:
            hi = mid
        else:
            lo = mid
    dt_star = 0.5 * (lo + hi)
    th, thd = propagate_fall(linsys, xbar_T, dt_star)
    return dt_star, float(th), float(thd)


def post_impact_vector(gait: GaitParams, xi: float, theta2_minus: float,
                       thetadot1_minus: float) -> np.ndarray:
    """Reduced state right after an impact at ``theta2_minus`` with all links at ``thetadot1_minus``."""
    return np.array([
        theta2_minus - gait.alpha, theta2_minus, theta2_minus + gait.beta,
        xi * thetadot1_minus, thetadot1_minus, thetadot1_minus,
    ])


@dataclass
class StepOutcome:
    thetadot1_minus: float
    theta2_minus: float
    record: StepRecord


def clred_step_map(p: PhysicalParams, gait: GaitParams, cfg: LinearizationConfig,
                   linsys: LinearizedSystem, thetadot1_minus: float, dh_end: float = 0.0,
                   T: float | None = None, theta2_minus: float | None = None,
                   dh_start: float = 0.0, index: int = 0,
                   arming_threshold: float = 1e-3) -> StepOutcome:
    """One step of the CLRed model, from impact ``index`` to impact ``index + 1``.

    Parameters
    ----------
    thetadot1_minus : float
        Stance velocity just before the impact starting this step.
    dh_end : float
        Ground height (relative to the stance foot) where this step lands.
    T : float, optional
        Settling time for this step; the integrals are recomputed when it
        differs from the cached one.
    theta2_minus : float, optional
        Stance-thigh angle at the starting impact; defaults to the impact
        posture over ground ``dh_start``.

    Raises
    ------
    GaitFailure
        ``control-incomplete`` if the foot lands before the settling time,
        ``no-impact`` if it never lands.
    """
    T = gait.settling_time if T is None else T
    sys = linsys.with_settling_time(T)
    if theta2_minus is None:
        theta2_minus = impact_theta2(p, gait, dh_start)
    x_plus = post_impact_vector(gait, sys.xi, theta2_minus, thetadot1_minus)

    X = controlled_samples(sys, x_plus, thetadot1_minus)
    th2, th3, th4 = X[:, 0], X[:, 1], X[:, 2]
    zb = (p.L1 * np.cos(th2 + gait.beta) + p.L2 * np.cos(th2)
          - p.L2 * np.cos(th3) - p.L1 * np.cos(th4))
    armed = np.maximum.accumulate(zb > arming_threshold)
    landed = (armed & (zb <= dh_end))
    if landed.any() or zb[-1] <= dh_end:
        raise GaitFailure("control-incomplete", index, "swing foot landed before the settling time")

    xb = (p.L1 * np.sin(th2 + gait.beta) + p.L2 * np.sin(th2)
          - p.L2 * np.sin(th3) - p.L1 * np.sin(th4))
    clearance = math.nan
    cross = np.nonzero((xb[:-1] < 0.0) & (xb[1:] >= 0.0))[0]
    if cross.size:
        k = cross[0]
        frac = -xb[k] / (xb[k + 1] - xb[k])
        clearance = float(zb[k] + frac * (zb[k + 1] - zb[k]) - dh_end)

    x_T = X[-1]
    try:
        dt_star, th_minus, thd_minus = impact_time(p, gait, sys, x_T[[0, 3]], dh_end, T=T)
    except GaitFailure as fail:
        raise GaitFailure("no-impact", index, fail.detail) from None
    rec = StepRecord(
        index=index,
        period=T + dt_star,
        thetadot1_minus=thd_minus,
        step_length=step_length(p, gait, th_minus),
        min_clearance=clearance,
        settled=True,
        theta2_minus=th_minus,
    )
    return StepOutcome(thd_minus, th_minus, rec)


@dataclass
class WalkabilityResult:
    walkable: bool
    records: list
    failure_step: Optional[int] = None
    failure_kind: Optional[str] = None

    def to_dict(self) -> dict:
        return {
            "walkable": self.walkable,
            "steps_completed": len(self.records),
            "failure_step": self.failure_step,
            "failure_kind": self.failure_kind,
        }


def walkability(p: PhysicalParams, gait: GaitParams, cfg: LinearizationConfig,
                thetadot1_minus0: float, terrain: TerrainProfile | None = None,
                schedule: dict | None = None, n_steps: int = 30,
                linsys: LinearizedSystem | None = None,
                arming_threshold: float = 1e-3) -> WalkabilityResult:
    """Iterate the CLRed step map over a terrain and settling-time schedule.

    The robot starts from the target impact posture on flat ground (impact 0)
    with stance velocity ``thetadot1_minus0``.  ``schedule`` maps step index to
    a settling-time override; ``terrain`` gives the ground offset of each
    impact.  No numerical integration is involved.
    """
    terrain = terrain or TerrainProfile()
    schedule = schedule or {}
    records = []
    if n_steps <= 0:
        return WalkabilityResult(True, records)
    base = linsys if linsys is not None else build_state_space(p, gait, cfg)
    cache = {base.etas.T: base}
    thd = thetadot1_minus0
    th2 = impact_theta2(p, gait, terrain.height_at(0))
    for i in range(n_steps):
        T = schedule.get(i, gait.settling_time)
        if T not in cache:
            cache[T] = base.with_settling_time(T)
        try:
            out = clred_step_map(p, gait, cfg, cache[T], thd, terrain.height_at(i + 1), T=T,
                                 theta2_minus=th2, index=i, arming_threshold=arming_threshold)
        except GaitFailure as fail:
            return WalkabilityResult(False, records, fail.step, fail.kind)
        records.append(out.record)
        thd, th2 = out.thetadot1_minus, out.theta2_minus
    return WalkabilityResult(True, records)


def steady_walk(p: PhysicalParams, gait: GaitParams, cfg: LinearizationConfig,
                thetadot1_minus0: float, settle: int = 1000, average: int = 20,
                linsys: LinearizedSystem | None = None) -> StepRecord:
    """Average of steps ``settle .. settle + average - 1`` on flat ground.

    Once the step map returns the same state to within a few ulps, every later
    step repeats the same record, so iteration stops there and the record is
    reused.

    Raises
    ------
    GaitFailure
        If any step before the end of the window fails.
    """
    sys = linsys if linsys is not None else build_state_space(p, gait, cfg)
    thd = thetadot1_minus0
    th2 = impact_theta2(p, gait, 0.0)
    window = []
    last = None
    for i in range(settle + average):
        out = clred_step_map(p, gait, cfg, sys, thd, 0.0, theta2_minus=th2, index=i)
        if i >= settle:
            window.append(out.record)
        if (abs(out.thetadot1_minus - thd) <= 4 * _EPS * abs(thd)
                and abs(out.theta2_minus - th2) <= 4 * _EPS * max(abs(th2), 1.0)):
            last = out.record
            break
        thd, th2 = out.thetadot1_minus, out.theta2_minus
    if last is not None:
        while len(window) < average:
            window.append(replace(last, index=settle + len(window)))
    return steady_descriptors(window, slice(None))
