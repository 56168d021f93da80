"""Fixed-step simulation of the controlled nonlinear biped across impacts."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels as K
from .biped6dof import FullState, impact_map, post_impact_state, stance_upright, xi_coefficient
from .controller import compute_coeffs
from .errors import GaitFailure, InvalidParameterError
from .params import GaitParams, PhysicalParams, TerrainProfile

__all__ = [
    "SimConfig",
    "StepRecord",
    "GaitTrace",
    "GaitRun",
    "integrate_step",
    "run_gait",
    "simulate_gait",
    "steady_descriptors",
    "write_trace_csv",
    "TRACE_COLUMNS",
]


@dataclass(frozen=True)
class SimConfig:
    dt: float = 1e-4
    arming_threshold: float = 1e-3
    bisection_tol: float = 1e-10
    max_step_duration: float = 5.0
    terrain: TerrainProfile = field(default_factory=TerrainProfile)
    record_every: int = 1

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidParameterError("dt must be positive")
        if not self.arming_threshold > 0:
            raise InvalidParameterError("arming_threshold must be positive")
        if not 0 < self.bisection_tol < self.dt:
            raise InvalidParameterError("bisection_tol must lie in (0, dt)")
        if not self.max_step_duration > 0:
            raise InvalidParameterError("max_step_duration must be positive")
        if int(self.record_every) < 1:
            raise InvalidParameterError("record_every must be >= 1")


@dataclass
class StepRecord:
    """Descriptors of step ``index`` (from impact ``index`` to impact ``index + 1``).

    ``thetadot1_minus`` is the stance angular velocity just before the impact
    that ends the step.  ``min_clearance`` is the swing-foot height above the
    landing ground when it passes the stance foot; ``min_Fz`` is NaN for models
    that do not resolve contact forces.
    """

    index: int
    period: float
    thetadot1_minus: float
    step_length: float
    min_clearance: float = math.nan
    min_Fz: float = math.nan
    settled: bool = True
    theta2_minus: float = math.nan

    @property
    def speed(self) -> float:
        return self.step_length / self.period

    FIELDS = ("index", "period", "thetadot1_minus", "step_length", "speed",
              "min_clearance", "min_Fz", "settled", "theta2_minus")

    def as_row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


@dataclass
class GaitTrace:
    """Samples of one step; ``t`` is global time, ``t_step`` time since the impact."""

    step: int
    t: np.ndarray
    t_step: np.ndarray
    q: np.ndarray
    qdot: np.ndarray
    u: np.ndarray
    forces: np.ndarray
    zbar: np.ndarray
    xbar: np.ndarray

    def __len__(self):
        return len(self.t)


@dataclass
class GaitRun:
    records: list
    traces: list
    failure: Optional[GaitFailure] = None

    @property
    def completed(self) -> bool:
        return self.failure is None


def _bisect_event(pv, ctrl, t, s, h, x0, z0, beta, ground, tol):
    lo, hi = 0.0, h
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        _, _, _, _, zb = K.advance(pv, ctrl, t, s, mid, x0, z0, beta)
        if zb - ground > 0.0:
            lo = mid
        else:
            hi = mid
    s_hit, _, _, xb, zb = K.advance(pv, ctrl, t, s, hi, x0, z0, beta)
    return hi, s_hit, xb, zb


def integrate_step(p: PhysicalParams, gait: GaitParams, cfg: SimConfig, state: FullState,
                   thetadot1_minus: float | None = None, index: int = 0, t0: float = 0.0):
    """Integrate one step from a post-impact state until the fore foot lands.

    The swing-foot height must first rise ``cfg.arming_threshold`` above the
    stance foot before landing detection arms; the crossing of the landing
    ground (``cfg.terrain`` offset of impact ``index + 1``) is then refined by
    bisection on the size of the last integrator substep.

    Parameters
    ----------
    thetadot1_minus : float, optional
        Pre-impact stance velocity of the impact that started this step; it
        sets the quintic's initial slope.  Defaults to the post-impact swing
        thigh rate, which equals it after an exact impact.
    t0 : float
        Global time stamp of the step start, used only for the trace.

    Returns
    -------
    state_minus : FullState
    record : StepRecord
    trace : GaitTrace

    Raises
    ------
    GaitFailure
        ``no-impact`` past ``cfg.max_step_duration`` or once the stance leg
        tips past horizontal; ``contact-violation`` if
        the vertical ground reaction reaches zero.
    """
    if thetadot1_minus is None:
        thetadot1_minus = float(state.qdot[4])
    coeffs = compute_coeffs(gait, xi_coefficient(p, gait), thetadot1_minus)
    T = coeffs.T
    ctrl = np.array([gait.alpha, gait.beta, gait.gamma, T, *coeffs.a])
    pv = p.as_array()
    beta = gait.beta
    s = K.project(state.as_vector(), state.q[0], state.q[1], beta)
    x0, z0 = float(s[0]), float(s[1])
    ground = z0 + cfg.terrain.height_at(index + 1)
    dt, every = cfg.dt, int(cfg.record_every)

    ts, ss, us, ls, zs, xs = [], [], [], [], [], []
    xb, zb = K.swing_foot(pv, s[:6])
    t = 0.0
    n = 0
    armed = False
    min_fz = math.inf
    clearance = math.nan
    prev_rel = xb - x0
    while True:
        h = dt
        if t < T < t + h * (1.0 + 1e-9):
            h = T - t
        s_new, u, lam, xb_new, zb_new = K.advance(pv, ctrl, t, s, h, x0, z0, beta)
        if lam[1] < min_fz:
            min_fz = lam[1]
        if n % every == 0:
            ts.append(t); ss.append(s); us.append(u); ls.append(lam); zs.append(zb); xs.append(xb)
        if lam[1] <= 0.0:
            raise GaitFailure("contact-violation", index, f"Fz = {lam[1]:.3e} N at t = {t:.4f} s")
        if not armed and zb_new - z0 > cfg.arming_threshold:
            armed = True
        if armed and zb_new - ground <= 0.0:
            h_hit, s_hit, xb_hit, zb_hit = _bisect_event(pv, ctrl, t, s, h, x0, z0, beta,
                                                          ground, cfg.bisection_tol)
            t_hit = t + h_hit
            break
        if not stance_upright(p, beta, s_new[3]):
            raise GaitFailure("no-impact", index, f"stance leg fell over at t = {t + h:.4f} s")
        rel = xb_new - x0
        if armed and prev_rel < 0.0 <= rel:
            frac = -prev_rel / (rel - prev_rel)
            clearance = (zb + frac * (zb_new - zb)) - ground
        prev_rel = rel
        t += h
        n += 1
        s, xb, zb = s_new, xb_new, zb_new
        if t > cfg.max_step_duration:
            raise GaitFailure("no-impact", index, f"no landing within {cfg.max_step_duration} s")

    _, u_hit, lam_hit = K.closed_loop_rhs(pv, ctrl, t_hit, s_hit)
    ts.append(t_hit); ss.append(s_hit); us.append(u_hit); ls.append(lam_hit)
    zs.append(zb_hit); xs.append(xb_hit)
    min_fz = min(min_fz, lam_hit[1])

    S = np.array(ss)
    t_arr = np.array(ts)
    trace = GaitTrace(index, t0 + t_arr, t_arr, S[:, :6], S[:, 6:], np.array(us),
                      np.array(ls), np.array(zs), np.array(xs))
    state_minus = FullState(s_hit[:6].copy(), s_hit[6:].copy(), t_hit)
    record = StepRecord(
        index=index,
        period=t_hit,
        thetadot1_minus=float(s_hit[8]),
        step_length=float(xb_hit - x0),
        min_clearance=clearance,
        min_Fz=float(min_fz),
        settled=bool(t_hit >= T),
        theta2_minus=float(s_hit[3]),
    )
    return state_minus, record, trace


def simulate_gait(p: PhysicalParams, gait: GaitParams, cfg: SimConfig, thetadot1_minus: float,
                  n_steps: int, schedule: dict | None = None, keep_traces: bool = False,
                  t_max: float | None = None) -> GaitRun:
    """Walk ``n_steps`` from the target impact posture, collecting records (and traces).

    ``schedule`` maps a step index to a one-step settling time override.
    Stops early once the global time passes ``t_max``.  Failures are returned
    in :attr:`GaitRun.failure` instead of raised.
    """
    schedule = schedule or {}
    records, traces = [], []
    if n_steps <= 0:
        return GaitRun(records, traces)
    state = post_impact_state(p, gait, thetadot1_minus)
    td = thetadot1_minus
    t_glob = 0.0
    for i in range(n_steps):
        g_i = gait.with_settling_time(schedule.get(i))
        try:
            state_minus, rec, trace = integrate_step(p, g_i, cfg, state, td, index=i, t0=t_glob)
        except GaitFailure as fail:
            fail.records = list(records)
            return GaitRun(records, traces, fail)
        if keep_traces:
            traces.append(trace)
        if not rec.settled:
            return GaitRun(records, traces, GaitFailure(
                "control-incomplete", i, "landed before the settling time", records))
        records.append(rec)
        t_glob += rec.period
        ground = state_minus.q[1] + cfg.terrain.height_at(i + 1)
        q_plus, qd_plus = impact_map(p, gait, state_minus.q, state_minus.qdot, ground=ground)
        state = FullState(q_plus, qd_plus, 0.0)
        td = rec.thetadot1_minus
        if t_max is not None and t_glob >= t_max:
            break
    return GaitRun(records, traces)


def run_gait(p: PhysicalParams, gait: GaitParams, cfg: SimConfig, thetadot1_minus: float,
             n_steps: int, schedule: dict | None = None) -> list:
    """Records of ``n_steps`` consecutive nonlinear steps.

    Raises
    ------
    GaitFailure
        Carrying the failing step index and the records completed before it.
    """
    run = simulate_gait(p, gait, cfg, thetadot1_minus, n_steps, schedule)
    if run.failure is not None:
        raise run.failure
    return run.records


def steady_descriptors(records: Sequence[StepRecord], window: slice | tuple = (20, 30)) -> StepRecord:
    """Average the records inside ``window`` (a slice or ``(start, stop)`` pair)."""
    if isinstance(window, tuple):
        window = slice(*window)
    sel = list(records)[window]
    if not sel:
        raise ValueError("averaging window selects no records")

    def mean(name):
        return float(np.mean([getattr(r, name) for r in sel]))

    return StepRecord(
        index=sel[-1].index,
        period=mean("period"),
        thetadot1_minus=mean("thetadot1_minus"),
        step_length=mean("step_length"),
        min_clearance=mean("min_clearance"),
        min_Fz=mean("min_Fz"),
        settled=all(r.settled for r in sel),
        theta2_minus=mean("theta2_minus"),
    )


TRACE_COLUMNS = (["t", "step"]
                 + ["x", "z", "theta1", "theta2", "theta3", "theta4"]
                 + ["xdot", "zdot", "theta1dot", "theta2dot", "theta3dot", "theta4dot"]
                 + ["u2", "u3", "Fx", "Fz", "zbar"])


def _fmt(v) -> str:
    return repr(float(v))


def write_trace_csv(path, traces: Iterable[GaitTrace], t_max: float | None = None) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_COLUMNS)
        for tr in traces:
            for k in range(len(tr)):
                if t_max is not None and tr.t[k] > t_max:
                    return
                row = [_fmt(tr.t[k]), str(tr.step)]
                row += [_fmt(v) for v in tr.q[k]]
                row += [_fmt(v) for v in tr.qdot[k]]
                row += [_fmt(tr.u[k, 1]), _fmt(tr.u[k, 2]),
                        _fmt(tr.forces[k, 0]), _fmt(tr.forces[k, 1]), _fmt(tr.zbar[k])]
                w.writerow(row)
