"""Physical and control parameter sets shared by every model."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InvalidParameterError

STANDARD_GRAVITY = 9.81


@dataclass(frozen=True)
class PhysicalParams:
    """Masses, lengths and inertias of the balanced kneed biped.

    Each frame's mass is split in two halves placed ``r1`` / ``r2`` from its
    centre of mass, so by default ``I1 = m1 r1**2`` and ``I2 = m2 r2**2``.
    Pass ``I1``/``I2`` explicitly to override.
    """

    m1: float = 1.0
    m2: float = 1.0
    L1: float = 0.5
    L2: float = 0.5
    r1: float = 0.25
    r2: float = 0.25
    g: float = STANDARD_GRAVITY
    I1: Optional[float] = None
    I2: Optional[float] = None

    def __post_init__(self):
        for name in ("m1", "m2", "L1", "L2", "r1", "r2", "g"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise InvalidParameterError(f"{name} must be positive and finite, got {val!r}")
        if self.I1 is None:
            object.__setattr__(self, "I1", self.m1 * self.r1**2)
        if self.I2 is None:
            object.__setattr__(self, "I2", self.m2 * self.r2**2)
        for name in ("I1", "I2"):
            val = getattr(self, name)
            if not (math.isfinite(val) and val > 0):
                raise InvalidParameterError(f"{name} must be positive and finite, got {val!r}")

    @property
    def m(self) -> float:
        """Total mass of the robot."""
        return 2.0 * (self.m1 + self.m2)

    @property
    def L2_hat(self) -> float:
        """Knee-to-COM length of the thigh frame that puts the leg COM on the hip."""
        return self.L2 * (1.0 + self.m1 / self.m2)

    def as_array(self) -> np.ndarray:
        return np.array([self.m1, self.m2, self.L1, self.L2, self.I1, self.I2, self.g])

    def to_dict(self) -> dict:
        return {"m1": self.m1, "m2": self.m2, "L1": self.L1, "L2": self.L2,
                "r1": self.r1, "r2": self.r2, "g": self.g, "I1": self.I1, "I2": self.I2}


@dataclass(frozen=True)
class GaitParams:
    """Target impact posture and settling time of the output-following controller.

    alpha is the relative hip angle at impact, beta the knee lock angle, gamma
    the extra swing-knee flexion at mid-step and T_set the settling time.
    ``T_override`` is a one-step replacement for ``T_set``.
    """

    alpha: float = math.pi / 6
    beta: float = 0.1
    gamma: float = 0.3
    T_set: float = 0.7
    T_override: Optional[float] = None

    def __post_init__(self):
        if not (0.0 < self.alpha < math.pi / 2):
            raise InvalidParameterError(f"alpha must lie in (0, pi/2), got {self.alpha!r}")
        if not (0.0 <= self.beta < math.pi):
            raise InvalidParameterError(f"beta must lie in [0, pi), got {self.beta!r}")
        if not (self.gamma >= 0.0 and math.isfinite(self.gamma)):
            raise InvalidParameterError(f"gamma must be non-negative, got {self.gamma!r}")
        if not (self.T_set > 0.0 and math.isfinite(self.T_set)):
            raise InvalidParameterError(f"T_set must be positive, got {self.T_set!r}")
        if self.T_override is not None and not self.T_override > 0.0:
            raise InvalidParameterError(f"T_override must be positive, got {self.T_override!r}")

    @property
    def settling_time(self) -> float:
        """Settling time actually used for this step."""
        return self.T_set if self.T_override is None else self.T_override

    def with_settling_time(self, T: Optional[float]) -> "GaitParams":
        return replace(self, T_override=T)

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma,
                "T_set": self.T_set, "T_override": self.T_override}


@dataclass(frozen=True)
class TerrainProfile:
    """Ground height offsets at each impact, relative to the current stance foot.

    ``offsets[i]`` is the height of the ground hit at impact ``i`` (so the
    swing foot ending step ``i - 1`` lands at ``offsets[i]``).  Missing
    indices are flat.
    """

    offsets: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, v in dict(self.offsets).items():
            v = float(v)
            if not math.isfinite(v):
                raise InvalidParameterError(f"terrain offset at impact {k} is not finite")
            clean[int(k)] = v
        object.__setattr__(self, "offsets", clean)

    @classmethod
    def flat(cls) -> "TerrainProfile":
        return cls()

    @classmethod
    def single_step(cls, impact: int, height: float) -> "TerrainProfile":
        return cls({impact: height})

    def height_at(self, impact: int) -> float:
        return self.offsets.get(impact, 0.0)
