"""Scenario documents: one JSON file describing a complete experiment."""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from .clred import LinearizationConfig
from .errors import GaitlabError, InvalidLinearizationError, InvalidParameterError
from .hybrid_sim import SimConfig
from .params import GaitParams, PhysicalParams, TerrainProfile

OUTPUT_ENV = "GAITLAB_OUT"
MODELS = ("nonlinear", "clred", "both")
SECTIONS = ("physical", "gait", "linearization", "sim", "terrain", "run")


class ConfigError(GaitlabError):
    """The scenario document is malformed or violates a model invariant."""


@dataclass(frozen=True)
class SweepSpec:
    """Beta grid, expansion ratios and steady-state windows for a sweep.

    CLRed points settle for ``settle`` steps and average the next
    ``average``; nonlinear reference points use a coarser grid
    (``nonlinear_step``) and average ``nonlinear_window`` of a
    ``nonlinear_steps``-step run.
    """

    beta_start: float = 0.0
    beta_stop: float = 2.5
    beta_step: float = 0.001
    kappas: tuple = (0.0, -0.1, -0.2, -0.3, -0.4, -0.5, -0.6)
    settle: int = 1000
    average: int = 20
    nonlinear: bool = True
    nonlinear_step: float = 0.1
    nonlinear_steps: int = 30
    nonlinear_window: tuple = (20, 30)

    def __post_init__(self):
        if not self.beta_step > 0 or not self.nonlinear_step > 0:
            raise ConfigError("sweep spacing must be positive")
        if self.beta_stop < self.beta_start:
            raise ConfigError("beta_stop must not be below beta_start")
        if self.settle < 0 or self.average < 1:
            raise ConfigError("settle must be >= 0 and average >= 1")
        object.__setattr__(self, "kappas", tuple(float(k) for k in self.kappas))
        object.__setattr__(self, "nonlinear_window", tuple(int(k) for k in self.nonlinear_window))

    @staticmethod
    def grid(start, stop, step) -> np.ndarray:
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return np.round(start + step * np.arange(n), 12)

    def betas(self) -> np.ndarray:
        return self.grid(self.beta_start, self.beta_stop, self.beta_step)

    def nonlinear_betas(self) -> np.ndarray:
        return self.grid(self.beta_start, self.beta_stop, self.nonlinear_step)


@dataclass
class ScenarioConfig:
    physical: PhysicalParams = field(default_factory=PhysicalParams)
    gait: GaitParams = field(default_factory=GaitParams)
    linearization: LinearizationConfig = field(default_factory=LinearizationConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    schedule: dict = field(default_factory=dict)
    model: str = "clred"
    steps: int = 30
    thetadot1_minus: float = 0.8
    duration: Optional[float] = None
    output_dir: Optional[str] = None
    sweep: SweepSpec = field(default_factory=SweepSpec)

    @property
    def terrain(self) -> TerrainProfile:
        return self.sim.terrain

    def resolve_output_dir(self, override: str | None = None) -> Path:
        out = override or self.output_dir or os.environ.get(OUTPUT_ENV) or "gaitlab_out"
        return Path(out)

    def to_dict(self) -> dict:
        sim = asdict(self.sim)
        sim.pop("terrain")
        return {
            "physical": self.physical.to_dict(),
            "gait": self.gait.to_dict(),
            "linearization": self.linearization.to_dict(),
            "sim": sim,
            "terrain": {"offsets": {str(k): v for k, v in sorted(self.terrain.offsets.items())}},
            "run": {
                "model": self.model,
                "steps": self.steps,
                "thetadot1_minus": self.thetadot1_minus,
                "duration": self.duration,
                "schedule": {str(k): v for k, v in sorted(self.schedule.items())},
                "sweep": {**asdict(self.sweep), "kappas": list(self.sweep.kappas),
                          "nonlinear_window": list(self.sweep.nonlinear_window)},
            },
        }

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form; identifies the scenario in reports."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        if not isinstance(doc, dict):
            raise ConfigError("scenario document must be a JSON object")
        unknown = set(doc) - set(SECTIONS)
        if unknown:
            raise ConfigError(f"unknown section(s): {', '.join(sorted(unknown))}")
        try:
            physical = PhysicalParams(**doc.get("physical", {}))
            gait_doc = dict(doc.get("gait", {}))
            gait = GaitParams(**gait_doc)
            lin = LinearizationConfig(**doc.get("linearization", {}))
            terrain_doc = doc.get("terrain", {})
            terrain = TerrainProfile(terrain_doc.get("offsets", {}))
            sim = SimConfig(terrain=terrain, **doc.get("sim", {}))
            run = dict(doc.get("run", {}))
            sweep = SweepSpec(**run.pop("sweep", {}))
            schedule = {int(k): float(v) for k, v in run.pop("schedule", {}).items()}
            cfg = cls(physical=physical, gait=gait, linearization=lin, sim=sim,
                      schedule=schedule, sweep=sweep, **run)
        except ConfigError:
            raise
        except (TypeError, ValueError, InvalidParameterError, InvalidLinearizationError) as exc:
            raise ConfigError(str(exc)) from exc
        cfg.validate()
        return cfg

    def validate(self) -> None:
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ConfigError("steps must be a non-negative integer")
        self.steps = int(self.steps)
        if not math.isfinite(self.thetadot1_minus):
            raise ConfigError("thetadot1_minus must be finite")
        if self.duration is not None and not self.duration > 0:
            raise ConfigError("duration must be positive")
        for k, v in self.schedule.items():
            if k < 0 or not v > 0:
                raise ConfigError(f"bad schedule entry {k}: {v}")


def load_config(path: str | os.PathLike | None) -> ScenarioConfig:
    """Read a scenario file; ``None`` gives the built-in defaults."""
    if path is None:
        return ScenarioConfig.from_dict({})
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    return ScenarioConfig.from_dict(doc)
