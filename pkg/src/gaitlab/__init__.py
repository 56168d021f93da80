"""Simulation and closed-form gait prediction for a balanced planar kneed biped.

Submodules
----------
biped6dof    exact 6-DOF constrained dynamics and impact map
controller   output-following gait controller
hybrid_sim   fixed-step hybrid simulation with impact detection
clred        controlled linearized reduced model and walkability engine
scenario     JSON scenario documents
cli          ``gaitlab`` command line
"""

from .errors import (DegenerateConfigurationError, GaitFailure, GaitlabError,
                     InvalidImpactError, InvalidLinearizationError, InvalidParameterError)
from .params import GaitParams, PhysicalParams, TerrainProfile
from .biped6dof import ConstraintForces, FullState
from .controller import TrajectoryCoeffs
from .hybrid_sim import SimConfig, StepRecord, run_gait, simulate_gait, steady_descriptors
from .clred import (LinearizationConfig, LinearizedSystem, build_state_space, clred_step_map,
                    walkability)

__version__ = "0.1.0"
