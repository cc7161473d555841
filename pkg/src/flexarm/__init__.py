"""Simulation and control library for a planar flexible-joint manipulator.

A serial arm with alternating actuated and flexible joints is driven by a
single adaptive control law through free motion, contact and the
transitions between them.  The package provides the chain kinematics, the
elastic interface model, the pseudo-static deflection solver, the unified
force/motion controller with its adaptation laws, a fixed-step plant
simulator with sensor fidelity options, per-step stability certification,
scenario execution with fixed-schema logging, and artifact export.
"""

from .adaptation import (AdaptiveState, integrate_adaptation, ke_update,
                         proj, rho, theta_update)
from .chain import (ChainParams, JacobianSet, JointState, TaskPose,
                    center_of_mass, chain_geometry, forward_kinematics,
                    jacobians, rank_margin, second_derivative_wrt_delta)
from .config import (BUILTIN_SCENARIOS, ConfigError, force_scenario,
                     load_scenario, mixed_scenario, position_scenario,
                     save_scenario, scenario_from_dict, scenario_to_dict)
from .contact import (ContactParams, contact_force, force_rate, penetration,
                      projectors, stiffness_determinant, stiffness_matrix)
from .controller import (ControlOutput, ControllerState, Gains, control_step,
                         deadband, integrate_controller)
from .defaults import benchmark_adaptation, benchmark_chain, benchmark_gains
from .export import (export, read_csv, runlog_digest, write_csv, write_plots,
                     write_summary)
from .flex import (DeflectionError, compute_Jfg, delta_rate_estimate,
                   estimated_task_jacobian, gravity_torque, settle,
                   solve_static_deflection, static_residual, theta_from)
from .lyapunov import (Certificate, assemble_closed_loop,
                       assemble_uncertainty, certificate, lyapunov_value,
                       state_weight, vdot_bound)
from .plant import FidelityOptions, PlantState, init_plant, measure, plant_step
from .scenario import (LOG_COLUMNS, Phase, RunLog, RunResult, Scenario,
                       log_summary, run)

__version__ = "0.1.0"
