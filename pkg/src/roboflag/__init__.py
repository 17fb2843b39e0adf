"""Anytime branch-and-bound task assignment for the RoboFlag drill."""

__version__ = "0.1.0"

from .assignment import Assignment, count_complete_assignments, evaluate, expand_node
from .dynamics import AttackerTrack, DefenderState, SampleGrid, ValidationError
from .instances import GenParams, InstanceSpec, generate
from .intercept import FieldConfig, int_time, min_time_to_point_1d
from .sim import SimConfig, SimOutcome, simulate
from .solver import SolverConfig, SolverResult, Strategy, solve

__all__ = [
    "Assignment", "AttackerTrack", "DefenderState", "FieldConfig", "GenParams", "InstanceSpec",
    "SampleGrid", "SimConfig", "SimOutcome", "SolverConfig", "SolverResult", "Strategy",
    "ValidationError", "count_complete_assignments", "evaluate", "expand_node", "generate",
    "int_time", "min_time_to_point_1d", "simulate", "solve",
]
