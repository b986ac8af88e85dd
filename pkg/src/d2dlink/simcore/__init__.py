"""Built-in transient solver and NLDM-style characterization."""

from .network import Network
from .transient import SolverError, Stage, Stimulus, TransientResult, solve_transient

__all__ = ["Network", "SolverError", "Stage", "Stimulus", "TransientResult", "solve_transient"]
