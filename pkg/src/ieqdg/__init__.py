"""Mixed DG discretization of the Swift-Hohenberg equation with IEQ time stepping."""
from .baselines import IterationControl, sh_g1g2, step_gn, step_secant
from .basis import TENSOR_PRODUCT, TOTAL_DEGREE, ReferenceBasis, gauss_rule
from .config import ExperimentConfig, load_config, preset_config
from .errors import (ConfigError, ContractError, ConvergenceError, DomainError,
                     EnergyViolation, NumericError, SolverError)
from .field import DGField, DGSpace, eoc, error_norms, project
from .ieq import (energy, init_state, make_problem, step_first_order,
                  step_nonhomogeneous, step_second_order)
from .linear_solver import BlockSystem, solve_block
from .mesh import build_rect_mesh
from .potential import swift_hohenberg
from .weak_form import BCSpec, ModelSpec, assemble_A

__version__ = "0.1.0"
