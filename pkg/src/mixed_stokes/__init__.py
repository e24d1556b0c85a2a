"""Taylor-Hood finite elements for steady Stokes flow with Dirichlet,
traction and mixed boundary conditions."""
from .errors import (EvaluationError, IncompatibleDataError, InvalidArgumentError,
                     NumericalBreakdownError, PreconditionError, StokesError)
from .mesh import (BoundaryPartition, Regime, TriMesh, boundary_quadrature, build_rect_mesh,
                   partition_boundary)
from .solver import (Solution, StokesProblem, solve, solve_dirichlet, solve_neumann,
                     solve_problem, superposition_check)
from .spaces import DofMap, build_taylor_hood, interpolate_boundary_velocity, rigid_modes

__version__ = "0.1.0"
