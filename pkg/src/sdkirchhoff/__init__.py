"""Semi-discrete Kirchhoff equation on finite lattices.

u''(t)[n] = Phi(|grad^+ u(t)|^2) (Delta u(t))[n]: difference calculus, the
spectral linear solver, the Picard local construction with its explicit
constants, uniform global stepping and the energy monitor.
"""

from .energy import ConstantsBundle, data_constants, diff_energy, kirchhoff_energy, linear_energy
from .errors import (
    BlowUpError,
    ConfigError,
    ConservationError,
    ConsistencyError,
    DomainError,
    IterationError,
    KirchhoffError,
    NumericError,
    SteppingError,
    UnsupportedDomainError,
)
from .lattice import (
    LatticeDomain,
    LatticeField,
    State,
    backward_diff,
    forward_diff,
    grad_norm_sq,
    inner,
    laplacian,
    norm,
    sq_norm,
)
from .nonlinearity import Nonlinearity, antiderivative, dphi_max, phi_max
from .picard import ContractionReport, IterateTrajectory, PicardOptions, contraction_constant, envelope, picard_solve
from .spectral import CoefficientTrace, ModeSpectrum, analyze, linear_solve, propagate_mode, psi1, symbol_sq, synthesize
from .stepper import RunTrace, StepperOptions, advance_global, conservation_check
from .mol import mol_rhs, mol_step_rk4

__version__ = "0.1.0"
