"""Directional wave-field decomposition for anisotropic Maxwell equations.

Symbol-level toolkit: principal symbol of the electromagnetic system's
matrix, resolvent-strip analysis, the splitting matrix (by residues and by
the matrix sign function), generalized eigenvectors, vertical wave numbers,
impedance maps and per-mode up/down decomposition on periodic grids.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConvergenceError,
    DependencyError,
    DivergentIntegralError,
    GridMismatchError,
    MediumError,
    NumericGuardError,
    OverflowGuardError,
    SingularBlockError,
    StripViolationError,
    WavesplitError,
)
from .medium import LaplaceParameter, MaterialTensor, MediumSpec, isotropic, lower_bounds, normalize, schur_reduce  # noqa: E402
from .symbols import (  # noqa: E402
    DetCoefficients,
    SymbolPoint,
    char_symbol,
    det_alpha_closed,
    det_coefficients,
    hat_adjugate,
    principal_symbol,
)
from .spectrum import RootQuartet, StripReport, ellipticity_estimate, quartic_roots, strip_bound_C0  # noqa: E402
from .splitting import (  # noqa: E402
    SplitBasis,
    SplitSymbol,
    eigenvectors,
    impedance_and_riccati,
    integrate_Inm,
    splitting_symbol_residue,
    splitting_symbol_sign,
    vertical_wavenumber,
)
from .fields import (  # noqa: E402
    FieldGrid,
    SourceGrid,
    assemble_sources,
    decompose,
    propagate_oneway,
    recompose,
    to_field_matrix,
    twoway_oracle,
    vertical_components,
)
