"""Subdiffusion with piecewise-constant variable fractional order."""

from .analysis import (
    DensityReport,
    MSDSeries,
    density_check,
    msd_compute,
    msd_largetime_exponent,
    msd_smalltime_check,
)
from .fields import SpatialGrid, SpectralField, SymbolSpec, synthesize_field
from .mlf import MLParams, mittag_leffler, mlf_asymptotic_check, mlf_deriv, mlf_eval
from .modes import (
    DegenerateKernelError,
    LHParams,
    MemoryClass,
    MemoryReport,
    ModeChange,
    OrderFunction,
    classify_memory,
    critical_times,
    kernel_breakpoints,
    kernel_eval,
    order_at,
)
from .oracle import (
    ScalarVOProblem,
    field_oracle,
    picard_first_interval,
    picard_tail_bound,
    step_solve,
)
from .spectral import (
    CriticalSchedule,
    SolverApplicabilityError,
    SolverConfig,
    SymbolTable,
    assemble_solution_symbol,
    build_symbol_table,
    fundamental_solution,
    reduce_early_window,
    reduce_late_window,
    symbol_M,
    symbol_R,
    symbol_S,
)
from .voops import (
    QuadratureSpec,
    SampledFunction,
    rl_deriv,
    vo_caputo,
    vo_integral,
    vo_integral_power,
)

__version__ = "0.1.0"
