"""Driven-dissipative collective-spin simulator.

Spectra of the Lindblad generator and their finite-size scaling, master
equation dynamics with steady-state solvers, oscillation decay analysis,
and the exact semiclassical (mean-field) limit with its conserved
quantities and fixed-point structure.
"""

from .spinops import (
    SpinSector,
    CollectiveOperator,
    DensityMatrix,
    SectorMismatchError,
    build_collective_operator,
    coherent_spin_state,
    maximally_mixed_state,
    expectation,
    variance,
)
from .liouv import (
    ModelParams,
    Superoperator,
    CapacityError,
    build_superoperator,
    apply_superoperator,
    superoperator_action,
    hamiltonian_matrix,
    vectorize,
    unvectorize,
)
from .spectral import (
    EigenSpectrum,
    BandStructure,
    PowerLawFit,
    full_spectrum,
    gap_scan,
    band_structure,
    lowest_imaginary_excitation,
    fit_power_law,
)
from .dynamics import Trajectory, TraceDriftError, evolve, steady_state
from .sigproc import (
    Periodogram,
    DecayFit,
    periodogram,
    decay_rate_fit,
    eta_scaling,
)
from .meanfield import (
    MeanFieldTrajectory,
    BranchState,
    FixedPoint,
    mf_derivative,
    mf_integrate,
    conserved_M,
    conserved_R,
    conserved_R_complex,
    fixed_points,
    phase_portrait,
    involution_check,
    qp_to_bloch,
)

__version__ = "0.1.0"
