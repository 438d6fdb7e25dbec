"""Trapped-ion simulation of a (1+1)D Dirac particle in a warp-drive spacetime."""

from .analysis import (
    DensitySnapshot,
    GridCoverageError,
    LightconeFit,
    NoPeak,
    dispersion_zb_frequency,
    fit_lightcone,
    variance_series,
    wavepacket_density,
    zitterbewegung_spectrum,
)
from .evolution import (
    Backend,
    KrylovNotConverged,
    NormDrift,
    PropagatorConfig,
    StepTooLarge,
    TrajectoryRecord,
    acceleration_series,
    evolve_exact,
    evolve_momentum_oracle,
    evolve_timeordered,
)
from .hamiltonians import Frame, HamiltonianSpec
from .operators import FockSpace, QuantumState
from .spacetime import AlcubierreProfile, DiracParams, IonParams, dirac_to_ion, ion_to_dirac
from .states import (
    SPIN_DOWN,
    SPIN_PLUS,
    SPIN_UP,
    InitialStateSpec,
    MomentumGrid,
    TruncationInsufficient,
    build_initial_state,
)

__version__ = "0.1.0"
