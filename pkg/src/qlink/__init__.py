"""qlink: microwave-photon quantum links between fixed-frequency qutrits.

A numpy/scipy toolkit that reproduces, at desk scale, the physics and
protocols of deterministic quantum communication through itinerant microwave
photons: two-pole transfer-resonator engineering, drive-dressed emission
rates, sech wave-packet shaping, cascaded sender-receiver master-equation
protocols (state transfer, remote entanglement), readout-corrected tomography,
and fabrication-tolerance yield analysis.
"""

__version__ = "0.1.0"

from .hilbert import (
    CollapseChannel,
    DensityMatrix,
    LayoutMismatchError,
    Operator,
    SpaceLayout,
    StateValidationError,
    partial_trace,
    tensor,
)
from .dynamics import DriveTerm, Hamiltonian, IntegrationError, Trajectory, evolve, lindblad_rhs
from .resonator import (
    CoupledResonatorParams,
    EigenmodeDecomposition,
    EmissionContext,
    PoleError,
    diagonalize,
    gamma_f,
    gamma_f_golden,
    modal_rate,
    rate_curve,
    response,
    s11,
)
from .drive import (
    AdiabaticityError,
    DressedQutrit,
    DrivenQutritParams,
    PhotonWaveform,
    PulseSchedule,
    absorption_schedule,
    dress,
    dress_perturbative,
    emission_schedule,
    target_waveform,
)
from .cascade import (
    CascadeConfig,
    CascadeModel,
    DeviceParams,
    EmissionRecord,
    build,
    make_config,
    optimize_delay,
    run_absorption,
    run_bell,
    run_emission,
    run_transfer,
)
from .tomography import (
    AssignmentMatrix,
    BlobModel,
    Classifier,
    bell_fidelity,
    calibrate,
    correct,
    mle_state,
    process_fidelity,
    process_tomography,
    synth_shots,
)
from .metrics import (
    ChannelBreakdown,
    ErrorBudget,
    WaveformRecord,
    absorption_efficiency,
    error_budget,
    normalize_pg,
    photon_loss,
    spectrum,
)
from .design import (
    DesignObjectiveSpec,
    MonteCarloSpec,
    YieldReport,
    bandwidth,
    monte_carlo_yield,
    sensitivity_map,
    sweep_design,
)
