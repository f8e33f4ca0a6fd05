"""Beat-frequency oscillation analysis for two-stage wireless power receivers.

Two independent models of the same circuit: a multi-frequency harmonic
steady-state solver and a switched time-domain simulator, plus closed-form
beat analysis, control-loop metrics, and design rules.
"""

from .beat_analysis import (
    BeatComponents,
    CapacitorDesign,
    DesignSpec,
    FrequencyPlan,
    SweepResult,
    beat_component_closed_form,
    critical_frequency,
    design_capacitors,
    recommend_frequency_plan,
    sweep_beat,
)
from .errors import (
    IndexOutOfGrid,
    NoConvergence,
    NoCrossover,
    NonRealResult,
    NoResonance,
    RationalizationFailure,
    SingularSystem,
    UnstableLoop,
    WindowMismatch,
    WptBeatError,
    ZeroBeatFrequency,
)
from .excitation import (
    PAPER_PARAMS,
    CircuitParams,
    coil_current_spectrum,
    rectified_current_spectrum,
    switching_spectrum,
    switching_spectrum_derivative,
)
from .small_signal import (
    FrequencyResponse,
    LoopMetrics,
    compensator_gain,
    duty_to_output_response,
    linearize,
    loop_metrics,
    resonant_gain,
    type2_gain,
)
from .spectral import (
    FrequencyGrid,
    HarmonicVector,
    build_frequency_grid,
    convolution_matrix,
    differentiation_matrix,
    evaluate_waveform,
    harmonic_vector_from_dict,
)
from .steady_state import (
    SteadyStateSolution,
    assemble_system,
    line_amplitude,
    solve_steady_state,
)
from .time_sim import (
    CompensatorParams,
    SimConfig,
    Trace,
    closed_loop_step_response,
    line_amplitude_of,
    simulate,
    simulate_closed_loop,
    simulate_modulated,
    spectrum_of,
)

__version__ = "0.1.0"
