"""Two-hop 2x2 interference channel with time-varying amplify-forward relays.

Desk-scale simulator and analysis toolkit: channel model and genericity
checks, the three-phase interference-cancelling scheme, Monte Carlo link
simulation with DoF slope fitting, and the computable pieces of the
matching sum-rate outer bound.
"""

from .channel import (
    ChannelRealization,
    ConditionReport,
    EndToEndMatrix,
    GenericityFailure,
    check_conditions,
    effective_noise_variance,
    end_to_end,
    sample_channel,
)
from .scheme import (
    AfAlphabet,
    AfSchedule,
    DegenerateCoefficients,
    InvalidPower,
    NonGenericChannel,
    PhasePlan,
    RateReport,
    ReconstructionResult,
    achievable_rate,
    analytic_noise_variances,
    baseline_tdma_rate,
    decode_triple,
    plan_achievability,
    reconstruct_d1,
    reconstruct_d2,
    schedule_from_plan,
)
from .simulate import (
    InsufficientGrid,
    RatePoint,
    SchemeStats,
    SimConfig,
    SlopeFit,
    TrialRecord,
    estimate_dof_slope,
    estimate_mse,
    estimate_relay_power,
    fit_rate_report,
    relay_samples,
    run_scheme_trial,
    run_scheme_trials,
    simulate_block,
    simulate_block_matrix,
    sweep_power_grid,
)
from .bounds import (
    BoundConstants,
    BoundEvaluation,
    ImpossiblePattern,
    SingularCovariance,
    StateCensus,
    StateLabel,
    bound_constants,
    census,
    check_lemma2,
    classify_state,
    evaluate_bounds,
    gaussian_entropy,
    min_census_fraction,
    random_lemma2_instance,
    random_schedule,
    slot_states,
)

__version__ = "0.1.0"
