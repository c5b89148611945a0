"""Online search with learned predictions: cost curves, algorithms, losses and learners."""

from .algorithms import (
    Purchase,
    RunRecord,
    ThresholdStrategy,
    competitive_ratio,
    expected_ratio,
    predicted_length,
    run_double,
    run_predict_and_double,
    run_thresholds,
)
from .distributions import (
    GeneratorSpec,
    draw_samples,
    generate,
    make_absloss_adversary,
    make_agnostic_instance,
    make_loss_lowerbound,
    make_standard_instance,
    make_symmetric,
    make_two_point,
    two_point_curve,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    InfeasibleError,
    NoFeasibleLength,
    OnlineSearchError,
    ParameterError,
    RangeError,
    ValidationError,
)
from .learn import (
    ConstantFamily,
    GridFamily,
    HypothesisFamily,
    LookupTableFamily,
    ThresholdFamily,
    TrainedPredictor,
    delta_f_bruteforce,
    estimate_delta,
    lts_train_and_run,
    optimal_policy_bruteforce,
    sample_complexity_bound,
    sem_minimize,
)
from .loss import DiscreteDistribution, Sample, competitive_loss, dist_error, sample_error
from .optcurve import (
    BEYOND_HORIZON,
    CouponSet,
    OfflineOracle,
    OptCurve,
    analytic_curve,
    load_fixture,
    ski_rental_curve,
)

__version__ = "0.1.0"
