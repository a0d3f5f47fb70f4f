"""Ensemble tabular Q-learning over co-link synthetic environments."""

from .aggregation import AggregationMap, build_aggregation, wrap_aggregated
from .colink import (
    SimilarityTensor,
    SyntheticEnvironment,
    build_colink,
    estimate_ptt,
    l1_normalize,
    make_cousins,
)
from .envs import EnvironmentSampler, MdpSampler, make_rng
from .esql import (
    EnsembleConfig,
    EnsembleResult,
    WeightVector,
    closed_form_weights,
    correct_estimation_rate,
    ensemble_update,
    init_weights,
    run_esql,
    softmax,
)
from .mdp import (
    CostModel,
    Mdp,
    Policy,
    QTable,
    TransitionTensor,
    ValueFunction,
    load_mdp,
    optimal_q,
    policy_evaluation,
    random_mdp,
    save_mdp,
    step,
    value_iteration,
)
from .qlearning import (
    BASELINE_VARIANTS,
    LearningSchedule,
    VisitCounter,
    epsilon_greedy,
    greedy_policy,
    q_update,
    run_baseline,
)
from .trace import ExperimentTrace
from .wireless import (
    GilbertElliotChannel,
    Model1Config,
    Model2Config,
    Model3Config,
    Model4Config,
    build_model,
    materialize_ptt,
)

__version__ = "0.1.0"
