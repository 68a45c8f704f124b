"""Autonomous iterative motion learning for MIMO plants.

GP dynamics models plus norm-optimal ILC, with a two-link SCARA simulator
and an experiment harness.
"""
from ._accel import BACKEND
from .dynamics import (DynamicsModel, TrialWindow, assemble_training_data, rollout,
                       rollout_jacobian, rollout_states, train_model)
from .errors import (AimoleError, CalibrationError, ConditioningError, ConfigError,
                     DegenerateNormalizationError, DegenerateWeightsError, DivergenceError,
                     NumericError, PreconditionError, StructuralError)
from .gp import (GaussianProcess, KernelHyperparameters, TrainingSet, fit,
                 log_marginal_likelihood, optimize_hyperparameters, predict_mean,
                 predict_mean_gradient, se_kernel)
from .ilc import (LearningConfig, LearningHistory, WeightPair, calibrate_input_variance,
                  compute_weights, detect_cutoff_frequency, generate_initial_input,
                  norm_optimal_update, run_learning)
from .plant import PlantParameters, ScaraPlant, dynamics_rhs, output_map, simulate_trial
from .trajectories import (LiftedTrajectory, TrialRecord, deinterleave, interleave,
                           normalized_error_norm, tracking_error, variable_block)

__version__ = "0.1.0"
