"""Age-of-Information bandits: environment, policies, exact oracles, bounds, experiments."""
from .analytics import (BoundParams, BoundReport, FixedSchedule, bernoulli_kl, cluster_worst_first,
                        eval_bounds, exact_cumulative_aoi, exact_expected_aoi, worsen_suboptimal)
from .env import AoIState, Instance, Trajectory, draw_slot, init_age, run_genie, step
from .harness import (ExperimentConfig, RegretCurve, builtin_setting, final_regret_table,
                      load_config, run_experiment)
from .policies import POLICY_NAMES, Decision, PolicyState, decide, update
from .simulate import available_backends, default_backend, simulate_replication

__version__ = "0.1.0"
