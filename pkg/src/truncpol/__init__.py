"""Truncated Gaussian policies over constraint sets.

Exact interval-truncated metrics, interval-surrogate approximations on
polytopes, mixture treatment of interval unions, constrained samplers with
exact noise reconstruction, safe-action environments, and a REINFORCE demo
comparing truncation-aware and truncation-blind policy gradients.
"""

from .errors import (DegenerateSetError, EmptySetError, InvalidStateError,
                     InvariantViolationError, LowMassError, NumericError,
                     UnboundedSetError)
from .geometry import (HPolytope, Interval, IntervalUnion, Zonotope,
                       affine_preimage, chebyshev_ball, chebyshev_center,
                       chord, contains, contains_many, inner_interval,
                       outer_interval, support)
from .truncnorm import (DiagGaussian, FactorizedTrunc, Normal1d, TruncNormal1d,
                        log_mass_interval, log_mass_std, phi_cdf, phi_inv,
                        sample_std_interval)
from .truncmvn import ApproxMode, PolytopeTrunc, UnionTrunc
from .solvers import QpProblem, solve_mode_qp
from .samplers import (Exhausted, HybridSampler, RdhrChain, RdhrConfig,
                       SampleDraw, SamplerKind, hybrid_sample, rdhr_sample,
                       rejection_sample, rejection_sample_with_fallback,
                       reparam_sample)
from .oracle import (MomentsEstimate, OracleEstimate, ks_statistic,
                     ks_threshold, mc_entropy, mc_moments, mc_z)
from .envs import (QuadrotorConfig, QuadrotorEnv, SeekerConfig, SeekerEnv,
                   StepResult, default_seeker_config, load_quadrotor_config,
                   quadrotor_feasible_set, rollout, seeker_feasible_set,
                   write_trace_csv)
from .learning import (Baseline, LinearGaussianPolicy, MetricMode, TrainConfig,
                       TrainResult, train, write_curves_csv)
from .dataset import DatasetInstance, generate, load, save
from .verify import CheckResult, run_all

__all__ = [name for name in dir() if not name.startswith("_")]
