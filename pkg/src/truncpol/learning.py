"""REINFORCE on Seeker comparing truncated and untruncated policy metrics.

A linear-Gaussian policy acts through the state's feasible action set, so
every executed action is safe by construction.  The metric mode controls
which distribution supplies log-probabilities and scores for the gradient:
the truncated one (exact on intervals, box surrogates on polytopes) or the
untruncated base Gaussian, which ignores that sampling was constrained and
therefore follows a biased gradient.  The training loop is deliberately
plain reinforcement learning; the modes are the experiment.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .envs import SeekerConfig, SeekerEnv, default_seeker_config
from .errors import InvariantViolationError, NumericError
from .geometry import HPolytope, Interval, inner_interval
from .samplers import hybrid_sample
from .truncmvn import ApproxMode, PolytopeTrunc
from .truncnorm import (DiagGaussian, FactorizedTrunc, sample_std_interval)

SIGMA_MIN = 1e-3
SIGMA_MAX = 1e2
# compact parameter domain for projected ascent: biased metrics can push the
# mean parameters into geometric runaway; the projection keeps such runs
# finite (they flatline instead of overflowing) and never binds for a
# well-behaved gradient, whose mean parameters stay near the action scale
PARAM_BOUND = 10.0


class MetricMode(enum.Enum):
    """Which distribution the policy gradient pretends it sampled from."""

    EXACT_INT = "ExactInt"
    OG_INT = "OgInt"
    APPROX_POLY_OUTER = "ApproxPolyOuter"
    APPROX_POLY_INNER = "ApproxPolyInner"
    APPROX_POLY_COMBINED = "ApproxPolyCombined"
    OG_POLY = "OgPoly"

    @property
    def on_interval(self) -> bool:
        return self in (MetricMode.EXACT_INT, MetricMode.OG_INT)

    @property
    def untruncated_score(self) -> bool:
        return self in (MetricMode.OG_INT, MetricMode.OG_POLY)

    @property
    def approx_mode(self) -> ApproxMode:
        return {MetricMode.APPROX_POLY_OUTER: ApproxMode.OUTER,
                MetricMode.APPROX_POLY_INNER: ApproxMode.INNER,
                MetricMode.APPROX_POLY_COMBINED: ApproxMode.COMBINED}[self]


class Baseline(enum.Enum):
    NONE = "None"
    MEAN_RETURN = "MeanReturn"


@dataclass(frozen=True)
class LinearGaussianPolicy:
    """Mean linear in the features, state-independent log standard deviation."""

    W_mu: np.ndarray
    b_mu: np.ndarray
    log_sigma: np.ndarray

    def __post_init__(self):
        W = np.atleast_2d(np.asarray(self.W_mu, float))
        b = np.asarray(self.b_mu, float)
        ls = np.asarray(self.log_sigma, float)
        d = W.shape[0]
        if b.shape != (d,) or ls.shape != (d,):
            raise ValueError("parameter shapes disagree on the action dimension")
        for arr in (W, b, ls):
            if not np.isfinite(arr).all():
                raise ValueError("policy parameters must be finite")
        object.__setattr__(self, "W_mu", W)
        object.__setattr__(self, "b_mu", b)
        object.__setattr__(self, "log_sigma", ls)

    @classmethod
    def init(cls, action_dim: int, feature_dim: int,
             sigma0: float = 0.5) -> "LinearGaussianPolicy":
        return cls(np.zeros((action_dim, feature_dim)), np.zeros(action_dim),
                   np.full(action_dim, math.log(sigma0)))

    @property
    def sigma(self) -> np.ndarray:
        return np.clip(np.exp(self.log_sigma), SIGMA_MIN, SIGMA_MAX)

    def mean(self, features: np.ndarray) -> np.ndarray:
        return self.W_mu @ features + self.b_mu

    def base(self, features: np.ndarray) -> DiagGaussian:
        return DiagGaussian(self.mean(features), self.sigma)


@dataclass(frozen=True)
class TrainConfig:
    metric_mode: MetricMode
    episodes: int
    learning_rate: float
    discount: float
    seed: int
    baseline: Baseline = Baseline.MEAN_RETURN

    def __post_init__(self):
        if self.episodes < 0:
            raise ValueError("episodes must be nonnegative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not 0.0 < self.discount <= 1.0:
            raise ValueError("discount must lie in (0, 1]")


@dataclass(frozen=True)
class StepRecord:
    """One executed transition plus the constraint set it was sampled from."""

    features: np.ndarray
    action: np.ndarray
    reward: float
    cset: Interval | HPolytope


def seeker_features(state, goal_center, half_width: float = 1.0) -> np.ndarray:
    """State, displacement to the goal, and a bias term.

    Both blocks are divided by the arena half-width so every feature is
    O(1); the linear mean can absorb any fixed rescaling, but gradient
    steps stay comparable across coordinates only when the features are.
    """
    s = np.asarray(state, float)
    return np.concatenate([s / half_width,
                           (np.asarray(goal_center, float) - s) / half_width,
                           [1.0]])


def feasible_action_interval(poly: HPolytope, mode: MetricMode):
    """Constraint set the mode acts through: the largest inscribed box for
    interval modes (guaranteed feasible), the polytope itself otherwise."""
    if mode.on_interval:
        return inner_interval(poly)
    return poly


def _truncated(policy: LinearGaussianPolicy, rec: StepRecord,
               mode: MetricMode):
    base = policy.base(rec.features)
    if mode.on_interval:
        return FactorizedTrunc.from_interval(base.mu, base.sigma, rec.cset)
    return PolytopeTrunc.make(base, rec.cset, mode.approx_mode)


def step_score(policy: LinearGaussianPolicy, rec: StepRecord,
               mode: MetricMode) -> tuple[float, np.ndarray, np.ndarray]:
    """log pi(a|s) with its (mu, sigma) gradient under the mode's metric."""
    if mode.untruncated_score:
        base = policy.base(rec.features)
        d_mu, d_sigma = base.score(rec.action)
        return base.log_pdf(rec.action), d_mu, d_sigma
    dist = _truncated(policy, rec, mode)
    d_mu, d_sigma = dist.grad_log_prob(rec.action)
    return dist.log_prob(rec.action), d_mu, d_sigma


def behavior_entropy(policy: LinearGaussianPolicy, rec: StepRecord,
                     mode: MetricMode) -> float:
    """Logged entropy proxy: exact on intervals, surrogate on polytopes.
    Og modes report the base Gaussian entropy, consistent with scoring as
    if no truncation had happened."""
    if mode.untruncated_score:
        sigma = policy.sigma
        return float(np.log(sigma).sum()
                     + 0.5 * len(sigma) * math.log(2.0 * math.pi * math.e))
    dist = _truncated(policy, rec, mode)
    if mode.on_interval:
        return dist.entropy()
    return dist.approx_entropy()


def sample_interval_action(base: DiagGaussian, box: Interval,
                           rng: np.random.Generator) -> np.ndarray:
    """Per-dimension inverse-transform draw from the truncated base.

    Works straight from the standardized kernel, so it stays defined even
    when the feasible mass underflows and the normalized log-probability
    does not; a run with a degenerate policy keeps acting (badly) instead
    of dying in the sampler.
    """
    alpha = (box.lower - base.mu) / base.sigma
    beta = (box.upper - base.mu) / base.sigma
    ys = rng.random(base.dim)
    z = np.array([sample_std_interval(alpha[i], beta[i], float(ys[i]))
                  for i in range(base.dim)])
    return np.clip(base.mu + base.sigma * z, box.lower, box.upper)


def discounted_returns(rewards, discount: float) -> np.ndarray:
    out = np.empty(len(rewards))
    acc = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        acc = rewards[t] + discount * acc
        out[t] = acc
    return out


def _policy_gradient(policy, trajectory, cfg):
    returns = discounted_returns([r.reward for r in trajectory], cfg.discount)
    b = returns.mean() if cfg.baseline is Baseline.MEAN_RETURN else 0.0
    gW = np.zeros_like(policy.W_mu)
    gb = np.zeros_like(policy.b_mu)
    gls = np.zeros_like(policy.log_sigma)
    sigma = policy.sigma
    for rec, ret in zip(trajectory, returns):
        _, d_mu, d_sigma = step_score(policy, rec, cfg.metric_mode)
        adv = ret - b
        gW += adv * np.outer(d_mu, rec.features)
        gb += adv * d_mu
        gls += adv * d_sigma * sigma
    return gW, gb, gls


def surrogate_objective(policy, trajectory, cfg: TrainConfig) -> float:
    """Sum of advantage-weighted log-probs; its parameter gradient is the
    REINFORCE update direction for the fixed trajectory."""
    returns = discounted_returns([r.reward for r in trajectory], cfg.discount)
    b = returns.mean() if cfg.baseline is Baseline.MEAN_RETURN else 0.0
    return float(sum((ret - b) * step_score(policy, rec, cfg.metric_mode)[0]
                     for rec, ret in zip(trajectory, returns)))


def reinforce_update(policy: LinearGaussianPolicy, trajectory,
                     cfg: TrainConfig) -> LinearGaussianPolicy:
    """One Monte Carlo policy-gradient ascent step on the trajectory."""
    if not trajectory:
        raise ValueError("empty trajectory")
    gW, gb, gls = _policy_gradient(policy, trajectory, cfg)
    if not (np.isfinite(gW).all() and np.isfinite(gb).all()
            and np.isfinite(gls).all()):
        raise NumericError(
            "non-finite policy gradient "
            f"(mode={cfg.metric_mode.value}, steps={len(trajectory)}, "
            f"|W|={np.abs(policy.W_mu).max():.3g}, "
            f"sigma={np.array2string(policy.sigma, precision=3)})")
    lr = cfg.learning_rate
    # projected ascent: parameters stay in their compact domain while
    # gradients keep flowing at the boundary, instead of trapping the
    # parameter beyond it with a masked gradient
    new_W = np.clip(policy.W_mu + lr * gW, -PARAM_BOUND, PARAM_BOUND)
    new_b = np.clip(policy.b_mu + lr * gb, -PARAM_BOUND, PARAM_BOUND)
    new_ls = np.clip(policy.log_sigma + lr * gls,
                     math.log(SIGMA_MIN), math.log(SIGMA_MAX))
    return LinearGaussianPolicy(new_W, new_b, new_ls)


@dataclass(frozen=True)
class TrainResult:
    """Learning curve plus per-episode diagnostics and the final policy."""

    mode: MetricMode
    seed: int
    returns: np.ndarray
    entropies: np.ndarray
    log_probs: np.ndarray
    policy: LinearGaussianPolicy = field(repr=False)


def run_episode(policy: LinearGaussianPolicy, env: SeekerEnv,
                mode: MetricMode, rng: np.random.Generator):
    """Roll one episode, returning the trajectory and diagnostic sums."""
    goal_c, _ = env.cfg.goal
    state = env.reset()
    trajectory = []
    entropy_sum = 0.0
    logp_sum = 0.0
    while True:
        feats = seeker_features(state, goal_c, env.cfg.bounds_half_width)
        poly = env.feasible_set()
        cset = feasible_action_interval(poly, mode)
        if mode.on_interval:
            action = sample_interval_action(policy.base(feats), cset, rng)
        else:
            action = hybrid_sample(policy.base(feats), cset, rng).value
        if not cset.contains(action, tol=1e-9):
            raise InvariantViolationError("sampled action leaves the feasible set")
        rec = StepRecord(feats, action, 0.0, cset)
        entropy_sum += behavior_entropy(policy, rec, mode)
        logp_sum += step_score(policy, rec, mode)[0]
        result = env.step(action)
        trajectory.append(StepRecord(feats, action, result.reward, cset))
        state = result.next_state
        if result.done:
            return trajectory, entropy_sum, logp_sum


def train(cfg: TrainConfig,
          env_cfg: SeekerConfig | None = None) -> TrainResult:
    """Sequential REINFORCE run, deterministic for a fixed config."""
    env = SeekerEnv(env_cfg if env_cfg is not None else default_seeker_config(2))
    rng = np.random.default_rng(cfg.seed)
    d = env.cfg.dim
    policy = LinearGaussianPolicy.init(d, 2 * d + 1)
    returns = np.empty(cfg.episodes)
    entropies = np.empty(cfg.episodes)
    log_probs = np.empty(cfg.episodes)
    for ep in range(cfg.episodes):
        trajectory, entropy_sum, logp_sum = run_episode(
            policy, env, cfg.metric_mode, rng)
        policy = reinforce_update(policy, trajectory, cfg)
        n = len(trajectory)
        returns[ep] = sum(rec.reward for rec in trajectory)
        entropies[ep] = entropy_sum / n
        log_probs[ep] = logp_sum / n
    return TrainResult(cfg.metric_mode, cfg.seed, returns, entropies,
                       log_probs, policy)


def write_curves_csv(path, results) -> None:
    """Long-format curves: one row per (seed, episode)."""
    with open(path, "w") as fh:
        fh.write("seed,episode,return,mode\n")
        for res in results:
            for ep, ret in enumerate(res.returns):
                fh.write(f"{res.seed},{ep},{format(ret, '.17g')},"
                         f"{res.mode.value}\n")
