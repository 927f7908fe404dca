"""Seeker and quadrotor environments with feasible-action-set construction.

Both environments expose the same pattern: a config dataclass, a pure
feasible-set constructor mapping the current state to an HPolytope over
actions, a pure step function, and a thin mutable wrapper that tracks the
episode counter.  Any action inside the feasible set is safe by
construction: Seeker rows keep the next position inside the arena and
outside every obstacle's separating halfspace, quadrotor rows keep the
reachable set of the next state inside the robust invariant zonotope.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import lp
from .errors import (EmptySetError, InvalidStateError,
                     InvariantViolationError)
from .geometry import (HPolytope, Interval, Zonotope, chebyshev_ball,
                       set_from_json, set_to_json)


@dataclass(frozen=True)
class StepResult:
    """Transition outcome; exactly one cause flag is set when done."""

    next_state: np.ndarray
    reward: float
    done: bool
    goal_reached: bool = False
    collision: bool = False
    truncated: bool = False

    def __post_init__(self):
        causes = int(self.goal_reached) + int(self.collision) + int(self.truncated)
        if self.done and causes != 1:
            raise ValueError("done result needs exactly one termination cause")
        if not self.done and causes != 0:
            raise ValueError("cause flag set on a non-terminal result")


# ---------------------------------------------------------------------------
# seeker


@dataclass(frozen=True)
class SeekerConfig:
    """Point agent in [-H, H]^d with spherical obstacles and a goal region.

    start is a repo convention (the task brief leaves the initial state
    open); episodes begin there deterministically.
    """

    dim: int
    bounds_half_width: float
    obstacles: tuple
    goal: tuple
    action_box: Interval
    max_steps: int
    start: np.ndarray

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError("seeker supports dim 2 or 3")
        h = float(self.bounds_half_width)
        if h <= 0:
            raise ValueError("bounds_half_width must be positive")
        obstacles = tuple((np.asarray(c, float), float(r)) for c, r in self.obstacles)
        goal_c, goal_r = self.goal
        goal_c = np.asarray(goal_c, float)
        goal_r = float(goal_r)
        start = np.asarray(self.start, float)
        for c, r in obstacles:
            if c.shape != (self.dim,) or r <= 0:
                raise ValueError("obstacle needs a dim-vector center and radius > 0")
            if (np.abs(c) + r >= h).any():
                raise ValueError("obstacle must sit strictly inside the bounds")
        if goal_c.shape != (self.dim,) or goal_r <= 0:
            raise ValueError("goal needs a dim-vector center and radius > 0")
        if (np.abs(goal_c) + goal_r >= h).any():
            raise ValueError("goal must sit strictly inside the bounds")
        if self.action_box.dim != self.dim:
            raise ValueError("action box dimension mismatch")
        if start.shape != (self.dim,) or (np.abs(start) >= h).any():
            raise ValueError("start must lie strictly inside the bounds")
        for c, r in obstacles:
            if np.linalg.norm(start - c) <= r:
                raise ValueError("start must lie outside every obstacle")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        object.__setattr__(self, "bounds_half_width", h)
        object.__setattr__(self, "obstacles", obstacles)
        object.__setattr__(self, "goal", (goal_c, goal_r))
        object.__setattr__(self, "start", start)


def default_seeker_config(dim: int = 2) -> SeekerConfig:
    """Documented fixed layout: diagonal reach task with obstacles near the
    straight-line path, so the feasible set clips actions regularly."""
    if dim == 2:
        obstacles = ((np.array([-4.0, -4.8]), 1.8),
                     (np.array([0.8, 1.8]), 1.6),
                     (np.array([5.2, 3.6]), 1.2))
        start = np.array([-8.0, -8.0])
        goal_c = np.array([8.0, 8.0])
    elif dim == 3:
        obstacles = ((np.array([-4.0, -4.8, -3.6]), 1.8),
                     (np.array([0.8, 1.8, 0.4]), 1.6),
                     (np.array([5.2, 3.6, 4.6]), 1.2),
                     (np.array([-1.5, -0.5, -2.5]), 1.4))
        start = np.array([-8.0, -8.0, -8.0])
        goal_c = np.array([8.0, 8.0, 8.0])
    else:
        raise ValueError("seeker supports dim 2 or 3")
    return SeekerConfig(
        dim=dim,
        bounds_half_width=10.0,
        obstacles=obstacles,
        goal=(goal_c, 0.5),
        action_box=Interval(-np.ones(dim), np.ones(dim)),
        max_steps=100,
        start=start,
    )


def _check_seeker_state(cfg: SeekerConfig, state: np.ndarray):
    h = cfg.bounds_half_width
    if (np.abs(state) > h).any():
        raise InvalidStateError("state outside the arena bounds")
    for c, r in cfg.obstacles:
        if np.linalg.norm(state - c) <= r:
            raise InvalidStateError("state inside an obstacle")


def seeker_feasible_set(cfg: SeekerConfig, state) -> HPolytope:
    """Action polytope: action box, arena rows a_i <= H -/+ s_i, and one
    separating halfspace per obstacle n = (o - s)/|o - s| with offset
    |o - s| - r, so a = 0 is always feasible in the free space."""
    state = np.asarray(state, float)
    _check_seeker_state(cfg, state)
    d = cfg.dim
    h = cfg.bounds_half_width
    eye = np.eye(d)
    rows = [np.vstack([eye, -eye]),
            np.vstack([eye, -eye])]
    offsets = [np.concatenate([cfg.action_box.upper, -cfg.action_box.lower]),
               np.concatenate([h - state, h + state])]
    # a unit row cannot bind when its offset exceeds the box corner norm;
    # dropping such rows keeps the polytope a plain box in open space
    reach = np.linalg.norm(np.maximum(np.abs(cfg.action_box.lower),
                                      np.abs(cfg.action_box.upper)))
    for c, r in cfg.obstacles:
        v = c - state
        dist = np.linalg.norm(v)
        if dist - r > reach:
            continue
        n = v / dist
        rows.append(n[None, :])
        offsets.append(np.array([dist - r]))
    return HPolytope(np.vstack(rows), np.concatenate(offsets))


def seeker_step(cfg: SeekerConfig, state, action, step: int = 0) -> StepResult:
    """Dynamics s' = s + a with the reward case split +100 goal, -100
    collision (obstacle hit or arena exit), else progress toward the goal
    minus a per-step cost of 1.  Collision takes precedence over goal."""
    state = np.asarray(state, float)
    action = np.asarray(action, float)
    nxt = state + action
    goal_c, goal_r = cfg.goal
    h = cfg.bounds_half_width

    hit_obstacle = any(np.linalg.norm(nxt - c) < r for c, r in cfg.obstacles)
    out_of_bounds = (np.abs(nxt) > h).any()
    if hit_obstacle or out_of_bounds:
        return StepResult(nxt, -100.0, True, collision=True)
    if np.linalg.norm(nxt - goal_c) < goal_r:
        return StepResult(nxt, 100.0, True, goal_reached=True)
    l_prev = np.linalg.norm(state - goal_c)
    l_curr = np.linalg.norm(nxt - goal_c)
    reward = float(l_prev - l_curr - 1.0)
    if step + 1 >= cfg.max_steps:
        return StepResult(nxt, reward, True, truncated=True)
    return StepResult(nxt, reward, False)


class SeekerEnv:
    """Single-owner mutable episode wrapper around the pure step function."""

    def __init__(self, cfg: SeekerConfig):
        self.cfg = cfg
        self.reset()

    def reset(self) -> np.ndarray:
        self.state = self.cfg.start.copy()
        self.steps = 0
        self.done = False
        return self.state

    def feasible_set(self) -> HPolytope:
        return seeker_feasible_set(self.cfg, self.state)

    def step(self, action) -> StepResult:
        if self.done:
            raise InvalidStateError("episode finished; call reset()")
        result = seeker_step(self.cfg, self.state, action, step=self.steps)
        self.state = result.next_state
        self.steps += 1
        self.done = result.done
        return result


# ---------------------------------------------------------------------------
# quadrotor


@dataclass(frozen=True)
class QuadrotorConfig:
    """Linear plant s' = A s + B a + w with w set-bounded by the zonotope W
    and a robust control invariant zonotope Sr.

    Per-dimension action bounds for the reward's normalized action cost are
    solved from the action polytope at construction (two LPs per input).
    """

    A: np.ndarray
    B: np.ndarray
    W: Zonotope
    Sr: Zonotope
    action_polytope: HPolytope
    goal_state: np.ndarray
    max_steps: int

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, float))
        B = np.atleast_2d(np.asarray(self.B, float))
        goal = np.asarray(self.goal_state, float)
        m = A.shape[0]
        if A.shape != (m, m):
            raise ValueError("A must be square")
        if B.shape[0] != m:
            raise ValueError("B row count must match the state dimension")
        if self.W.dim != m or self.Sr.dim != m or goal.shape != (m,):
            raise ValueError("state-space dimension mismatch")
        d = B.shape[1]
        if self.action_polytope.dim != d:
            raise ValueError("action polytope dimension mismatch")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        lo = np.empty(d)
        hi = np.empty(d)
        for i in range(d):
            e = np.zeros(d)
            e[i] = 1.0
            for sign, out in ((1.0, hi), (-1.0, lo)):
                res = lp.lp_solve(sign * e, self.action_polytope.normals,
                                  self.action_polytope.offsets, maximize=True)
                if res.status is not lp.LpStatus.OPTIMAL:
                    raise ValueError("action polytope must be bounded and nonempty")
                out[i] = sign * res.value
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "goal_state", goal)
        object.__setattr__(self, "action_lower", lo)
        object.__setattr__(self, "action_range", hi - lo)

    @property
    def state_dim(self) -> int:
        return self.A.shape[0]

    @property
    def action_dim(self) -> int:
        return self.B.shape[1]

    def to_json(self) -> dict:
        return {
            "A": self.A.tolist(),
            "B": self.B.tolist(),
            "W": set_to_json(self.W),
            "Sr": set_to_json(self.Sr),
            "action_polytope": set_to_json(self.action_polytope),
            "goal_state": self.goal_state.tolist(),
            "max_steps": self.max_steps,
        }

    @classmethod
    def from_json(cls, data: dict) -> "QuadrotorConfig":
        return cls(
            A=np.asarray(data["A"], float),
            B=np.asarray(data["B"], float),
            W=set_from_json(data["W"]),
            Sr=set_from_json(data["Sr"]),
            action_polytope=set_from_json(data["action_polytope"]),
            goal_state=np.asarray(data["goal_state"], float),
            max_steps=int(data["max_steps"]),
        )


def load_quadrotor_config(path=None) -> QuadrotorConfig:
    """Load a config from JSON; None loads the shipped default plant."""
    if path is None:
        text = (resources.files("truncpol") / "configs"
                / "quadrotor_default.json").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    return QuadrotorConfig.from_json(json.loads(text))


def quadrotor_feasible_set(cfg: QuadrotorConfig, state) -> HPolytope:
    """Actions whose one-step reachable set stays inside Sr.

    Support-function rows run over +/- the generator directions of W and Sr:
    ell (A s + B a) <= rho_Sr(ell) - rho_W(ell) becomes (ell B) a <= offset.
    Rows with ell B = 0 constrain no action: they are dropped when already
    satisfied and certify a bad Sr input otherwise.
    """
    state = np.asarray(state, float)
    if not cfg.Sr.contains(state, tol=1e-9):
        raise InvalidStateError("state outside the robust invariant set")
    dirs = np.vstack([cfg.W.generators.T, cfg.Sr.generators.T])
    dirs = np.vstack([dirs, -dirs])
    # generator scales cancel in the inequalities; normalizing keeps rows
    # with tiny generators from degrading the downstream LP conditioning
    dir_norms = np.linalg.norm(dirs, axis=1)
    dirs = dirs[dir_norms > 0.0] / dir_norms[dir_norms > 0.0, None]
    rho = (dirs @ cfg.Sr.center + np.abs(dirs @ cfg.Sr.generators).sum(axis=1)
           - dirs @ cfg.W.center - np.abs(dirs @ cfg.W.generators).sum(axis=1))
    rows = dirs @ cfg.B
    offsets = rho - dirs @ (cfg.A @ state)

    norms = np.linalg.norm(rows, axis=1)
    scale = max(1.0, float(norms.max()))
    degenerate = norms <= 1e-12 * scale
    if degenerate.any():
        if (offsets[degenerate] < -1e-12).any():
            raise InvariantViolationError(
                "containment row without action influence is violated")
        rows = rows[~degenerate]
        offsets = offsets[~degenerate]
        norms = norms[~degenerate]
    rows = rows / norms[:, None]
    offsets = offsets / norms
    poly = HPolytope(np.vstack([cfg.action_polytope.normals, rows]),
                     np.concatenate([cfg.action_polytope.offsets, offsets]))
    try:
        chebyshev_ball(poly)
    except EmptySetError:
        raise InvariantViolationError(
            "empty feasible action set; Sr is not robust control invariant")
    return poly


def quadrotor_step(cfg: QuadrotorConfig, state, action,
                   rng: np.random.Generator, step: int = 0) -> StepResult:
    """s' = A s + B a + w with w uniform over W's generator cube; reward
    exp(-|s - s*| - 0.005 sum(a_c)) - 1 with a_c the per-dimension
    normalized action."""
    state = np.asarray(state, float)
    action = np.asarray(action, float)
    beta = rng.uniform(-1.0, 1.0, cfg.W.n_generators)
    w = cfg.W.center + cfg.W.generators @ beta
    nxt = cfg.A @ state + cfg.B @ action + w
    rng_span = np.where(cfg.action_range > 0, cfg.action_range, 1.0)
    a_c = (action - cfg.action_lower) / rng_span
    reward = float(np.exp(-np.linalg.norm(state - cfg.goal_state)
                          - 0.005 * a_c.sum()) - 1.0)
    if step + 1 >= cfg.max_steps:
        return StepResult(nxt, reward, True, truncated=True)
    return StepResult(nxt, reward, False)


class QuadrotorEnv:
    """Single-owner mutable episode wrapper; episodes start at Sr's center."""

    def __init__(self, cfg: QuadrotorConfig, rng: np.random.Generator):
        self.cfg = cfg
        self.rng = rng
        self.reset()

    def reset(self) -> np.ndarray:
        self.state = self.cfg.Sr.center.copy()
        self.steps = 0
        self.done = False
        return self.state

    def feasible_set(self) -> HPolytope:
        return quadrotor_feasible_set(self.cfg, self.state)

    def step(self, action) -> StepResult:
        if self.done:
            raise InvalidStateError("episode finished; call reset()")
        result = quadrotor_step(self.cfg, self.state, action, self.rng,
                                step=self.steps)
        self.state = result.next_state
        self.steps += 1
        self.done = result.done
        return result


# ---------------------------------------------------------------------------
# rollouts


def rollout(env, policy, n_steps: int, auto_reset: bool = True) -> list:
    """Run n_steps env steps, resetting on episode end.

    policy(state, feasible_set) -> action.  Returns rows of
    (step, state, action, reward, done) with the state the action was taken
    from, ready for write_trace_csv.
    """
    rows = []
    for k in range(n_steps):
        if env.done and auto_reset:
            env.reset()
        state = env.state.copy()
        action = policy(state, env.feasible_set())
        result = env.step(action)
        rows.append((k, state, np.asarray(action, float), result.reward,
                     result.done))
    return rows


def write_trace_csv(path, rows):
    """Trace columns: step, state..., action..., reward, done_flag."""
    if not rows:
        raise ValueError("empty trace")
    d_s = rows[0][1].shape[0]
    d_a = rows[0][2].shape[0]
    header = (["step"]
              + [f"state_{i}" for i in range(d_s)]
              + [f"action_{i}" for i in range(d_a)]
              + ["reward", "done_flag"])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for k, state, action, reward, done in rows:
            cells = ([str(k)]
                     + [format(v, ".17g") for v in state]
                     + [format(v, ".17g") for v in action]
                     + [format(reward, ".17g"), str(int(done))])
            fh.write(",".join(cells) + "\n")
