"""Build and certify the shipped quadrotor safety configuration.

The construction makes the generator-direction support rows an exact
containment certificate rather than a sampled check:

* Stabilize the discrete-time planar quadrotor with pole placement so the
  closed loop A - B K has real, distinct eigenvalues.  Its real Schur form
  then has an orthogonal basis Z and an upper triangular T.
* Pick positive direction weights d by backward substitution on |T| so that
  sum_j |T_ij| d_j <= lam * d_i for a contraction factor lam < 1.  The
  invariant candidate is the parallelotope Sr = <0, alpha * Z diag(d)>.
* Align the disturbance zonotope W with the facet normals of Sr, with
  half-widths a fixed fraction of Sr's.  A parallelotope is exactly the set
  where the +-facet-normal support inequalities hold, so checking those rows
  certifies A s + B a + W inside Sr, and the feedback a = -K s satisfies
  them with slack (1 - w_frac - lam) * alpha * d_i for every s in Sr.

Feasibility of the intersection with the action box is affine in (s, a), so
checking the 2^6 vertices of Sr covers all states.  A long closed-loop
rollout with a stochastic policy double-checks the certificate end to end.
"""

import argparse
import itertools
import json
import pathlib
import sys

import numpy as np
import scipy.linalg
import scipy.signal

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parent.parent / "src"))

from truncpol.envs import (QuadrotorConfig, QuadrotorEnv,
                           quadrotor_feasible_set)
from truncpol.errors import InvariantViolationError
from truncpol.geometry import HPolytope, Zonotope, chebyshev_ball
from truncpol.samplers import hybrid_sample
from truncpol.truncnorm import DiagGaussian

DT = 0.1
GRAV = 9.81
MASS = 1.0
INERTIA = 0.05
ACTION_BOX = 2.0
# real distinct poles: complex pairs produce 2x2 Schur blocks whose
# off-diagonal coupling no diagonal rescaling can suppress
POLES = [0.30, 0.40, 0.50, 0.60, 0.70, 0.80]


def plant():
    """Linearized planar quadrotor, state (x, z, theta, vx, vz, omega)."""
    A = np.eye(6)
    A[0, 3] = DT
    A[1, 4] = DT
    A[2, 5] = DT
    A[3, 2] = -GRAV * DT
    B = np.zeros((6, 2))
    B[4, 0] = DT / MASS
    B[5, 1] = DT / INERTIA
    return A, B


def balanced_weights(T, lam):
    """Positive d with (|T| d)_i <= lam * d_i, by backward substitution."""
    n = T.shape[0]
    absT = np.abs(T)
    if absT.diagonal().max() >= lam:
        raise ValueError("lam must exceed the slowest closed-loop pole")
    d = np.zeros(n)
    d[n - 1] = 1.0
    for i in range(n - 2, -1, -1):
        d[i] = max(absT[i, i + 1:] @ d[i + 1:] / (lam - absT[i, i]), 1e-8)
    return d / d.max()


def build_candidate(A, B, K, alpha, lam, w_frac):
    T, Z = scipy.linalg.schur(A - B @ K, output="real")
    d = balanced_weights(T, lam)
    G = alpha * Z @ np.diag(d)
    normals = np.linalg.inv(G).T
    normals = normals / np.linalg.norm(normals, axis=0, keepdims=True)
    half_widths = np.abs(normals.T @ G).sum(axis=1)
    W = Zonotope(np.zeros(6), normals * (w_frac * half_widths))
    Sr = Zonotope(np.zeros(6), G)
    box = HPolytope(np.vstack([np.eye(2), -np.eye(2)]),
                    np.full(4, ACTION_BOX))
    return QuadrotorConfig(A=A, B=B, W=W, Sr=Sr, action_polytope=box,
                           goal_state=np.zeros(6), max_steps=400)


def verify(cfg, min_radius):
    """Smallest Chebyshev radius of the feasible action set over vertices."""
    worst = np.inf
    G = cfg.Sr.generators
    for signs in itertools.product((-1.0, 1.0), repeat=G.shape[1]):
        vertex = cfg.Sr.center + G @ np.array(signs)
        try:
            cset = quadrotor_feasible_set(cfg, vertex)
            _, radius = chebyshev_ball(cset)
        except InvariantViolationError as exc:
            return -np.inf, str(exc)
        worst = min(worst, radius)
        if worst < min_radius:
            break
    return worst, None


def rollout_check(cfg, n_steps, seed):
    rng = np.random.default_rng(seed)
    env = QuadrotorEnv(cfg, rng)
    base = DiagGaussian(np.zeros(2), 0.25 * cfg.action_range)
    state = env.reset()
    for _ in range(n_steps):
        cset = env.feasible_set()
        action = hybrid_sample(base, cset, rng).value
        result = env.step(action)
        state = result.next_state
        if not cfg.Sr.contains(state, tol=1e-9):
            return False
        if result.done:
            state = env.reset()
    return True


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=pathlib.Path,
                        default=pathlib.Path(__file__).resolve().parent.parent
                        / "src" / "truncpol" / "configs"
                        / "quadrotor_default.json")
    parser.add_argument("--rollout-steps", type=int, default=2000)
    parser.add_argument("--seed", type=int, default=20260823)
    args = parser.parse_args()

    A, B = plant()
    K = scipy.signal.place_poles(A, B, POLES).gain_matrix

    candidates = []
    for alpha in (0.2, 0.1, 0.05):
        for lam in (0.85, 0.90, 0.95):
            for w_frac in (0.05, 0.02):
                cfg = build_candidate(A, B, K, alpha, lam, w_frac)
                radius, err = verify(cfg, min_radius=0.0)
                tag = f"alpha={alpha} lam={lam} w_frac={w_frac}"
                if err is not None:
                    print(f"{tag}: {err}")
                    continue
                print(f"{tag}: worst vertex radius {radius:.3e}")
                candidates.append((w_frac, radius, cfg, tag))

    # prefer the widest certified disturbance set once the action margin
    # is comfortable; raw argmax on radius would always favor a tiny W
    usable = [c for c in candidates if c[1] >= 1e-3]
    if not usable:
        raise SystemExit("no candidate certifies a usable action margin")
    w_frac, radius, cfg, tag = max(usable, key=lambda c: (c[0], c[1]))
    print(f"selected {tag} (worst vertex radius {radius:.3e})")

    if not rollout_check(cfg, args.rollout_steps, args.seed):
        raise SystemExit("closed-loop rollout left the invariant set")
    print(f"rollout of {args.rollout_steps} steps stayed inside Sr")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_text(json.dumps(cfg.to_json(), indent=1) + "\n")
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
