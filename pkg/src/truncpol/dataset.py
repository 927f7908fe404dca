"""Random polytope benchmark instances with Monte Carlo ground truth.

An instance is the unit box intersected with a handful of random halfspace
cuts, paired with a diagonal Gaussian whose mean sits near the polytope
center.  Instances are screened with a cheap mass estimate and kept so that
the truncated masses cover [1e-5, 1] in five equal log-width bins; the
selected instances then get a large-n oracle estimate.  Everything is
deterministic given the master seed: candidate k of dimension d derives its
own seed, so worker parallelism cannot reorder the stream.
"""

from __future__ import annotations

import functools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .geometry import HPolytope, chebyshev_center, set_from_json, set_to_json
from .oracle import OracleEstimate, mc_z
from .truncnorm import DiagGaussian

SCREEN_N = 100_000
BIN_EDGES_LOG10 = (-5.0, -4.0, -3.0, -2.0, -1.0, 0.0)
N_BINS = 5


def oracle_n_for_dim(d: int) -> int:
    """Large-n sample counts chosen so the oracle noise sits well below the
    approximation errors it judges."""
    return 40_000_000 if d >= 5 else 10_000_000


def default_workers() -> int:
    return max(1, int(os.environ.get("TRUNCPOL_THREADS", os.cpu_count() or 1)))


def parallel_map(fn, items, workers: int):
    """Order-preserving map; workers=1 stays inline for easy debugging."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))


@dataclass(frozen=True, eq=False)
class DatasetInstance:
    id: int
    dim: int
    polytope: HPolytope
    mu: np.ndarray
    sigma: np.ndarray
    oracle_z: OracleEstimate | None
    screen_log10_z: float
    mass_bin: int

    @property
    def base(self) -> DiagGaussian:
        return DiagGaussian(self.mu, self.sigma)

    def to_json(self) -> dict:
        rec = {
            "type": "instance",
            "id": self.id,
            "dim": self.dim,
            "polytope": set_to_json(self.polytope),
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
            "screen_log10_z": self.screen_log10_z,
            "mass_bin": self.mass_bin,
        }
        if self.oracle_z is not None:
            z = self.oracle_z
            rec["oracle_z"] = {"value": z.value, "std_error": z.std_error,
                               "n_samples": z.n_samples, "seed": z.seed}
        return rec

    @classmethod
    def from_json(cls, rec: dict) -> "DatasetInstance":
        oz = rec.get("oracle_z")
        return cls(
            id=rec["id"],
            dim=rec["dim"],
            polytope=set_from_json(rec["polytope"]),
            mu=np.asarray(rec["mu"], float),
            sigma=np.asarray(rec["sigma"], float),
            oracle_z=None if oz is None else OracleEstimate(
                oz["value"], oz["std_error"], oz["n_samples"], oz["seed"]),
            screen_log10_z=rec["screen_log10_z"],
            mass_bin=rec["mass_bin"],
        )


def instances_equal(a: DatasetInstance, b: DatasetInstance) -> bool:
    """Field-wise equality; used to assert lossless serialization."""
    same_screen = (a.screen_log10_z == b.screen_log10_z
                   or (math.isnan(a.screen_log10_z) and math.isnan(b.screen_log10_z)))
    return (a.id == b.id and a.dim == b.dim
            and np.array_equal(a.polytope.normals, b.polytope.normals)
            and np.array_equal(a.polytope.offsets, b.polytope.offsets)
            and np.array_equal(a.mu, b.mu)
            and np.array_equal(a.sigma, b.sigma)
            and a.oracle_z == b.oracle_z
            and same_screen and a.mass_bin == b.mass_bin)


def _candidate_seed(seed: int, dim: int, idx: int, tag: int) -> int:
    return int(np.random.SeedSequence((seed, dim, idx, tag)).generate_state(1)[0])


def make_candidate(seed: int, dim: int, idx: int) -> DatasetInstance:
    """One §-recipe instance: unit box, d..4d random cuts, center-shifted mean."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, dim, idx, 0)))
    n_extra = int(rng.integers(dim, 4 * dim + 1))
    A = rng.standard_normal((n_extra, dim))
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    x0 = rng.uniform(-0.8, 0.8, dim)
    b = A @ x0 + rng.uniform(0.1, 1.0, n_extra)
    eye = np.eye(dim)
    poly = HPolytope(np.vstack([A, eye, -eye]),
                     np.concatenate([b, np.ones(2 * dim)]))
    mu = rng.uniform(0.0, 0.5, dim) + chebyshev_center(poly)
    sigma = rng.uniform(0.1, 1.0, dim)
    return DatasetInstance(idx, dim, poly, mu, sigma, None,
                           screen_log10_z=float("nan"), mass_bin=-1)


def _screen(inst: DatasetInstance, seed: int) -> DatasetInstance:
    est = mc_z(inst.base, inst.polytope, SCREEN_N,
               _candidate_seed(seed, inst.dim, inst.id, 1), dtype=np.float32)
    if est.value <= 0.0:
        return replace(inst, screen_log10_z=-float("inf"), mass_bin=-1)
    log10_z = float(np.log10(est.value))
    if log10_z < BIN_EDGES_LOG10[0]:
        return replace(inst, screen_log10_z=log10_z, mass_bin=-1)
    mass_bin = min(int(log10_z - BIN_EDGES_LOG10[0]), N_BINS - 1)
    return replace(inst, screen_log10_z=log10_z, mass_bin=mass_bin)


def _attach_oracle(inst: DatasetInstance, seed: int, dtype) -> DatasetInstance:
    est = mc_z(inst.base, inst.polytope, oracle_n_for_dim(inst.dim),
               _candidate_seed(seed, inst.dim, inst.id, 2), dtype=dtype)
    return replace(inst, oracle_z=est)


def _stratified_pick(by_bin: dict[int, list[DatasetInstance]], want: int):
    """Spread the selection as evenly over bins as availability allows."""
    alloc = {k: 0 for k in range(N_BINS)}
    total = 0
    while total < want:
        progressed = False
        for k in range(N_BINS):
            if total >= want:
                break
            if alloc[k] < len(by_bin.get(k, [])):
                alloc[k] += 1
                total += 1
                progressed = True
        if not progressed:
            break
    picked = []
    for k in range(N_BINS):
        picked.extend(by_bin.get(k, [])[: alloc[k]])
    picked.sort(key=lambda i: i.id)
    return picked


def generate_dim(seed: int, dim: int, per_dim: int, *, workers: int = 1,
                 oracle_dtype=np.float32, with_oracle: bool = True,
                 batch: int = 64):
    """Screen candidates until the mass bins are covered, then attach oracles.

    Returns (instances, warnings); warnings carry underfull-bin diagnostics
    when the retry cap ran out."""
    need_per_bin = max(1, per_dim // 10)
    cap = 20 * per_dim
    by_bin: dict[int, list[DatasetInstance]] = {k: [] for k in range(N_BINS)}
    total = 0
    idx = 0
    screen = functools.partial(_screen, seed=seed)
    while idx < cap:
        hi = min(idx + batch, cap)
        insts = [make_candidate(seed, dim, i) for i in range(idx, hi)]
        screened = parallel_map(screen, insts, workers)
        done = False
        for inst in screened:
            if inst.mass_bin < 0:
                continue
            by_bin[inst.mass_bin].append(inst)
            total += 1
            if (total >= per_dim
                    and all(len(by_bin[k]) >= need_per_bin for k in range(N_BINS))):
                done = True
                break
        if done:
            break
        idx = hi
    warnings = [{"type": "warning", "dim": dim, "mass_bin": k,
                 "have": len(by_bin[k]), "want": need_per_bin}
                for k in range(N_BINS) if len(by_bin[k]) < need_per_bin]
    picked = _stratified_pick(by_bin, per_dim)
    if with_oracle:
        picked = parallel_map(
            functools.partial(_attach_oracle, seed=seed, dtype=oracle_dtype),
            picked, workers)
    return picked, warnings


def generate(seed: int, dims, per_dim: int, *, workers: int | None = None,
             oracle_dtype=np.float32, with_oracle: bool = True):
    """Full dataset across dimensions; ids are renumbered consecutively."""
    workers = default_workers() if workers is None else workers
    out = []
    warnings = []
    for dim in dims:
        insts, warns = generate_dim(seed, dim, per_dim, workers=workers,
                                    oracle_dtype=oracle_dtype,
                                    with_oracle=with_oracle)
        out.extend(insts)
        warnings.extend(warns)
    out = [replace(inst, id=i) for i, inst in enumerate(out)]
    return out, warnings


def header_record(seed: int, dims, per_dim: int, warnings) -> dict:
    return {
        "type": "header",
        "seed": seed,
        "dims": list(dims),
        "per_dim": per_dim,
        "screen_n": SCREEN_N,
        "oracle_n": {str(d): oracle_n_for_dim(d) for d in dims},
        "bin_edges_log10": list(BIN_EDGES_LOG10),
        "n_warnings": len(warnings),
    }


def save(path, instances, header: dict, warnings=()):
    with open(path, "w") as fh:
        fh.write(json.dumps(header) + "\n")
        for w in warnings:
            fh.write(json.dumps(w) + "\n")
        for inst in instances:
            fh.write(json.dumps(inst.to_json()) + "\n")


def load(path):
    """Returns (header, instances); warning records are folded into header."""
    header = None
    warnings = []
    instances = []
    with open(path) as fh:
        for line in fh:
            rec = json.loads(line)
            kind = rec.get("type")
            if kind == "header":
                header = rec
            elif kind == "warning":
                warnings.append(rec)
            elif kind == "instance":
                instances.append(DatasetInstance.from_json(rec))
            else:
                raise ValueError(f"unknown record type: {kind!r}")
    if header is not None:
        header = dict(header, warnings=warnings)
    return header, instances
