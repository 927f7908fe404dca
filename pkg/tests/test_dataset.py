"""Benchmark instance recipe, mass stratification, and JSONL round trips."""

from dataclasses import replace

import numpy as np
import pytest

import truncpol.dataset as ds
from truncpol.geometry import HPolytope, chebyshev_center
from truncpol.oracle import OracleEstimate


def _unit_rows_present(poly: HPolytope, d: int) -> bool:
    eye = np.vstack([np.eye(d), -np.eye(d)])
    found = 0
    for row, off in zip(poly.normals, poly.offsets):
        if off == 1.0 and any(np.array_equal(row, e) for e in eye):
            found += 1
    return found == 2 * d


# ---------------------------------------------------------------------------
# candidate recipe


@pytest.mark.parametrize("dim", [2, 4, 6])
def test_candidate_recipe_invariants(dim):
    for idx in range(8):
        inst = ds.make_candidate(99, dim, idx)
        assert inst.dim == dim
        assert _unit_rows_present(inst.polytope, dim)
        n_extra = inst.polytope.normals.shape[0] - 2 * dim
        assert dim <= n_extra <= 4 * dim
        extra = inst.polytope.normals[:n_extra]
        assert np.allclose(np.linalg.norm(extra, axis=1), 1.0)
        assert ((inst.sigma >= 0.1) & (inst.sigma <= 1.0)).all()
        shift = inst.mu - chebyshev_center(inst.polytope)
        assert ((shift >= 0.0) & (shift <= 0.5)).all()
        assert inst.oracle_z is None and inst.mass_bin == -1


def test_candidate_deterministic_per_key():
    a = ds.make_candidate(7, 3, 11)
    b = ds.make_candidate(7, 3, 11)
    c = ds.make_candidate(7, 3, 12)
    assert ds.instances_equal(a, b)
    assert not ds.instances_equal(a, c)


# ---------------------------------------------------------------------------
# screening and bins


def big_box_instance(dim=2, mu_shift=0.0):
    d = dim
    poly = HPolytope(np.vstack([np.eye(d), -np.eye(d)]), np.full(2 * d, 8.0))
    return ds.DatasetInstance(0, d, poly, np.full(d, mu_shift), np.ones(d),
                              None, screen_log10_z=float("nan"), mass_bin=-1)


def test_screen_full_mass_lands_in_top_bin():
    inst = ds._screen(big_box_instance(), seed=5)
    assert inst.mass_bin == ds.N_BINS - 1
    assert -0.01 < inst.screen_log10_z <= 0.0


def test_screen_vanishing_mass_is_rejected():
    inst = ds._screen(big_box_instance(mu_shift=60.0), seed=5)
    assert inst.mass_bin == -1
    assert inst.screen_log10_z < ds.BIN_EDGES_LOG10[0]


def test_bin_edges_are_five_unit_decades():
    assert ds.N_BINS == 5
    assert np.allclose(np.diff(ds.BIN_EDGES_LOG10), 1.0)
    assert ds.BIN_EDGES_LOG10[0] == -5.0


def test_oracle_n_grows_with_dimension():
    assert ds.oracle_n_for_dim(2) == ds.oracle_n_for_dim(4) == 10_000_000
    assert ds.oracle_n_for_dim(5) == ds.oracle_n_for_dim(6) == 40_000_000


# ---------------------------------------------------------------------------
# stratified selection


def _dummy(idx, mass_bin):
    return replace(ds.make_candidate(1, 2, idx), mass_bin=mass_bin)


def test_stratified_pick_spreads_across_bins():
    by_bin = {0: [_dummy(0, 0), _dummy(1, 0), _dummy(2, 0)],
              1: [_dummy(3, 1)],
              2: []}
    picked = ds._stratified_pick(by_bin, want=3)
    assert [p.id for p in picked] == [0, 1, 3]


def test_stratified_pick_caps_at_available():
    by_bin = {0: [_dummy(0, 0)], 3: [_dummy(1, 3)]}
    picked = ds._stratified_pick(by_bin, want=10)
    assert [p.id for p in picked] == [0, 1]


def test_stratified_pick_output_sorted_by_id():
    by_bin = {0: [_dummy(5, 0)], 4: [_dummy(2, 4)]}
    assert [p.id for p in ds._stratified_pick(by_bin, want=2)] == [2, 5]


# ---------------------------------------------------------------------------
# generation


def test_generate_renumbers_ids_and_respects_dims():
    insts, _ = ds.generate(17, [2, 3], 4, workers=1, with_oracle=False)
    assert [i.id for i in insts] == list(range(len(insts)))
    assert {i.dim for i in insts} == {2, 3}
    assert all(0 <= i.mass_bin < ds.N_BINS for i in insts)


def test_generate_deterministic():
    a, wa = ds.generate(23, [2], 4, workers=1, with_oracle=False)
    b, wb = ds.generate(23, [2], 4, workers=1, with_oracle=False)
    assert len(a) == len(b) and wa == wb
    assert all(ds.instances_equal(x, y) for x, y in zip(a, b))


def test_generate_warns_on_underfull_bins():
    # a handful of candidates cannot cover the 1e-5..1e-4 decade
    _, warnings = ds.generate(31, [2], 4, workers=1, with_oracle=False)
    for w in warnings:
        assert w["type"] == "warning"
        assert w["dim"] == 2
        assert 0 <= w["mass_bin"] < ds.N_BINS
        assert w["have"] < w["want"] or w["want"] == 0
    assert warnings, "tiny runs should leave at least one bin underfull"


# ---------------------------------------------------------------------------
# serialization


def test_instance_round_trip_without_oracle():
    inst = ds.make_candidate(3, 4, 2)
    again = ds.DatasetInstance.from_json(inst.to_json())
    assert ds.instances_equal(inst, again)


def test_instance_round_trip_with_oracle():
    inst = replace(ds.make_candidate(3, 2, 0),
                   oracle_z=OracleEstimate(0.25, 1.5e-4, 1000, 77),
                   screen_log10_z=-0.61, mass_bin=4)
    again = ds.DatasetInstance.from_json(inst.to_json())
    assert ds.instances_equal(inst, again)


def test_save_load_round_trip(tmp_path):
    insts, warns = ds.generate(41, [2], 3, workers=1, with_oracle=False)
    header = ds.header_record(41, [2], 3, warns)
    path = tmp_path / "d.jsonl"
    ds.save(path, insts, header, warns)
    header2, loaded = ds.load(path)
    assert header2["seed"] == 41 and header2["per_dim"] == 3
    assert header2["bin_edges_log10"] == list(ds.BIN_EDGES_LOG10)
    assert header2["warnings"] == warns
    assert len(loaded) == len(insts)
    assert all(ds.instances_equal(x, y) for x, y in zip(insts, loaded))


def test_load_rejects_unknown_record(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"type": "mystery"}\n')
    with pytest.raises(ValueError, match="unknown record type"):
        ds.load(path)


# ---------------------------------------------------------------------------
# worker plumbing


def _square(x):
    return x * x


def test_parallel_map_preserves_order():
    items = list(range(24))
    assert ds.parallel_map(_square, items, workers=1) == [x * x for x in items]
    assert ds.parallel_map(_square, items, workers=2) == [x * x for x in items]


def test_default_workers_honors_env(monkeypatch):
    monkeypatch.setenv("TRUNCPOL_THREADS", "3")
    assert ds.default_workers() == 3
    monkeypatch.setenv("TRUNCPOL_THREADS", "0")
    assert ds.default_workers() == 1
