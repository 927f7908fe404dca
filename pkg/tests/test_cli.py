"""Subcommand wiring: files written, determinism, exit codes."""

import csv

import pytest

import truncpol.cli as cli
import truncpol.dataset as ds
from truncpol.verify import CheckResult


@pytest.fixture(autouse=True)
def inline_workers(monkeypatch):
    """Worker processes would not see monkeypatches; keep maps inline."""
    monkeypatch.setenv("TRUNCPOL_THREADS", "1")


@pytest.fixture
def tiny_oracle(monkeypatch):
    """Shrink the oracle so gen-dataset stays test-sized."""
    monkeypatch.setattr(ds, "oracle_n_for_dim", lambda d: 20_000)


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


# ---------------------------------------------------------------------------
# argument handling


def test_parse_dims_range_and_list():
    assert cli._parse_dims("2..6") == [2, 3, 4, 5, 6]
    assert cli._parse_dims("2,4") == [2, 4]


def test_parse_dims_rejects_garbage():
    with pytest.raises(SystemExit) as exc:
        cli.build_parser().parse_args(["gen-dataset", "--dims", "6..2",
                                      "--out", "x"])
    assert exc.value.code == 2


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as exc:
        cli.build_parser().parse_args(["frobnicate"])
    assert exc.value.code == 2


def test_missing_dataset_file_exits_2(tmp_path):
    rc = cli.main(["bench-integral", "--dataset", str(tmp_path / "nope.jsonl"),
                   "--out", str(tmp_path / "o.csv")])
    assert rc == 2


# ---------------------------------------------------------------------------
# gen-dataset


def test_gen_dataset_writes_loadable_file(tmp_path, tiny_oracle):
    out = tmp_path / "d.jsonl"
    rc = cli.main(["gen-dataset", "--dims", "2", "--per-dim", "3",
                   "--seed", "5", "--out", str(out)])
    assert rc == 0
    header, insts = ds.load(out)
    assert header["seed"] == 5 and len(insts) == 3
    assert all(i.oracle_z is not None and i.oracle_z.value > 0 for i in insts)


def test_gen_dataset_deterministic_bytes(tmp_path, tiny_oracle):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    argv = ["gen-dataset", "--dims", "2", "--per-dim", "2", "--seed", "9"]
    assert cli.main(argv + ["--out", str(a)]) == 0
    assert cli.main(argv + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()


# ---------------------------------------------------------------------------
# bench-integral


@pytest.fixture
def small_dataset(tmp_path, tiny_oracle):
    out = tmp_path / "data.jsonl"
    assert cli.main(["gen-dataset", "--dims", "2,3", "--per-dim", "3",
                     "--seed", "5", "--out", str(out)]) == 0
    return out


def test_bench_integral_outputs(tmp_path, small_dataset):
    out = tmp_path / "integral.csv"
    assert cli.main(["bench-integral", "--dataset", str(small_dataset),
                     "--out", str(out)]) == 0
    rows = _read_csv(out)
    assert len(rows) == 6
    for r in rows:
        for method in ("inner", "outer", "combined"):
            assert float(r[f"err_{method}"]) >= 0.0
    summary = _read_csv(cli._summary_path(str(out)))
    assert {r["dim"] for r in summary} == {"2", "3"}
    assert {r["method"] for r in summary} == {"inner", "outer", "combined"}


def test_bench_integral_deterministic_bytes(tmp_path, small_dataset):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert cli.main(["bench-integral", "--dataset", str(small_dataset),
                         "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert (tmp_path / "a_summary.csv").read_bytes() \
        == (tmp_path / "b_summary.csv").read_bytes()


def test_bench_integral_requires_oracles(tmp_path):
    insts, warns = ds.generate(3, [2], 2, workers=1, with_oracle=False)
    path = tmp_path / "bare.jsonl"
    ds.save(path, insts, ds.header_record(3, [2], 2, warns), warns)
    rc = cli.main(["bench-integral", "--dataset", str(path),
                   "--out", str(tmp_path / "o.csv")])
    assert rc == 2


# ---------------------------------------------------------------------------
# bench-sampling


def test_bench_sampling_outputs(tmp_path, small_dataset):
    out = tmp_path / "sampling.csv"
    assert cli.main(["bench-sampling", "--dataset", str(small_dataset),
                     "--n", "4", "--out", str(out)]) == 0
    rows = _read_csv(out)
    assert len(rows) == 18  # 6 instances x 3 samplers
    assert {r["method"] for r in rows} == {"rejection", "rdhr", "hybrid"}
    for r in rows:
        assert float(r["time_median_s"]) > 0.0
        assert r["censored"] in ("0", "1")
    summary = _read_csv(cli._summary_path(str(out)))
    assert len(summary) == 6  # 2 dims x 3 samplers


def test_bench_sampling_non_timing_columns_deterministic(tmp_path,
                                                         small_dataset):
    frames = []
    for name in ("a.csv", "b.csv"):
        out = tmp_path / name
        assert cli.main(["bench-sampling", "--dataset", str(small_dataset),
                         "--n", "3", "--out", str(out)]) == 0
        frames.append(_read_csv(out))
    stable = ("id", "dim", "log10_mass", "method", "censored")
    for ra, rb in zip(*frames):
        for col in stable:
            assert ra[col] == rb[col]


# ---------------------------------------------------------------------------
# verify


def test_verify_exit_codes_and_report(tmp_path, monkeypatch):
    passing = [CheckResult("good", 3, 0.0, 1.0, True)]
    failing = passing + [CheckResult("bad", 3, 9.0, 1.0, False)]

    monkeypatch.setattr(cli, "run_all", lambda seed=None: passing)
    out = tmp_path / "report.txt"
    assert cli.main(["verify", "--out", str(out)]) == 0
    assert "1/1 checks passed" in out.read_text()

    monkeypatch.setattr(cli, "run_all", lambda seed=None: failing)
    assert cli.main(["verify"]) == 1


def test_verify_forwards_seed(monkeypatch):
    seen = []

    def fake_run_all(seed=None):
        seen.append(seed)
        return [CheckResult("x", 1, 0.0, 1.0, True)]

    monkeypatch.setattr(cli, "run_all", fake_run_all)
    assert cli.main(["verify", "--seed", "42"]) == 0
    assert cli.main(["verify"]) == 0
    assert seen == [42, None]


# ---------------------------------------------------------------------------
# train-demo


def test_train_demo_writes_curves_and_summary(tmp_path):
    out = tmp_path / "demo"
    rc = cli.main(["train-demo", "--seeds", "2", "--episodes", "2",
                   "--out", str(out)])
    assert rc == 0
    for flag in ("exact-int", "og-int"):
        rows = _read_csv(out / f"curves_{flag}.csv")
        assert len(rows) == 4  # 2 seeds x 2 episodes
        assert {r["seed"] for r in rows} == {"0", "1"}
    summary = _read_csv(out / "summary.csv")
    assert [r["mode"] for r in summary] == ["exact-int", "og-int"]
    for r in summary:
        assert float(r["ci_low"]) <= float(r["mean_final_return"]) \
            <= float(r["ci_high"])


def test_train_demo_deterministic_bytes(tmp_path):
    outs = [tmp_path / "x", tmp_path / "y"]
    for out in outs:
        assert cli.main(["train-demo", "--mode", "exact-int", "--seeds", "2",
                         "--episodes", "2", "--out", str(out)]) == 0
    for name in ("curves_exact-int.csv", "summary.csv"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()


def test_train_demo_single_mode_flag(tmp_path):
    out = tmp_path / "one"
    assert cli.main(["train-demo", "--mode", "og-poly", "--seeds", "1",
                     "--episodes", "1", "--out", str(out)]) == 0
    assert (out / "curves_og-poly.csv").exists()
    assert len(_read_csv(out / "summary.csv")) == 1
