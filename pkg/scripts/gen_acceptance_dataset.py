#!/usr/bin/env python3
"""Generate the benchmark dataset in per-dimension chunks.

Each dimension is screened, selected, and oracle-tagged on its own and
written to a part file, so an interrupted run resumes at the next unfinished
dimension instead of starting over.  The final merge renumbers instance ids
exactly the way truncpol.dataset.generate does, so the merged file is
byte-identical to a single-shot generate with the same seed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import replace
from pathlib import Path

from truncpol import dataset


def part_path(parts_dir: Path, dim: int) -> Path:
    return parts_dir / f"d{dim}.jsonl"


def load_part(path: Path, seed: int, per_dim: int):
    """Returns (instances, warnings) if the part file matches, else None."""
    if not path.exists():
        return None
    try:
        header, instances = dataset.load(path)
    except (json.JSONDecodeError, KeyError, ValueError):
        return None
    if header is None or header.get("seed") != seed \
            or header.get("per_dim") != per_dim \
            or len(instances) != header.get("n_instances"):
        return None
    return instances, header.get("warnings", [])


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1729)
    ap.add_argument("--dims", type=int, nargs="+", default=[2, 3, 4, 5, 6])
    ap.add_argument("--per-dim", type=int, default=1200)
    ap.add_argument("--out", default="data/acceptance.jsonl")
    ap.add_argument("--no-oracle", action="store_true",
                    help="skip the large-n oracle pass (screening only)")
    ap.add_argument("--workers", type=int, default=None)
    args = ap.parse_args(argv)

    out = Path(args.out)
    parts_dir = Path(str(out) + ".parts")
    parts_dir.mkdir(parents=True, exist_ok=True)
    workers = dataset.default_workers() if args.workers is None else args.workers

    all_instances = []
    all_warnings = []
    for dim in args.dims:
        path = part_path(parts_dir, dim)
        cached = load_part(path, args.seed, args.per_dim)
        if cached is not None:
            insts, warns = cached
            print(f"dim {dim}: reusing {len(insts)} instances from {path}",
                  flush=True)
        else:
            t0 = time.perf_counter()
            insts, warns = dataset.generate_dim(
                args.seed, dim, args.per_dim, workers=workers,
                with_oracle=not args.no_oracle)
            dt = time.perf_counter() - t0
            header = {"type": "header", "seed": args.seed, "dim": dim,
                      "per_dim": args.per_dim, "n_instances": len(insts)}
            dataset.save(path, insts, header, warns)
            print(f"dim {dim}: generated {len(insts)} instances in {dt:.0f}s "
                  f"({len(warns)} warnings)", flush=True)
        all_instances.extend(insts)
        all_warnings.extend(warns)

    all_instances = [replace(inst, id=i)
                     for i, inst in enumerate(all_instances)]
    header = dataset.header_record(args.seed, args.dims, args.per_dim,
                                   all_warnings)
    dataset.save(out, all_instances, header, all_warnings)
    print(f"wrote {len(all_instances)} instances to {out}", flush=True)
    return 0


if __name__ == "__main__":
    sys.exit(main())
