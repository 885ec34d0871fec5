#!/usr/bin/env python3
"""Sweep hypervector width and chart fused accuracy against query latency.

Rebuilds the five-specialist ensemble at each width and prints one row
per dimension: accuracy per seed, the mean, and amortized per-query time.
"""

import argparse
import sys
import time

import numpy as np

from hdglue import ClassRegistry, EncoderConfig, GlueModel, HILModel
from hdglue.data_io import specialist_specs


def fused_run(seed, dim, n_train, n_test, levels):
    specs = specialist_specs(seed=seed)
    registry = ClassRegistry(seed, dim)
    members = []
    for spec in specs:
        cfg = EncoderConfig(length=spec.length, dim=dim, num_levels=levels, seed=spec.seed)
        rows = np.vstack([spec.batch("train", c, range(n_train)) for c in spec.classes])
        labels = [c for c in spec.classes for _ in range(n_train)]
        members.append(HILModel.train(rows, labels, cfg, registry))
    glue = GlueModel.build(members, seed=seed)
    classes = sorted({c for s in specs for c in s.classes})
    queries = {f"m{i}": np.vstack([s.batch("test", c, range(n_test)) for c in classes])
               for i, s in enumerate(specs)}
    labels = np.asarray([c for c in classes for _ in range(n_test)])
    t0 = time.perf_counter()
    picks, _, _ = glue.predict_batch(queries)
    ms_per_query = (time.perf_counter() - t0) / len(labels) * 1000
    return float((picks == labels).mean()), ms_per_query


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dims", type=str, default="2000,4000,8000,12000")
    ap.add_argument("--seeds", type=str, default="0,1,2")
    ap.add_argument("--levels", type=int, default=65)
    ap.add_argument("--train", type=int, default=60)
    ap.add_argument("--test", type=int, default=40)
    args = ap.parse_args(argv)

    dims = [int(d) for d in args.dims.split(",")]
    seeds = [int(s) for s in args.seeds.split(",")]
    header = f"{'dim':>7}" + "".join(f"{f'seed {s}':>9}" for s in seeds)
    print(header + f"{'mean':>9}{'ms/query':>10}")
    for dim in dims:
        accs, times = [], []
        for seed in seeds:
            acc, ms = fused_run(seed, dim, args.train, args.test, args.levels)
            accs.append(acc)
            times.append(ms)
        row = f"{dim:>7}" + "".join(f"{a:>9.3f}" for a in accs)
        print(row + f"{np.mean(accs):>9.3f}{np.mean(times):>10.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
