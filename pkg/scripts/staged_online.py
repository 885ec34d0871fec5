#!/usr/bin/env python3
"""Introduce models and classes in stages and track per-class accuracy.

Runs the add/observe/evaluate protocol: each stage registers one new
model with two fresh classes, streams observations to every member, then
scores all classes seen so far. Prints the class-by-stage grid; a class's
row begins at the stage that introduced it.
"""

import argparse
import sys

from hdglue import OnlineConfig, session_run
from hdglue.data_io import specialist_specs
from hdglue.online import history_table_csv, staged_schedule


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=10_000)
    ap.add_argument("--levels", type=int, default=65)
    ap.add_argument("--models", type=int, default=5)
    ap.add_argument("--classes-per-stage", type=int, default=2)
    ap.add_argument("--observe", type=int, default=60, help="observations per class per stage")
    ap.add_argument("--test", type=int, default=40, help="held-out examples per class")
    args = ap.parse_args(argv)

    specs = specialist_specs(seed=args.seed, n_models=args.models,
                             n_classes=args.models * args.classes_per_stage)
    config = OnlineConfig(dim=args.dim, num_levels=args.levels, seed=args.seed,
                          test_per_class=args.test)
    schedule = staged_schedule(specs, classes_per_stage=args.classes_per_stage,
                               observe_per_class=args.observe)
    session = session_run(schedule, config)

    table = [line.split(",") for line in history_table_csv(session.history).splitlines()]
    widths = [max(len(row[i]) for row in table) + 2 for i in range(len(table[0]))]
    for row in table:
        print("".join(cell.rjust(w) for cell, w in zip(row, widths)))
    print(f"\nfinal overall accuracy: {session.history[-1]['overall']:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
