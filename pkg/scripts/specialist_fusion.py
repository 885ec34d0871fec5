#!/usr/bin/env python3
"""Fuse five narrow specialists and measure what each one contributes.

Trains one model per synthetic source (each source is sharp on two of ten
classes), fuses them, then reports standalone accuracy, the fused score,
and a leave-one-out column showing the cost of losing each member.
"""

import argparse
import sys

import numpy as np

from hdglue import ClassRegistry, EncoderConfig, GlueModel, HILModel
from hdglue.data_io import specialist_specs


def train_members(specs, registry, dim, n_train, levels):
    members = []
    for spec in specs:
        cfg = EncoderConfig(length=spec.length, dim=dim, num_levels=levels, seed=spec.seed)
        rows = np.vstack([spec.batch("train", c, range(n_train)) for c in spec.classes])
        labels = [c for c in spec.classes for _ in range(n_train)]
        members.append(HILModel.train(rows, labels, cfg, registry))
    return members


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--dim", type=int, default=10_000)
    ap.add_argument("--levels", type=int, default=65)
    ap.add_argument("--train", type=int, default=60, help="training examples per class")
    ap.add_argument("--test", type=int, default=40, help="test examples per class")
    args = ap.parse_args(argv)

    specs = specialist_specs(seed=args.seed)
    registry = ClassRegistry(args.seed, args.dim)
    members = train_members(specs, registry, args.dim, args.train, args.levels)
    glue = GlueModel.build(members, seed=args.seed)

    classes = sorted({c for s in specs for c in s.classes})
    rows = {f"m{i}": np.vstack([s.batch("test", c, range(args.test)) for c in classes])
            for i, s in enumerate(specs)}
    labels = np.asarray([c for c in classes for _ in range(args.test)])

    def fused_accuracy():
        picks, _, _ = glue.predict_batch({n: rows[n] for n in glue.active_names()})
        return float((picks == labels).mean())

    full = fused_accuracy()
    print(f"seed {args.seed}, dim {args.dim}, {len(members)} members, "
          f"{len(labels)} union test rows")
    print(f"{'member':<8}{'specialty':<12}{'alone':>8}{'without it':>12}")
    for i, (name, model) in enumerate(zip(glue.active_names(), list(members))):
        picks, _, _ = model.predict_batch(rows[name])
        alone = float((picks == labels).mean())
        glue.remove_model(name)
        dropped = fused_accuracy()
        glue.add_model(model, name=name)
        specialty = ",".join(str(c) for c, mult in specs[i].specialization if mult < 1)
        print(f"{name:<8}{specialty:<12}{alone:>8.3f}{dropped:>12.3f}")
    print(f"{'fused':<20}{full:>8.3f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
