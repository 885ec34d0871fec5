"""Acceptance gate: thirteen numbered end-to-end checks with hard tolerances.

Each test prints exactly one PASS/FAIL line to the terminal (bypassing
capture) before asserting, so a red run still shows the full scoreboard.
"""

import time

import numpy as np
import pytest

from hdglue import (
    ClassRegistry,
    ConsensusAccumulator,
    EncoderConfig,
    GlueModel,
    HILModel,
    OnlineConfig,
    Permutation,
    SeedContext,
    SignalEncoder,
    fleet_correct,
    hamming,
    majority,
    nearest_centroid_oracle,
    probe,
    random_hv,
    round_weight,
    session_run,
    two_cluster_spec,
)
from hdglue.data_io import default_spec, model_from_bytes, model_to_bytes, specialist_specs
from hdglue.encoding import LevelTable
from hdglue.hv import Hypervector, num_words, tail_mask
from hdglue.online import staged_schedule

DIM = 10_000


def announce(capsys, num, label, ok, detail):
    with capsys.disabled():
        print(f"criterion {num:2d} {'PASS' if ok else 'FAIL'}  {label}  [{detail}]")
    assert ok, f"criterion {num} ({label}): {detail}"


def rand_words(rng, count, dim=DIM):
    words = rng.integers(0, 2**64, size=(count, num_words(dim)), dtype=np.uint64)
    words[:, -1] &= np.uint64(tail_mask(dim))
    return words


def wrap(words, dim=DIM):
    return [Hypervector.from_words(dim, w) for w in words]


# -- shared fixtures (training dominates, so crews are cached per dim) -------

_CREWS = {}


def train_member(spec, registry, dim, n_train=60):
    cfg = EncoderConfig(length=spec.length, dim=dim, num_levels=65, seed=spec.seed)
    rows = np.vstack([spec.batch("train", c, range(n_train)) for c in spec.classes])
    labels = [c for c in spec.classes for _ in range(n_train)]
    return HILModel.train(rows, labels, cfg, registry)


def crew(seed, dim):
    key = (seed, dim)
    if key not in _CREWS:
        specs = specialist_specs(seed=seed)
        registry = ClassRegistry(seed, dim)
        members = [train_member(s, registry, dim) for s in specs]
        _CREWS[key] = (specs, members)
    return _CREWS[key]


def union_rows(specs, n_test=40, classes=range(10)):
    rows = {f"m{i}": np.vstack([s.batch("test", c, range(n_test)) for c in classes])
            for i, s in enumerate(specs)}
    labels = np.asarray([c for c in classes for _ in range(n_test)])
    return rows, labels


def fused_accuracy(glue, rows, labels):
    picks, _, _ = glue.predict_batch({n: rows[n] for n in glue.active_names()})
    return float((picks == labels).mean())


def standalone_accuracy(model, rows, labels):
    picks, _, _ = model.predict_batch(rows)
    return float((picks == labels).mean())


# ----------------------------------------------------------------------------


def test_c01_binding_and_permutation_algebra(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    cases = 10_000
    a = wrap(rand_words(rng, cases))
    b = wrap(rand_words(rng, cases))
    c = wrap(rand_words(rng, cases))
    perm = Permutation(SeedContext(0, "permutation", 0), DIM)
    powers = rng.integers(-37, 38, size=cases)
    powers[::1000] = rng.integers(-2 * DIM, 2 * DIM, size=10)  # a few huge powers
    zero = Hypervector.zero(DIM)
    failures = 0
    for i in range(cases):
        ab = a[i] ^ b[i]
        pa, pb = perm.apply(a[i]), perm.apply(b[i])
        n = int(powers[i])
        ok = (
            (ab ^ c[i]) == (a[i] ^ (b[i] ^ c[i]))          # associative
            and ab == (b[i] ^ a[i])                         # commutative
            and (ab ^ b[i]) == a[i]                         # self-inverse unbind
            and (a[i] ^ a[i]) == zero
            and perm.apply(ab) == (pa ^ pb)                  # distributes over XOR
            and hamming(ab, b[i] ^ c[i]) == hamming(a[i], c[i])   # XOR isometry
            and hamming(pa, pb) == hamming(a[i], b[i])      # permutation isometry
            and perm.apply(perm.apply(a[i], n), -n) == a[i]  # round trip at any power
        )
        failures += not ok
    elapsed = time.perf_counter() - t0
    announce(capsys, 1, "binding/permutation algebra, 10k cases",
             failures == 0 and elapsed < 5.0,
             f"failures={failures}, {elapsed:.2f}s")


def test_c02_random_pairs_are_near_orthogonal(capsys):
    t0 = time.perf_counter()
    dists = np.empty(1000)
    for i in range(1000):
        x = random_hv(SeedContext(7, "acceptance-left", i), DIM)
        y = random_hv(SeedContext(7, "acceptance-right", i), DIM)
        dists[i] = hamming(x, y) / DIM
    elapsed = time.perf_counter() - t0
    mean = float(dists.mean())
    lo, hi = float(dists.min()), float(dists.max())
    announce(capsys, 2, "1000 random pairs near-orthogonal",
             0.495 <= mean <= 0.505 and lo >= 0.45 and hi <= 0.55 and elapsed < 1.0,
             f"mean={mean:.4f}, range=[{lo:.3f}, {hi:.3f}], {elapsed:.2f}s")


def test_c03_bound_pair_records_recover_their_fields(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    floors = {3: 0.999, 10: 0.999, 100: 0.99}
    rates = {}
    ok = True
    for size, floor in floors.items():
        tiebreak = random_hv(SeedContext(11, "tiebreak", size), DIM)
        hits = 0
        for trial in range(1000):
            words = rand_words(rng, 2 * size)
            keys, fields = wrap(words[:size]), wrap(words[size:])
            record = majority([k ^ f for k, f in zip(keys, fields)], tiebreak)
            target = int(rng.integers(size))
            noisy = record ^ keys[target]
            dists = [hamming(noisy, f) for f in fields]
            nearest = int(np.argmin(dists))
            picked, _ = probe(record, keys[target], fields)
            if picked != nearest:  # library search must agree with the oracle
                ok = False
            hits += nearest == target
        rates[size] = hits / 1000
        ok = ok and rates[size] >= floor
    elapsed = time.perf_counter() - t0
    announce(capsys, 3, "record recovery at 3/10/100 bound pairs",
             ok and elapsed < 30.0,
             ", ".join(f"{s}: {r:.3f}" for s, r in rates.items()) + f", {elapsed:.1f}s")


def test_c04_level_chain_distances_are_exact_partial_sums(capsys):
    t0 = time.perf_counter()
    ok = True
    for levels in (2, 17, 65):
        t = LevelTable(DIM, levels, SeedContext(0, "level-acceptance", levels))
        for i in range(levels):
            prev = -1
            for j in range(i + 1, levels):
                d = hamming(t.levels[i], t.levels[j])
                ok = ok and d == sum(t.flip_schedule[i:j]) == t.distance(i, j)
                ok = ok and d > prev  # strictly monotone in |i - j|
                prev = d
    elapsed = time.perf_counter() - t0
    announce(capsys, 4, "level spacing exact and monotone (2/17/65 levels)",
             ok and elapsed < 1.0, f"{elapsed:.2f}s")


def test_c05_weighted_consensus_equals_per_bit_tally(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(5)
    dim = 256
    ok = True
    for case in range(1000):
        size = int(rng.integers(1, 102))
        words = rand_words(rng, size, dim)
        weights = rng.integers(1, 5_000_000, size=size)  # millionths
        ctx = SeedContext(17, "tiebreak", case)
        acc = ConsensusAccumulator(dim, ctx)
        tally = np.zeros(dim, dtype=np.int64)
        for w, weight in zip(wrap(words, dim), weights):
            acc.add(w, int(weight) / 1_000_000)
            tally += int(weight) * (2 * w.bits().astype(np.int64) - 1)
        tie = random_hv(ctx, dim).bits()
        expected = Hypervector.from_bits(
            np.where(tally > 0, 1, np.where(tally < 0, 0, tie)).astype(np.uint8))
        ok = ok and acc.finalize() == expected
    elapsed = time.perf_counter() - t0
    announce(capsys, 5, "weighted consensus vs brute-force tally, 1000 multisets",
             ok and elapsed < 10.0, f"{elapsed:.2f}s")


def test_c06_training_order_never_matters(capsys):
    t0 = time.perf_counter()
    dim = 2048
    spec = default_spec(0, signature_size=32, noise=1.5)
    registry = ClassRegistry(0, dim)
    cfg = EncoderConfig(length=spec.length, dim=dim, num_levels=65, seed=0)
    rows = np.vstack([spec.batch("train", c, range(20)) for c in spec.classes])
    labels = np.asarray([c for c in spec.classes for _ in range(20)])
    baseline = HILModel.train(rows, labels.tolist(), cfg, registry)
    rng = np.random.default_rng(6)

    shuffles_ok = True
    for _ in range(3):
        order = rng.permutation(len(labels))
        other = HILModel.train(rows[order], labels[order].tolist(), cfg, registry)
        shuffles_ok = shuffles_ok and other.state_digest() == baseline.state_digest()

    splits_ok = True
    for _ in range(3):
        cuts = sorted(rng.integers(1, len(labels), size=2))
        parts = np.split(np.arange(len(labels)), cuts)
        grown = HILModel.train(rows[parts[0]], labels[parts[0]].tolist(), cfg, registry)
        for part in parts[1:]:
            grown.update(rows[part], labels[part].tolist())
        splits_ok = splits_ok and grown.state_digest() == baseline.state_digest()

    config = OnlineConfig(dim=1024, num_levels=17, seed=0, test_per_class=20)
    schedule = staged_schedule(specialist_specs(0), classes_per_stage=2, observe_per_class=15)
    digests = []
    session = session_run([], config)
    for event in schedule:
        session.apply(event)
        digests.append(session.state_digest())
    prefix_ok = True
    for cut in rng.integers(1, len(schedule) + 1, size=3):
        replay = session_run(schedule[:cut], config)
        prefix_ok = prefix_ok and replay.state_digest() == digests[cut - 1]

    elapsed = time.perf_counter() - t0
    announce(capsys, 6, "shuffle/split/prefix runs bit-identical",
             shuffles_ok and splits_ok and prefix_ok,
             f"shuffles={shuffles_ok}, splits={splits_ok}, prefixes={prefix_ok}, {elapsed:.1f}s")


def test_c07_two_class_task_tracks_the_centroid_oracle(capsys):
    t0 = time.perf_counter()
    spec = two_cluster_spec(seed=0, length=32, scale=2.0, noise=1.0)
    train = spec.dataset("train", 100)
    test = spec.dataset("test", 500)
    registry = ClassRegistry(0, DIM)
    cfg = EncoderConfig(length=32, dim=DIM, num_levels=65, seed=0)
    model = HILModel.train(train.values, train.labels.tolist(), cfg, registry)
    acc = standalone_accuracy(model, test.values, test.labels)
    oracle_acc, _ = nearest_centroid_oracle(train, test)
    elapsed = time.perf_counter() - t0
    announce(capsys, 7, "two-class accuracy >= 95% and within 4pts of oracle",
             acc >= 0.95 and acc >= oracle_acc - 0.04 and elapsed < 30.0,
             f"model={acc:.3f}, oracle={oracle_acc:.3f}, {elapsed:.1f}s")


def test_c08_fusing_five_specialists_beats_every_one_of_them(capsys):
    t0 = time.perf_counter()
    fused, best, mean = [], [], []
    for seed in (0, 1, 2):
        specs, members = crew(seed, DIM)
        rows, labels = union_rows(specs)
        glue = GlueModel.build(members, seed=seed)
        fused.append(fused_accuracy(glue, rows, labels))
        singles = [standalone_accuracy(m, rows[f"m{i}"], labels)
                   for i, m in enumerate(members)]
        best.append(max(singles))
        mean.append(float(np.mean(singles)))
    fused_avg, best_avg, mean_avg = map(lambda v: float(np.mean(v)), (fused, best, mean))
    elapsed = time.perf_counter() - t0
    announce(capsys, 8, "fused >= best individual - 1pt and >= mean + 2pts (3 seeds)",
             fused_avg >= best_avg - 0.01 and fused_avg >= mean_avg + 0.02
             and elapsed < 120.0,
             f"fused={fused_avg:.3f}, best={best_avg:.3f}, mean={mean_avg:.3f}, {elapsed:.1f}s")


def test_c09_losing_any_single_member_degrades_gracefully(capsys):
    t0 = time.perf_counter()
    specs, members = crew(0, DIM)
    rows, labels = union_rows(specs)
    glue = GlueModel.build(members, seed=0)
    intact = glue.state_digest()
    singles = {f"m{i}": standalone_accuracy(m, rows[f"m{i}"], labels)
               for i, m in enumerate(members)}
    worst_gap, restored = 0.0, True
    for i, name in enumerate(list(glue.active_names())):
        glue.remove_model(name)
        remaining_best = max(v for n, v in singles.items() if n != name)
        gap = remaining_best - fused_accuracy(glue, rows, labels)
        worst_gap = max(worst_gap, gap)
        glue.add_model(members[i], name=name)
        restored = restored and glue.state_digest() == intact
    elapsed = time.perf_counter() - t0
    announce(capsys, 9, "any single drop costs <= 5pts; re-add restores bits",
             worst_gap <= 0.05 and restored and elapsed < 120.0,
             f"worst gap={worst_gap:+.3f}, restored={restored}, {elapsed:.1f}s")


def test_c10_corrective_rounds_arithmetic_and_total_recall(capsys):
    t0 = time.perf_counter()
    arithmetic = (round_weight(1.0, 0.76) == 760_000
                  and round_weight(0.24, 0.70) == 168_000)
    spec = default_spec(0, signature_size=32, noise=2.2)
    train = spec.dataset("train", 100)  # 10 classes x 100 = 1000 examples
    cfg = EncoderConfig(length=spec.length, dim=4096, num_levels=65, seed=0)
    fleet = fleet_correct(train.values, train.labels.tolist(), cfg,
                          ClassRegistry(0, 4096), residual_memory=True)
    accs = [r.fleet_accuracy for r in fleet.rounds]
    nondecreasing = all(b >= a for a, b in zip(accs, accs[1:]))
    picks, _ = fleet.predict_batch(train.values)
    recall = float((picks == train.labels).mean())
    elapsed = time.perf_counter() - t0
    announce(capsys, 10, "round-weight arithmetic, monotone rounds, total recall",
             arithmetic and nondecreasing and recall == 1.0 and elapsed < 60.0,
             f"arith={arithmetic}, rounds={[f'{a:.3f}' for a in accs]}, "
             f"recall={recall:.3f}, {elapsed:.1f}s")


def test_c11_more_dimensions_never_cost_accuracy(capsys):
    t0 = time.perf_counter()
    small, large = [], []
    for seed in (0, 1, 2):
        for dim, bucket in ((2000, small), (8000, large)):
            specs, members = crew(seed, dim)
            rows, labels = union_rows(specs)
            bucket.append(fused_accuracy(GlueModel.build(members, seed=seed), rows, labels))
    wins = sum(l >= s for s, l in zip(small, large))
    small_avg, large_avg = float(np.mean(small)), float(np.mean(large))
    elapsed = time.perf_counter() - t0
    announce(capsys, 11, "dim 8000 >= dim 2000 - 1pt, wins 2 of 3 seeds",
             large_avg >= small_avg - 0.01 and wins >= 2 and elapsed < 180.0,
             f"2000={small_avg:.3f}, 8000={large_avg:.3f}, wins={wins}/3, {elapsed:.1f}s")


def test_c12_encode_and_fused_query_meet_the_latency_floor(capsys):
    rng = np.random.default_rng(12)
    encoder = SignalEncoder(EncoderConfig(length=256, dim=DIM, num_levels=65, seed=0))
    batch = rng.standard_normal((10_000, 256)).astype(np.float32)
    encoder.encode_batch(batch[:8])  # warm the kernels
    t0 = time.perf_counter()
    encoder.encode_batch(batch)
    encode_ms = (time.perf_counter() - t0) / len(batch) * 1000

    specs, members = crew(0, DIM)
    rows, labels = union_rows(specs, n_test=40)
    glue = GlueModel.build(members, seed=0)
    queries = {n: rows[n] for n in glue.active_names()}
    glue.predict_batch({n: q[:4] for n, q in queries.items()})  # warm
    t0 = time.perf_counter()
    glue.predict_batch(queries)
    query_ms = (time.perf_counter() - t0) / len(labels) * 1000
    announce(capsys, 12, "encode <= 1 ms, 5-member fused query <= 5 ms",
             encode_ms <= 1.0 and query_ms <= 5.0,
             f"encode={encode_ms:.3f} ms, query={query_ms:.3f} ms")


def test_c13_round_trips_are_byte_identical_and_predict_identically(capsys, tmp_path):
    t0 = time.perf_counter()
    from hdglue import load_dataset_binary, save_dataset_binary

    spec = default_spec(0, signature_size=32, noise=2.0)
    data = spec.dataset("train", 10)
    path = tmp_path / "roundtrip.hdge"
    save_dataset_binary(data, str(path))
    first = path.read_bytes()
    save_dataset_binary(load_dataset_binary(str(path)), str(path))
    data_ok = path.read_bytes() == first

    dim = 1024
    specs, members = crew(0, dim)
    glue = GlueModel.build(members, seed=0)
    models_ok, predict_ok = True, True
    rng = np.random.default_rng(13)
    queries = rng.standard_normal((100, specs[0].length)).astype(np.float32)
    for model in (members[0], glue):
        blob = model_to_bytes(model)
        restored = model_from_bytes(blob)
        models_ok = models_ok and model_to_bytes(restored) == blob
        if isinstance(model, GlueModel):
            args = ({n: queries for n in model.active_names()},)
        else:
            args = (queries,)
        a_picks, a_scores, _ = model.predict_batch(*args)
        b_picks, b_scores, _ = restored.predict_batch(*args)
        predict_ok = (predict_ok and np.array_equal(a_picks, b_picks)
                      and np.array_equal(a_scores, b_scores))
    elapsed = time.perf_counter() - t0
    announce(capsys, 13, "dataset/model round trips byte-identical, same predictions",
             data_ok and models_ok and predict_ok,
             f"data={data_ok}, models={models_ok}, predictions={predict_ok}, {elapsed:.1f}s")
