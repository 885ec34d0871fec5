"""Datasets, synthetic signal sources, baselines, and model files.

Two file families live here. Datasets travel as CSV (header
``label,e0,...``) or as a compact binary layout; models travel in a single
container holding a canonical JSON config plus named binary blobs. Both
are written atomically and round-trip byte for byte, with seed-derived
vectors regenerated on load instead of stored.

Synthetic sources model a classifier's penultimate activations: a fixed
per-class mean pattern plus Gaussian noise whose scale can differ per
class. That per-class scale is what makes a source a specialist: sharp
where it was "trained well", noisy elsewhere. Every example is addressed
by (seed, split, class, example id), so two processes regenerate the same
example without coordination.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import struct
import tempfile
from dataclasses import dataclass

import numpy as np

from .bundling import MILLION, ConsensusAccumulator
from .encoding import EncoderConfig
from .errors import DataFormatError, InvalidValueError
from .glue import ErrorFleet, FleetRound, GlueMember, GlueModel
from .hil import ClassRegistry, HILModel
from .hv import Hypervector, SeedContext, random_hv

__all__ = [
    "EmbeddingDataset",
    "SyntheticNetworkSpec",
    "default_spec",
    "load_dataset_binary",
    "load_dataset_csv",
    "load_model",
    "nearest_centroid_oracle",
    "save_dataset_binary",
    "save_dataset_csv",
    "save_model",
    "specialist_specs",
    "two_cluster_spec",
]

DATASET_MAGIC = b"HDGE"
MODEL_MAGIC = b"HDGM"
FORMAT_VERSION = 1

_KIND_CODES = {"hil": 1, "glue": 2, "fleet": 3, "session": 4}
_KIND_NAMES = {v: k for k, v in _KIND_CODES.items()}


def atomic_write_bytes(path: str, data: bytes) -> None:
    """Write via a sibling temp file and rename, so readers never see halves."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


# -- datasets ------------------------------------------------------------


@dataclass
class EmbeddingDataset:
    """Labelled real-valued signal vectors, float32, labels >= 0."""

    values: np.ndarray
    labels: np.ndarray
    provenance: str = ""

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float32)
        self.labels = np.ascontiguousarray(self.labels, dtype=np.int64)
        if self.values.ndim != 2:
            raise InvalidValueError(f"values must be 2-d, got shape {self.values.shape}")
        if self.labels.ndim != 1 or self.labels.shape[0] != self.values.shape[0]:
            raise InvalidValueError("labels must align with value rows")
        if self.labels.size and int(self.labels.min()) < 0:
            raise InvalidValueError("labels must be non-negative")
        if self.labels.size and int(self.labels.max()) >= 1 << 32:
            raise InvalidValueError("labels must fit 32 bits")
        if not np.isfinite(self.values).all():
            bad = int(np.flatnonzero(~np.isfinite(self.values).all(axis=1))[0])
            raise InvalidValueError(f"non-finite value in row {bad}")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def length(self) -> int:
        return self.values.shape[1]

    def class_labels(self) -> list[int]:
        return sorted(set(self.labels.tolist()))

    def rows_for(self, label: int) -> np.ndarray:
        return self.values[self.labels == label]


def save_dataset_csv(ds: EmbeddingDataset, path: str) -> None:
    buf = io.StringIO()
    buf.write("label," + ",".join(f"e{i}" for i in range(ds.length)) + "\n")
    for i in range(len(ds)):
        # %.9g keeps every float32 exactly recoverable.
        row = ",".join(f"{float(v):.9g}" for v in ds.values[i])
        buf.write(f"{int(ds.labels[i])},{row}\n")
    atomic_write_text(path, buf.getvalue())


def load_dataset_csv(path: str) -> EmbeddingDataset:
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().rstrip("\n")
        cols = header.split(",")
        if cols[0] != "label" or any(c != f"e{i}" for i, c in enumerate(cols[1:])):
            raise DataFormatError(f"{path}: bad CSV header {header[:80]!r}")
        d = len(cols) - 1
        if d < 1:
            raise DataFormatError(f"{path}: header declares no value columns")
        values, labels = [], []
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != d + 1:
                raise DataFormatError(f"{path}:{lineno}: expected {d + 1} fields, got {len(parts)}")
            try:
                labels.append(int(parts[0]))
                values.append([float(p) for p in parts[1:]])
            except ValueError as e:
                raise DataFormatError(f"{path}:{lineno}: {e}") from None
            if not all(np.isfinite(values[-1])):
                raise DataFormatError(f"{path}:{lineno}: non-finite value")
    arr = np.asarray(values, dtype=np.float32) if values else np.empty((0, d), dtype=np.float32)
    return EmbeddingDataset(arr, np.asarray(labels, dtype=np.int64), provenance=path)


def save_dataset_binary(ds: EmbeddingDataset, path: str) -> None:
    out = [
        DATASET_MAGIC,
        struct.pack("<H", FORMAT_VERSION),
        struct.pack("<II", len(ds), ds.length),
        ds.values.astype("<f4").tobytes(),
        ds.labels.astype("<u4").tobytes(),
    ]
    atomic_write_bytes(path, b"".join(out))


def load_dataset_binary(path: str) -> EmbeddingDataset:
    with open(path, "rb") as f:
        data = f.read()
    if len(data) < 14 or data[:4] != DATASET_MAGIC:
        raise DataFormatError(f"{path}: not a dataset file")
    (version,) = struct.unpack_from("<H", data, 4)
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    n, d = struct.unpack_from("<II", data, 6)
    need = 14 + n * d * 4 + n * 4
    if len(data) != need:
        raise DataFormatError(f"{path}: expected {need} bytes, found {len(data)}")
    values = np.frombuffer(data, dtype="<f4", count=n * d, offset=14).reshape(n, d)
    labels = np.frombuffer(data, dtype="<u4", count=n, offset=14 + n * d * 4)
    return EmbeddingDataset(values.copy(), labels.astype(np.int64), provenance=path)


# -- synthetic sources ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class SyntheticNetworkSpec:
    """Deterministic signal source imitating one network's output layer."""

    classes: tuple
    length: int
    class_means: np.ndarray  # (len(classes), length) float32
    noise_scale: float
    specialization: tuple = ()  # ((class, scale multiplier), ...)
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))
        means = np.ascontiguousarray(self.class_means, dtype=np.float32)
        if means.shape != (len(self.classes), self.length):
            raise InvalidValueError(
                f"class_means shape {means.shape} vs {(len(self.classes), self.length)}"
            )
        means.setflags(write=False)
        object.__setattr__(self, "class_means", means)
        spec = tuple(sorted((int(c), float(s)) for c, s in dict(self.specialization).items()))
        for c, s in spec:
            if c not in self.classes:
                raise InvalidValueError(f"specialization names unknown class {c}")
            if s <= 0 or not np.isfinite(s):
                raise InvalidValueError(f"noise multiplier for class {c} must be positive")
        object.__setattr__(self, "specialization", spec)
        if not self.classes:
            raise InvalidValueError("class set must not be empty")
        # zero is allowed: a noiseless source emits its class means verbatim
        if self.noise_scale < 0 or not np.isfinite(self.noise_scale):
            raise InvalidValueError("noise_scale must not be negative")

    def sigma_for(self, label: int) -> float:
        return self.noise_scale * dict(self.specialization).get(int(label), 1.0)

    def mean_for(self, label: int) -> np.ndarray:
        try:
            return self.class_means[self.classes.index(int(label))]
        except ValueError:
            raise InvalidValueError(f"class {label} not in this source") from None

    def example(self, split: str, label: int, example_id: int) -> np.ndarray:
        """The one float32 vector addressed by (seed, split, class, id)."""
        mean = self.mean_for(label)
        h = hashlib.blake2b(digest_size=8)
        h.update(struct.pack("<q", self.seed))
        h.update(split.encode("utf-8") + b"\x00")
        h.update(struct.pack("<qq", int(label), int(example_id)))
        rng = np.random.default_rng(int.from_bytes(h.digest(), "little"))
        noise = rng.standard_normal(self.length) * self.sigma_for(label)
        return (mean + noise).astype(np.float32)

    def batch(self, split: str, label: int, ids) -> np.ndarray:
        return np.stack([self.example(split, label, i) for i in ids])

    def dataset(self, split: str, per_class: int, start_id: int = 0) -> EmbeddingDataset:
        """per_class examples of every class, ordered by (class, id)."""
        if per_class < 1:
            raise InvalidValueError("per_class must be positive")
        rows, labels = [], []
        for c in self.classes:
            rows.append(self.batch(split, c, range(start_id, start_id + per_class)))
            labels.extend([c] * per_class)
        return EmbeddingDataset(
            np.vstack(rows), np.asarray(labels, dtype=np.int64),
            provenance=f"synthetic:{self.content_hash()}:{split}",
        )

    def to_json_dict(self) -> dict:
        return {
            "classes": list(self.classes),
            "length": self.length,
            "class_means": [[float(v) for v in row] for row in self.class_means],
            "noise_scale": self.noise_scale,
            "specialization": [[c, s] for c, s in self.specialization],
            "seed": self.seed,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "SyntheticNetworkSpec":
        try:
            return cls(
                classes=tuple(d["classes"]),
                length=int(d["length"]),
                class_means=np.asarray(d["class_means"], dtype=np.float32),
                noise_scale=float(d["noise_scale"]),
                specialization=tuple((int(c), float(s)) for c, s in d["specialization"]),
                seed=int(d["seed"]),
            )
        except (KeyError, TypeError) as e:
            raise DataFormatError(f"bad source spec: {e}") from None

    def content_hash(self) -> str:
        blob = json.dumps(self.to_json_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.blake2b(blob.encode(), digest_size=6).hexdigest()

    def __eq__(self, other):
        if not isinstance(other, SyntheticNetworkSpec):
            return NotImplemented
        return self.to_json_dict() == other.to_json_dict()


def two_cluster_spec(seed: int = 0, length: int = 32, scale: float = 2.0,
                     noise: float = 1.0) -> SyntheticNetworkSpec:
    """Two classes at opposite corners: +scale everywhere vs -scale everywhere."""
    means = np.vstack([np.full(length, scale), np.full(length, -scale)]).astype(np.float32)
    return SyntheticNetworkSpec((0, 1), length, means, noise, (), seed)


def _signature_means(classes, length, signature_size, scale, seed) -> np.ndarray:
    from .hv import HashStream  # local: avoids widening the hv import list above

    means = np.zeros((len(classes), length), dtype=np.float32)
    for row, c in enumerate(classes):
        stream = HashStream(SeedContext(seed, "class-mean", int(c)))
        slots = []
        while len(slots) < signature_size:
            s = stream.below(length)
            if s not in slots:
                slots.append(s)
        for s in slots:
            means[row, s] = scale if stream.below(2) else -scale
    return means


def default_spec(seed: int = 0, n_classes: int = 10, length: int = 32,
                 signature_size: int = 6, scale: float = 2.0,
                 noise: float = 1.0) -> SyntheticNetworkSpec:
    """n classes, each marked by a few signed coordinates on a zero background."""
    if signature_size > length:
        raise InvalidValueError("signature larger than the vector")
    classes = tuple(range(n_classes))
    means = _signature_means(classes, length, signature_size, scale, seed)
    return SyntheticNetworkSpec(classes, length, means, noise, (), seed)


def specialist_specs(seed: int = 0, n_models: int = 5, n_classes: int = 10,
                     length: int = 32, signature_size: int | None = None,
                     scale: float = 2.0, sharp: float = 0.5, dull: float = 3.0,
                     classes_per_model: int = 2) -> list[SyntheticNetworkSpec]:
    """One source per model, sharp on its own slice of classes, noisy elsewhere.

    Model k owns classes [k*cpm, (k+1)*cpm); each model lives in its own
    signal space (its own means), only the class labels are shared.
    signature_size defaults to length: every component carries class signal,
    which keeps per-class margins usable even at the dull noise level.
    """
    if n_models * classes_per_model < n_classes:
        raise InvalidValueError("specialist slices do not cover the classes")
    if signature_size is None:
        signature_size = length
    classes = tuple(range(n_classes))
    specs = []
    for k in range(n_models):
        h = hashlib.blake2b(struct.pack("<qq", seed, k), digest_size=8)
        model_seed = int.from_bytes(h.digest(), "little") >> 1
        own = {c for c in range(k * classes_per_model, (k + 1) * classes_per_model)
               if c < n_classes}
        spec = SyntheticNetworkSpec(
            classes=classes,
            length=length,
            class_means=_signature_means(classes, length, signature_size, scale, model_seed),
            noise_scale=1.0,
            specialization=tuple((c, sharp if c in own else dull) for c in classes),
            seed=model_seed,
        )
        specs.append(spec)
    return specs


def nearest_centroid_oracle(train: EmbeddingDataset, test: EmbeddingDataset):
    """Accuracy and predictions of plain nearest-centroid on raw values."""
    if train.length != test.length:
        raise InvalidValueError("train and test disagree on vector length")
    labels = train.class_labels()
    if not labels:
        raise InvalidValueError("oracle needs training examples")
    centroids = np.stack([train.rows_for(c).mean(axis=0) for c in labels])
    d2 = ((test.values[:, None, :].astype(np.float64)
           - centroids[None, :, :].astype(np.float64)) ** 2).sum(axis=2)
    picks = np.asarray(labels, dtype=np.int64)[np.argmin(d2, axis=1)]
    accuracy = float((picks == test.labels).mean()) if len(test) else 0.0
    return accuracy, picks


# -- model container -----------------------------------------------------


def _canon_json(d: dict) -> bytes:
    return json.dumps(d, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _pack_container(kind: str, config: dict, blobs: dict[str, bytes]) -> bytes:
    cfg = _canon_json(config)
    out = [
        MODEL_MAGIC,
        struct.pack("<HB", FORMAT_VERSION, _KIND_CODES[kind]),
        struct.pack("<I", len(cfg)),
        cfg,
        struct.pack("<I", len(blobs)),
    ]
    for name in sorted(blobs):
        nb = name.encode("utf-8")
        out.append(struct.pack("<H", len(nb)))
        out.append(nb)
        out.append(struct.pack("<Q", len(blobs[name])))
        out.append(blobs[name])
    return b"".join(out)


def _unpack_container(data: bytes, path: str = "<bytes>"):
    if len(data) < 11 or data[:4] != MODEL_MAGIC:
        raise DataFormatError(f"{path}: not a model file")
    version, code = struct.unpack_from("<HB", data, 4)
    if version != FORMAT_VERSION:
        raise DataFormatError(f"{path}: unsupported version {version}")
    if code not in _KIND_NAMES:
        raise DataFormatError(f"{path}: unknown model kind {code}")
    (cfg_len,) = struct.unpack_from("<I", data, 7)
    pos = 11
    if pos + cfg_len > len(data):
        raise DataFormatError(f"{path}: truncated config")
    try:
        config = json.loads(data[pos : pos + cfg_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise DataFormatError(f"{path}: bad config: {e}") from None
    pos += cfg_len
    if pos + 4 > len(data):
        raise DataFormatError(f"{path}: truncated blob table")
    (n_blobs,) = struct.unpack_from("<I", data, pos)
    pos += 4
    blobs = {}
    for _ in range(n_blobs):
        if pos + 2 > len(data):
            raise DataFormatError(f"{path}: truncated blob name")
        (name_len,) = struct.unpack_from("<H", data, pos)
        pos += 2
        name = data[pos : pos + name_len].decode("utf-8")
        pos += name_len
        if pos + 8 > len(data):
            raise DataFormatError(f"{path}: truncated blob header")
        (size,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        if pos + size > len(data):
            raise DataFormatError(f"{path}: blob {name!r} truncated")
        blobs[name] = data[pos : pos + size]
        pos += size
    if pos != len(data):
        raise DataFormatError(f"{path}: {len(data) - pos} trailing bytes")
    return _KIND_NAMES[code], config, blobs


def _encoder_config_dict(cfg: EncoderConfig) -> dict:
    return {"length": cfg.length, "dim": cfg.dim, "num_levels": cfg.num_levels, "seed": cfg.seed}


def _encoder_config_from(d: dict) -> EncoderConfig:
    return EncoderConfig(
        length=int(d["length"]), dim=int(d["dim"]),
        num_levels=int(d["num_levels"]), seed=int(d["seed"]),
    )


def _hil_state(model: HILModel) -> tuple[dict, dict]:
    config = {
        "encoder": _encoder_config_dict(model.config),
        "registry_seed": model.registry.seed,
        "labels": model.labels(),
        "example_counts": {str(k): v for k, v in sorted(model.example_counts.items())},
    }
    blobs = {f"acc/{lab}": model.class_accumulators[lab].state_bytes() for lab in model.labels()}
    blobs["fusion"] = model._fusion.state_bytes()
    return config, blobs


def _restore_acc(blob: bytes, ctx: SeedContext, dim: int) -> ConsensusAccumulator:
    acc = ConsensusAccumulator.from_state_bytes(blob, ctx)
    if acc.dim != dim:
        raise DataFormatError(f"stored state has dim {acc.dim}, expected {dim}")
    return acc


def _hil_restore(config: dict, blobs: dict, registry: ClassRegistry | None = None) -> HILModel:
    enc_cfg = _encoder_config_from(config["encoder"])
    if registry is None:
        registry = ClassRegistry(int(config["registry_seed"]), enc_cfg.dim)
    model = HILModel(enc_cfg, registry)
    for lab in config["labels"]:
        lab = int(lab)
        acc = _restore_acc(
            blobs[f"acc/{lab}"], SeedContext(enc_cfg.seed, "tiebreak-class", lab),
            enc_cfg.dim,
        )
        model.class_accumulators[lab] = acc
        bundle = acc.finalize()
        model.class_bundles[lab] = bundle
        model.example_counts[lab] = int(config["example_counts"][str(lab)])
        model._fusion_terms[lab] = registry.id_for(lab) ^ bundle
    model._fusion = _restore_acc(
        blobs["fusion"], SeedContext(enc_cfg.seed, "tiebreak-fusion", 0), enc_cfg.dim
    )
    if config["labels"]:
        model.classification_vector = model._fusion.finalize()
    return model


def _glue_state(glue: GlueModel) -> tuple[dict, dict]:
    members = []
    blobs = {"fusion": glue._fusion.state_bytes()}
    for name, m in glue.members.items():
        entry = {
            "name": name,
            "index": m.index,
            "weight": m.weight,
            "active": m.active,
            "labels": sorted(m.labels),
            "kind": "fold" if m.hil is None else "hil",
        }
        if m.hil is not None:
            cfg, sub = _hil_state(m.hil)
            entry["hil"] = cfg
            for k, v in sub.items():
                blobs[f"member/{m.index}/{k}"] = v
        else:
            entry["encoder"] = _encoder_config_dict(m.encoder.config)
            blobs[f"member/{m.index}/fold"] = m.fold_acc.state_bytes()
        members.append(entry)
    config = {
        "seed": glue.seed,
        "dim": glue.dim,
        "registry_seed": glue.registry.seed,
        "next_index": glue._next_index,
        "members": members,
    }
    return config, blobs


def _member_blobs(blobs: dict, index: int) -> dict:
    prefix = f"member/{index}/"
    return {k[len(prefix):]: v for k, v in blobs.items() if k.startswith(prefix)}


def _glue_restore(config: dict, blobs: dict, registry: ClassRegistry | None = None) -> GlueModel:
    from .encoding import SignalEncoder

    dim = int(config["dim"])
    if registry is None:
        registry = ClassRegistry(int(config["registry_seed"]), dim)
    glue = GlueModel(registry, seed=int(config["seed"]))
    glue._next_index = int(config["next_index"])
    for entry in config["members"]:
        index = int(entry["index"])
        sub = _member_blobs(blobs, index)
        if entry["kind"] == "hil":
            hil = _hil_restore(entry["hil"], sub, registry)
            if hil.config.dim != dim:
                raise DataFormatError(
                    f"member {entry['name']!r} has dim {hil.config.dim}, expected {dim}")
            encoder = hil.encoder
            vector = hil.classification_vector
            fold_acc = None
        else:
            hil = None
            encoder = SignalEncoder(_encoder_config_from(entry["encoder"]))
            fold_acc = _restore_acc(
                sub["fold"], SeedContext(glue.seed, "tiebreak-fold", index), dim
            )
            vector = fold_acc.finalize()
        member = GlueMember(
            name=entry["name"],
            index=index,
            model_id=random_hv(SeedContext(glue.seed, "model", index), dim),
            encoder=encoder,
            hil=hil,
            vector=vector,
            weight=int(entry["weight"]),
            labels=[int(c) for c in entry["labels"]],
            fold_acc=fold_acc,
        )
        member.active = bool(entry["active"])
        glue.members[entry["name"]] = member
    glue._fusion = _restore_acc(
        blobs["fusion"], SeedContext(glue.seed, "tiebreak-glue", 0), dim
    )
    return glue


def _fleet_state(fleet: ErrorFleet) -> tuple[dict, dict]:
    rounds = []
    blobs = {}
    for i, rnd in enumerate(fleet.rounds):
        cfg, sub = _hil_state(rnd.hil)
        rounds.append({
            "hil": cfg,
            "weight": rnd.weight,
            "subset_size": rnd.subset_size,
            "correct": rnd.correct,
            "fleet_accuracy_millionths": round(rnd.fleet_accuracy * MILLION),
        })
        for k, v in sub.items():
            blobs[f"round/{i}/{k}"] = v
    for j, (q, lab) in enumerate(fleet.memory):
        blobs[f"memory/{j}"] = struct.pack("<q", lab) + q.to_bytes()
    config = {
        "rounds": rounds,
        "memory_size": len(fleet.memory),
        "memory_threshold_millionths": round(fleet.memory_threshold * MILLION),
        "label_order": fleet.label_order,
        "glue_seed": fleet.combined.seed,
    }
    return config, blobs


def _fleet_restore(config: dict, blobs: dict) -> ErrorFleet:
    registry = None
    rounds = []
    for i, entry in enumerate(config["rounds"]):
        prefix = f"round/{i}/"
        sub = {k[len(prefix):]: v for k, v in blobs.items() if k.startswith(prefix)}
        hil = _hil_restore(entry["hil"], sub, registry)
        registry = hil.registry
        rounds.append(FleetRound(
            hil, int(entry["weight"]), int(entry["subset_size"]), int(entry["correct"]),
            int(entry["fleet_accuracy_millionths"]) / MILLION,
        ))
    if not rounds:
        raise DataFormatError("fleet file holds no rounds")
    memory = []
    for j in range(int(config["memory_size"])):
        raw = blobs[f"memory/{j}"]
        (lab,) = struct.unpack_from("<q", raw, 0)
        memory.append((Hypervector.from_bytes(raw[8:]), int(lab)))
    combined = GlueModel.build(
        [r.hil for r in rounds],
        weights=[r.weight / MILLION for r in rounds],
        names=[f"round{i + 1}" for i in range(len(rounds))],
        seed=int(config["glue_seed"]),
    )
    return ErrorFleet(
        rounds, combined, memory,
        int(config["memory_threshold_millionths"]) / MILLION,
        [int(c) for c in config["label_order"]],
    )


def model_to_bytes(obj) -> bytes:
    from .online import OnlineSession

    if isinstance(obj, HILModel):
        config, blobs = _hil_state(obj)
        return _pack_container("hil", config, blobs)
    if isinstance(obj, GlueModel):
        config, blobs = _glue_state(obj)
        return _pack_container("glue", config, blobs)
    if isinstance(obj, ErrorFleet):
        config, blobs = _fleet_state(obj)
        return _pack_container("fleet", config, blobs)
    if isinstance(obj, OnlineSession):
        config, blobs = obj._session_state(_glue_state)
        return _pack_container("session", config, blobs)
    raise InvalidValueError(f"cannot serialize {type(obj).__name__}")


def model_from_bytes(data: bytes, path: str = "<bytes>"):
    kind, config, blobs = _unpack_container(data, path)
    if kind == "hil":
        return _hil_restore(config, blobs)
    if kind == "glue":
        return _glue_restore(config, blobs)
    if kind == "fleet":
        return _fleet_restore(config, blobs)
    from .online import OnlineSession

    return OnlineSession._session_restore(config, blobs, _glue_restore)


def save_model(obj, path: str) -> None:
    atomic_write_bytes(path, model_to_bytes(obj))


def load_model(path: str):
    with open(path, "rb") as f:
        data = f.read()
    return model_from_bytes(data, path)
