"""Signal-to-hypervector encoding, consensus classifiers, and model fusion."""

from .bundling import ConsensusAccumulator, majority, normalized_weights, to_millionths
from .encoding import (
    EncoderConfig,
    LevelTable,
    PositionBasis,
    SignalEncoder,
    encode_sequence,
    encode_set,
)
from .errors import (
    AccumulatorUnderflowError,
    DataFormatError,
    DimensionMismatchError,
    HDGlueError,
    InvalidDimensionError,
    InvalidValueError,
    TooManyLevelsError,
    UnknownMemberError,
    UntrainedModelError,
)
from .glue import ErrorFleet, GlueModel, fleet_correct, round_weight
from .hil import ClassRegistry, HILModel, probe
from .hv import (
    DEFAULT_DIM,
    Hypervector,
    Permutation,
    SeedContext,
    hamming,
    random_hv,
    similarity,
)
from .online import (
    AddModel,
    Evaluate,
    Observe,
    OnlineConfig,
    OnlineSession,
    session_run,
    staged_schedule,
)
from .data_io import (
    EmbeddingDataset,
    SyntheticNetworkSpec,
    default_spec,
    load_dataset_binary,
    load_dataset_csv,
    load_model,
    nearest_centroid_oracle,
    save_dataset_binary,
    save_dataset_csv,
    save_model,
    specialist_specs,
    two_cluster_spec,
)

__version__ = "0.1.0"

__all__ = [
    "AddModel",
    "AccumulatorUnderflowError",
    "ClassRegistry",
    "ConsensusAccumulator",
    "DEFAULT_DIM",
    "DataFormatError",
    "DimensionMismatchError",
    "EmbeddingDataset",
    "EncoderConfig",
    "ErrorFleet",
    "Evaluate",
    "GlueModel",
    "HDGlueError",
    "HILModel",
    "Hypervector",
    "InvalidDimensionError",
    "InvalidValueError",
    "LevelTable",
    "Observe",
    "OnlineConfig",
    "OnlineSession",
    "Permutation",
    "PositionBasis",
    "SeedContext",
    "SignalEncoder",
    "SyntheticNetworkSpec",
    "TooManyLevelsError",
    "UnknownMemberError",
    "UntrainedModelError",
    "default_spec",
    "encode_sequence",
    "encode_set",
    "fleet_correct",
    "hamming",
    "load_dataset_binary",
    "load_dataset_csv",
    "load_model",
    "majority",
    "nearest_centroid_oracle",
    "normalized_weights",
    "probe",
    "random_hv",
    "round_weight",
    "save_dataset_binary",
    "save_dataset_csv",
    "save_model",
    "session_run",
    "similarity",
    "specialist_specs",
    "staged_schedule",
    "to_millionths",
    "two_cluster_spec",
]
