"""Joint energy-based structured prediction for event triggers, classes, and relations."""

from .corpus import (
    CorpusError,
    CorpusStats,
    Document,
    EventMention,
    LabelSpaces,
    corpus_stats,
    enumerate_pairs,
    load_corpus,
    synthesize_corpus,
    train_test_split_documents,
    write_corpus,
)
from .encoders import (
    EncoderConfig,
    TokenContextEncoder,
    build_vocab,
    encode_mention,
    encode_pair,
    register_backbone,
)
from .energies import LabelSetEnergy, TokenEnergy, minimize_energy, project_to_simplex
from .estimator import JointEventModel
from .losses import (
    LossWeights,
    cross_entropy,
    document_loss,
    hamming_cost,
    joint_loss,
    sentence_loss,
    structured_cost,
    token_loss,
)
from .metrics import (
    MetricsReport,
    ere_regime_eval,
    f1_score,
    format_table,
    micro_prf,
    relation_families,
)
from .model import JointEventNetwork, TaskBatch, build_batch
from .spheres import EventHyperspheres, init_centroids
from .training import (
    REGIMES,
    Checkpoint,
    CheckpointError,
    TrainConfig,
    TrainingDiverged,
    TrainingLog,
    evaluate,
    load_checkpoint,
    predict_records,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "Checkpoint",
    "CheckpointError",
    "CorpusError",
    "CorpusStats",
    "Document",
    "EncoderConfig",
    "EventHyperspheres",
    "EventMention",
    "JointEventModel",
    "JointEventNetwork",
    "LabelSetEnergy",
    "LabelSpaces",
    "LossWeights",
    "MetricsReport",
    "REGIMES",
    "TaskBatch",
    "TokenContextEncoder",
    "TokenEnergy",
    "TrainConfig",
    "TrainingDiverged",
    "TrainingLog",
    "build_batch",
    "build_vocab",
    "corpus_stats",
    "cross_entropy",
    "document_loss",
    "encode_mention",
    "encode_pair",
    "enumerate_pairs",
    "ere_regime_eval",
    "evaluate",
    "f1_score",
    "format_table",
    "hamming_cost",
    "init_centroids",
    "joint_loss",
    "load_checkpoint",
    "load_corpus",
    "micro_prf",
    "minimize_energy",
    "predict_records",
    "project_to_simplex",
    "register_backbone",
    "relation_families",
    "save_checkpoint",
    "sentence_loss",
    "structured_cost",
    "synthesize_corpus",
    "token_loss",
    "train",
    "train_test_split_documents",
    "write_corpus",
]
