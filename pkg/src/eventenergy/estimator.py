"""sklearn-style estimator facade over the joint trainer."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .corpus import LabelSpaces, corpus_stats
from .losses import LossWeights
from .metrics import ERE_TASK, EVENT_TASK, TRIGGER_TASK
from .model import build_batch
from .training import TrainConfig, evaluate, predict_records, train
from .validation import check_nonempty, ensure_documents


class JointEventModel(BaseEstimator):
    """Joint trigger / event-class / event-relation model with a fit/predict API.

    ``X`` is a list of :class:`eventenergy.Document` (or a JSONL corpus path);
    gold labels live inside the documents, so ``y`` is ignored.  Hyperparameters
    mirror :class:`eventenergy.training.TrainConfig` and are stored verbatim,
    which keeps ``get_params`` / ``set_params`` / ``clone`` working.
    """

    def __init__(
        self,
        embed_dim: int = 32,
        mixer_layers: int = 2,
        max_len: int = 128,
        mention_cap: int = 40,
        lr: float = 5e-5,
        epochs: int = 30,
        batch_size: int = 8,
        regime: str | None = None,
        lambda_token: float = 1.0,
        lambda_sentence: float = 1.0,
        lambda_document: float = 1.0,
        mu_token: float = 1.0,
        mu_sentence: float = 1.0,
        mu_document: float = 1.0,
        l2_coeff: float = 1e-5,
        radius: float = 1.0,
        trainable_radius: bool = False,
        grad_clip: float = 5.0,
        alternating: bool = False,
        cost: str = "squared-l2",
        seed: int = 0,
    ) -> None:
        self.embed_dim = embed_dim
        self.mixer_layers = mixer_layers
        self.max_len = max_len
        self.mention_cap = mention_cap
        self.lr = lr
        self.epochs = epochs
        self.batch_size = batch_size
        self.regime = regime
        self.lambda_token = lambda_token
        self.lambda_sentence = lambda_sentence
        self.lambda_document = lambda_document
        self.mu_token = mu_token
        self.mu_sentence = mu_sentence
        self.mu_document = mu_document
        self.l2_coeff = l2_coeff
        self.radius = radius
        self.trainable_radius = trainable_radius
        self.grad_clip = grad_clip
        self.alternating = alternating
        self.cost = cost
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            lr=self.lr,
            epochs=self.epochs,
            batch_size=self.batch_size,
            embed_dim=self.embed_dim,
            mixer_layers=self.mixer_layers,
            max_len=self.max_len,
            mention_cap=self.mention_cap,
            seed=self.seed,
            regime=self.regime,
            weights=LossWeights(
                mu_token=self.mu_token,
                mu_sentence=self.mu_sentence,
                mu_document=self.mu_document,
                lambda_token=self.lambda_token,
                lambda_sentence=self.lambda_sentence,
                lambda_document=self.lambda_document,
                l2_coeff=self.l2_coeff,
            ),
            grad_clip=self.grad_clip,
            radius=self.radius,
            trainable_radius=self.trainable_radius,
            alternating=self.alternating,
            cost=self.cost,
        )

    def fit(self, X, y=None, label_spaces: LabelSpaces | None = None):
        """Train on a corpus; builds label spaces from the data unless given."""
        documents, loaded_spaces = ensure_documents(X, max_len=self.max_len)
        check_nonempty(documents)
        spaces = label_spaces or loaded_spaces
        if spaces is None:
            raise ValueError(
                "in-memory documents carry label indices, not names; pass label_spaces= "
                "(synthesize_corpus and load_corpus both return one)"
            )
        checkpoint, log = train(documents, spaces, self._config())
        self.checkpoint_ = checkpoint
        self.history_ = log
        self.label_spaces_ = spaces
        self.train_stats_ = corpus_stats(documents, spaces)
        return self

    def predict(self, X, task: str = EVENT_TASK) -> np.ndarray:
        """Predicted label names, one per task instance.

        trigger: the event-class name read off at the strongest trigger
        position of each mention; event: the measured class per mention;
        ere: the relation per enumerated mention pair.
        """
        check_is_fitted(self, "checkpoint_")
        documents, _ = ensure_documents(X, max_len=self.max_len)
        records = predict_records(self.checkpoint_, documents, task)
        return np.array([r["label"] for r in records], dtype=object)

    def predict_proba(self, X, task: str = EVENT_TASK) -> np.ndarray:
        """Probability rows per task instance (simplex rows)."""
        check_is_fitted(self, "checkpoint_")
        documents, _ = ensure_documents(X, max_len=self.max_len)
        net = self.checkpoint_.network
        spaces = self.checkpoint_.spaces
        blocks = []
        for start in range(0, len(documents), 32):
            batch = build_batch(
                documents[start: start + 32], spaces, net.encoder_cfg.vocab, self.checkpoint_.mention_cap
            )
            if batch is None:
                continue
            probs = net.predict_batch(batch)
            if task == EVENT_TASK:
                blocks.append(probs["event_probs"].numpy())
            elif task == ERE_TASK:
                blocks.append(probs["relation_probs"].numpy())
            elif task == TRIGGER_TASK:
                blocks.append(probs["token_probs"].reshape(-1, spaces.token_label_count).numpy())
            else:
                raise ValueError(f"unknown task {task!r}")
        if not blocks:
            return np.zeros((0, 0))
        return np.concatenate(blocks, axis=0)

    def score(self, X, y=None, task: str = TRIGGER_TASK) -> float:
        """Micro-F1 (0..1) of the chosen task against the gold in X."""
        check_is_fitted(self, "checkpoint_")
        documents, _ = ensure_documents(X, max_len=self.max_len)
        check_nonempty(documents)
        report = evaluate(self.checkpoint_, documents, task)
        return report.f1 / 100.0

    def evaluate(self, X, task: str = TRIGGER_TASK):
        """Full MetricsReport for one task (precision/recall/F1/supports)."""
        check_is_fitted(self, "checkpoint_")
        documents, _ = ensure_documents(X, max_len=self.max_len)
        return evaluate(self.checkpoint_, documents, task)
