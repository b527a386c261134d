"""Joint training loop, evaluation, and deterministic checkpointing."""
from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import torch

from .corpus import Document, LabelSpaces
from .encoders import DTYPE, EncoderConfig, build_vocab
from .losses import LossWeights, joint_loss
from .metrics import ERE_TASK, EVENT_TASK, TRIGGER_TASK, MetricsReport, micro_prf
from .model import JointEventNetwork, build_batch

# Task-ratio (lambda) presets; mu ratios stay at 1 in every preset.
REGIMES: dict[str, tuple[float, float, float]] = {
    "trigger": (1.0, 0.1, 0.1),
    "event-maven": (1.0, 0.1, 0.1),
    "event-onto": (0.1, 1.0, 0.1),
    "ere-single": (1.0, 0.1, 0.1),
    "ere-subevent": (1.0, 0.1, 0.08),
    "ere-plus-joint": (1.0, 1.0, 4.0),
    "ere-all-joint": (0.1, 0.1, 1.0),
    "uniform": (1.0, 1.0, 1.0),
}

TASKS = (TRIGGER_TASK, EVENT_TASK, ERE_TASK)

_LOG_FIELDS = (
    "step", "epoch",
    "loss_token", "loss_sentence", "loss_document",
    "hinge_token", "hinge_sentence", "hinge_document",
    "penalty", "total",
)


class TrainingDiverged(RuntimeError):
    """Raised when the joint loss stops being finite."""


class CheckpointError(RuntimeError):
    """Unreadable checkpoint file or incompatible dimensions."""


@dataclass
class TrainConfig:
    """Hyperparameters for one training run.

    ``regime`` names a lambda preset from :data:`REGIMES`; when set it
    overrides the lambda entries of ``weights``.
    """

    lr: float = 5e-5
    epochs: int = 30
    batch_size: int = 8
    embed_dim: int = 32
    mixer_layers: int = 2
    max_len: int = 128
    mention_cap: int = 40
    seed: int = 0
    regime: str | None = None
    weights: LossWeights = field(default_factory=LossWeights)
    grad_clip: float = 5.0
    radius: float = 1.0
    trainable_radius: bool = False
    alternating: bool = False
    cost: str = "squared-l2"
    eval_every: int = 0

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError(f"lr must be positive, got {self.lr}")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError(f"need epochs >= 0 and batch_size >= 1, got {self.epochs}, {self.batch_size}")
        if self.mention_cap < 2:
            raise ValueError(f"mention_cap must be >= 2, got {self.mention_cap}")
        if self.regime is not None and self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}; known: {sorted(REGIMES)}")

    def resolved_weights(self) -> LossWeights:
        if self.regime is None:
            return self.weights
        lam = REGIMES[self.regime]
        return replace(
            self.weights,
            lambda_token=lam[0], lambda_sentence=lam[1], lambda_document=lam[2],
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainConfig":
        """Parse a flat key=value config file (blank lines and # comments allowed)."""
        values = parse_flat_config(path)
        kwargs: dict = {}
        weight_kwargs: dict = {}
        weight_names = {f.name for f in fields(LossWeights)}
        field_types = {f.name: f.type for f in fields(cls)}
        for key, raw in values.items():
            if key in weight_names:
                weight_kwargs[key] = float(raw)
            elif key in field_types:
                kwargs[key] = _coerce(key, raw)
            elif key in _CONFIG_PATH_KEYS:
                continue  # path entries are read by the CLI, not the trainer
            else:
                raise ValueError(f"unknown config key {key!r}")
        if weight_kwargs:
            kwargs["weights"] = LossWeights(**weight_kwargs)
        return cls(**kwargs)


_CONFIG_PATH_KEYS = {"train_path", "valid_path", "test_path", "checkpoint_path", "log_path"}

_BOOL_KEYS = {"trainable_radius", "alternating"}
_INT_KEYS = {"epochs", "batch_size", "embed_dim", "mixer_layers", "max_len", "mention_cap", "seed", "eval_every"}
_FLOAT_KEYS = {"lr", "grad_clip", "radius"}
_STR_KEYS = {"regime", "cost"}


def _coerce(key: str, raw: str):
    if key in _BOOL_KEYS:
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"config key {key!r}: expected a boolean, got {raw!r}")
    if key in _INT_KEYS:
        return int(raw)
    if key in _FLOAT_KEYS:
        return float(raw)
    if key in _STR_KEYS:
        return raw
    raise ValueError(f"config key {key!r} is not scalar-coercible")


def parse_flat_config(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ValueError(f"{path}:{lineno}: expected key = value")
        key, _, raw = stripped.partition("=")
        values[key.strip()] = raw.strip()
    return values


@dataclass
class TrainingLog:
    """Per-step loss breakdown records (the energy-loss curves).

    ``eval_records`` holds the optional cadence evaluations: one dict per
    (epoch, task) with the micro F1 at that point.  They are in-memory only;
    the CSV carries the per-step loss curves.
    """

    records: list[dict[str, float]] = field(default_factory=list)
    eval_records: list[dict] = field(default_factory=list)

    def append(self, **values: float) -> None:
        self.records.append({k: float(values[k]) for k in _LOG_FIELDS})

    def write_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_LOG_FIELDS)
            writer.writeheader()
            writer.writerows(self.records)

    @classmethod
    def read_csv(cls, path: str | Path) -> "TrainingLog":
        log = cls()
        with Path(path).open("r", encoding="utf-8", newline="") as fh:
            for row in csv.DictReader(fh):
                log.records.append({k: float(row[k]) for k in _LOG_FIELDS})
        return log

    def series(self, key: str) -> list[float]:
        return [r[key] for r in self.records]

    def epoch_mean(self, key: str, epoch: int) -> float:
        values = [r[key] for r in self.records if int(r["epoch"]) == epoch]
        if not values:
            raise ValueError(f"no records for epoch {epoch}")
        return sum(values) / len(values)

    @property
    def n_epochs(self) -> int:
        return int(max(r["epoch"] for r in self.records)) + 1 if self.records else 0


@dataclass
class Checkpoint:
    """A trained network plus everything needed to rebuild and reuse it."""

    network: JointEventNetwork
    spaces: LabelSpaces
    mention_cap: int
    max_len: int
    version: int = 1

    def save(self, path: str | Path) -> None:
        save_checkpoint(self, path)

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        return load_checkpoint(path)


_MAGIC = b"EVNRGY01"
CHECKPOINT_VERSION = 1


def save_checkpoint(checkpoint: Checkpoint, path: str | Path) -> None:
    """Write a byte-deterministic checkpoint (canonical header + raw buffers)."""
    net = checkpoint.network
    state = {name: tensor.detach().to(DTYPE).cpu() for name, tensor in net.state_dict().items()}
    names = sorted(state)
    header = {
        "format": "eventenergy-checkpoint",
        "version": checkpoint.version,
        "encoder": {
            "embed_dim": net.encoder_cfg.embed_dim,
            "backbone": net.encoder_cfg.backbone,
            "seed": net.encoder_cfg.seed,
            "mixer_layers": net.encoder_cfg.mixer_layers,
        },
        "vocab": net.encoder_cfg.vocab,
        "event_classes": list(checkpoint.spaces.event_classes),
        "relations": list(checkpoint.spaces.relations),
        "radius": float(net.spheres.radii[0]),
        "trainable_radius": isinstance(net.spheres.radii, torch.nn.Parameter),
        "mention_cap": checkpoint.mention_cap,
        "max_len": checkpoint.max_len,
        "arrays": [{"name": n, "shape": list(state[n].shape)} for n in names],
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with Path(path).open("wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        for name in names:
            fh.write(state[name].numpy().astype("<f8").tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Rebuild the network from a checkpoint; refuses incompatible dimensions."""
    data = Path(path).read_bytes()
    if len(data) < len(_MAGIC) + 8 or data[: len(_MAGIC)] != _MAGIC:
        raise CheckpointError(f"{path}: not an eventenergy checkpoint")
    header_len = int.from_bytes(data[len(_MAGIC): len(_MAGIC) + 8], "little")
    body_start = len(_MAGIC) + 8 + header_len
    try:
        header = json.loads(data[len(_MAGIC) + 8: body_start].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from None
    if header.get("format") != "eventenergy-checkpoint":
        raise CheckpointError(f"{path}: unexpected format tag {header.get('format')!r}")
    if header.get("version") != CHECKPOINT_VERSION:
        raise CheckpointError(f"{path}: unsupported version {header.get('version')!r}")

    spaces = LabelSpaces(
        event_classes=tuple(header["event_classes"]),
        relations=tuple(header["relations"]),
    )
    enc = header["encoder"]
    cfg = EncoderConfig(
        embed_dim=enc["embed_dim"],
        vocab=header["vocab"],
        backbone=enc["backbone"],
        seed=enc["seed"],
        mixer_layers=enc["mixer_layers"],
    )
    network = JointEventNetwork(
        cfg, spaces, radius=header["radius"], trainable_radius=header["trainable_radius"]
    )
    expected = {name: tuple(t.shape) for name, t in network.state_dict().items()}
    offset = body_start
    state: dict[str, torch.Tensor] = {}
    for entry in header["arrays"]:
        name, shape = entry["name"], tuple(entry["shape"])
        if name not in expected:
            raise CheckpointError(f"{path}: unknown array {name!r}")
        if expected[name] != shape:
            raise CheckpointError(
                f"{path}: dimension mismatch for {name!r}: file has {shape}, model needs {expected[name]}"
            )
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 8
        if offset + nbytes > len(data):
            raise CheckpointError(f"{path}: truncated array data for {name!r}")
        array = np.frombuffer(data[offset: offset + nbytes], dtype="<f8").reshape(shape)
        state[name] = torch.from_numpy(array.copy())
        offset += nbytes
    if offset != len(data):
        raise CheckpointError(f"{path}: trailing bytes after array data")
    missing = set(expected) - set(state)
    if missing:
        raise CheckpointError(f"{path}: missing arrays: {sorted(missing)}")
    network.load_state_dict(state)
    return Checkpoint(
        network=network,
        spaces=spaces,
        mention_cap=header["mention_cap"],
        max_len=header["max_len"],
        version=header["version"],
    )


def _document_batches(
    documents: Sequence[Document], batch_size: int, rng: random.Random,
) -> Iterable[list[Document]]:
    order = list(range(len(documents)))
    rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        yield [documents[k] for k in order[start: start + batch_size]]


def train(
    documents: Sequence[Document],
    spaces: LabelSpaces,
    config: TrainConfig,
    eval_documents: Sequence[Document] | None = None,
) -> tuple[Checkpoint, TrainingLog]:
    """Minimize the joint objective with Adam; deterministic given the seed.

    With ``config.alternating`` the energy parameters and the remaining
    parameters are updated on alternating epochs (coordinate descent on the
    same objective); otherwise every parameter updates each step.  When
    ``config.eval_every`` > 0, every that-many epochs the three tasks are
    scored on ``eval_documents`` (the training documents by default) and the
    reports recorded on the log.
    """
    documents = list(documents)
    if not documents or all(not d.mentions for d in documents):
        raise ValueError("cannot train on an empty corpus")
    _check_documents(documents, spaces, config.max_len)

    vocab = build_vocab(documents)
    cfg = EncoderConfig(
        embed_dim=config.embed_dim,
        vocab=vocab,
        backbone="toy-context",
        seed=config.seed,
        mixer_layers=config.mixer_layers,
    )
    network = JointEventNetwork(
        cfg, spaces, radius=config.radius, trainable_radius=config.trainable_radius
    )
    weights = config.resolved_weights()
    optimizer = torch.optim.Adam(network.parameters(), lr=config.lr)
    rng = random.Random(config.seed)
    log = TrainingLog()
    step = 0
    for epoch in range(config.epochs):
        if config.alternating:
            train_energy = epoch % 2 == 1
            for p in network.energy_parameters():
                p.requires_grad_(train_energy)
            for p in network.predictor_parameters():
                p.requires_grad_(not train_energy)
        for batch_docs in _document_batches(documents, config.batch_size, rng):
            batch = build_batch(batch_docs, spaces, vocab, config.mention_cap)
            if batch is None:
                continue
            loss, breakdown = joint_loss(network, batch, weights, config.cost)
            if not torch.isfinite(loss):
                detail = ", ".join(f"{k}={float(v):g}" for k, v in breakdown.items())
                raise TrainingDiverged(
                    f"non-finite loss at step {step} (epoch {epoch}); "
                    f"documents {sorted(set(batch.doc_ids))}; breakdown: {detail}"
                )
            optimizer.zero_grad()
            loss.backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(network.parameters(), config.grad_clip)
            optimizer.step()
            log.append(
                step=step, epoch=epoch,
                **{k: float(breakdown[k]) for k in _LOG_FIELDS[2:]},
            )
            step += 1
        if config.eval_every > 0 and (epoch + 1) % config.eval_every == 0:
            snapshot = Checkpoint(
                network=network, spaces=spaces, mention_cap=config.mention_cap, max_len=config.max_len
            )
            targets = eval_documents if eval_documents is not None else documents
            for task in TASKS:
                report = evaluate(snapshot, targets, task)
                log.eval_records.append({"epoch": epoch, "task": task, "f1": report.f1})
            network.train()
    for p in network.parameters():
        p.requires_grad_(True)
    checkpoint = Checkpoint(
        network=network, spaces=spaces, mention_cap=config.mention_cap, max_len=config.max_len
    )
    return checkpoint, log


def _check_documents(documents: Sequence[Document], spaces: LabelSpaces, max_len: int) -> None:
    for doc in documents:
        for m in doc.mentions:
            if m.event_class >= spaces.n_event_classes:
                raise ValueError(
                    f"document {doc.doc_id!r}: event class {m.event_class} outside label space "
                    f"of size {spaces.n_event_classes}"
                )
            if len(m.tokens) > max_len:
                raise ValueError(
                    f"document {doc.doc_id!r}: mention {m.mention_id!r} has {len(m.tokens)} tokens, "
                    f"max_len is {max_len}"
                )
        for rel in doc.relations.values():
            if rel >= spaces.n_relations:
                raise ValueError(
                    f"document {doc.doc_id!r}: relation {rel} outside label space of size {spaces.n_relations}"
                )


def collect_predictions(
    checkpoint: Checkpoint,
    documents: Sequence[Document],
    *,
    batch_size: int = 32,
    energy_inference: bool = False,
) -> dict[str, tuple[list[int], list[int]]]:
    """Aligned (pred, gold) label ids for every task over the given documents."""
    spaces = checkpoint.spaces
    _check_documents(documents, spaces, checkpoint.max_len)
    net = checkpoint.network
    net.eval()
    results: dict[str, tuple[list[int], list[int]]] = {
        TRIGGER_TASK: ([], []),
        EVENT_TASK: ([], []),
        ERE_TASK: ([], []),
    }
    for start in range(0, len(documents), batch_size):
        batch = build_batch(
            list(documents[start: start + batch_size]), spaces, net.encoder_cfg.vocab,
            checkpoint.mention_cap,
        )
        if batch is None:
            continue
        if energy_inference:
            probs = net.predict_batch_energy_min(batch)
        else:
            probs = net.predict_batch(batch)
        token_pred = probs["token_probs"].argmax(-1)
        for row in range(batch.n_mentions):
            n_real = int((batch.token_gold[row] != spaces.padding_label).sum())
            results[TRIGGER_TASK][0].extend(token_pred[row, :n_real].tolist())
            results[TRIGGER_TASK][1].extend(batch.token_gold[row, :n_real].tolist())
        results[EVENT_TASK][0].extend(probs["event_probs"].argmax(-1).tolist())
        results[EVENT_TASK][1].extend(batch.event_gold.tolist())
        if batch.n_pairs:
            results[ERE_TASK][0].extend(probs["relation_probs"].argmax(-1).tolist())
            results[ERE_TASK][1].extend(batch.relation_gold.tolist())
    return results


def excluded_labels(spaces: LabelSpaces, task: str) -> set[int]:
    if task == TRIGGER_TASK:
        return {spaces.non_trigger_label, spaces.padding_label}
    if task == EVENT_TASK:
        return {spaces.none_index}
    if task == ERE_TASK:
        return {spaces.na_index}
    raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")


def evaluate(
    checkpoint: Checkpoint,
    documents: Sequence[Document],
    task: str,
    *,
    batch_size: int = 32,
    energy_inference: bool = False,
) -> MetricsReport:
    """Run one task head over the documents and score it with micro P/R/F1."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    collected = collect_predictions(
        checkpoint, documents, batch_size=batch_size, energy_inference=energy_inference
    )
    pred, gold = collected[task]
    spaces = checkpoint.spaces
    if task == TRIGGER_TASK:
        names = list(spaces.event_classes) + ["<non-trigger>", "<padding>"]
    elif task == EVENT_TASK:
        names = list(spaces.event_classes)
    else:
        names = list(spaces.relations)
    return micro_prf(pred, gold, excluded_labels(spaces, task), task=task, label_names=names)


def predict_records(
    checkpoint: Checkpoint,
    documents: Sequence[Document],
    task: str,
    *,
    batch_size: int = 32,
) -> list[dict]:
    """JSON-ready prediction records: one per mention (trigger/event) or pair (ere)."""
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; expected one of {TASKS}")
    spaces = checkpoint.spaces
    _check_documents(documents, spaces, checkpoint.max_len)
    net = checkpoint.network
    net.eval()
    records: list[dict] = []
    for start in range(0, len(documents), batch_size):
        batch = build_batch(
            list(documents[start: start + batch_size]), spaces, net.encoder_cfg.vocab,
            checkpoint.mention_cap,
        )
        if batch is None:
            continue
        probs = net.predict_batch(batch)
        if task == TRIGGER_TASK:
            token_probs = probs["token_probs"]
            for row in range(batch.n_mentions):
                n_real = int((batch.token_gold[row] != spaces.padding_label).sum())
                best = token_probs[row, :n_real]
                # trigger = the position whose best non-background label is strongest
                class_probs = best[:, : spaces.n_event_classes]
                pos = int(class_probs.max(dim=-1).values.argmax())
                label = int(class_probs[pos].argmax())
                records.append({
                    "mention_id": batch.mention_ids[row],
                    "trigger_index": pos + 1,
                    "label": spaces.event_classes[label],
                    "score": float(class_probs[pos, label]),
                })
        elif task == EVENT_TASK:
            event_probs = probs["event_probs"]
            for row in range(batch.n_mentions):
                label = int(event_probs[row].argmax())
                records.append({
                    "mention_id": batch.mention_ids[row],
                    "label": spaces.event_classes[label],
                    "score": float(event_probs[row, label]),
                })
        else:
            rel_probs = probs["relation_probs"]
            for k in range(batch.n_pairs):
                label = int(rel_probs[k].argmax())
                records.append({
                    "left": batch.mention_ids[int(batch.pair_left[k])],
                    "right": batch.mention_ids[int(batch.pair_right[k])],
                    "label": spaces.relations[label],
                    "score": float(rel_probs[k, label]),
                })
    return records
