"""Training-fold preparation and model fitting shared by the CLI and the CV drivers.

Oversampling and rotation augmentation are applied to training data only;
evaluation data are used as given.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .core import ParamStore
from .data import oversample_minority, pad_all, rotate_augment
from .mapping import pretrain_autoencoders
from .model import Model, TrainConfig, train


@dataclass
class Protocol:
    oversample: bool = True
    augment: bool = True
    angles: tuple[float, ...] = (0, 90, 180, 270)
    positional: int = 0
    pretrain_epochs: int = 0
    pretrain_lr: float = 1e-3
    pretrain_batch: int = 256

    def __post_init__(self):
        self.angles = tuple(self.angles)
        if self.pretrain_epochs < 0:
            raise ValueError("pretrain_epochs must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "Protocol":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown protocol field(s): {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["angles"] = list(self.angles)
        return d


def uniform_length(instances) -> list:
    lengths = {i.length for i in instances}
    return list(instances) if len(lengths) <= 1 else pad_all(instances)


def prepare_training_set(instances, protocol: Protocol, seed: int, num_classes: int) -> list:
    out = list(instances)
    if protocol.oversample:
        out = oversample_minority(out, seed, num_classes)
    if protocol.augment:
        out = rotate_augment(out, protocol.angles, protocol.positional)
    return uniform_length(out)


def fit(
    kind: str,
    instances,
    config: TrainConfig,
    protocol: Protocol,
    num_classes: int,
    encoders: ParamStore | None = None,
):
    """Prepare the training set, optionally pre-train encoders, then train.

    Returns the :class:`~gwn.model.TrainResult`. Pre-training runs on the
    prepared training set (GWN only) when ``protocol.pretrain_epochs > 0`` and
    no encoders are given.
    """
    train_set = prepare_training_set(instances, protocol, config.seed, num_classes)
    if kind == "gwn" and encoders is None and protocol.pretrain_epochs > 0:
        pre = pretrain_autoencoders(
            train_set,
            epochs=protocol.pretrain_epochs,
            lr=protocol.pretrain_lr,
            hidden=config.hidden,
            enc_hidden=config.enc_hidden,
            seed=config.seed,
            batch_size=protocol.pretrain_batch,
        )
        encoders = pre.encoders()
    return train(kind, train_set, config, num_classes=num_classes, encoders=encoders)


def trained_model(*args, **kwargs) -> Model:
    return fit(*args, **kwargs).model
