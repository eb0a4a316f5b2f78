"""Per-modality encoders: small dense classifiers whose last hidden layer is
reused as that modality's feature map."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from ..data.schema import ENCODED_MODALITIES
from ..exceptions import DimensionError, MissingModalityError
from ..metrics import ClassificationReport, confusion, report
from ..nn.core import DenseNet, forward
from ..nn.estimators import DenseNetClassifier, build_net


@dataclass
class EncoderSpec:
    modality: str
    hidden_dims: Tuple[int, ...]
    dropout_rate: float = 0.5

    def __post_init__(self):
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        if not self.hidden_dims:
            raise DimensionError(f"{self.modality}: hidden_dims must not be empty")
        if any(h < 1 for h in self.hidden_dims):
            raise DimensionError(f"{self.modality}: zero-width hidden layer")

    @property
    def feature_dim(self) -> int:
        return self.hidden_dims[-1]


# keystroke has few inputs and gets one hidden layer; posture and facial two
DEFAULT_ENCODER_SPECS: Dict[str, EncoderSpec] = {
    "posture": EncoderSpec("posture", (64, 32)),
    "facial": EncoderSpec("facial", (64, 32)),
    "keystroke": EncoderSpec("keystroke", (16,)),
}
FUSION_HIDDEN = (32, 16)
TLX_HIDDEN = (32, 16)


def build_encoder(spec: EncoderSpec, input_dim: int, rng: Optional[np.random.Generator] = None) -> DenseNet:
    """Untrained in -> hidden... -> 1 (sigmoid) network for ``spec``."""
    if input_dim < 1:
        raise DimensionError("input_dim must be >= 1")
    rng = rng if rng is not None else np.random.default_rng(0)
    return build_net(input_dim, spec.hidden_dims, "sigmoid", spec.dropout_rate, rng)


def make_encoder(spec: EncoderSpec, epochs=200, learning_rate=0.01, batch_size=32,
                 random_state=0, shuffle=True) -> DenseNetClassifier:
    return DenseNetClassifier(
        hidden_dims=spec.hidden_dims,
        dropout_rate=spec.dropout_rate,
        epochs=epochs,
        learning_rate=learning_rate,
        batch_size=batch_size,
        shuffle=shuffle,
        random_state=random_state,
    )


@dataclass
class UnimodalResult:
    encoder: DenseNetClassifier
    report: ClassificationReport
    evaluated_on: str
    history: list = field(default_factory=list)


def train_unimodal(encoder: DenseNetClassifier, block, labels, eval_block=None, eval_labels=None) -> UnimodalResult:
    """Fit one modality's classifier and report on the held-out rows (or the
    training rows when none are given)."""
    encoder.fit(block, labels)
    if eval_block is None:
        eval_block, eval_labels, where = block, labels, "train"
    else:
        where = "held_out"
    cm = confusion(encoder.predict(eval_block), eval_labels)
    return UnimodalResult(encoder, report(cm), where, list(encoder.history_))


def extract_features(encoder: DenseNetClassifier, x):
    """Last-hidden-layer activations for one record (1-D) or a batch (2-D)."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return encoder.transform(x[None, :])[0]
    return encoder.transform(x)


def get_block(X, name):
    blocks = getattr(X, "blocks", X)
    if not isinstance(blocks, Mapping) or name not in blocks or blocks[name] is None:
        raise MissingModalityError(f"record is missing the {name!r} modality block")
    return np.asarray(blocks[name], dtype=float)


def ordered_modalities(encoders: Mapping) -> list:
    known = [m for m in ENCODED_MODALITIES if m in encoders]
    return known + [m for m in encoders if m not in known]


def encoder_feature_map(encoders: Mapping, X) -> np.ndarray:
    return np.hstack([encoders[m].transform(get_block(X, m)) for m in ordered_modalities(encoders)])
