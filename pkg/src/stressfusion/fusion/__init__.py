from .bundle import ModelBundle, load_bundle, save_bundle
from .encoders import (
    DEFAULT_ENCODER_SPECS,
    FUSION_HIDDEN,
    TLX_HIDDEN,
    EncoderSpec,
    UnimodalResult,
    build_encoder,
    extract_features,
    make_encoder,
    train_unimodal,
)
from .models import EarlyFusionClassifier, LateFusionClassifier, predict_stress
from .tlx import TlxRegressor, predict_tlx, train_tlx_regressor


def assemble_and_train_early(encoders, X, y, **params) -> EarlyFusionClassifier:
    return EarlyFusionClassifier(encoders=encoders, **params).fit(X, y)


def assemble_and_train_late(encoders, X, y, **params) -> LateFusionClassifier:
    return LateFusionClassifier(encoders=encoders, **params).fit(X, y)


__all__ = [
    "DEFAULT_ENCODER_SPECS",
    "EarlyFusionClassifier",
    "EncoderSpec",
    "FUSION_HIDDEN",
    "LateFusionClassifier",
    "ModelBundle",
    "TLX_HIDDEN",
    "TlxRegressor",
    "UnimodalResult",
    "assemble_and_train_early",
    "assemble_and_train_late",
    "build_encoder",
    "extract_features",
    "load_bundle",
    "make_encoder",
    "predict_stress",
    "predict_tlx",
    "save_bundle",
    "train_tlx_regressor",
    "train_unimodal",
]
