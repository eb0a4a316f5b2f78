from .ingest import (
    AlignedDataset,
    AlignmentReport,
    LoadReport,
    ModalityFrame,
    align,
    load_dataset,
    load_manifest_frames,
    load_modality,
)
from .preprocessing import ZScoreNormalizer, apply_normalization, normalize
from .schema import (
    ENCODED_MODALITIES,
    MODALITIES,
    PHYSIO_DIM,
    PHYSIOLOGY,
    Manifest,
    ModalitySchema,
    read_manifest,
    write_manifest,
)
from .split import SplitSpec, kfold, split, split_indices

__all__ = [
    "AlignedDataset",
    "AlignmentReport",
    "ENCODED_MODALITIES",
    "LoadReport",
    "MODALITIES",
    "Manifest",
    "ModalityFrame",
    "ModalitySchema",
    "PHYSIOLOGY",
    "PHYSIO_DIM",
    "SplitSpec",
    "ZScoreNormalizer",
    "align",
    "apply_normalization",
    "kfold",
    "load_dataset",
    "load_manifest_frames",
    "load_modality",
    "normalize",
    "read_manifest",
    "split",
    "split_indices",
    "write_manifest",
]
