"""Modality schemas and the manifest file that declares them."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional

import yaml

from ..exceptions import SchemaError

MODALITIES = ("posture", "facial", "keystroke", "physiology")
ENCODED_MODALITIES = ("posture", "facial", "keystroke")
PHYSIOLOGY = "physiology"
PHYSIO_DIM = 3
MANIFEST_VERSION = 1


@dataclass
class ModalitySchema:
    modality: str
    key_column: str
    feature_columns: List[str]
    label_column: Optional[str] = None
    tlx_column: Optional[str] = None

    def __post_init__(self):
        if self.modality not in MODALITIES:
            raise SchemaError(f"unknown modality {self.modality!r}; expected one of {MODALITIES}")
        self.feature_columns = list(self.feature_columns)
        if not self.feature_columns:
            raise SchemaError(f"{self.modality}: feature_columns is empty")
        if len(set(self.feature_columns)) != len(self.feature_columns):
            raise SchemaError(f"{self.modality}: duplicate feature columns")
        reserved = {self.key_column, self.label_column, self.tlx_column} - {None}
        clash = reserved.intersection(self.feature_columns)
        if clash:
            raise SchemaError(f"{self.modality}: feature columns overlap key/label/tlx: {sorted(clash)}")

    @property
    def required_columns(self) -> List[str]:
        cols = [self.key_column] + self.feature_columns
        cols += [c for c in (self.label_column, self.tlx_column) if c]
        return cols


@dataclass
class Manifest:
    """Where each modality file lives and how to read it.

    Paths are stored as given; :meth:`path_for` resolves them against the
    manifest's directory.
    """

    schemas: Dict[str, ModalitySchema]
    paths: Dict[str, str]
    labels_source: str
    tlx_source: Optional[str] = None
    base_dir: str = field(default=".", compare=False)

    def path_for(self, modality: str) -> str:
        p = self.paths[modality]
        return p if os.path.isabs(p) else os.path.join(self.base_dir, p)

    def to_dict(self) -> dict:
        mods = {}
        for name, schema in self.schemas.items():
            entry = {"path": self.paths[name]}
            entry.update({k: v for k, v in asdict(schema).items() if k != "modality"})
            mods[name] = entry
        return {
            "format_version": MANIFEST_VERSION,
            "labels_source": self.labels_source,
            "tlx_source": self.tlx_source,
            "modalities": mods,
        }

    @classmethod
    def from_dict(cls, doc: dict, base_dir: str = ".") -> "Manifest":
        if not isinstance(doc, dict) or "modalities" not in doc:
            raise SchemaError("manifest needs a 'modalities' mapping")
        version = doc.get("format_version", MANIFEST_VERSION)
        if version != MANIFEST_VERSION:
            raise SchemaError(f"manifest format_version {version!r} unsupported")
        schemas, paths = {}, {}
        for name, entry in doc["modalities"].items():
            try:
                paths[name] = entry["path"]
                schemas[name] = ModalitySchema(
                    modality=name,
                    key_column=entry["key_column"],
                    feature_columns=entry["feature_columns"],
                    label_column=entry.get("label_column"),
                    tlx_column=entry.get("tlx_column"),
                )
            except KeyError as exc:
                raise SchemaError(f"manifest entry {name!r} lacks {exc}") from None
        labels_source = doc.get("labels_source")
        if labels_source not in schemas or not schemas[labels_source].label_column:
            raise SchemaError(f"labels_source {labels_source!r} is not a modality with a label_column")
        tlx_source = doc.get("tlx_source")
        if tlx_source is not None and (
            tlx_source not in schemas or not schemas[tlx_source].tlx_column
        ):
            raise SchemaError(f"tlx_source {tlx_source!r} is not a modality with a tlx_column")
        return cls(schemas, paths, labels_source, tlx_source, base_dir)


def read_manifest(path) -> Manifest:
    with open(path, encoding="utf-8") as fh:
        doc = yaml.safe_load(fh)
    return Manifest.from_dict(doc, base_dir=os.path.dirname(os.path.abspath(path)))


def write_manifest(manifest: Manifest, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(manifest.to_dict(), fh, sort_keys=False)
