"""Seeded synthetic multimodal data with a known latent stress process.

A latent stress level ``z_t`` relaxes toward a baseline and is pushed up
during planted "workload episodes". Every modality observes ``z_t`` through
its own random affine map plus Gaussian noise; ``label = z_t > 0`` and the
TLX score is a fixed function of ``z_t``. Each encoded modality then loses
an independent random fraction of its rows, so aligning the files shrinks
the dataset the same way incomplete sensor coverage does.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from scipy.special import expit

from .data.schema import ENCODED_MODALITIES, PHYSIO_DIM, PHYSIOLOGY, Manifest, ModalitySchema, write_manifest

KEY_COLUMN = "t"
LABEL_COLUMN = "stressed"
TLX_COLUMN = "tlx"

# how strongly each modality sees the latent state, relative to signal_strength
_MODALITY_GAIN = {"posture": 1.0, "facial": 0.9, "keystroke": 0.75}
_PHYSIO_GAIN = 0.5

# keeping each of three modalities with probability (956/3000)**(1/3)
PAPER_SHAPE_MISSING = 1.0 - (956.0 / 3000.0) ** (1.0 / 3.0)


@dataclass
class SynthConfig:
    rows: int = 3000
    posture_dim: int = 24
    facial_dim: int = 16
    keystroke_dim: int = 7
    noise_sigma: float = 1.0
    missing_fraction: Dict[str, float] = field(default_factory=dict)
    signal_strength: float = 1.0
    seed: int = 0
    tlx_mode: str = "sigmoid"  # or "linear"
    tlx_slope: float = 0.15
    relaxed_level: float = -1.0
    episode_level: float = 1.2
    episode_len: Tuple[int, int] = (25, 75)
    gap_len: Tuple[int, int] = (30, 90)
    reversion: float = 0.5
    walk_sigma: float = 0.3

    def __post_init__(self):
        if self.rows < 1:
            raise ValueError("rows must be >= 1")
        if min(self.posture_dim, self.facial_dim, self.keystroke_dim) < 1:
            raise ValueError("every modality needs at least one feature")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        for name, frac in self.missing_fraction.items():
            if not 0.0 <= frac < 1.0:
                raise ValueError(f"missing_fraction[{name!r}] must lie in [0, 1)")
        if self.tlx_mode not in ("sigmoid", "linear"):
            raise ValueError("tlx_mode must be 'sigmoid' or 'linear'")

    @property
    def dims(self) -> Dict[str, int]:
        return {"posture": self.posture_dim, "facial": self.facial_dim,
                "keystroke": self.keystroke_dim, PHYSIOLOGY: PHYSIO_DIM}


PRESETS = {
    "paper-shape": SynthConfig(
        rows=3000,
        missing_fraction={m: PAPER_SHAPE_MISSING for m in ENCODED_MODALITIES},
    ),
    "drift": SynthConfig(rows=600, noise_sigma=0.5),
    "tlx-linear": SynthConfig(rows=1000, noise_sigma=0.3, tlx_mode="linear"),
}


def preset(name: str, **overrides) -> SynthConfig:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return replace(PRESETS[name], **overrides)


@dataclass
class SynthData:
    config: SynthConfig
    frames: Dict[str, pd.DataFrame]
    latent: pd.DataFrame  # t, z, level, episode, stressed, tlx (complete, before attrition)
    episodes: List[Tuple[int, int]]  # inclusive (start_t, end_t)


def _episode_levels(cfg, rng):
    level = np.full(cfg.rows, cfg.relaxed_level)
    episodes = []
    t = int(rng.integers(*cfg.gap_len, endpoint=True))
    while t < cfg.rows:
        length = int(rng.integers(*cfg.episode_len, endpoint=True))
        end = min(t + length, cfg.rows) - 1
        level[t:end + 1] = cfg.episode_level
        episodes.append((t, end))
        t = end + 1 + int(rng.integers(*cfg.gap_len, endpoint=True))
    return level, episodes


def _latent_walk(cfg, level, rng):
    z = np.empty(cfg.rows)
    shocks = rng.normal(0.0, cfg.walk_sigma, cfg.rows)
    z[0] = level[0] + shocks[0]
    for t in range(1, cfg.rows):
        z[t] = z[t - 1] + cfg.reversion * (level[t] - z[t - 1]) + shocks[t]
    return z


def _observe(z, dim, gain, cfg, rng):
    loading = rng.normal(size=dim)
    loading *= gain * cfg.signal_strength / np.linalg.norm(loading)
    # heterogeneous raw scales, as sensor logs have
    scale = np.exp(rng.uniform(-2.0, 3.0, size=dim))
    offset = rng.normal(0.0, 50.0, size=dim)
    noise = rng.normal(0.0, 1.0, size=(len(z), dim)) * cfg.noise_sigma
    return (np.outer(z, loading) + noise) * scale + offset


def tlx_from_latent(z, cfg: SynthConfig):
    if cfg.tlx_mode == "linear":
        return 100.0 * np.clip(0.5 + cfg.tlx_slope * z, 0.0, 1.0)
    return 100.0 * expit(z)


def feature_columns(modality: str, dim: int) -> List[str]:
    return [f"{modality}_{j:02d}" for j in range(dim)]


def generate(cfg: SynthConfig) -> SynthData:
    rng = np.random.default_rng(cfg.seed)
    level, episodes = _episode_levels(cfg, rng)
    z = _latent_walk(cfg, level, rng)
    t = np.arange(cfg.rows)
    labels = (z > 0).astype(int)
    tlx = tlx_from_latent(z, cfg)

    frames = {}
    for m in ENCODED_MODALITIES:
        x = _observe(z, cfg.dims[m], _MODALITY_GAIN[m], cfg, rng)
        frames[m] = pd.DataFrame(x, columns=feature_columns(m, cfg.dims[m]))
    physio = _PHYSIO_GAIN * cfg.signal_strength * z[:, None] + rng.normal(
        0.0, 1.0, size=(cfg.rows, PHYSIO_DIM)
    ) * cfg.noise_sigma
    frames[PHYSIOLOGY] = pd.DataFrame(physio, columns=feature_columns(PHYSIOLOGY, PHYSIO_DIM))
    frames[PHYSIOLOGY][LABEL_COLUMN] = labels
    frames[PHYSIOLOGY][TLX_COLUMN] = tlx

    for m, df in frames.items():
        df.insert(0, KEY_COLUMN, t)
        frac = cfg.missing_fraction.get(m, 0.0)
        keep = rng.random(cfg.rows) >= frac
        frames[m] = df[keep].reset_index(drop=True)

    latent = pd.DataFrame({
        KEY_COLUMN: t,
        "z": z,
        "level": level,
        "episode": (level == cfg.episode_level).astype(int),
        LABEL_COLUMN: labels,
        TLX_COLUMN: tlx,
    })
    return SynthData(cfg, frames, latent, episodes)


def synth_manifest(cfg: SynthConfig) -> Manifest:
    schemas, paths = {}, {}
    for m, dim in cfg.dims.items():
        is_physio = m == PHYSIOLOGY
        schemas[m] = ModalitySchema(
            modality=m,
            key_column=KEY_COLUMN,
            feature_columns=feature_columns(m, dim),
            label_column=LABEL_COLUMN if is_physio else None,
            tlx_column=TLX_COLUMN if is_physio else None,
        )
        paths[m] = f"{m}.csv"
    return Manifest(schemas, paths, labels_source=PHYSIOLOGY, tlx_source=PHYSIOLOGY)


def write_synth(data: SynthData, out_dir) -> str:
    """Write modality CSVs, the manifest, and ground truth; returns the manifest path."""
    os.makedirs(out_dir, exist_ok=True)
    for m, df in data.frames.items():
        df.to_csv(os.path.join(out_dir, f"{m}.csv"), index=False)
    data.latent.to_csv(os.path.join(out_dir, "latent.csv"), index=False)
    with open(os.path.join(out_dir, "episodes.json"), "w", encoding="utf-8") as fh:
        json.dump({"episodes": [list(e) for e in data.episodes],
                   "config": asdict(data.config)}, fh, indent=2, sort_keys=True)
        fh.write("\n")
    path = os.path.join(out_dir, "manifest.yaml")
    write_manifest(synth_manifest(data.config), path)
    return path
