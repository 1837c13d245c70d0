"""Retrieval configuration, dataset presets, and config-file loading."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import SchemaError

FIXED_TAU = 0.5
FIXED_EPSILON = 1e-6


@dataclass(frozen=True)
class LevelTopK:
    chunk: int
    sentence: int
    image: int
    object: int

    def for_level(self, level: str) -> int:
        return getattr(self, level)


@dataclass(frozen=True)
class RetrievalConfig:
    alpha: float = 0.85
    epsilon: float = FIXED_EPSILON
    omega_c: float = 0.05
    omega_i: float = 1.0
    lambda_t: float = 1.0
    lambda_v: float = 1.0
    text_top_k: LevelTopK = LevelTopK(chunk=4, sentence=10, image=10, object=10)
    visual_top_k: LevelTopK = LevelTopK(chunk=10, sentence=10, image=20, object=10)
    answer_top_k: int = 5
    max_iters: int = 200
    tau: float = FIXED_TAU
    global_seed_top_k: int | None = None  # off by default
    strict_grounded_nodes: bool = False
    preposition_map: dict[str, str] | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if self.lambda_t + self.lambda_v <= 0.0:
            raise ValueError("lambda_t + lambda_v must be positive")
        if min(self.omega_c, self.omega_i, self.lambda_t, self.lambda_v) < 0.0:
            raise ValueError("scaling weights must be nonnegative")

    def top_k(self, modality: str) -> LevelTopK:
        return self.text_top_k if modality == "text" else self.visual_top_k


# Per-dataset retrieval presets; tau and epsilon stay fixed across all of them.
PRESETS: dict[str, RetrievalConfig] = {
    "evqa": RetrievalConfig(
        alpha=0.20, omega_c=0.8, omega_i=1.6, lambda_t=0.1, lambda_v=1.0,
        text_top_k=LevelTopK(chunk=60, sentence=3, image=2, object=3),
        visual_top_k=LevelTopK(chunk=200, sentence=70, image=2, object=5),
    ),
    "infoseek": RetrievalConfig(
        alpha=0.15, omega_c=1.2, omega_i=0.5, lambda_t=0.1, lambda_v=1.0,
        text_top_k=LevelTopK(chunk=200, sentence=3, image=2, object=3),
        visual_top_k=LevelTopK(chunk=200, sentence=60, image=1, object=5),
    ),
    "scienceqa": RetrievalConfig(
        alpha=0.85, omega_c=0.05, omega_i=1.0, lambda_t=1.0, lambda_v=1.0,
        text_top_k=LevelTopK(chunk=4, sentence=10, image=10, object=10),
        visual_top_k=LevelTopK(chunk=10, sentence=10, image=20, object=10),
    ),
    "task-bc": RetrievalConfig(
        alpha=0.85, omega_c=0.2, omega_i=1.0, lambda_t=1.0, lambda_v=0.5,
        text_top_k=LevelTopK(chunk=7, sentence=5, image=5, object=5),
        visual_top_k=LevelTopK(chunk=3, sentence=1, image=1, object=1),
    ),
    "task-mc": RetrievalConfig(
        alpha=0.70, omega_c=1.0, omega_i=1.0, lambda_t=1.0, lambda_v=1.0,
        text_top_k=LevelTopK(chunk=12, sentence=2, image=3, object=2),
        visual_top_k=LevelTopK(chunk=12, sentence=3, image=5, object=3),
    ),
}

DEFAULT_CONFIG = PRESETS["scienceqa"]


def preset(name: str) -> RetrievalConfig:
    key = name.lower()
    if key not in PRESETS:
        available = ", ".join(sorted(PRESETS))
        raise KeyError(f"unknown preset {name!r}; available: {available}")
    return PRESETS[key]


_SCALARS = {
    "alpha": float, "epsilon": float, "omega_c": float, "omega_i": float,
    "lambda_t": float, "lambda_v": float, "answer_top_k": int,
    "max_iters": int, "tau": float, "strict_grounded_nodes": bool,
}


def apply_overrides(config: RetrievalConfig, overrides: dict) -> RetrievalConfig:
    """Apply a JSON override mapping onto a config."""
    changes = {}
    for key, value in overrides.items():
        if key in _SCALARS:
            changes[key] = _SCALARS[key](value)
        elif key in ("text_top_k", "visual_top_k"):
            base = getattr(config, key)
            changes[key] = replace(base, **{k: int(v) for k, v in value.items()})
        elif key == "global_seed_top_k":
            changes[key] = None if value is None else int(value)
        elif key == "preposition_map":
            changes[key] = dict(value)
        else:
            raise KeyError(f"unknown config field {key!r}")
    return replace(config, **changes)


def load_config(path, base: RetrievalConfig | None = None) -> RetrievalConfig:
    """Load a JSON config file; may start from a named preset."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise SchemaError(path, 0, str(exc)) from exc
    if not isinstance(raw, dict):
        raise SchemaError(path, 1, "config must be a JSON object")
    config = base or DEFAULT_CONFIG
    if "preset" in raw:
        config = preset(raw.pop("preset"))
    try:
        return apply_overrides(config, raw)
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(path, 1, str(exc)) from exc
