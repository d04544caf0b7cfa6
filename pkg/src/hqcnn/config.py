"""Flat key = value experiment configs with command-line overrides.

Example::

    seed = 0
    n_qubits = 4
    epochs = 60
    batch = 64
    lr = 0.01
    momentum = 0.9
    weight_decay = 0.0001
    ansatz_reps = 2
    observables = per_qubit_z
    feature_map = family=pauli strings=X,Y,Z reps=1 entanglement=linear
    data = generate per_class=40
    out = runs/demo

``data`` is either a dataset file path or ``generate per_class=<n>``.
Unknown keys are rejected.  When ``seed`` is absent the ``HQCNN_SEED``
environment variable is consulted, then 0.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

from .datagen import Dataset, load as load_dataset, make_dataset
from .encodings import FeatureMapSpec
from .qnn import OBSERVABLE_MODES

SEED_ENV_VAR = "HQCNN_SEED"

_KNOWN_KEYS = (
    "seed",
    "n_qubits",
    "epochs",
    "batch",
    "lr",
    "momentum",
    "weight_decay",
    "ansatz_reps",
    "feature_map",
    "observables",
    "data",
    "out",
)


class ConfigError(ValueError):
    """Raised for malformed or out-of-range experiment configuration."""


@dataclass
class ExperimentConfig:
    seed: int = 0
    n_qubits: int = 4
    epochs: int = 500
    batch: int = 64
    lr: float = 0.01
    momentum: float = 0.9
    weight_decay: float = 1e-4
    ansatz_reps: int = 1
    feature_map: FeatureMapSpec = field(
        default_factory=lambda: FeatureMapSpec("zz", reps=1, entanglement="linear")
    )
    feature_map_text: str = "family=zz reps=1 entanglement=linear"
    observables: str = "per_qubit_z"
    data: str = ""
    out: str = ""

    def echo(self) -> dict:
        """Config as written, for embedding in run reports."""
        return {
            "seed": self.seed,
            "n_qubits": self.n_qubits,
            "epochs": self.epochs,
            "batch": self.batch,
            "lr": self.lr,
            "momentum": self.momentum,
            "weight_decay": self.weight_decay,
            "ansatz_reps": self.ansatz_reps,
            "feature_map": self.feature_map_text,
            "observables": self.observables,
            "data": self.data,
        }

    def sweep_fields(self) -> dict:
        """Fields compared when validating a sweep (output path excluded)."""
        fields = self.echo()
        fields["feature_map"] = self.feature_map.to_string()  # normalized
        return fields

    def resolve_dataset(self) -> Dataset:
        if not self.data:
            raise ConfigError("config needs a data entry (path or generate spec)")
        if self.data.startswith("generate"):
            tokens = self.data.split()
            per_class = None
            for token in tokens[1:]:
                key, _, value = token.partition("=")
                if key != "per_class" or not value:
                    raise ConfigError(f"bad generate spec token {token!r}")
                per_class = int(value)
            if per_class is None:
                raise ConfigError("generate spec needs per_class=<n>")
            if per_class < 5:
                raise ConfigError(f"per_class must be >= 5, got {per_class}")
            return make_dataset(per_class, seed=self.seed)
        if not os.path.exists(self.data):
            raise ConfigError(f"dataset file not found: {self.data}")
        return load_dataset(self.data)


def _parse_value(key: str, raw: str):
    try:
        if key in ("seed", "n_qubits", "epochs", "batch", "ansatz_reps"):
            return int(raw)
        if key in ("lr", "momentum", "weight_decay"):
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad numeric value for {key}: {raw!r}") from None
    return raw


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.seed < 0:
        raise ConfigError("seed must be >= 0")
    if not 1 <= cfg.n_qubits <= 12:
        raise ConfigError("n_qubits must be in [1, 12]")
    if cfg.epochs < 0:
        raise ConfigError("epochs must be >= 0")
    if cfg.batch < 1:
        raise ConfigError("batch must be >= 1")
    if not cfg.lr > 0:
        raise ConfigError("lr must be > 0")
    if not 0 <= cfg.momentum < 1:
        raise ConfigError("momentum must be in [0, 1)")
    if cfg.weight_decay < 0:
        raise ConfigError("weight_decay must be >= 0")
    if cfg.ansatz_reps < 1:
        raise ConfigError("ansatz_reps must be >= 1")
    if cfg.observables not in OBSERVABLE_MODES:
        raise ConfigError(f"observables must be one of {OBSERVABLE_MODES}")
    if cfg.feature_map.family == "zz" and cfg.n_qubits < 2:
        raise ConfigError("zz feature maps need n_qubits >= 2")
    for s in cfg.feature_map.strings:
        if len(s) > cfg.n_qubits:
            raise ConfigError(f"pauli string {s!r} longer than n_qubits")


def parse_config(
    text: str, overrides: list[str] | None = None, source: str = "<config>"
) -> ExperimentConfig:
    entries: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}: line {lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{source}: line {lineno}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(f"{source}: line {lineno}: duplicate key {key!r}")
        entries[key] = value.strip()
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"--set needs key=value, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"--set: unknown key {key!r}")
        entries[key] = value.strip()

    cfg = ExperimentConfig()
    if "seed" not in entries and os.environ.get(SEED_ENV_VAR):
        entries["seed"] = os.environ[SEED_ENV_VAR]
    for key, raw in entries.items():
        if key == "feature_map":
            try:
                cfg.feature_map = FeatureMapSpec.from_string(raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: feature_map: {exc}") from None
            cfg.feature_map_text = raw
        else:
            setattr(cfg, key, _parse_value(key, raw))
    _validate(cfg)
    return cfg


def parse_config_file(path, overrides: list[str] | None = None) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, overrides, source=str(path))
