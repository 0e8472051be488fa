"""Run configuration and the export header sidecar.

One config drives a whole run. Hyperparameters live at the top level, so
they are identical across languages by construction; only the checkpoint
name varies per language. Checkpoint choices and every effective
hyperparameter are echoed into an ``export_header.json`` sidecar next to
each export, because the wire formats themselves have no room for them.
"""

import dataclasses
import json
import os
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

HEADER_SCHEMA = "adapter-export/1"
TASKS = ("generation", "classification")


class AdapterError(Exception):
    """Caller-facing failure: bad config, bad corpus file, bad arguments."""

    exit_code = 2


@dataclass(frozen=True)
class AdapterConfig:
    """Everything a run needs, mirrored one-to-one by the config file."""

    model_names: dict[str, str] = field(default_factory=dict)
    task: str = "generation"
    epochs: int = 3
    batch_size: int = 8
    learning_rate: float = 5e-5
    seed: int = 0
    device: str = "cpu"
    max_length: int = 128
    # generation task
    max_new_tokens: int = 40
    samples_per_prompt: int = 0
    # classification tasks (ensemble losses, confidence trajectories)
    n_models: int = 10
    inclusion_prob: float = 0.5
    n_bins: int = 9
    member_fraction: float = 0.5

    def __post_init__(self):
        if not self.model_names:
            raise AdapterError("config needs at least one entry in model_names")
        for lang, name in self.model_names.items():
            if not isinstance(name, str) or not name.strip():
                raise AdapterError(f"model_names[{lang!r}] must be a checkpoint name")
        if self.task not in TASKS:
            raise AdapterError(f"unknown task {self.task!r}; expected one of {TASKS}")
        for attr in ("epochs", "batch_size", "n_models", "n_bins", "max_new_tokens",
                     "max_length"):
            if getattr(self, attr) < 1:
                raise AdapterError(f"{attr} must be >= 1, got {getattr(self, attr)}")
        if self.n_models < 2:
            raise AdapterError("n_models must be >= 2 so every document can sit on both sides")
        if self.learning_rate <= 0:
            raise AdapterError(f"learning_rate must be positive, got {self.learning_rate}")
        if self.samples_per_prompt < 0:
            raise AdapterError("samples_per_prompt must be >= 0")
        if not 0.0 < self.inclusion_prob < 1.0:
            raise AdapterError(f"inclusion_prob must be in (0, 1), got {self.inclusion_prob}")
        if not 0.0 < self.member_fraction < 1.0:
            raise AdapterError(f"member_fraction must be in (0, 1), got {self.member_fraction}")

    def checkpoint_for(self, lang: str) -> str:
        if lang not in self.model_names:
            raise AdapterError(
                f"no checkpoint configured for language {lang!r}; "
                f"model_names covers {sorted(self.model_names)}"
            )
        return self.model_names[lang]

    def hyperparameters(self) -> dict:
        """The cross-language training knobs, as recorded in export headers."""
        return {
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
            "max_length": self.max_length,
        }


_FIELDS = {f.name for f in dataclasses.fields(AdapterConfig)}


def load_config(path: str) -> AdapterConfig:
    """Parse a TOML or JSON config file into an AdapterConfig.

    The file mirrors the dataclass exactly; unknown keys are rejected so
    typos fail loudly instead of silently using defaults.
    """
    try:
        if path.endswith(".toml"):
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        elif path.endswith(".json"):
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        else:
            raise AdapterError(f"config file {path!r} must end in .toml or .json")
    except OSError as exc:
        raise AdapterError(f"cannot open config file {path!r}: {exc}") from exc
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise AdapterError(f"{path}: invalid config syntax: {exc}") from exc
    if not isinstance(raw, dict):
        raise AdapterError(f"{path}: config must be a table/object at top level")
    unknown = sorted(set(raw) - _FIELDS)
    if unknown:
        raise AdapterError(f"{path}: unknown config key(s) {unknown}")
    if "model_names" in raw and not isinstance(raw["model_names"], dict):
        raise AdapterError(f"{path}: model_names must map language tags to checkpoints")
    try:
        return AdapterConfig(**raw)
    except TypeError as exc:
        raise AdapterError(f"{path}: bad config value: {exc}") from exc


def write_header(out_dir: str, config: AdapterConfig, operation: str, **extras) -> str:
    """Write export_header.json recording the full provenance of one export."""
    header = {
        "schema": HEADER_SCHEMA,
        "operation": operation,
        "task": config.task,
        "model_names": dict(sorted(config.model_names.items())),
        "hyperparameters": config.hyperparameters(),
        **extras,
    }
    path = os.path.join(out_dir, "export_header.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(header, sort_keys=True, indent=2) + "\n")
    return path
