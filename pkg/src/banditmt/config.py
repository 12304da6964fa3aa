"""Experiment configuration files (YAML or JSON) with dotted-key overrides."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import yaml

from .environment import ArmCatalog, Dataset, SchedulePlan, load_dataset
from .features import FeatureConfig, load_vocab
from .feedback import FeedbackConfig
from .policies import PolicyConfig
from .synth import SynthSpec, generate

TOP_KEYS = {
    "arms", "arms_file", "dataset", "synth", "schedule", "policy", "policies",
    "feedback", "features", "max_steps", "seeds", "output_dir", "heatmap_interval",
}


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


def parse_override(text: str) -> tuple[str, object]:
    key, sep, value = text.partition("=")
    if not sep or not key:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    return key.strip(), yaml.safe_load(value)


def apply_overrides(raw: dict, overrides) -> dict:
    raw = copy.deepcopy(raw)
    for key, value in overrides:
        node = raw
        parts = key.split(".")
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-mapping")
        node[parts[-1]] = value
    return raw


def _section(raw: dict, name: str, cls):
    data = dict(raw.get(name) or {})
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"section {name!r}: {e}") from e


def _policy(data: dict) -> PolicyConfig:
    data = dict(data)
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    try:
        return PolicyConfig(**data)
    except TypeError as e:
        raise ConfigError(f"policy: {e}") from e


@dataclass
class ExperimentConfig:
    catalog: Optional[ArmCatalog]
    dataset_path: Optional[Path] = None
    synth: Optional[SynthSpec] = None
    plan: SchedulePlan = field(default_factory=SchedulePlan)
    schedule_seed: Optional[int] = None
    policies: list[PolicyConfig] = field(default_factory=lambda: [PolicyConfig()])
    feedback: FeedbackConfig = field(default_factory=FeedbackConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    max_steps: Optional[int] = None
    seeds: list[int] = field(default_factory=lambda: [0])
    output_dir: Path = Path("out")
    heatmap_interval: int = 100

    def __post_init__(self):
        if (self.dataset_path is None) == (self.synth is None):
            raise ConfigError("give exactly one of 'dataset' and 'synth'")
        if self.dataset_path is not None and self.catalog is None:
            raise ConfigError("'dataset' needs 'arms' or 'arms_file'")
        if not self.seeds:
            raise ConfigError("'seeds' must be nonempty")
        if not self.policies:
            raise ConfigError("no policy configured")
        labels = [p.label for p in self.policies]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"policy labels must be unique, got {labels}; set 'name' to disambiguate")
        if self.heatmap_interval < 1:
            raise ConfigError("heatmap_interval must be positive")

    def load_dataset(self) -> Dataset:
        if self.synth is not None:
            return generate(self.synth)
        return load_dataset(self.dataset_path, self.catalog)

    def plan_for(self, seed: int) -> SchedulePlan:
        return replace(self.plan, seed=self.schedule_seed if self.schedule_seed is not None else int(seed))

    @classmethod
    def from_dict(cls, raw: dict, base_dir=".") -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a mapping")
        unknown = set(raw) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown config key(s) {sorted(unknown)}")
        base = Path(base_dir)

        def path(p):
            return None if p is None else base / p

        synth = None
        if raw.get("synth") is not None:
            try:
                synth = SynthSpec.from_dict(raw["synth"])
            except TypeError as e:
                raise ConfigError(f"synth: {e}") from e
        catalog = None
        if raw.get("arms") is not None:
            catalog = ArmCatalog(tuple(raw["arms"]))
        elif raw.get("arms_file") is not None:
            catalog = ArmCatalog.from_file(path(raw["arms_file"]))
        elif synth is not None:
            catalog = synth.catalog

        schedule = dict(raw.get("schedule") or {})
        schedule_seed = schedule.pop("seed", None)
        plan = _section({"schedule": schedule}, "schedule", SchedulePlan)

        if raw.get("policies") is not None:
            policies = [_policy(p) for p in raw["policies"]]
        else:
            policies = [_policy(raw.get("policy") or {})]

        feats = dict(raw.get("features") or {})
        if feats.get("vocab") is not None:
            feats["vocab"] = load_vocab(path(feats["vocab"]))
        features = _section({"features": feats}, "features", FeatureConfig)

        seeds = raw.get("seeds", [0])
        if isinstance(seeds, int):
            seeds = [seeds]
        return cls(
            catalog=catalog,
            dataset_path=path(raw.get("dataset")),
            synth=synth,
            plan=plan,
            schedule_seed=schedule_seed,
            policies=policies,
            feedback=_section(raw, "feedback", FeedbackConfig),
            features=features,
            max_steps=raw.get("max_steps"),
            seeds=[int(s) for s in seeds],
            output_dir=path(raw.get("output_dir", "out")),
            heatmap_interval=int(raw.get("heatmap_interval", 100)),
        )


def read_config(path, overrides=()) -> ExperimentConfig:
    with open(path, encoding="utf-8") as f:
        raw = yaml.safe_load(f) or {}
    raw = apply_overrides(raw, overrides)
    return ExperimentConfig.from_dict(raw, base_dir=Path(path).parent)
