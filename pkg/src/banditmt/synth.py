"""Synthetic multi-domain score datasets.

Each record gets per-arm scores ``clip(N(mu[arm, domain], sigma^2), 0, 100)``.
Source sentences are placeholder tokens; an optional domain one-hot vector
rides in the embedding field so contextual policies have something to learn
from.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .environment import ArmCatalog, Dataset, EvalRecord

# Corpus BLEU of each system per test domain (DE->EN), used as arm means.
PRESET_DOMAINS = ("general", "ted", "wipo")
PRESET_MEANS = {
    "nmt-general": (29.4, 34.2, 36.0),
    "smt-general": (23.9, 30.7, 26.7),
    "smt-ted": (16.5, 28.7, 12.0),
    "nmt-ted": (16.5, 31.5, 8.4),
    "nmt-cont-ted": (27.5, 39.3, 29.5),
    "smt-wipo": (9.9, 9.7, 51.2),
    "nmt-wipo": (6.6, 7.7, 61.9),
    "nmt-cont-wipo": (8.0, 10.0, 62.3),
}


@dataclass
class SynthSpec:
    arms: list[str]
    domains: list[str]
    means: dict[str, dict[str, float]]
    sigma: float = 5.0
    records_per_domain: int = 100
    seed: int = 0
    embedding: Optional[str] = "onehot"
    length_range: tuple[int, int] = (3, 30)

    def __post_init__(self):
        ArmCatalog(tuple(self.arms))
        if not self.domains or len(set(self.domains)) != len(self.domains):
            raise ValueError("domains must be a nonempty list of unique labels")
        for arm in self.arms:
            if arm not in self.means:
                raise ValueError(f"no means given for arm {arm!r}")
            for d in self.domains:
                mu = self.means[arm].get(d)
                if mu is None:
                    raise ValueError(f"no mean given for arm {arm!r} in domain {d!r}")
                if not 0.0 <= mu <= 100.0:
                    raise ValueError(f"mean {mu} for ({arm}, {d}) outside [0, 100]")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.records_per_domain < 1:
            raise ValueError("records_per_domain must be positive")
        if self.embedding not in (None, "onehot"):
            raise ValueError(f"unknown embedding kind {self.embedding!r}")
        lo, hi = self.length_range
        if not 1 <= lo <= hi:
            raise ValueError("length_range must satisfy 1 <= min <= max")

    @property
    def catalog(self) -> ArmCatalog:
        return ArmCatalog(tuple(self.arms))

    def mean_matrix(self) -> np.ndarray:
        """K x D matrix of arm means."""
        return np.array([[self.means[a][d] for d in self.domains] for a in self.arms])

    @classmethod
    def from_dict(cls, raw: dict) -> "SynthSpec":
        raw = dict(raw)
        preset = raw.pop("preset", None)
        if preset is not None:
            if preset != "eight_systems":
                raise ValueError(f"unknown synth preset {preset!r}")
            return preset_spec(**raw)
        if "length_range" in raw:
            raw["length_range"] = tuple(raw["length_range"])
        return cls(**raw)


def preset_spec(**overrides) -> SynthSpec:
    """Eight arms over general/ted/wipo with the preset system scores as means."""
    spec = dict(
        arms=list(PRESET_MEANS),
        domains=list(PRESET_DOMAINS),
        means={a: dict(zip(PRESET_DOMAINS, v)) for a, v in PRESET_MEANS.items()},
    )
    spec.update(overrides)
    return SynthSpec(**spec)


def generate(spec: SynthSpec) -> Dataset:
    rng = np.random.default_rng(int(spec.seed))
    mu = spec.mean_matrix()
    lo, hi = spec.length_range
    records = []
    for j, domain in enumerate(spec.domains):
        onehot = None
        if spec.embedding == "onehot":
            onehot = np.zeros(len(spec.domains))
            onehot[j] = 1.0
        for i in range(spec.records_per_domain):
            noise = rng.standard_normal(len(spec.arms))
            scores = np.clip(mu[:, j] + spec.sigma * noise, 0.0, 100.0)
            length = int(rng.integers(lo, hi + 1))
            records.append(EvalRecord(
                id=f"{domain}-{i}",
                domain=domain,
                source_tokens=tuple(f"{domain}{w}" for w in range(length)),
                arm_scores=scores,
                embedding=onehot,
            ))
    return Dataset(records, spec.catalog)
