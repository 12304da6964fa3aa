"""Selection loop, regret bookkeeping and run summaries."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .environment import Dataset, SchedulePlan, build_schedule
from .features import FeatureConfig, featurize
from .feedback import FeedbackConfig, FeedbackModel
from .policies import PolicyConfig, make_policy, policy_rng, precompute_best_arm
from .scoring import corpus_bleu

STEP_FIELDS = ("t", "record_id", "domain", "arm", "feedback", "raw", "oracle_arm", "oracle_raw", "regret_cum")


class SimulationError(ValueError):
    def __init__(self, step: int, cause: Exception):
        super().__init__(f"step {step}: {cause}")
        self.step = step


@dataclass(frozen=True)
class StepTrace:
    t: int
    record_id: str
    domain: str
    arm: int
    feedback: float
    raw: float
    oracle_arm: int
    oracle_raw: float
    regret_cum: float

    @property
    def regret(self) -> float:
        return self.oracle_raw - self.raw

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in STEP_FIELDS}


@dataclass
class RunLog:
    meta: dict
    steps: list[StepTrace] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.steps)

    @property
    def arm_names(self) -> list[str]:
        return list(self.meta["arms"])

    @property
    def label(self) -> str:
        return self.meta.get("label", self.meta.get("policy", {}).get("kind", "run"))

    def arms(self) -> np.ndarray:
        return np.array([s.arm for s in self.steps], dtype=np.int64)

    def cumulative_regret(self) -> np.ndarray:
        return np.array([s.regret_cum for s in self.steps])

    def dumps(self) -> str:
        lines = [json.dumps({"meta": self.meta}, sort_keys=True)]
        lines.extend(json.dumps(s.to_json()) for s in self.steps)
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(self.dumps())

    @classmethod
    def read(cls, path) -> "RunLog":
        meta, steps = None, []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                obj = json.loads(line)
                if "meta" in obj:
                    meta = obj["meta"]
                    continue
                missing = set(STEP_FIELDS) - set(obj)
                if missing:
                    raise ValueError(f"{path}: line {lineno}: missing fields {sorted(missing)}")
                steps.append(StepTrace(**{k: obj[k] for k in STEP_FIELDS}))
        if meta is None:
            raise ValueError(f"{path}: no metadata header line")
        return cls(meta, steps)


def _feature_meta(cfg: Optional[FeatureConfig]) -> Optional[dict]:
    if cfg is None:
        return None
    out = asdict(cfg)
    out["vocab"] = None if cfg.vocab is None else len(cfg.vocab)
    out["blocks"] = list(cfg.blocks)
    out["len_bin_edges"] = list(cfg.len_bin_edges)
    return out


def run_simulation(
    dataset: Dataset,
    plan: SchedulePlan,
    policy_config: PolicyConfig,
    feedback_config: FeedbackConfig,
    feature_config: Optional[FeatureConfig] = None,
    seed: int = 0,
    max_steps: Optional[int] = None,
) -> RunLog:
    """Run one policy over the scheduled stream.

    Per step: featurize (contextual policies only), choose, look up the raw
    score of the chosen arm, turn it into feedback, update the policy.
    Regret is measured on the raw scores of all arms, never on feedback.
    """
    if policy_config.contextual and feature_config is None:
        raise ValueError(f"policy {policy_config.kind!r} is contextual and needs a feature config")
    stream = build_schedule(dataset, plan)
    k = dataset.num_arms
    best_arm = precompute_best_arm(dataset) if policy_config.kind == "best_arm_oracle" else None
    dim = feature_config.dim if policy_config.contextual else None
    policy = make_policy(policy_config, k, policy_rng(seed, policy_config), dim=dim, best_arm=best_arm)
    feedback = FeedbackModel.from_seed(feedback_config, seed)

    meta = {
        "label": policy_config.label,
        "seed": int(seed),
        "arms": list(dataset.catalog.names),
        "policy": asdict(policy_config),
        "feedback": asdict(feedback_config),
        "schedule": asdict(plan),
        "features": _feature_meta(feature_config) if policy_config.contextual else None,
        "max_steps": max_steps,
    }
    log = RunLog(meta)
    scores = dataset.score_matrix
    cache: dict[int, np.ndarray] = {}
    cum = 0.0
    t = 0
    while max_steps is None or t < max_steps:
        idx = stream.next_index()
        if idx is None:
            break
        t += 1
        rec = dataset.records[idx]
        row = scores[idx]
        try:
            x = None
            if dim is not None:
                x = cache.get(idx)
                if x is None:
                    x = featurize(rec, feature_config).values
                    cache[idx] = x
                if len(x) != dim:
                    raise ValueError(f"feature vector has length {len(x)}, expected {dim}")
            arm = policy.choose(context=x, scores=row)
            raw = float(row[arm])
            reward = feedback(raw)
            policy.update(arm, reward, context=x)
        except (ValueError, IndexError) as e:
            raise SimulationError(t, e) from e
        oracle_arm = int(np.argmax(row))
        oracle_raw = float(row[oracle_arm])
        cum += oracle_raw - raw
        log.steps.append(StepTrace(t, rec.id, rec.domain, arm, reward, raw, oracle_arm, oracle_raw, cum))
    return log


def decision_heatmap(log: RunLog, interval: int, num_arms: Optional[int] = None) -> np.ndarray:
    """K x ceil(T / interval) matrix; column j is the arm distribution in interval j."""
    if interval < 1:
        raise ValueError("interval must be a positive integer")
    if not log.steps:
        raise ValueError("cannot build a heatmap from an empty log")
    k = num_arms if num_arms is not None else len(log.meta["arms"])
    arms = log.arms()
    cols = math.ceil(len(arms) / interval)
    out = np.zeros((k, cols))
    for j in range(cols):
        chunk = arms[j * interval:(j + 1) * interval]
        out[:, j] = np.bincount(chunk, minlength=k) / len(chunk)
    return out


def heatmap_starts(log: RunLog, interval: int) -> list[int]:
    """1-based step index opening each heatmap column."""
    return list(range(1, len(log.steps) + 1, interval))


@dataclass
class RunSummary:
    label: str
    seed: int
    steps: int
    cumulative_regret: float
    average_regret: float
    average_feedback: float
    mean_chosen_score: float
    mean_oracle_score: float
    pull_counts: list[int]
    corpus_bleu: Optional[float] = None
    best_arm: Optional[int] = None
    best_arm_name: Optional[str] = None
    best_arm_average_regret: Optional[float] = None
    best_arm_corpus_bleu: Optional[float] = None

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"


def _corpus_bleu_of(dataset: Dataset, idx: Sequence[int], arms: Sequence[int]) -> Optional[float]:
    pairs = []
    for i, a in zip(idx, arms):
        rec = dataset.records[i]
        if rec.arm_hypotheses is None or rec.reference_tokens is None:
            return None
        pairs.append((rec.arm_hypotheses[a], rec.reference_tokens))
    return corpus_bleu(pairs).score


def summarize(log: RunLog, dataset: Optional[Dataset] = None) -> RunSummary:
    """Summary metrics of a run.

    With a dataset the log is checked against it and corpus BLEU of the
    chosen hypotheses (plus the best-fixed-arm reference numbers) is filled in.
    """
    if not log.steps:
        raise ValueError("cannot summarize an empty log")
    arms = log.arms()
    k = len(log.meta["arms"])
    n = len(log.steps)
    oracle = np.array([s.oracle_raw for s in log.steps])
    raw = np.array([s.raw for s in log.steps])
    summary = RunSummary(
        label=log.label,
        seed=int(log.meta.get("seed", 0)),
        steps=n,
        cumulative_regret=log.steps[-1].regret_cum,
        average_regret=log.steps[-1].regret_cum / n,
        average_feedback=float(np.mean([s.feedback for s in log.steps])),
        mean_chosen_score=float(raw.mean()),
        mean_oracle_score=float(oracle.mean()),
        pull_counts=np.bincount(arms, minlength=k).tolist(),
    )
    if dataset is None:
        return summary

    if list(dataset.catalog.names) != list(log.meta["arms"]):
        raise ValueError("log and dataset disagree on the arm catalog")
    by_id = {r.id: i for i, r in enumerate(dataset.records)}
    idx = []
    for s in log.steps:
        i = by_id.get(s.record_id)
        if i is None:
            raise ValueError(f"step {s.t}: record {s.record_id!r} not in dataset")
        if dataset.score_matrix[i, s.arm] != s.raw:
            raise ValueError(f"step {s.t}: logged score does not match the dataset")
        idx.append(i)
    best = precompute_best_arm(dataset)
    best_scores = dataset.score_matrix[idx, best]
    summary.best_arm = best
    summary.best_arm_name = dataset.catalog.names[best]
    summary.best_arm_average_regret = float(np.mean(oracle - best_scores))
    summary.corpus_bleu = _corpus_bleu_of(dataset, idx, arms)
    summary.best_arm_corpus_bleu = _corpus_bleu_of(dataset, idx, [best] * n)
    return summary


SWEEP_METRICS = ("average_regret", "average_feedback", "mean_chosen_score", "corpus_bleu")


def aggregate_sweep(logs: Sequence[RunLog], dataset: Optional[Dataset] = None) -> dict[str, dict[str, tuple[float, float]]]:
    """Per-policy mean and sample standard deviation of summary metrics across seeds.

    A single run reports a standard deviation of 0.  Metrics missing from
    any run of a policy (corpus BLEU without hypotheses) are left out.
    """
    if not logs:
        raise ValueError("aggregate_sweep needs at least one log")
    grouped: dict[str, list[RunSummary]] = {}
    for log in logs:
        s = summarize(log, dataset)
        grouped.setdefault(s.label, []).append(s)
    out = {}
    for label, summaries in grouped.items():
        row = {}
        for metric in SWEEP_METRICS:
            values = [getattr(s, metric) for s in summaries]
            if any(v is None for v in values):
                continue
            arr = np.array(values, dtype=float)
            # identical runs report an exact zero, not rounding residue
            std = float(arr.std(ddof=1)) if len(arr) > 1 and np.ptp(arr) > 0 else 0.0
            row[metric] = (float(arr.mean()), std)
        out[label] = row
    return out
