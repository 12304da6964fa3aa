"""Dataset model, JSON-lines ingestion and domain-mixture scheduling."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

SCHEDULE_KINDS = ("sequential", "cyclic_blocks", "shuffled_mixture")
RECORD_FIELDS = ("id", "domain", "source", "ref", "scores", "hyps", "emb")


class DatasetError(ValueError):
    """A dataset file or record violates the record format."""


@dataclass(frozen=True)
class ArmCatalog:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if len(names) < 2:
            raise ValueError(f"an arm catalog needs at least 2 arms, got {len(names)}")
        if len(set(names)) != len(names):
            raise ValueError(f"arm names must be unique: {list(names)}")

    def __len__(self) -> int:
        return len(self.names)

    def index(self, name: str) -> int:
        return self.names.index(name)

    @classmethod
    def from_file(cls, path) -> "ArmCatalog":
        with open(path, encoding="utf-8") as f:
            return cls(tuple(line.strip() for line in f if line.strip()))

    def to_file(self, path) -> None:
        Path(path).write_text("".join(n + "\n" for n in self.names), encoding="utf-8")


@dataclass(frozen=True, eq=False)
class EvalRecord:
    """One source sentence with the precomputed score of every arm on it.

    ``arm_scores`` are sentence-level scores on the 0-100 BLEU-point scale,
    in catalog order.
    """

    id: str
    domain: str
    source_tokens: tuple[str, ...]
    arm_scores: np.ndarray
    reference_tokens: Optional[tuple[str, ...]] = None
    arm_hypotheses: Optional[tuple[tuple[str, ...], ...]] = None
    embedding: Optional[np.ndarray] = None

    def __post_init__(self):
        scores = np.array(self.arm_scores, dtype=float)
        scores.setflags(write=False)
        object.__setattr__(self, "arm_scores", scores)
        if self.embedding is not None:
            emb = np.array(self.embedding, dtype=float)
            emb.setflags(write=False)
            object.__setattr__(self, "embedding", emb)
        if not self.source_tokens:
            raise ValueError(f"record {self.id!r}: source_tokens must be nonempty")
        if scores.ndim != 1 or not np.all((scores >= 0.0) & (scores <= 100.0)):
            raise ValueError(f"record {self.id!r}: arm scores must lie in [0, 100]")
        if self.arm_hypotheses is not None and len(self.arm_hypotheses) != len(scores):
            raise ValueError(
                f"record {self.id!r}: {len(self.arm_hypotheses)} hypotheses for "
                f"{len(scores)} arms"
            )

    @property
    def num_arms(self) -> int:
        return len(self.arm_scores)

    def to_json(self) -> dict:
        out = {
            "id": self.id,
            "domain": self.domain,
            "source": " ".join(self.source_tokens),
        }
        if self.reference_tokens is not None:
            out["ref"] = " ".join(self.reference_tokens)
        out["scores"] = self.arm_scores.tolist()
        if self.arm_hypotheses is not None:
            out["hyps"] = [" ".join(h) for h in self.arm_hypotheses]
        if self.embedding is not None:
            out["emb"] = self.embedding.tolist()
        return out


@dataclass(eq=False)
class Dataset:
    """An immutable list of records sharing one arm catalog."""

    records: list[EvalRecord]
    catalog: ArmCatalog

    def __post_init__(self):
        k = len(self.catalog)
        for rec in self.records:
            if rec.num_arms != k:
                raise ValueError(
                    f"record {rec.id!r} has {rec.num_arms} scores, catalog has {k} arms"
                )
        if self.records:
            self._scores = np.vstack([r.arm_scores for r in self.records])
        else:
            self._scores = np.zeros((0, k))
        self._scores.setflags(write=False)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, i: int) -> EvalRecord:
        return self.records[i]

    def __iter__(self) -> Iterator[EvalRecord]:
        return iter(self.records)

    @property
    def num_arms(self) -> int:
        return len(self.catalog)

    @property
    def score_matrix(self) -> np.ndarray:
        """N x K matrix of raw arm scores, rows in record order."""
        return self._scores

    @property
    def domains(self) -> list[str]:
        """Domain labels in order of first appearance."""
        return list(dict.fromkeys(r.domain for r in self.records))

    def indices_by_domain(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for i, r in enumerate(self.records):
            out.setdefault(r.domain, []).append(i)
        return out


def _tokens(value, name: str, lineno: int) -> tuple[str, ...]:
    if not isinstance(value, str):
        raise DatasetError(f"line {lineno}: field {name!r} must be a string")
    return tuple(value.split())


def _numbers(value, name: str, lineno: int) -> list[float]:
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise DatasetError(f"line {lineno}: field {name!r} must be an array of numbers")
    return [float(v) for v in value]


def parse_record(obj, catalog: ArmCatalog, lineno: int = 0) -> EvalRecord:
    """Validate one decoded JSON object and turn it into an :class:`EvalRecord`."""
    if not isinstance(obj, dict):
        raise DatasetError(f"line {lineno}: expected a JSON object")
    unknown = set(obj) - set(RECORD_FIELDS)
    if unknown:
        raise DatasetError(f"line {lineno}: unknown field(s) {sorted(unknown)}")
    for key in ("id", "domain", "source", "scores"):
        if key not in obj:
            raise DatasetError(f"line {lineno}: missing required field {key!r}")
    for key in ("id", "domain"):
        if not isinstance(obj[key], str):
            raise DatasetError(f"line {lineno}: field {key!r} must be a string")

    k = len(catalog)
    scores = _numbers(obj["scores"], "scores", lineno)
    if len(scores) != k:
        raise DatasetError(
            f"line {lineno}: scores has {len(scores)} entries, expected K={k}"
        )
    for s in scores:
        if not 0.0 <= s <= 100.0:
            raise DatasetError(f"line {lineno}: score {s} outside [0, 100]")

    hyps = None
    if obj.get("hyps") is not None:
        raw = obj["hyps"]
        if not isinstance(raw, list) or not all(isinstance(h, str) for h in raw):
            raise DatasetError(f"line {lineno}: field 'hyps' must be an array of strings")
        if len(raw) != k:
            raise DatasetError(f"line {lineno}: hyps has {len(raw)} entries, expected K={k}")
        hyps = tuple(tuple(h.split()) for h in raw)

    ref = _tokens(obj["ref"], "ref", lineno) if obj.get("ref") is not None else None
    emb = _numbers(obj["emb"], "emb", lineno) if obj.get("emb") is not None else None
    source = _tokens(obj["source"], "source", lineno)
    if not source:
        raise DatasetError(f"line {lineno}: source must contain at least one token")

    return EvalRecord(
        id=obj["id"],
        domain=obj["domain"],
        source_tokens=source,
        arm_scores=np.array(scores),
        reference_tokens=ref,
        arm_hypotheses=hyps,
        embedding=None if emb is None else np.array(emb),
    )


def load_dataset(path, catalog: ArmCatalog) -> Dataset:
    """Read a JSON-lines dataset; every error names the offending line number."""
    records = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}: line {lineno}: malformed JSON ({e.msg})") from e
            try:
                records.append(parse_record(obj, catalog, lineno))
            except DatasetError as e:
                raise DatasetError(f"{path}: {e}") from e
            except ValueError as e:
                raise DatasetError(f"{path}: line {lineno}: {e}") from e
    return Dataset(records, catalog)


def dumps_record(record: EvalRecord) -> str:
    return json.dumps(record.to_json(), ensure_ascii=False)


def write_dataset(records: Sequence[EvalRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(dumps_record(rec) + "\n")


@dataclass
class SchedulePlan:
    kind: str = "sequential"
    block_size: int = 100
    domain_order: list[str] = field(default_factory=list)
    mixture_ratios: dict[str, float] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {SCHEDULE_KINDS}")
        if self.kind == "cyclic_blocks":
            if self.block_size < 1:
                raise ValueError("block_size must be a positive integer")
            if not self.domain_order:
                raise ValueError("cyclic_blocks needs a nonempty domain_order")
        if self.kind == "shuffled_mixture":
            if any(w < 0 for w in self.mixture_ratios.values()):
                raise ValueError("mixture ratios must be nonnegative")
            if sum(self.mixture_ratios.values()) <= 0:
                raise ValueError("mixture ratios must sum to a positive value")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("schedule seed must be a 64-bit unsigned integer")


class ScheduledStream:
    """Single-consumer cursor over a fixed ordering of dataset records."""

    def __init__(self, dataset: Dataset, order: Sequence[int]):
        self.dataset = dataset
        self.order = np.asarray(order, dtype=np.int64)
        if len(self.order) and (self.order.min() < 0 or self.order.max() >= len(dataset)):
            raise IndexError("schedule references a record index outside the dataset")
        self.cursor = 0

    def __len__(self) -> int:
        return len(self.order)

    def next(self) -> Optional[EvalRecord]:
        """Return the record under the cursor and advance, or None once exhausted."""
        if self.cursor >= len(self.order):
            return None
        rec = self.dataset.records[self.order[self.cursor]]
        self.cursor += 1
        return rec

    def next_index(self) -> Optional[int]:
        if self.cursor >= len(self.order):
            return None
        i = int(self.order[self.cursor])
        self.cursor += 1
        return i

    def __iter__(self) -> Iterator[EvalRecord]:
        while (rec := self.next()) is not None:
            yield rec


def _cyclic_order(by_domain: dict[str, list[int]], plan: SchedulePlan, total: int) -> list[int]:
    cursors = {d: 0 for d in plan.domain_order}
    order: list[int] = []
    while len(order) < total:
        for d in plan.domain_order:
            pool = by_domain[d]
            for _ in range(min(plan.block_size, total - len(order))):
                order.append(pool[cursors[d] % len(pool)])
                cursors[d] += 1
            if len(order) >= total:
                break
    return order


def _mixture_order(by_domain: dict[str, list[int]], plan: SchedulePlan) -> list[int]:
    rng = np.random.default_rng(int(plan.seed))
    domains = sorted(by_domain)
    pools = []
    for d in domains:
        idx = np.array(by_domain[d])
        rng.shuffle(idx)
        pools.append(list(idx))
    base = np.array([float(plan.mixture_ratios.get(d, 0.0)) for d in domains])
    heads = [0] * len(domains)
    order: list[int] = []
    total = sum(len(p) for p in pools)
    while len(order) < total:
        alive = np.array([heads[j] < len(pools[j]) for j in range(len(domains))])
        w = np.where(alive, base, 0.0)
        if w.sum() <= 0:
            # only zero-weight domains remain; drain them evenly
            w = alive.astype(float)
        j = int(rng.choice(len(domains), p=w / w.sum()))
        order.append(int(pools[j][heads[j]]))
        heads[j] += 1
    return order


def build_schedule(dataset: Dataset, plan: SchedulePlan) -> ScheduledStream:
    """Order the dataset according to ``plan``.

    The result depends only on the dataset and the plan (including its seed).
    """
    by_domain = dataset.indices_by_domain()
    if plan.kind == "sequential":
        return ScheduledStream(dataset, range(len(dataset)))

    referenced = plan.domain_order if plan.kind == "cyclic_blocks" else list(plan.mixture_ratios)
    for d in referenced:
        if not by_domain.get(d):
            raise ValueError(f"schedule references domain {d!r} which has no records")

    if plan.kind == "cyclic_blocks":
        return ScheduledStream(dataset, _cyclic_order(by_domain, plan, len(dataset)))
    return ScheduledStream(dataset, _mixture_order(by_domain, plan))
