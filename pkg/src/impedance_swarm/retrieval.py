"""Scenario database and exact Euclidean nearest-neighbour retrieval.

Descriptions are embedded with a signed feature hash into 384 dimensions
and L2-normalized; lookup is a linear scan over every record.
"""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .scene import ObstacleKind

EMBED_DIM = 384

# (low, high) per parameter and obstacle class
PARAM_RANGES: dict[ObstacleKind, dict[str, tuple[float, float]]] = {
    ObstacleKind.HARD: {"m": (1.0, 1.5), "k": (7.0, 10.0), "d": (3.0, 5.0), "F": (0.4, 0.7), "c": (0.2, 0.5)},
    ObstacleKind.SOFT: {"m": (3.0, 7.0), "k": (0.1, 0.9), "d": (1.0, 2.0), "F": (0.2, 0.45), "c": (0.6, 0.9)},
}

# leader speed caps (m/s) keyed by (kind, dynamic scene)
SPEED_CAPS: dict[tuple[ObstacleKind, bool], float] = {
    (ObstacleKind.HARD, False): 1.4,
    (ObstacleKind.SOFT, False): 0.7,
    (ObstacleKind.HARD, True): 1.0,
    (ObstacleKind.SOFT, True): 0.6,
}

_RANGE_TOL = 1e-12


class RangeViolation(ValueError):
    pass


class DatabaseError(ValueError):
    pass


@dataclass(frozen=True)
class ImpedanceProfile:
    m: float  # virtual mass (kg)
    k: float  # virtual stiffness (N/m)
    d: float  # virtual damping (N s/m)
    F: float  # external virtual force (N)
    c: float  # separation distance (m)
    v_max: float  # leader speed cap (m/s)

    def __post_init__(self):
        for name, value in asdict(self).items():
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be a positive finite number, got {value}")

    def violations(self, kind: ObstacleKind) -> list[str]:
        out = []
        for name, (lo, hi) in PARAM_RANGES[kind].items():
            v = getattr(self, name)
            if not lo - _RANGE_TOL <= v <= hi + _RANGE_TOL:
                out.append(f"{name}={v} outside [{lo}, {hi}] for {kind.value} obstacles")
        return out

    def check(self, kind: ObstacleKind) -> None:
        problems = self.violations(kind)
        if problems:
            raise RangeViolation("; ".join(problems))

    def matching_kind(self) -> ObstacleKind | None:
        for kind in ObstacleKind:
            if not self.violations(kind):
                return kind
        return None


# -- embedding --------------------------------------------------------------

_TOKEN_RE = re.compile(r"[a-z]+|\d+")


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _hash(token: str, salt: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(token.encode(), digest_size=8, salt=salt).digest(), "little")


def hash_embed(text: str, dim: int = EMBED_DIM) -> np.ndarray:
    """Signed feature hashing: one hash picks the slot, an independent one the sign."""
    if not text.strip():
        raise ValueError("cannot embed empty text")
    tokens = tokenize(text)
    if not tokens:
        raise ValueError(f"no word tokens in {text!r}")
    v = np.zeros(dim)
    for tok in tokens:
        sign = 1.0 if _hash(tok, b"sign") & 1 else -1.0
        v[_hash(tok, b"slot") % dim] += sign
    norm = np.linalg.norm(v)
    if norm == 0.0:
        # every token cancelled out; fall back to unsigned counts
        for tok in tokens:
            v[_hash(tok, b"slot") % dim] += 1.0
        norm = np.linalg.norm(v)
    return v / norm


embed: Callable[[str], np.ndarray] = hash_embed


def distance(x: Sequence[float], y: Sequence[float]) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(np.sqrt(np.sum((x - y) ** 2)))


# -- database ---------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioRecord:
    id: int
    description_text: str
    embedding: np.ndarray
    profile: ImpedanceProfile
    dominant_kind: ObstacleKind

    def __eq__(self, other):
        if not isinstance(other, ScenarioRecord):
            return NotImplemented
        return (
            (self.id, self.description_text, self.profile, self.dominant_kind)
            == (other.id, other.description_text, other.profile, other.dominant_kind)
            and np.array_equal(self.embedding, other.embedding)
        )

    __hash__ = None

    @classmethod
    def create(cls, id: int, text: str, profile: ImpedanceProfile, kind: ObstacleKind) -> ScenarioRecord:
        return cls(id, text, embed(text), profile, kind)


class VectorDatabase:
    """Immutable, id-ordered list of records with a stacked embedding matrix."""

    def __init__(self, records: Iterable[ScenarioRecord]):
        self.records: tuple[ScenarioRecord, ...] = tuple(records)
        for i, r in enumerate(self.records):
            if r.id != i:
                raise DatabaseError(f"record ids must be unique and dense from 0; position {i} holds id {r.id}")
            try:
                r.profile.check(r.dominant_kind)
            except RangeViolation as exc:
                raise RangeViolation(f"record {r.id}: {exc}") from None
        dim = EMBED_DIM
        self.matrix = np.array([r.embedding for r in self.records]) if self.records else np.zeros((0, dim))

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i) -> ScenarioRecord:
        return self.records[i]

    def __iter__(self):
        return iter(self.records)

    def __eq__(self, other):
        return isinstance(other, VectorDatabase) and self.records == other.records


def build_database(records: Iterable[ScenarioRecord]) -> VectorDatabase:
    records = list(records)
    ids = [r.id for r in records]
    if len(set(ids)) != len(ids):
        dup = sorted({i for i in ids if ids.count(i) > 1})
        raise DatabaseError(f"duplicate record id(s) {dup}")
    for r in records:
        if not np.array_equal(r.embedding, embed(r.description_text)):
            raise DatabaseError(f"record {r.id}: stored embedding does not match embed(text)")
    return VectorDatabase(sorted(records, key=lambda r: r.id))


def retrieve_with_distance(query_text: str, db: VectorDatabase) -> tuple[ScenarioRecord, float]:
    if len(db) == 0:
        raise DatabaseError("database is empty")
    q = embed(query_text)
    dists = np.sqrt(np.sum((db.matrix - q) ** 2, axis=1))
    best = int(np.argmin(dists))  # first minimum, i.e. lowest id on ties
    return db.records[best], float(dists[best])


def retrieve(query_text: str, db: VectorDatabase) -> ScenarioRecord:
    return retrieve_with_distance(query_text, db)[0]


def record_to_dict(r: ScenarioRecord, with_embedding: bool = False) -> dict:
    d = {"id": r.id, "text": r.description_text, "profile": asdict(r.profile), "kind": r.dominant_kind.value}
    if with_embedding:
        d["embedding"] = r.embedding.tolist()
    return d


def save_database(db: VectorDatabase, path: str | Path, with_embeddings: bool = False) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump([record_to_dict(r, with_embeddings) for r in db], f, indent=1)
        f.write("\n")


def database_from_list(raw: list) -> VectorDatabase:
    records = []
    for i, item in enumerate(raw):
        try:
            text = item["text"]
            profile = ImpedanceProfile(**item["profile"])
            kind = ObstacleKind(item["kind"])
            rid = int(item["id"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DatabaseError(f"record at index {i}: {exc}") from None
        vec = embed(text)
        if "embedding" in item and not np.allclose(np.asarray(item["embedding"]), vec, rtol=0, atol=1e-12):
            raise DatabaseError(f"record {rid}: stored embedding differs from the current embedding function")
        records.append(ScenarioRecord(rid, text, vec, profile, kind))
    return build_database(records)


def load_database(path: str | Path) -> VectorDatabase:
    with open(path, encoding="utf-8") as f:
        return database_from_list(json.load(f))
