"""Reading and writing triples, event streams and fitted models."""

from __future__ import annotations

import io
import json
import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple

import numpy as np

from .core import ModelParams, ProcessCollection, ValidationError, build_collection, validate_params
from .evaluation import GroundTruthGraph, ground_truth_matrix

FORMAT_VERSION = 1


class ParseError(ValidationError):
    pass


class SchemaError(ValidationError):
    pass


class UnsupportedVersionError(ValidationError):
    pass


class TripleRecord(NamedTuple):
    source: str
    destination: str
    timestamp: float
    line: int = 0


def _open_text(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8"), True
    return source, False


def _records(source, arity: int):
    """Yield (line number, fields) for non-comment lines."""
    fh, owned = _open_text(source)
    try:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")] if "," in line else line.split()
            if len(parts) != arity:
                raise ParseError(f"line {lineno}: expected {arity} fields, got {len(parts)}")
            yield lineno, parts
    finally:
        if owned:
            fh.close()


def _timestamp(text: str, lineno: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"line {lineno}: timestamp {text!r} is not a number") from None
    if not math.isfinite(value) or value < 0:
        raise ParseError(f"line {lineno}: timestamp {text!r} must be finite and nonnegative")
    return value


def load_triples(source) -> list[TripleRecord]:
    """Parse ``source destination timestamp`` lines (whitespace or comma separated)."""
    out = []
    for lineno, (src, dst, ts) in _records(source, 3):
        if not src or not dst:
            raise ParseError(f"line {lineno}: empty node label")
        out.append(TripleRecord(src, dst, _timestamp(ts, lineno), lineno))
    return out


def save_triples(triples: Iterable, target):
    fh, owned = (open(target, "w", encoding="utf-8"), True) if isinstance(target, (str, os.PathLike)) else (target, False)
    try:
        for rec in triples:
            fh.write(f"{rec[0]} {rec[1]} {float(rec[2])!r}\n")
    finally:
        if owned:
            fh.close()


def _label_order(labels):
    labels = set(labels)
    if all(lbl.lstrip("-").isdigit() for lbl in labels):
        return sorted(labels, key=int)
    return sorted(labels)


def build_destination_processes(triples, top_k: int | None = None):
    """One process per destination that also sends messages.

    Returns ``(collection, id_map, truth)`` where ``id_map`` maps node label to
    process id (sorted label order) and ``truth`` is the ground-truth graph
    over the retained nodes.
    """
    triples = list(triples)
    if not triples:
        raise ValidationError("no triples to build processes from")
    sources = {rec[0] for rec in triples}
    received = Counter(rec[1] for rec in triples if rec[1] in sources)
    if top_k is not None:
        if top_k < 1:
            raise ValidationError(f"top_k must be positive, got {top_k}")
        ranked = sorted(received.items(), key=lambda item: (-item[1], item[0]))
        kept = [label for label, _ in ranked[:top_k]]
    else:
        kept = list(received)
    if not kept:
        raise ValidationError("no destination node also appears as a source")
    id_map = {label: i for i, label in enumerate(_label_order(kept))}
    events = [[] for _ in id_map]
    for rec in triples:
        a = id_map.get(rec[1])
        if a is not None:
            events[a].append(rec[2])
    collection = build_collection(events)
    return collection, id_map, ground_truth_matrix(triples, id_map)


def load_events(source):
    """Parse ``process_id timestamp`` lines.

    Integer ids map to themselves (K = max id + 1, so silent processes are
    kept); other labels are numbered in sorted order. A ``# horizon: T``
    comment sets the observation horizon.
    """
    fh, owned = _open_text(source)
    try:
        text = fh.read()
    finally:
        if owned:
            fh.close()
    horizon = None
    declared_k = None
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("#") and ":" in line:
            key, _, value = line[1:].partition(":")
            key = key.strip().lower()
            try:
                if key == "horizon":
                    horizon = float(value)
                elif key == "processes":
                    declared_k = int(value)
            except ValueError:
                raise ParseError(f"bad header comment {line!r}") from None
    rows = [(lineno, pid, _timestamp(ts, lineno)) for lineno, (pid, ts) in _records(io.StringIO(text), 2)]
    labels = {pid for _, pid, _ in rows}
    if all(lbl.isdigit() for lbl in labels):
        k = max((int(lbl) for lbl in labels), default=-1) + 1
        k = max(k, declared_k or 0)
        id_map = {str(i): i for i in range(k)}
    else:
        id_map = {lbl: i for i, lbl in enumerate(_label_order(labels))}
        k = len(id_map)
    if k == 0:
        raise ValidationError("event file declares no processes")
    events = [[] for _ in range(k)]
    for _, pid, ts in rows:
        events[id_map[pid]].append(ts)
    return build_collection(events, horizon=horizon), id_map


def save_events(collection: ProcessCollection, target, id_map=None):
    labels = {i: lbl for lbl, i in (id_map or {}).items()}
    fh, owned = (open(target, "w", encoding="utf-8"), True) if isinstance(target, (str, os.PathLike)) else (target, False)
    try:
        fh.write(f"# processes: {collection.K}\n# horizon: {collection.horizon!r}\n")
        order = np.argsort(collection.times, kind="stable")
        owner = np.repeat(np.arange(collection.K), collection.sizes())
        for g in order:
            a = int(owner[g])
            fh.write(f"{labels.get(a, a)} {float(collection.times[g])!r}\n")
    finally:
        if owned:
            fh.close()


def load_input(path, fmt: str, top_k: int | None = None):
    """Collection, id_map and (for triples) ground truth from a file."""
    if fmt == "triples":
        return build_destination_processes(load_triples(path), top_k)
    if fmt == "events":
        collection, id_map = load_events(path)
        return collection, id_map, None
    raise ValidationError(f"unknown input format {fmt!r}")


@dataclass
class ModelFile:
    params: ModelParams
    id_map: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        p = self.params
        return {
            "format_version": FORMAT_VERSION,
            "K": p.K,
            "mu": [float(x) for x in p.mu],
            "beta": [float(x) for x in p.beta],
            "granger": [[float(x) for x in row] for row in p.granger],
            "id_map": {str(k): int(v) for k, v in self.id_map.items()},
            "fit": self.metadata,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelFile":
        for name in ("format_version", "K", "mu", "beta", "granger"):
            if name not in doc:
                raise SchemaError(f"model file is missing field {name!r}", [name])
        if doc["format_version"] != FORMAT_VERSION:
            raise UnsupportedVersionError(
                f"unsupported model format_version {doc['format_version']!r} (expected {FORMAT_VERSION})")
        k = doc["K"]
        try:
            granger = np.array(doc["granger"], dtype=np.float64)
            beta = np.array(doc["beta"], dtype=np.float64)
            mu = np.array(doc["mu"], dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"model file has non-numeric values: {exc}") from None
        if granger.shape != (k, k) or beta.shape != (k,) or mu.shape != (k,):
            raise SchemaError(f"model arrays do not match K={k}")
        report = validate_params((granger, beta, mu))
        if not report.ok:
            raise ValidationError("invalid model file: " + "; ".join(report.violations), report.violations)
        id_map = {str(key): int(v) for key, v in doc.get("id_map", {}).items()}
        return cls(ModelParams(granger, beta, mu), id_map, dict(doc.get("fit", {})))


def save_model(result, path, id_map=None, metadata=None):
    """Write a FitResult (or ModelParams) as a JSON model file.

    Floats are written with Python's shortest round-trip repr, so loading
    reproduces every double bit for bit.
    """
    if isinstance(result, ModelParams):
        params, meta = result, {}
    else:
        params = result.params
        cfg = result.config
        meta = {
            "iterations": cfg.iterations,
            "alpha_prior": result.alpha_prior,
            "seed": int(cfg.seed),
            "sampler_mode": cfg.sampler_mode,
            "mu_floor": result.mu_floor,
            "workers": cfg.workers,
        }
    meta.update(metadata or {})
    doc = ModelFile(params, dict(id_map or {}), meta).to_dict()
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, allow_nan=False)
        fh.write("\n")


def load_model(path) -> ModelFile:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not a JSON model file ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: model file must be a JSON object")
    return ModelFile.from_dict(doc)


def load_matrix(path) -> np.ndarray:
    """Whitespace or comma separated K x K matrix."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.replace(",", " ").split()
            try:
                rows.append([float(x) for x in parts])
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric matrix entry") from None
    matrix = np.array(rows, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ParseError(f"{path}: expected a square matrix")
    return matrix


def truth_from_file(path, fmt: str, id_map: dict) -> GroundTruthGraph:
    if fmt == "matrix":
        return GroundTruthGraph(load_matrix(path), dict(id_map))
    return ground_truth_matrix(load_triples(path), id_map)
