"""Datasets of page records: JSON-lines interchange, extraction, splitting.

One record per line::

    {"id": "a/1.html", "label": "news", "tokens": ["..."],
     "nodes": [[["html", 0]], [["html", 0], ["body", 0]]],
     "edges": [[0, 1], [1, 0]]}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dom import PageRecord, page_to_record
from .errors import ClassTooSmall, DataError


@dataclass
class Dataset:
    records: list[PageRecord]
    labels: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.labels:
            self.labels = sorted({r.label for r in self.records})
        self.label_map = {lab: i for i, lab in enumerate(self.labels)}
        missing = {r.label for r in self.records} - set(self.label_map)
        if missing:
            raise DataError(f"records carry labels outside the label set: {sorted(missing)}")

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def label_ids(self):
        return np.array([self.label_map[r.label] for r in self.records], dtype=np.int64)

    def subset(self, indices):
        return Dataset([self.records[i] for i in indices], list(self.labels))


def record_to_json(r: PageRecord) -> str:
    return json.dumps(
        {
            "id": r.id,
            "label": r.label,
            "tokens": r.tokens,
            "nodes": [[[t, s] for t, s in units] for units in r.nodes],
            "edges": [[a, b] for a, b in r.edges],
        },
        ensure_ascii=False,
    )


def record_from_json(obj) -> PageRecord:
    try:
        nodes = [[(str(t), int(s)) for t, s in units] for units in obj["nodes"]]
        edges = [(int(a), int(b)) for a, b in obj["edges"]]
        rec = PageRecord(
            id=str(obj["id"]),
            label=str(obj["label"]),
            tokens=[str(t) for t in obj["tokens"]],
            nodes=nodes,
            edges=edges,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed record: {exc}") from None
    if not nodes:
        raise DataError(f"record {rec.id!r} has no nodes")
    if any(not 0 <= v < len(nodes) for e in edges for v in e):
        raise DataError(f"record {rec.id!r} has an edge outside its node range")
    return rec


def write_jsonl(records, path):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(record_to_json(r) + "\n")


def read_jsonl(path) -> Dataset:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
            try:
                records.append(record_from_json(obj))
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    return Dataset(records)


def read_labels_file(path):
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            rel, sep, label = line.partition("\t")
            if not sep or not label:
                raise DataError(f"{path}:{lineno}: expected 'relative/path<TAB>label'")
            pairs.append((rel, label))
    return pairs


def extract_directory(input_dir, labels_file, max_units=15) -> list[PageRecord]:
    """Turn every labelled HTML file into a record, ordered by relative path."""
    root = Path(input_dir)
    records = []
    for rel, label in sorted(read_labels_file(labels_file)):
        path = root / rel
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise DataError(f"cannot read {path}: {exc}") from None
        try:
            records.append(page_to_record(raw, label, page_id=rel, max_units=max_units))
        except DataError as exc:
            raise type(exc)(f"{rel}: {exc}") from None
    return records


def split_dataset(data: Dataset, ratios=(0.8, 0.1, 0.1), seed=0, strict=False):
    """Stratified train / validation / test split.

    Records of each class are shuffled and spread evenly over a common
    sequence (the k-th of n records in a class sits at ``(k + 0.5) / n``);
    validation takes the head of that sequence, test the next slice, and
    train everything else. Split sizes are ``round(N * ratio)``.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or min(ratios) < 0 or not math.isclose(sum(ratios), 1.0, abs_tol=1e-9):
        raise ValueError(f"ratios must be three non-negative numbers summing to 1, got {ratios}")
    rng = np.random.default_rng(seed)
    y = data.label_ids()
    needed = 1 + (ratios[1] > 0) + (ratios[2] > 0)
    keyed = []
    for c in range(len(data.labels)):
        members = np.flatnonzero(y == c)
        if strict and len(members) < needed:
            raise ClassTooSmall(
                f"class {data.labels[c]!r} has {len(members)} records, need {needed}"
            )
        members = members[rng.permutation(len(members))]
        n = len(members)
        keyed.extend(((k + 0.5) / n, c, int(i)) for k, i in enumerate(members))
    order = [i for _, _, i in sorted(keyed)]
    n = len(order)
    n_val = math.floor(n * ratios[1] + 0.5)
    n_test = min(math.floor(n * ratios[2] + 0.5), n - n_val)
    val = order[:n_val]
    test = order[n_val:n_val + n_test]
    train = sorted(order[n_val + n_test:])
    return data.subset(train), data.subset(sorted(val)), data.subset(sorted(test))
