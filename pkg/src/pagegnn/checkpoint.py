"""Model files.

Layout: a magic line carrying the format version, one line of JSON metadata
(config, class labels, token vocabulary, tag vocabulary as ``tag<TAB>id``
lines, and the name/shape of every array), then the arrays themselves as
row-major little-endian float64 in metadata order.
"""

from __future__ import annotations

import json

import numpy as np

from . import nn, text, xpath
from .config import ModelConfig
from .errors import ConfigError, CorruptCheckpoint
from .model import Model

MAGIC = "PAGEGNN-CHECKPOINT"
FORMAT_VERSION = 1


def save_model(model: Model, path):
    p = model.params
    arrays = [{"name": n, "kind": "param", "shape": list(v.shape), "decay": p.decay[n]}
              for n, v in p.values.items()]
    arrays += [{"name": n, "kind": "buffer", "shape": list(v.shape)} for n, v in p.buffers.items()]
    meta = {
        "config": model.config.to_dict(),
        "labels": model.labels,
        "vocab": model.vocab.tokens,
        "tags": "\n".join(model.tags.to_lines()),
        "arrays": arrays,
    }
    with open(path, "wb") as fh:
        fh.write(f"{MAGIC} {FORMAT_VERSION}\n".encode())
        fh.write(json.dumps(meta, ensure_ascii=False).encode("utf-8") + b"\n")
        for a in arrays:
            fh.write(np.ascontiguousarray(p[a["name"]], dtype="<f8").tobytes())


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        blob = fh.read()
    first, _, rest = blob.partition(b"\n")
    parts = first.decode("utf-8", errors="replace").split()
    if len(parts) != 2 or parts[0] != MAGIC:
        raise CorruptCheckpoint(f"{path}: header: not a model checkpoint")
    if parts[1] != str(FORMAT_VERSION):
        raise CorruptCheckpoint(
            f"{path}: header: format version {parts[1]} is not the supported version {FORMAT_VERSION}"
        )
    meta_line, sep, data = rest.partition(b"\n")
    if not sep:
        raise CorruptCheckpoint(f"{path}: metadata: truncated")
    try:
        meta = json.loads(meta_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CorruptCheckpoint(f"{path}: metadata: {exc}") from None
    for key in ("config", "labels", "vocab", "tags", "arrays"):
        if key not in meta:
            raise CorruptCheckpoint(f"{path}: metadata: missing field {key!r}")
    try:
        config = ModelConfig.from_dict(meta["config"])
    except (ConfigError, TypeError) as exc:
        raise CorruptCheckpoint(f"{path}: config: {exc}") from None
    try:
        tags = xpath.TagVocabulary.from_lines(meta["tags"].split("\n"))
    except (ValueError, IndexError) as exc:
        raise CorruptCheckpoint(f"{path}: tags: {exc}") from None
    params = nn.ParameterStore()
    offset = 0
    for a in meta["arrays"]:
        shape = tuple(a["shape"])
        nbytes = 8 * int(np.prod(shape, dtype=np.int64))
        chunk = data[offset:offset + nbytes]
        if len(chunk) != nbytes:
            raise CorruptCheckpoint(f"{path}: array {a['name']!r}: truncated "
                                    f"({len(chunk)} of {nbytes} bytes)")
        value = np.frombuffer(chunk, dtype="<f8").reshape(shape).astype(np.float64)
        offset += nbytes
        if a["kind"] == "buffer":
            params.add_buffer(a["name"], value)
        else:
            params.add(a["name"], value, decay=a.get("decay", True))
    if offset != len(data):
        raise CorruptCheckpoint(f"{path}: arrays: {len(data) - offset} trailing bytes")
    return Model(config, meta["labels"], text.Vocabulary(meta["vocab"]), tags, params)
