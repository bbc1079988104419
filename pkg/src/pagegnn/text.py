"""Tokenization, vocabulary, fixed-length id sequences and the text encoder.

The built-in encoder is a masked mean of trainable token embeddings followed
by one affine map. Vectors computed elsewhere (for instance by a pretrained
transformer) can be read with :func:`load_external_embeddings` and used in
its place.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass

import numpy as np

from .errors import DimMismatch, IdOutOfRange, MissingPage

PAD = 0
UNK = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

_WORD = re.compile(r"[^\W_]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on anything that is not a letter or digit.

    >>> tokenize("C3PO v2.0")
    ['c3po', 'v2', '0']
    """
    return _WORD.findall(text.lower())


@dataclass
class Vocabulary:
    tokens: list[str]

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self):
        return len(self.tokens)

    def __contains__(self, token):
        return token in self.index

    def id(self, token: str) -> int:
        return self.index.get(token, UNK)

    def token(self, i: int) -> str:
        return self.tokens[i]


def build_vocab(corpus: Iterable[Iterable[str]], min_count: int = 1) -> Vocabulary:
    """Ids 2.. go to tokens seen ``min_count`` times, most frequent first."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts = Counter(t for doc in corpus for t in doc)
    kept = sorted((t for t, c in counts.items() if c >= min_count), key=lambda t: (-counts[t], t))
    return Vocabulary([PAD_TOKEN, UNK_TOKEN, *kept])


@dataclass(frozen=True)
class TokenSequence:
    ids: np.ndarray
    mask_len: int


def encode_eta(tokens: list[str], vocab: Vocabulary, length: int) -> TokenSequence:
    """Truncate or pad to exactly ``length`` ids."""
    if length < 1:
        raise ValueError("sequence length must be >= 1")
    kept = tokens[:length]
    ids = np.full(length, PAD, dtype=np.int64)
    ids[: len(kept)] = [vocab.id(t) for t in kept]
    return TokenSequence(ids=ids, mask_len=len(kept))


def decode(seq: TokenSequence, vocab: Vocabulary) -> list[str]:
    return [vocab.token(int(i)) for i in seq.ids[: seq.mask_len]]


def encode_batch(token_lists: list[list[str]], vocab: Vocabulary, length: int):
    """Stack sequences into a ``(B, length)`` id matrix and mask lengths."""
    seqs = [encode_eta(t, vocab, length) for t in token_lists]
    ids = np.stack([s.ids for s in seqs]) if seqs else np.zeros((0, length), np.int64)
    return ids, np.array([s.mask_len for s in seqs], dtype=np.int64)


def masked_mean_forward(table, ids, mask_len):
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        raise IdOutOfRange(f"token id outside vocabulary of size {table.shape[0]}")
    mask = np.arange(ids.shape[1])[None, :] < mask_len[:, None]
    denom = np.maximum(mask_len, 1).astype(np.float64)[:, None]
    summed = np.einsum("bl,bld->bd", mask.astype(np.float64), table[ids])
    return summed / denom, (ids, mask, denom, table.shape)


def masked_mean_backward(dout, cache):
    ids, mask, denom, shape = cache
    dtable = np.zeros(shape)
    weights = mask / denom
    np.add.at(dtable, ids[mask], (weights[:, :, None] * dout[:, None, :])[mask])
    return dtable


def encode_text(seq: TokenSequence, params) -> np.ndarray:
    """Reference text vector for one sequence.

    ``params`` needs ``tok_emb``, ``text_W`` and ``text_b``.
    """
    mean, _ = masked_mean_forward(
        params["tok_emb"], seq.ids[None, :], np.array([seq.mask_len])
    )
    return (mean @ params["text_W"] + params["text_b"])[0]


class ExternalEmbeddings(Mapping):
    """Page id to precomputed text vector. Missing ids raise ``MissingPage``."""

    def __init__(self, vectors: dict[str, np.ndarray], dim: int):
        self.vectors = vectors
        self.dim = dim

    def __getitem__(self, page_id):
        try:
            return self.vectors[page_id]
        except KeyError:
            raise MissingPage(page_id) from None

    def __iter__(self):
        return iter(self.vectors)

    def __len__(self):
        return len(self.vectors)


def load_external_embeddings(path, dim: int | None = None) -> ExternalEmbeddings:
    """Read ``page_id<TAB>v1,v2,...`` lines.

    With ``dim=None`` the width of the first record is taken as the expected
    width for all the others.
    """
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            page_id, sep, values = line.partition("\t")
            if not sep:
                raise DimMismatch(f"{path}:{lineno}: expected 'page_id<TAB>values'")
            vec = np.array([float(v) for v in values.split(",")], dtype=np.float64)
            if dim is None:
                dim = len(vec)
            if len(vec) != dim:
                raise DimMismatch(f"{path}:{lineno}: page {page_id!r} has {len(vec)} components, expected {dim}")
            if not np.all(np.isfinite(vec)):
                raise DimMismatch(f"{path}:{lineno}: non-finite component")
            vectors[page_id] = vec
    return ExternalEmbeddings(vectors, dim or 0)
