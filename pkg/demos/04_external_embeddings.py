"""
Bringing your own text vectors
------------------------------

The built-in text encoder can be replaced by fixed vectors computed elsewhere,
for example by a pretrained language model. They are read from a TSV file of
``page_id<TAB>v1,v2,...`` lines and matched to pages by id. Here we fake them
with noisy class-dependent vectors.
"""

import os
import tempfile

import numpy as np

from pagegnn import synthetic
from pagegnn.config import ModelConfig
from pagegnn.data import Dataset, split_dataset
from pagegnn.text import load_external_embeddings
from pagegnn.train import evaluate, train

rng = np.random.default_rng(0)
records = synthetic.separable_corpus(20, seed=1)
dim = 8
centers = {"nested": rng.normal(size=dim), "table": rng.normal(size=dim)}

path = os.path.join(tempfile.mkdtemp(), "vectors.tsv")
with open(path, "w") as fh:
    for r in records:
        v = centers[r.label] + rng.normal(scale=1.0, size=dim)
        fh.write(r.id + "\t" + ",".join(f"{x:.6f}" for x in v) + "\n")

vectors = load_external_embeddings(path, dim)
print(len(vectors), "vectors of width", dim)

###############################################################################
# The config has to agree on the width. Text-only mode shows what the
# vectors alone are worth; fused mode adds the DOM structure back.

train_set, _, test_set = split_dataset(Dataset(records), (0.7, 0.0, 0.3), seed=0)
for mode in ("text-only", "fused"):
    cfg = ModelConfig(text_source="external", text_dim=dim, mode=mode, epochs=300)
    model, _ = train(train_set, None, cfg, text_vectors=vectors, track_train=False)
    print(mode, f"{evaluate(test_set, model, vectors).f1:.3f}")
