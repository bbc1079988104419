"""
Which branch carries the signal?
--------------------------------

Two corpora built so that only one signal separates the classes. In the
first every page holds the same bag of words and only the layout differs; in
the second all pages share one layout and only the vocabulary differs. Each
branch trained alone should succeed on one corpus and sit near chance on the
other.
"""

from pagegnn import synthetic
from pagegnn.config import ModelConfig
from pagegnn.data import Dataset, split_dataset
from pagegnn.train import evaluate, train

for name in ("structure_only_corpus", "text_only_corpus"):
    data = Dataset(getattr(synthetic, name)(30, seed=0))
    train_set, _, test_set = split_dataset(data, (2 / 3, 0.0, 1 / 3), seed=0)
    for mode in ("graph-only", "text-only", "fused"):
        model, _ = train(train_set, None, ModelConfig(mode=mode, epochs=100), track_train=False)
        acc = evaluate(test_set, model).accuracy
        print(f"{name:22s} {mode:10s} test accuracy {acc:.3f}")

###############################################################################
# Swapping the sum readout for a max readout changes how node states are
# pooled into one page vector:

data = Dataset(synthetic.separable_corpus(30, seed=0))
train_set, _, test_set = split_dataset(data, (2 / 3, 0.0, 1 / 3), seed=0)
for readout in ("sum", "max"):
    model, _ = train(train_set, None, ModelConfig(readout=readout, epochs=50), track_train=False)
    print(readout, evaluate(test_set, model).as_dict())
