"""
Training on a generated corpus
------------------------------

Two page templates: nested lists filled with finance words, and flat tables
filled with cooking words. Either signal alone would do, so the fused model
should fit this almost at once.
"""

from pagegnn import synthetic
from pagegnn.config import ModelConfig
from pagegnn.data import Dataset, split_dataset
from pagegnn.train import evaluate, predict, train

data = Dataset(synthetic.separable_corpus(30, seed=0))
train_set, val_set, test_set = split_dataset(data, (0.6, 0.2, 0.2), seed=0)
print(len(train_set), "train /", len(val_set), "val /", len(test_set), "test")

config = ModelConfig(epochs=20, seed=0)
model, history = train(train_set, val_set, config)
for h in history[:5]:
    print(f"epoch {h['epoch']:2d} loss {h['loss']:.4f} val f1 {h['val_f1']:.3f}")

print(evaluate(test_set, model).format(model.labels))

###############################################################################
# A fresh page, never seen during training:

html = synthetic.table_page(["butter and flour", "oven at 200", "pinch of salt"], 3)
label, probs = predict(html, model)
print(label, dict(zip(model.labels, probs.round(3))))
