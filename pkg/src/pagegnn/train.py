"""Training loop, evaluation and single-page prediction."""

from __future__ import annotations

import logging

import numpy as np

from . import nn, text, xpath
from .config import ModelConfig
from .data import Dataset
from .dom import page_to_record
from .errors import NonFiniteGradient
from .metrics import MetricsReport, compute_metrics, confusion_matrix
from .model import Model

log = logging.getLogger(__name__)


def make_batches(n, batch_size, rng):
    """Shuffled index batches; a trailing single example joins the previous batch."""
    order = rng.permutation(n)
    batches = [order[i:i + batch_size] for i in range(0, n, batch_size)]
    if len(batches) > 1 and len(batches[-1]) == 1:
        last = batches.pop()
        batches[-1] = np.concatenate([batches[-1], last])
    return batches


def build_model(train_set: Dataset, config: ModelConfig, rng) -> Model:
    vocab = text.build_vocab((r.tokens for r in train_set), config.min_count)
    tags = xpath.build_tag_vocab(train_set.records)
    return Model.initialize(config, train_set.labels, vocab, tags, rng)


def train(train_set: Dataset, val_set: Dataset | None, config: ModelConfig,
          text_vectors=None, track_train=True):
    """Fit a model with AdamW on mini-batches.

    Returns ``(model, history)``. ``history`` has one dict per epoch with the
    mean training loss, eval-mode training accuracy (when ``track_train``)
    and validation metrics. With a non-empty validation set the returned
    parameters are those of the epoch with the best validation macro F1
    (earliest on ties); otherwise those of the last epoch.
    """
    if len(train_set) == 0:
        raise ValueError("training set is empty")
    rng = np.random.default_rng(config.seed)
    model = build_model(train_set, config, rng)
    if len(train_set) < 2 and config.uses_graph:
        raise ValueError("batch normalization needs at least two training pages")
    state = nn.TrainState.for_params(model.params)
    history = []
    best_f1, best_params = -1.0, None
    has_val = val_set is not None and len(val_set) > 0
    for epoch in range(1, config.epochs + 1):
        losses, sizes = [], []
        for b, idx in enumerate(make_batches(len(train_set), config.batch_size, rng), 1):
            batch = model.make_batch([train_set.records[i] for i in idx], text_vectors)
            loss, _ = model.loss_and_grad(batch, train=True, rng=rng)
            if not np.isfinite(loss):
                raise NonFiniteGradient(f"epoch {epoch}, batch {b}: loss is {loss}")
            try:
                nn.adamw_step(model.params, state, config.lr, config.beta1, config.beta2,
                              config.eps, config.weight_decay)
            except NonFiniteGradient as exc:
                raise NonFiniteGradient(f"epoch {epoch}, batch {b}: {exc}") from None
            losses.append(loss)
            sizes.append(len(idx))
        entry = {"epoch": epoch, "loss": float(np.average(losses, weights=sizes))}
        if track_train:
            entry["train_accuracy"] = _score(train_set, model, text_vectors).accuracy
        if has_val:
            report = _score(val_set, model, text_vectors)
            entry.update({f"val_{k}": v for k, v in report.as_dict().items()})
            if report.f1 > best_f1:
                best_f1, best_params = report.f1, model.params.copy()
        history.append(entry)
        log.info("epoch %d %s", epoch, {k: round(v, 4) for k, v in entry.items()})
    if best_params is not None:
        model.params = best_params
    return model, history


def predict_labels(data: Dataset, model: Model, text_vectors=None, batch_size=32):
    probs = model.predict_proba(data.records, text_vectors, batch_size)
    return probs.argmax(axis=1)


def _score(data, model, text_vectors=None, batch_size=32):
    pred = predict_labels(data, model, text_vectors, batch_size)
    truth = [model.label_id(r.label) for r in data.records]
    return compute_metrics(confusion_matrix(truth, pred, len(model.labels)))


def evaluate(data: Dataset, model: Model, text_vectors=None, batch_size=32) -> MetricsReport:
    """Eval-mode metrics; raises ``DimMismatch`` if the model is inconsistent."""
    model.check_dims()
    return _score(data, model, text_vectors, batch_size)


def predict(html, model: Model, text_vectors=None, page_id=""):
    """Label and class probabilities for one page (markup string or bytes)."""
    record = page_to_record(html, None, page_id=page_id, max_units=model.config.max_units)
    probs = model.predict_proba([record], text_vectors)[0]
    return model.labels[int(np.argmax(probs))], probs
