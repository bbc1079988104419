import dataclasses

import numpy as np
import pytest

from pagegnn import synthetic
from pagegnn.data import Dataset
from pagegnn.dom import page_to_record
from pagegnn.errors import DimMismatch, EmptyDocument, NonFiniteGradient, UnknownLabel
from pagegnn.text import ExternalEmbeddings
from pagegnn.train import evaluate, make_batches, predict, train


def test_make_batches_merges_trailing_singleton():
    rng = np.random.default_rng(0)
    sizes = [len(b) for b in make_batches(9, 4, rng)]
    assert sizes == [4, 5]
    batches = make_batches(10, 4, rng)
    assert [len(b) for b in batches] == [4, 4, 2]
    assert sorted(np.concatenate(batches)) == list(range(10))


def test_zero_epochs(small_corpus, tiny_config):
    model, history = train(small_corpus, small_corpus, tiny_config.replace(epochs=0))
    assert history == []
    assert evaluate(small_corpus, model).confusion.sum() == len(small_corpus)


def test_history_fields(small_corpus, tiny_config):
    _, history = train(small_corpus, small_corpus, tiny_config)
    assert [h["epoch"] for h in history] == [1, 2, 3]
    assert set(history[0]) == {"epoch", "loss", "train_accuracy", "val_accuracy", "val_recall",
                               "val_precision", "val_f1"}
    assert all(np.isfinite(h["loss"]) for h in history)


def test_training_is_deterministic(small_corpus, tiny_config):
    cfg = tiny_config.replace(dropout=0.2)
    m1, h1 = train(small_corpus, None, cfg)
    m2, h2 = train(small_corpus, None, cfg)
    assert h1 == h2
    for name in m1.params.names():
        np.testing.assert_array_equal(m1.params[name], m2.params[name])


def test_predict_training_page(small_corpus, tiny_config):
    model, _ = train(small_corpus, None, tiny_config.replace(epochs=40))
    html = synthetic.nested_page(["market stock", "bank profit"], 4)
    label, probs = predict(html, model)
    assert label == "nested"
    assert probs.shape == (2,) and abs(probs.sum() - 1) < 1e-12
    with pytest.raises(EmptyDocument):
        predict("  \n\t ", model)


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_non_finite_training_is_reported(small_corpus, tiny_config):
    with pytest.raises(NonFiniteGradient, match="epoch 1"):
        train(small_corpus, None, tiny_config.replace(lr=1e300))


def test_unknown_label_in_evaluation(small_corpus, tiny_config):
    model, _ = train(small_corpus, None, tiny_config.replace(epochs=1))
    other = Dataset([page_to_record("<p>x</p>", "mystery")])
    with pytest.raises(UnknownLabel):
        evaluate(other, model)


def _swap_tokens(record, tokens):
    return dataclasses.replace(record, tokens=tuple(tokens))


def test_graph_only_ignores_text(small_corpus, tiny_config):
    model, _ = train(small_corpus, None, tiny_config.replace(mode="graph-only"))
    recs = small_corpus.records[:4]
    swapped = [_swap_tokens(r, ["completely", "different", "words"]) for r in recs]
    np.testing.assert_array_equal(model.predict_proba(recs), model.predict_proba(swapped))


def test_text_only_ignores_structure(small_corpus, tiny_config):
    model, _ = train(small_corpus, None, tiny_config.replace(mode="text-only"))
    recs = small_corpus.records[:4]
    flat = [dataclasses.replace(page_to_record("<p>x</p>", r.label, r.id), tokens=r.tokens)
            for r in recs]
    np.testing.assert_array_equal(model.predict_proba(recs), model.predict_proba(flat))


def test_external_embeddings(small_corpus, tiny_config):
    rng = np.random.default_rng(5)
    vecs = ExternalEmbeddings({r.id: rng.normal(size=4) + (r.label == "table")
                               for r in small_corpus}, 4)
    cfg = tiny_config.replace(text_source="external", text_dim=4, epochs=5)
    model, history = train(small_corpus, None, cfg, text_vectors=vecs)
    assert len(history) == 5
    assert evaluate(small_corpus, model, vecs).confusion.sum() == len(small_corpus)
    with pytest.raises(DimMismatch):
        evaluate(small_corpus, model, None)
    narrow = ExternalEmbeddings({k: v[:3] for k, v in vecs.items()}, 3)
    with pytest.raises(DimMismatch):
        evaluate(small_corpus, model, narrow)


def test_inconsistent_model_dims(small_corpus, tiny_config):
    model, _ = train(small_corpus, None, tiny_config.replace(epochs=1))
    model.params.values["mlp.W1"] = model.params["mlp.W1"][:-1]
    with pytest.raises(DimMismatch):
        evaluate(small_corpus, model)
