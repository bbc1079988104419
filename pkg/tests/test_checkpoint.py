import numpy as np
import pytest

from pagegnn.checkpoint import load_model, save_model
from pagegnn.errors import CorruptCheckpoint
from pagegnn.train import evaluate, train


@pytest.fixture(scope="module")
def trained(small_corpus):
    from pagegnn.config import ModelConfig

    cfg = ModelConfig(seq_len=16, text_dim=6, unit_dim=3, max_units=6, num_subscripts=8,
                      graph_dim=5, gnn_layers=2, batch_size=4, epochs=4, readout="max")
    model, _ = train(small_corpus, None, cfg)
    return model


def test_roundtrip(trained, small_corpus, tmp_path):
    path = tmp_path / "m.ckpt"
    save_model(trained, path)
    back = load_model(path)
    assert back.config == trained.config
    assert back.labels == trained.labels
    assert back.vocab.tokens == trained.vocab.tokens
    assert back.tags.tags == trained.tags.tags
    for name in trained.params.names():
        np.testing.assert_array_equal(back.params[name], trained.params[name])
        assert back.params.decay[name] == trained.params.decay[name]
    for name, buf in trained.params.buffers.items():
        np.testing.assert_array_equal(back.params.buffers[name], buf)
    np.testing.assert_array_equal(back.predict_proba(small_corpus.records),
                                  trained.predict_proba(small_corpus.records))
    assert evaluate(small_corpus, back).as_dict() == evaluate(small_corpus, trained).as_dict()


def _corrupt(trained, tmp_path, edit):
    path = tmp_path / "m.ckpt"
    save_model(trained, path)
    path.write_bytes(edit(path.read_bytes()))
    return path


@pytest.mark.parametrize("edit, field", [
    (lambda b: b[:-9], "truncated"),
    (lambda b: b + b"\x00", "trailing"),
    (lambda b: b.replace(b"PAGEGNN-CHECKPOINT 1", b"PAGEGNN-CHECKPOINT 2", 1), "version"),
    (lambda b: b"GARBAGE\n" + b, "header"),
    (lambda b: b.split(b"\n", 1)[0] + b"\n{broken", "metadata"),
    (lambda b: b.replace(b'"readout": "max"', b'"readout": "median"', 1), "config"),
])
def test_corrupt_files_name_the_field(trained, tmp_path, edit, field):
    path = _corrupt(trained, tmp_path, edit)
    with pytest.raises(CorruptCheckpoint, match=field):
        load_model(path)
