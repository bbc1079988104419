"""Web page classification from page text and DOM-tree structure.

A page is cleaned and parsed into a DOM tree. Its leaf text feeds a text
encoder; its tree, with every node described by its XPath, feeds a graph
neural network. The two page vectors are normalized, concatenated and
classified by a small MLP, trained end to end with AdamW.
"""

from .checkpoint import load_model, save_model
from .config import ModelConfig, load_config, parse_config
from .data import Dataset, extract_directory, read_jsonl, split_dataset, write_jsonl
from .dom import (
    DomTree,
    PageRecord,
    build_edge_list,
    clean_html,
    extract_text,
    page_to_record,
    parse_dom,
    xpath_units,
)
from .metrics import MetricsReport, compute_metrics
from .model import Model
from .text import build_vocab, encode_eta, load_external_embeddings, tokenize
from .train import evaluate, predict, train

__all__ = [
    "Dataset", "DomTree", "MetricsReport", "Model", "ModelConfig", "PageRecord",
    "build_edge_list", "build_vocab", "clean_html", "compute_metrics", "encode_eta",
    "evaluate", "extract_directory", "extract_text", "load_config",
    "load_external_embeddings", "load_model", "page_to_record", "parse_config",
    "parse_dom", "predict", "read_jsonl", "save_model", "split_dataset", "tokenize",
    "train", "write_jsonl", "xpath_units",
]

__version__ = "0.1.0"
