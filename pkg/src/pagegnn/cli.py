"""Command line: ``extract``, ``train``, ``evaluate`` and ``predict``.

Exit status is 0 on success, 2 for usage or config errors, 3 for data errors
(unreadable or malformed pages, datasets, embeddings, checkpoints) and 4 when
training hits non-finite values.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .checkpoint import load_model, save_model
from .config import MODES, ModelConfig, load_config
from .data import extract_directory, read_jsonl, split_dataset, write_jsonl
from .errors import ConfigError, DataError, NumericError
from .text import load_external_embeddings
from .train import evaluate, predict, train

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


def _cmd_extract(args):
    records = extract_directory(args.input_dir, args.labels_file)
    write_jsonl(records, args.output)
    print(f"wrote {len(records)} records to {args.output}")


def _text_vectors(path, config):
    if not path:
        return None
    return load_external_embeddings(path, config.text_dim)


def _cmd_train(args):
    config = load_config(args.config) if args.config else ModelConfig()
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.mode:
        overrides["mode"] = args.mode
    if args.head_input == "graph-only":
        # classifying x_G alone is graph-only mode; the text branch would be dead weight
        if args.mode not in (None, "graph-only"):
            raise ConfigError(f"--head-input graph-only conflicts with --mode {args.mode}")
        overrides["mode"] = "graph-only"
    if args.readout:
        overrides["readout"] = args.readout
    if args.epochs is not None:
        overrides["epochs"] = args.epochs
    if args.text_embeddings:
        overrides.update(text_source="external", text_embeddings=args.text_embeddings)
    config = config.replace(**overrides)
    config.validate()
    vectors = _text_vectors(config.text_embeddings if config.text_source == "external" else "",
                            config)
    data = read_jsonl(args.data)
    if len(data.labels) < 2:
        raise DataError("training needs at least two classes")
    train_set, val_set, _ = split_dataset(data, (1.0 - config.val_ratio, config.val_ratio, 0.0),
                                          seed=config.seed)
    model, history = train(train_set, val_set, config, vectors)
    save_model(model, args.model_out)
    if history:
        last = history[-1]
        print(" ".join(f"{k}={v:.4f}" if isinstance(v, float) else f"{k}={v}"
                       for k, v in last.items()))
    print(f"saved model to {args.model_out}")


def _cmd_evaluate(args):
    model = load_model(args.model)
    path = args.text_embeddings or (model.config.text_embeddings
                                    if model.config.text_source == "external" else "")
    report = evaluate(read_jsonl(args.data), model, _text_vectors(path, model.config),
                      batch_size=args.batch_size)
    print(report.format(model.labels))


def _cmd_predict(args):
    model = load_model(args.model)
    path = args.text_embeddings or (model.config.text_embeddings
                                    if model.config.text_source == "external" else "")
    try:
        with open(args.html, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {args.html}: {exc}") from None
    label, probs = predict(raw, model, _text_vectors(path, model.config),
                           page_id=args.page_id or args.html)
    print(label)
    for name, p in zip(model.labels, probs):
        print(f"{name}\t{p:.6f}")


def build_parser():
    parser = argparse.ArgumentParser(prog="pagegnn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log every epoch")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="turn labelled HTML files into a JSON-lines dataset")
    p.add_argument("--input-dir", required=True)
    p.add_argument("--labels-file", required=True, help="lines of 'relative/path<TAB>label'")
    p.add_argument("--output", required=True)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--data", required=True)
    p.add_argument("--config", help="key=value hyperparameter file")
    p.add_argument("--model-out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--readout", choices=("sum", "max"))
    p.add_argument("--head-input", choices=("fused", "graph-only"), default="fused",
                   help="what the classifier sees; graph-only is the same as --mode graph-only")
    p.add_argument("--text-embeddings", help="precomputed 'page_id<TAB>v1,v2,...' vectors")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="accuracy and macro recall/precision/F1")
    p.add_argument("--data", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--text-embeddings")
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("predict", help="classify one HTML file")
    p.add_argument("--html", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--text-embeddings")
    p.add_argument("--page-id", help="id used to look up external text vectors")
    p.set_defaults(func=_cmd_predict)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
