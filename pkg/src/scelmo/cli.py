"""Single entry point dispatching all pipeline subcommands.

Stages compose through files; every artifact embeds its magic, format
version, effective config, and seed, so a stage re-run with the same inputs
and seed reproduces its output byte for byte (single-threaded).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, mutation
from .detector import (evaluate, evaluate_real_bugs, load_detector, predict,
                       save_detector, train_detector)
from .errors import ScelmoError
from .extraction import PATTERNS, CodeInstance, extract_instances
from .ingest import (deduplicate, load_corpus, read_store, split_corpus, tag_all,
                     write_store)
from .lm import CollapseWeights, LmConfig, load_lm, save_lm, train_lm
from .providers import (ALL_MODES, NoContextElmoProvider, ScelmoProvider,
                        STATIC_MODES, StaticProvider, corpus_token_source)
from .serialization import (MAGIC_DATASET, MAGIC_INSTANCES, MAGIC_WARNINGS,
                            jsonl_header, read_jsonl, write_jsonl)
from .static_embeddings import (load_embeddings, random_provider, save_embeddings,
                                train_cbow, train_fasttext)
from .vocab import build_vocabulary

DEFAULT_SEED = 7

_EXPORT_NOTE = (
    "export: provided by the companion exporter tool (frontend/); it turns "
    "JavaScript sources into the token/AST JSONL consumed by `ingest`."
)


def _resolve_seed(value) -> int:
    if value is not None:
        return int(value)
    env = os.environ.get("SCELMO_SEED")
    return int(env) if env else DEFAULT_SEED


def _config_of(args, skip=("func", "out", "seed")) -> dict:
    cfg = {}
    for key, value in vars(args).items():
        if key in skip or key.startswith("_"):
            continue
        cfg[key] = str(value) if isinstance(value, Path) else value
    return cfg


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------

def cmd_ingest(args) -> int:
    seed = _resolve_seed(args.seed)
    corpus = load_corpus(args.in_path)
    if args.dedup:
        corpus = deduplicate(corpus)
    if args.tag_all:
        corpus = tag_all(corpus, args.tag_all)
    elif args.train_frac is not None:
        corpus = split_corpus(corpus, args.train_frac, seed, by_project=args.by_project)
    write_store(args.out, corpus, _config_of(args), seed)
    splits = {}
    for rec in corpus.files:
        splits[rec.split] = splits.get(rec.split, 0) + 1
    _emit({"files": len(corpus.files), "skipped_lines": corpus.skipped_lines,
           "splits": splits, "out": str(args.out)})
    return 0


def cmd_extract(args) -> int:
    seed = _resolve_seed(args.seed)
    corpus, _ = read_store(args.store)
    files = corpus.split_files(args.split)
    instances = []
    for rec in files:
        instances.extend(extract_instances(rec, args.pattern, seed,
                                           max_elem=args.max_elem, unit=args.unit))
    header = jsonl_header(MAGIC_INSTANCES, _config_of(args), seed)
    write_jsonl(args.out, header, (inst.to_json() for inst in instances))
    _emit({"instances": len(instances), "files": len(files), "out": str(args.out)})
    return 0


def _read_instances(path):
    header, records, skipped = read_jsonl(path, magic=None)
    instances = []
    for rec in records:
        try:
            instances.append(CodeInstance.from_json(rec))
        except (KeyError, TypeError, ValueError):
            skipped += 1
    return header, instances, skipped


def cmd_mutate(args) -> int:
    seed = _resolve_seed(args.seed)
    _, instances, bad = _read_instances(args.in_path)
    if not instances:
        raise ScelmoError(f"no instances in {args.in_path}")
    op_pool = None
    if args.op_pool_from:
        _, pool_instances, _ = _read_instances(args.op_pool_from)
        op_pool = mutation.operator_pool(pool_instances)
    dataset, stats = mutation.build_dataset(instances, seed, op_pool=op_pool)
    header = jsonl_header(MAGIC_DATASET, _config_of(args), seed,
                          pairs=stats.pairs, skipped=stats.skipped)
    write_jsonl(args.out, header, (inst.to_json() for inst in dataset))
    _emit({"records": len(dataset), "pairs": stats.pairs,
           "skipped_pairs": stats.skipped, "malformed_lines": bad,
           "out": str(args.out)})
    return 0


def cmd_train_embeddings(args) -> int:
    seed = _resolve_seed(args.seed)
    corpus, _ = read_store(args.store)
    vocab = build_vocabulary(corpus, v_max=args.vocab, split=args.split)
    if args.method == "random":
        table = random_provider(vocab, dim=args.dim, seed=seed)
    elif args.method == "cbow":
        table = train_cbow(corpus, vocab, dim=args.dim, window=args.window,
                           epochs=args.epochs, lr=args.lr, negatives=args.negatives,
                           seed=seed, split=args.split)
    else:
        table = train_fasttext(corpus, vocab, dim=args.dim, window=args.window,
                               epochs=args.epochs, lr=args.lr, negatives=args.negatives,
                               seed=seed, split=args.split)
    save_embeddings(args.out, table, _config_of(args), seed)
    _emit({"method": args.method, "vocab_entries": len(vocab.entries),
           "dim": args.dim, "epoch_losses": table.epoch_losses, "out": str(args.out)})
    return 0


def cmd_train_lm(args) -> int:
    seed = _resolve_seed(args.seed)
    corpus, _ = read_store(args.store)
    config = LmConfig(layers=args.layers, hidden=args.dim, seq_len=args.seq_len,
                      batch=args.batch, epochs=args.epochs, lr=args.lr,
                      lm_vocab=args.lm_vocab, max_chars=args.max_chars)
    model = train_lm(corpus, config, seed, split=args.split)
    save_lm(args.out, model, _config_of(args), seed)
    _emit({"layers": args.layers, "hidden": args.dim,
           "vocab": len(model.vocab), "epoch_losses": model.epoch_losses,
           "out": str(args.out)})
    return 0


def _collapse_weights(name: str, layers: int) -> CollapseWeights:
    if name == "top":
        return CollapseWeights.top_layer(layers)
    return CollapseWeights.equal(layers)


def _build_provider(args, need_store_corpus=None):
    mode = args.mode
    if mode in STATIC_MODES:
        if not args.embeddings:
            raise ScelmoError(f"--embeddings is required for mode {mode}")
        table, _ = load_embeddings(args.embeddings)
        if table.method != mode:
            raise ScelmoError(
                f"embeddings at {args.embeddings} were trained with method "
                f"{table.method!r}, not {mode!r}")
        return StaticProvider(table)
    if not args.lm:
        raise ScelmoError(f"--lm is required for mode {mode}")
    model, _ = load_lm(args.lm)
    weights = _collapse_weights(getattr(args, "collapse", "equal"), model.config.layers)
    if mode == "nocontext-elmo":
        return NoContextElmoProvider(model, weights)
    if need_store_corpus is None:
        if not args.store:
            raise ScelmoError("--store is required for mode scelmo")
        need_store_corpus, _ = read_store(args.store)
    return ScelmoProvider(model, weights, corpus_token_source(need_store_corpus))


def cmd_train_detector(args) -> int:
    seed = _resolve_seed(args.seed)
    _, dataset, _ = _read_instances(args.dataset)
    if not dataset:
        raise ScelmoError(f"no instances in {args.dataset}")
    provider = _build_provider(args)
    model = train_detector(dataset, provider, seed, epochs=args.epochs,
                           batch=args.batch, lr=args.lr, dropout=args.dropout,
                           shuffle_labels=args.shuffle_labels)
    save_detector(args.out, model, _config_of(args), seed)
    _emit({"pattern": model.pattern, "mode": model.mode, "input_dim": model.input_dim,
           "epoch_losses": model.epoch_losses, "out": str(args.out)})
    return 0


def cmd_evaluate(args) -> int:
    model, _ = load_detector(args.model)
    args.mode = model.mode
    _, dataset, _ = _read_instances(args.dataset)
    if not dataset:
        raise ScelmoError(f"no instances in {args.dataset}")
    provider = _build_provider(args)
    report = evaluate(model, dataset, provider, threshold=args.threshold)
    payload = report.to_json()
    payload["config"] = _config_of(args)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    _emit(payload)
    return 0


def cmd_eval_real(args) -> int:
    model, _ = load_detector(args.model)
    args.mode = model.mode
    provider = _build_provider(args)
    _, records, skipped = read_jsonl(args.pairs, magic=None)
    pairs = []
    for rec in records:
        try:
            pairs.append((CodeInstance.from_json(rec["buggy"]),
                          CodeInstance.from_json(rec["fixed"])))
        except (KeyError, TypeError, ValueError):
            skipped += 1
    if not pairs:
        raise ScelmoError(f"no parseable pairs in {args.pairs}")
    report = evaluate_real_bugs(lambda inst: predict(model, inst, provider),
                                pairs, threshold=args.threshold)
    report.skipped += skipped
    payload = report.to_json()
    payload["config"] = _config_of(args)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")
    _emit(payload)
    return 0


def cmd_detect(args) -> int:
    seed = _resolve_seed(args.seed)
    model, _ = load_detector(args.model)
    args.mode = model.mode
    corpus = load_corpus(args.file)
    if model.mode == "scelmo":
        # scanned files are their own token context
        provider = _build_provider(args, need_store_corpus=corpus)
    else:
        provider = _build_provider(args)
    warnings = []
    n_instances = 0
    for rec in corpus.files:
        for inst in extract_instances(rec, model.pattern, seed):
            n_instances += 1
            p = predict(model, inst, provider)
            if p > args.threshold:
                warnings.append({"file": inst.path, "span": list(inst.span),
                                 "pattern": inst.pattern, "probability": p})
    header = jsonl_header(MAGIC_WARNINGS, _config_of(args), seed)
    write_jsonl(args.out, header, warnings)
    _emit({"instances": n_instances, "warnings": len(warnings), "out": str(args.out)})
    return 0


def cmd_stats(args) -> int:
    if args.kind != "oov":
        raise ScelmoError(f"unknown stats kind: {args.kind}")
    table, _ = load_embeddings(args.vocab)
    reports = {}
    for path in args.instances:
        _, instances, _ = _read_instances(path)
        label = Path(path).stem
        while label in reports:
            label += "+"
        reports[label] = analysis.oov_stats(instances, table.vocab)
    text = analysis.render_report(reports, fmt=args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scelmo",
        description="Name-based bug detection over JavaScript token corpora.",
        epilog=_EXPORT_NOTE)
    sub = parser.add_subparsers(dest="command", metavar="subcommand")

    p = sub.add_parser("ingest", help="load exporter JSONL, dedup, split, store")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--dedup", action="store_true")
    p.add_argument("--train-frac", type=float, default=None)
    p.add_argument("--by-project", action="store_true")
    p.add_argument("--tag-all", choices=("train", "valid", "test"), default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("extract", help="extract call/binop instances from a store")
    p.add_argument("--store", required=True)
    p.add_argument("--pattern", choices=PATTERNS, required=True)
    p.add_argument("--split", choices=("train", "valid", "test", "all"), default="all")
    p.add_argument("--max-elem", dest="max_elem", type=int, default=1000)
    p.add_argument("--unit", choices=("chars", "tokens"), default="chars")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("mutate", help="pair each instance with one buggy mutation")
    p.add_argument("--in", dest="in_path", required=True)
    p.add_argument("--op-pool-from", dest="op_pool_from", default=None,
                   help="instances file supplying the operator pool (default: --in)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mutate)

    p = sub.add_parser("train-embeddings", help="train a static embedding table")
    p.add_argument("--store", required=True)
    p.add_argument("--method", choices=STATIC_MODES, required=True)
    p.add_argument("--dim", type=int, default=200)
    p.add_argument("--vocab", type=int, default=10000)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.05)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--split", choices=("train", "valid", "test", "all"), default="train")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_embeddings)

    p = sub.add_parser("train-lm", help="train the bidirectional language model")
    p.add_argument("--store", required=True)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--dim", type=int, default=100, help="per-direction hidden size")
    p.add_argument("--seq-len", dest="seq_len", type=int, default=100)
    p.add_argument("--batch", type=int, default=16)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--lm-vocab", dest="lm_vocab", type=int, default=50000)
    p.add_argument("--max-chars", dest="max_chars", type=int, default=50)
    p.add_argument("--split", choices=("train", "valid", "test", "all"), default="train")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_lm)

    def add_provider_flags(p):
        p.add_argument("--embeddings", default=None, help="SCEM table (static modes)")
        p.add_argument("--lm", default=None, help="SCLM model (elmo modes)")
        p.add_argument("--store", default=None, help="corpus store (scelmo mode)")
        p.add_argument("--collapse", choices=("equal", "top"), default="equal")

    p = sub.add_parser("train-detector", help="train a bug-pattern classifier")
    p.add_argument("--pattern", choices=PATTERNS, required=True)
    p.add_argument("--mode", choices=ALL_MODES, required=True)
    p.add_argument("--dataset", required=True)
    add_provider_flags(p)
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch", type=int, default=50)
    p.add_argument("--lr", type=float, default=0.001)
    p.add_argument("--dropout", type=float, default=0.2)
    p.add_argument("--shuffle-labels", action="store_true",
                   help="permute training labels (null control)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_detector)

    p = sub.add_parser("evaluate", help="accuracy on a labeled dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--dataset", required=True)
    add_provider_flags(p)
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("eval-real", help="recall/FPR on real (buggy, fixed) pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True)
    add_provider_flags(p)
    p.add_argument("--threshold", type=float, default=0.75)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_eval_real)

    p = sub.add_parser("detect", help="scan exported files and emit warnings")
    p.add_argument("--model", required=True)
    p.add_argument("--file", required=True, help="exporter JSONL with files to scan")
    add_provider_flags(p)
    p.add_argument("--threshold", type=float, default=0.75)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("stats", help="corpus statistics tables")
    p.add_argument("kind", choices=("oov",))
    p.add_argument("--instances", action="append", required=True)
    p.add_argument("--vocab", required=True, help="SCEM table carrying the vocabulary")
    p.add_argument("--format", choices=("md", "markdown", "tsv"), default="md")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    return parser


def dispatch(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_help()
        return 2
    try:
        return args.func(args)
    except ScelmoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
