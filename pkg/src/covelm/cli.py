"""Command-line entry point: ``covelm <command> [options]``.

Exit codes: 0 success, 1 runtime failure, 2 partial success, 64 usage error.
"""
import argparse
import csv
import logging
import sys
import time

import numpy as np

from . import __version__, elm, evaluation, ingest, persist
from .errors import CovElmError
from .features import LAYOUT_DIGEST, SUBSETS, select_subset

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARTIAL = 2
EXIT_USAGE = 64

log = logging.getLogger("covelm")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _tiles(text):
    try:
        h, w = text.lower().split("x")
        tiles = (int(h), int(w))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected HxW, e.g. 8x8, got {text!r}") from None
    if min(tiles) < 1:
        raise argparse.ArgumentTypeError("tile counts must be positive")
    return tiles


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {v}")
    return v


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer seed, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError("seed must be nonnegative")
    return v


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("L values must be positive integers")
    return values


def _add_model_flags(p, subset=True):
    p.add_argument("--hidden", type=_positive_int, default=elm.DEFAULT_HIDDEN,
                   help="number of hidden neurons L (default: %(default)s)")
    p.add_argument("--activation", choices=elm.ACTIVATIONS, default=elm.DEFAULT_ACTIVATION,
                   help="hidden-node type (default: %(default)s)")
    p.add_argument("--seed", type=_seed, default=0, help="random seed (default: %(default)s)")
    if subset:
        p.add_argument("--subset", choices=SUBSETS, default="combined",
                       help="feature subset (default: %(default)s)")


def _add_cv_flags(p):
    p.add_argument("--features", required=True, help="feature cache CSV")
    p.add_argument("--k", type=_positive_int, default=10, help="number of folds (default: %(default)s)")
    p.add_argument("--no-stratify", dest="stratified", action="store_false",
                   help="plain shuffled folds instead of stratified ones")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covelm", description="ELM classification of chest X-ray images.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("manifest", help="write a manifest from <root>/<class>/ image folders")
    p.add_argument("--root", required=True, help="directory holding one folder per class")
    p.add_argument("--out", required=True, help="manifest CSV to write")
    p.add_argument("--view", default="PA", help="view tag recorded for every image (default: %(default)s)")

    p = sub.add_parser("extract", help="preprocess images and write the feature cache")
    p.add_argument("--manifest", required=True, help="CSV with header path,label,view")
    p.add_argument("--out", required=True, help="feature cache CSV to write")
    p.add_argument("--clip-limit", type=float, default=2.0, help="CLAHE clip limit (default: %(default)s)")
    p.add_argument("--tiles", type=_tiles, default=(8, 8), help="CLAHE tile grid HxW (default: 8x8)")
    p.add_argument("--bins", type=_positive_int, default=256, help="CLAHE histogram bins (default: %(default)s)")
    p.add_argument("--strict", action="store_true", help="abort on the first undecodable image")
    p.add_argument("--all-views", action="store_true", help="keep non-frontal (not PA/AP) records")

    p = sub.add_parser("crossval", help="k-fold cross-validation report")
    _add_cv_flags(p)
    _add_model_flags(p)
    p.add_argument("--report", required=True, help="JSON report path")
    p.add_argument("--timing", action="store_true",
                   help="add wall-clock timing to the report (makes it non-reproducible)")

    p = sub.add_parser("train", help="train on a whole feature cache and save the model")
    p.add_argument("--features", required=True, help="feature cache CSV")
    _add_model_flags(p)
    p.add_argument("--model", required=True, help="model file to write")

    p = sub.add_parser("predict", help="score a feature cache with a saved model")
    p.add_argument("--features", required=True, help="feature cache CSV")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--out", required=True, help="CSV of id, label and per-class scores")

    p = sub.add_parser("sweep", help="cross-validated accuracy as a function of L")
    _add_cv_flags(p)
    p.add_argument("--l-values", type=_int_list, default=list(range(10, 501, 10)),
                   help="comma-separated hidden sizes (default: 10,20,...,500)")
    p.add_argument("--activation", choices=elm.ACTIVATIONS, default=elm.DEFAULT_ACTIVATION,
                   help="hidden-node type (default: %(default)s)")
    p.add_argument("--seed", type=_seed, default=0, help="random seed (default: %(default)s)")
    p.add_argument("--subset", choices=SUBSETS, default="combined", help="feature subset (default: %(default)s)")
    p.add_argument("--report", required=True, help="JSON report path")

    p = sub.add_parser("ablate", help="fold sensitivities for frequency / texture / combined features")
    _add_cv_flags(p)
    _add_model_flags(p, subset=False)
    p.add_argument("--report", required=True, help="JSON report path")
    return parser


def _load_cache(path):
    cache = ingest.read_feature_cache(path)
    if not cache.ids:
        raise UsageError(f"feature cache {path} has no rows")
    return cache


def cmd_manifest(args):
    records = ingest.manifest_from_folders(args.root, view=args.view)
    ingest.write_manifest(records, args.out)
    counts = {c: sum(r.label == c for r in records) for c in elm.CLASSES}
    print(f"wrote {len(records)} records to {args.out}: " + ", ".join(f"{k}={v}" for k, v in counts.items()))
    return EXIT_OK


def cmd_extract(args):
    records = ingest.load_manifest(args.manifest)
    if not args.all_views:
        records = ingest.filter_frontal(records)
    params = {"clip_limit": args.clip_limit, "tiles": args.tiles, "bins": args.bins}
    summary = ingest.build_feature_cache(records, args.out, params,
                                         root=ingest.manifest_root(args.manifest), strict=args.strict)
    print(f"layout {summary.layout_digest}: {summary.rows} rows")
    for label, count in summary.counts.items():
        print(f"  {label:<10} {count}")
    for path, err in summary.errors:
        print(f"  FAILED {path}: {err}", file=sys.stderr)
    return EXIT_PARTIAL if summary.errors else EXIT_OK


def _cv_summary(rep):
    lines = [f"{'class':<12}{'precision':>10}{'recall':>10}{'f1':>10}{'auc':>10}"]
    for i, c in enumerate(rep.report.class_order):
        roc = rep.roc.get(str(c))
        auc = f"{roc['auc']:.4f}" if roc else "n/a"
        lines.append(f"{str(c):<12}{rep.report.precision[i]:>10.4f}{rep.report.recall[i]:>10.4f}"
                     f"{rep.report.f1[i]:>10.4f}{auc:>10}")
    lines.append(f"accuracy {rep.report.accuracy:.4f}  macro-F1 {rep.report.macro_f1:.4f}")
    ci = rep.sensitivity
    lines.append("sensitivity (95% CI): " + ", ".join(f"{c} {iv}" for c, iv in ci["per_class"].items())
                 + f", overall {ci['overall']}")
    return "\n".join(lines)


def cmd_crossval(args):
    t0 = time.perf_counter()
    cache = _load_cache(args.features)
    plan = evaluation.kfold_split(cache.labels, args.k, args.seed, args.stratified)
    rep = evaluation.cross_validate(cache.X, cache.labels, plan, L=args.hidden, activation=args.activation,
                                    seed=args.seed, subset=args.subset,
                                    extra_config={"preprocess": cache.params})
    doc = rep.to_dict()
    if args.timing:
        doc["timing_seconds"] = time.perf_counter() - t0
    persist.save_report(doc, args.report)
    print(_cv_summary(rep))
    return EXIT_OK


def cmd_train(args):
    cache = _load_cache(args.features)
    X = select_subset(cache.X, args.subset)
    model = elm.train(X, cache.labels, L=args.hidden, activation=args.activation, seed=args.seed)
    model.meta.update({"layout_digest": LAYOUT_DIGEST, "feature_subset": args.subset})
    persist.save_model(model, args.model)
    print(f"trained L={model.n_hidden} {model.activation} on {X.shape[0]} rows x {X.shape[1]} features")
    return EXIT_OK


def cmd_predict(args):
    model = persist.load_model(args.model)
    cache = _load_cache(args.features)
    subset = model.meta.get("feature_subset", "combined")
    X = select_subset(cache.X, subset) if subset != "custom" else cache.X
    scores, labels = elm.predict(model, X)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["image_id", "predicted"] + [f"score_{c}" for c in model.class_order])
        for ident, lab, row in zip(cache.ids, labels, scores):
            w.writerow([ident, lab] + [repr(float(v)) for v in row])
    known = [i for i, t in enumerate(cache.labels) if t in model.class_order]
    if known:
        acc = np.mean([labels[i] == cache.labels[i] for i in known])
        print(f"predicted {len(labels)} rows; accuracy against cache labels {acc:.4f}")
    else:
        print(f"predicted {len(labels)} rows")
    return EXIT_OK


def cmd_sweep(args):
    cache = _load_cache(args.features)
    plan = evaluation.kfold_split(cache.labels, args.k, args.seed, args.stratified)
    rows = evaluation.sweep_hidden(cache.X, cache.labels, plan, args.l_values, activation=args.activation,
                                   seed=args.seed, subset=args.subset)
    doc = {
        "config": {"k": args.k, "stratified": args.stratified, "activation": args.activation,
                   "seed": args.seed, "subset": args.subset, "layout_digest": LAYOUT_DIGEST},
        "rows": rows,
    }
    persist.save_report(doc, args.report)
    print(f"{'L':>6}{'accuracy':>10}")
    for r in rows:
        print(f"{r['hidden']:>6}{r['accuracy']:>10.4f}")
    best = max(rows, key=lambda r: r["accuracy"])
    print(f"best L={best['hidden']} accuracy={best['accuracy']:.4f}")
    return EXIT_OK


def cmd_ablate(args):
    cache = _load_cache(args.features)
    plan = evaluation.kfold_split(cache.labels, args.k, args.seed, args.stratified)
    out = evaluation.ablate_subsets(cache.X, cache.labels, plan, L=args.hidden,
                                    activation=args.activation, seed=args.seed)
    doc = {
        "config": {"k": args.k, "stratified": args.stratified, "hidden": args.hidden,
                   "activation": args.activation, "seed": args.seed, "layout_digest": LAYOUT_DIGEST},
        "subsets": out,
    }
    persist.save_report(doc, args.report)
    for subset, res in out.items():
        print(f"{subset:<10} median sensitivity {res['median']:.4f}")
    return EXIT_OK


COMMANDS = {
    "manifest": cmd_manifest,
    "extract": cmd_extract,
    "crossval": cmd_crossval,
    "train": cmd_train,
    "predict": cmd_predict,
    "sweep": cmd_sweep,
    "ablate": cmd_ablate,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"covelm: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CovElmError as exc:
        print(f"covelm: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())


def main_entry():
    sys.exit(main())
