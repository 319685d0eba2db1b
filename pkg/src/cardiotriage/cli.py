"""Command-line pipeline: synth, ingest, embed, train, predict, evaluate,
importance, verify, review.

Every command is batch-style and reproducible: identical inputs and
configuration produce byte-identical output files. Diagnostics go to
stderr with a nonzero exit; data goes to stdout or the named files.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import corpus, embed, forest, metrics, verify
from .config import ConfigError, parse_max_features, resolve_config
from .metrics import MetricsError
from .verify import Lexicon

_FAILURES = (
    ConfigError,
    corpus.CorpusError,
    embed.EmbeddingError,
    forest.ModelFormatError,
    MetricsError,
    verify.LexiconError,
    ValueError,
    OSError,
)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("pipeline configuration")
    g.add_argument("--config", metavar="PATH", help="JSON pipeline config; flags override its fields")
    g.add_argument("--seed", type=int, metavar="N", help="master seed applied to split, forest and provider")
    g.add_argument("--dim", type=int, metavar="N", help="embedding dimension")
    g.add_argument("--provider", choices=["mock", "file", "http"], help="embedding provider kind")
    g.add_argument("--store", metavar="PATH", help="embedding store file (file provider)")
    g.add_argument("--endpoint", metavar="URL", help="embedding service base URL (http provider)")
    g.add_argument("--timeout", type=float, metavar="S", help="http provider timeout in seconds")
    g.add_argument("--provider-seed", type=int, metavar="N", help="mock provider seed (wins over --seed)")
    g.add_argument("--n-estimators", type=int, metavar="N", help="number of trees")
    g.add_argument("--max-depth", metavar="N|none", help="maximum tree depth, or 'none' for unbounded")
    g.add_argument("--max-features", type=parse_max_features, metavar="K|sqrt|all",
                   help="feature pool size per split")
    g.add_argument("--bootstrap", action=argparse.BooleanOptionalAction, default=None,
                   help="bootstrap-sample rows per tree")
    g.add_argument("--forest-seed", type=int, metavar="N", help="forest seed (wins over --seed)")
    g.add_argument("--min-samples-split", type=int, metavar="N", help="minimum samples to split a node")
    g.add_argument("--train-fraction", type=float, metavar="F", help="train share of the split")
    g.add_argument("--split-seed", type=int, metavar="N", help="split seed (wins over --seed)")
    g.add_argument("--stratified", action=argparse.BooleanOptionalAction, default=None,
                   help="stratify the split by label")
    g.add_argument("--vocab", metavar="PATH", help="wordpiece vocabulary file")
    g.add_argument("--lexicon", metavar="PATH", help="symptom lexicon JSON (default: packaged lexicon)")
    g.add_argument("--max-len", type=int, metavar="N", help="token sequence length")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="cardiotriage",
        description="Symptom-text cardiovascular risk triage pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic labeled corpus with embeddings")
    p.add_argument("--n", type=int, default=20, help="number of records (even; half per class)")
    p.add_argument("--margin", type=float, default=8.0, help="class-mean separation along dimension 0")
    p.add_argument("--out", required=True, metavar="PATH", help="output dataset (.jsonl or .csv)")
    p.add_argument("--store-out", required=True, metavar="PATH", help="output embedding store (.cvde)")

    p = sub.add_parser("ingest", parents=[common], help="validate a dataset file, optionally converting format")
    p.add_argument("--input", required=True, metavar="PATH", help="dataset file (.jsonl or .csv)")
    p.add_argument("--format", choices=["jsonl", "csv"], help="input format (default: by suffix)")
    p.add_argument("--out", metavar="PATH", help="write the validated dataset here (.jsonl or .csv)")

    p = sub.add_parser("embed", parents=[common], help="embed every record through the configured provider")
    p.add_argument("--dataset", required=True, metavar="PATH", help="dataset file")
    p.add_argument("--out", required=True, metavar="PATH", help="output embedding store (.cvde)")

    p = sub.add_parser("train", parents=[common], help="split, embed the training rows, fit, save the model")
    p.add_argument("--dataset", required=True, metavar="PATH", help="labeled dataset file")
    p.add_argument("--model-out", required=True, metavar="PATH", help="output model file (.cvdf)")

    p = sub.add_parser("predict", parents=[common], help="predict risk (with verification) for texts")
    p.add_argument("--model", required=True, metavar="PATH", help="trained model file")
    p.add_argument("--text", action="append", metavar="TEXT", help="inline input text (repeatable)")
    p.add_argument("--input", metavar="PATH", help="input file: dataset (.jsonl/.csv) or one text per line")
    p.add_argument("--out", metavar="PATH", help="output JSONL (default: stdout)")

    p = sub.add_parser("evaluate", parents=[common], help="score a model and write the evaluation report")
    p.add_argument("--model", required=True, metavar="PATH", help="trained model file")
    p.add_argument("--dataset", required=True, metavar="PATH", help="labeled dataset file")
    p.add_argument("--report", required=True, metavar="PATH", help="output report JSON")
    p.add_argument("--cm-csv", metavar="PATH", help="confusion matrix CSV (default: <report>.cm.csv)")
    p.add_argument("--svg", metavar="PATH", help="also render a confusion-matrix heatmap figure")
    p.add_argument("--subset", choices=["test", "train", "all"], default="test",
                   help="which records to score (default: the test side of the configured split)")

    p = sub.add_parser("importance", parents=[common], help="rank embedding dimensions by MDI importance")
    p.add_argument("--model", required=True, metavar="PATH", help="trained model file")
    p.add_argument("--k", type=int, default=10, help="how many dimensions to report")
    p.add_argument("--out", required=True, metavar="PATH", help="output CSV (rank,dimension,importance)")
    p.add_argument("--svg", metavar="PATH", help="also render a bar chart figure")

    p = sub.add_parser("verify", parents=[common], help="run rule-based verification for given predictions")
    p.add_argument("--text", action="append", metavar="TEXT", help="inline text to verify (repeatable)")
    p.add_argument("--risk", type=int, choices=[0, 1], default=1,
                   help="predicted label assumed for inline texts")
    p.add_argument("--input", metavar="PATH", help="predictions JSONL with id, text, label fields")
    p.add_argument("--out", metavar="PATH", help="output JSONL (default: stdout)")

    p = sub.add_parser("review", parents=[common], help="aggregate expert rating sheets")
    p.add_argument("ratings", nargs="+", metavar="CSV", help="ratings CSVs (rater,case_id,likert,risk_judgment)")
    p.add_argument("--predictions", metavar="PATH", help="predictions JSONL to check case coverage against")
    p.add_argument("--out", metavar="PATH", help="output summary JSON (default: stdout)")

    return parser


def _write_json(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _write_jsonl(rows: list[dict], path: str | None) -> None:
    text = "".join(json.dumps(row) + "\n" for row in rows)
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _lexicon(cfg) -> Lexicon:
    return Lexicon.load(cfg.lexicon_path) if cfg.lexicon_path else Lexicon.default()


def cmd_synth(args) -> int:
    cfg = resolve_config(args)
    seed = args.seed if args.seed is not None else 42
    dim = args.dim if args.dim is not None else cfg.provider.dim
    ds, store = corpus.generate_synthetic(n=args.n, margin=args.margin, dim=dim, seed=seed)
    corpus.save_records(ds, args.out)
    embed.store_write(store, args.store_out)
    print(f"records={len(ds)} dim={dim} margin={args.margin} seed={seed}")
    return 0


def cmd_ingest(args) -> int:
    resolve_config(args)  # surface config typos even where no provider is needed
    ds = corpus.load_records(args.input, args.format)
    if args.out:
        corpus.save_records(ds, args.out)
    s = corpus.summarize(ds)
    print(
        f"records={s['records']} labeled={s['labeled']} "
        f"high={s['high_risk']} low={s['low_risk']} synthetic={s['synthetic']}"
    )
    return 0


def cmd_embed(args) -> int:
    cfg = resolve_config(args)
    ds = corpus.load_records(args.dataset)
    provider = embed.make_provider(cfg.provider)
    store = embed.embed_records(provider, ds)
    embed.store_write(store, args.out)
    print(f"embedded={len(store)} dim={store.dim} provider={cfg.provider.kind}")
    return 0


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    ds = corpus.load_records(args.dataset)
    split = corpus.split(ds, cfg.split)
    provider = embed.make_provider(cfg.provider)
    store = embed.embed_records(provider, split.train)
    X, y = corpus.as_matrix(split.train, store)
    model = forest.fit(X, y, cfg.forest)
    forest.save_model(model, args.model_out)
    print(f"train={len(split.train)} test={len(split.test)} seed={cfg.forest.seed}")
    return 0


def _iter_predict_inputs(args):
    if args.text:
        for i, text in enumerate(args.text, start=1):
            yield f"text-{i}", text
    if args.input:
        path = Path(args.input)
        if path.suffix.lower() in (".jsonl", ".csv"):
            for rec in corpus.load_records(path):
                yield rec.id, rec.text
        else:
            with open(path, encoding="utf-8") as fh:
                for i, line in enumerate(fh, start=1):
                    if line.strip():
                        yield f"line-{i}", line.strip()


def cmd_predict(args) -> int:
    if not args.text and not args.input:
        raise ConfigError("predict needs --text or --input")
    cfg = resolve_config(args)
    model = forest.load_model(args.model)
    if model.dim != cfg.provider.dim:
        raise embed.EmbeddingError(
            f"model dim {model.dim} != provider dim {cfg.provider.dim} (set --dim)"
        )
    provider = embed.make_provider(cfg.provider)
    lexicon = _lexicon(cfg)
    rows = []
    for rec_id, text in _iter_predict_inputs(args):
        vec = provider.embed(rec_id, text)
        pred = forest.predict(model, vec)
        report = verify.verify_prediction(text, pred, lexicon)
        rows.append(
            {
                "id": rec_id,
                "label": pred.label,
                "score": pred.score,
                "votes": list(pred.votes),
                "verification": report.to_dict(),
            }
        )
    _write_jsonl(rows, args.out)
    return 0


def _select_subset(ds, cfg, subset: str):
    if subset == "all":
        return ds
    parts = corpus.split(ds, cfg.split)
    return parts.test if subset == "test" else parts.train


def cmd_evaluate(args) -> int:
    cfg = resolve_config(args)
    model = forest.load_model(args.model)
    if model.dim != cfg.provider.dim:
        raise embed.EmbeddingError(
            f"model dim {model.dim} != provider dim {cfg.provider.dim} (set --dim)"
        )
    ds = corpus.load_records(args.dataset)
    subset = _select_subset(ds, cfg, args.subset)
    provider = embed.make_provider(cfg.provider)
    store = embed.embed_records(provider, subset)
    X, y = corpus.as_matrix(subset, store)
    preds = forest.predict_batch(model, X)
    report = metrics.evaluate([p.label for p in preds], list(y), [p.score for p in preds])
    _write_json(report.to_dict(), args.report)

    cm_path = args.cm_csv or f"{args.report}.cm.csv"
    with open(cm_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["", "predicted_low", "predicted_high"])
        writer.writerow(["actual_low", report.cm.tn, report.cm.fp])
        writer.writerow(["actual_high", report.cm.fn, report.cm.tp])
    if args.svg:
        from .figures import confusion_heatmap

        confusion_heatmap(report.cm, args.svg)

    def show(v):
        return "undefined" if v is None else f"{v:.4f}"

    print(
        f"n_test={report.n_test} accuracy={show(report.accuracy)} precision={show(report.precision)} "
        f"recall={show(report.recall)} f1={show(report.f1)} auroc={show(report.auroc)}"
    )
    return 0


def cmd_importance(args) -> int:
    resolve_config(args)
    model = forest.load_model(args.model)
    pairs = forest.top_k_importances(model, args.k)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "dimension", "importance"])
        for rank, (dimension, value) in enumerate(pairs, start=1):
            writer.writerow([rank, dimension, value])
    if args.svg:
        from .figures import importance_bars

        importance_bars(pairs, args.svg)
    print(f"rows={len(pairs)} model_dim={model.dim}")
    return 0


def cmd_verify(args) -> int:
    if not args.text and not args.input:
        raise ConfigError("verify needs --text or --input")
    cfg = resolve_config(args)
    lexicon = _lexicon(cfg)
    rows = []

    def audit(rec_id: str, text: str, label: int, score: float):
        pred = forest.Prediction(label=label, score=score, votes=(0, 0))
        report = verify.verify_prediction(text, pred, lexicon)
        rows.append({"id": rec_id, "label": label, "verification": report.to_dict()})

    if args.text:
        for i, text in enumerate(args.text, start=1):
            audit(f"text-{i}", text, args.risk, float(args.risk))
    if args.input:
        with open(args.input, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    rec_id, text, label = obj["id"], obj["text"], int(obj["label"])
                except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                    raise ConfigError(f"{args.input}:{lineno}: bad prediction line ({exc})") from None
                audit(rec_id, text, label, float(obj.get("score", label)))
    _write_jsonl(rows, args.out)
    return 0


def cmd_review(args) -> int:
    resolve_config(args)
    sheets = []
    for path in args.ratings:
        sheets.extend(metrics.load_rater_sheets(path))
    model_preds = None
    if args.predictions:
        model_preds = {}
        with open(args.predictions, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    model_preds[obj["id"]] = int(obj["label"])
    summary = metrics.review_summary(sheets, model_preds)
    _write_json(summary, args.out)
    kappa = summary["mean_kappa"]
    kappa_text = "undefined" if kappa is None else f"{kappa:.2f}"
    print(f"mean Likert {summary['mean_likert']:.1f} / mean kappa {kappa_text}")
    return 0


_COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "embed": cmd_embed,
    "train": cmd_train,
    "predict": cmd_predict,
    "evaluate": cmd_evaluate,
    "importance": cmd_importance,
    "verify": cmd_verify,
    "review": cmd_review,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except _FAILURES as exc:
        print(f"cardiotriage {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
