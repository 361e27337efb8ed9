"""``level-screen`` command line: synth, extract, train, evaluate, screen, review, export-pool.

Exit codes: 0 success, 1 validation or data failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import datetime as _dt
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._io import atomic_write_text, fingerprint, write_json
from .errors import ConfigError, DataError, LevelScreenError, ParseError, ValidationError, VersionError
from .evaluation.report import render_json, render_text
from .evaluation.search import CvPlan, inner_grid_search, nested_cv, prepare_splits
from .features import (
    FeatureSchema,
    build_matrix,
    format_group_summary,
    group_summary,
    impute_and_encode,
    matrix_fingerprint,
    read_matrix,
    write_matrix,
)
from .levels import Author, parse_corpus, serialize_corpus, validate_level
from .ml.pipeline import FAMILIES, TrainedClassifier, fit_pipeline
from .registry import default_registry, load_registry
from .review import (
    Status,
    apply_decisions,
    build_pool,
    build_queue,
    interactive_review,
    parse_decisions,
    read_queue,
    write_queue,
)
from .synth import SynthConfig, generate_corpus

CONFIG_ENV = "LEVEL_SCREEN_CONFIG"


# -- shared context -----------------------------------------------------------

class Context:
    """Resolved global options. Command-line flags beat the config file."""

    def __init__(self, args: argparse.Namespace):
        path = args.config or os.environ.get(CONFIG_ENV)
        self.config: dict = {}
        if path:
            self.config = _load_json(path, "config", ConfigError)
            if not isinstance(self.config, dict):
                raise ConfigError(f"{path}: config must be a JSON object")
        seed = args.seed if args.seed is not None else self.config.get("seed", 0)
        try:
            self.seed = int(seed)
        except (TypeError, ValueError):
            raise ConfigError(f"seed must be an integer, got {seed!r}") from None
        reg_path = args.registry or self.config.get("registry")
        self.registry = load_registry(reg_path) if reg_path else default_registry()
        self.schema = FeatureSchema.from_registry(self.registry)
        plan_src = args.plan or self.config.get("plan")
        self.plan_doc = {}
        if isinstance(plan_src, (str, Path)):
            self.plan_doc = _load_json(plan_src, "plan", ConfigError)
        elif isinstance(plan_src, dict):
            self.plan_doc = plan_src
        self.seed_given = args.seed is not None or "seed" in self.config

    def plan(self, **override) -> CvPlan:
        doc = dict(self.plan_doc)
        if self.seed_given or "seed" not in doc:
            doc["seed"] = self.seed
        doc.update(override)
        if not isinstance(doc, dict):
            raise ConfigError("plan must be a JSON object")
        return CvPlan.from_dict(doc)


def _load_json(path, what: str, error=ParseError):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise error(f"cannot read {what} file {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        if error is ParseError:
            raise ParseError(f"{path}: {exc.msg}", offset=exc.pos) from None
        raise error(f"{path}: malformed JSON: {exc.msg}") from None


def _read_corpus(path, registry):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ParseError(f"cannot read corpus {path}: {exc.strerror}") from None
    return parse_corpus(data, registry)


def _created_at(explicit: str | None) -> str | None:
    # wall-clock time would break byte-identical reruns, so it is opt-in
    if explicit:
        return explicit
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch:
        try:
            t = _dt.datetime.fromtimestamp(int(epoch), tz=_dt.timezone.utc)
        except ValueError:
            raise ConfigError("SOURCE_DATE_EPOCH must be an integer") from None
        return t.strftime("%Y-%m-%dT%H:%M:%SZ")
    return None


def _out(msg: str = "") -> None:
    print(msg, file=sys.stdout)


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _load_matrix(path, ctx: Context):
    matrix = read_matrix(path, ctx.schema)
    if matrix.labels is None:
        raise ValidationError(f"{path}: matrix has no labels")
    return impute_and_encode(matrix)


def _load_model(path) -> tuple[TrainedClassifier, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read model {path}: {exc.strerror}") from None
    try:
        model = TrainedClassifier.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", offset=exc.pos) from None
    return model, fingerprint(text)


# -- commands -----------------------------------------------------------------

def cmd_synth(args, ctx: Context) -> int:
    doc = dict(ctx.config.get("synth", {}))
    if args.synth_config:
        doc.update(_load_json(args.synth_config, "synth config", ConfigError))
    for key, val in (("n_levels", args.n_levels), ("label_noise", args.noise), ("positive_rate_target", args.rate)):
        if val is not None:
            doc[key] = val
    if args.seed is not None or "seed" not in doc:
        doc["seed"] = ctx.seed
    config = SynthConfig.from_dict(doc)
    corpus = generate_corpus(config, ctx.schema, ctx.registry)
    levels = corpus.levels
    if args.unlabeled:
        levels = [lv.with_label(None) for lv in levels]
    out = Path(args.out)
    atomic_write_text(out, serialize_corpus(levels, ctx.registry).decode("utf-8"))
    manifest = Path(args.manifest) if args.manifest else out.with_name(out.stem + ".manifest.json")
    write_json(manifest, corpus.manifest())
    pos = sum(corpus.true_labels)
    _out(f"wrote {len(levels)} levels to {out} ({pos} satisfy the planted rule); manifest {manifest}")
    return 0


def cmd_extract(args, ctx: Context) -> int:
    levels = _read_corpus(args.corpus, ctx.registry)
    labeled = not args.unlabeled
    good, bad = [], []
    for lv in levels:
        # an unlabeled expert level is fine: it counts as selected
        need_label = labeled and lv.author is Author.PLAYER
        result = validate_level(lv, ctx.registry, labeled=True if need_label else None)
        (good if result.ok else bad).append((lv, result))
    for lv, result in bad:
        for v in result.violations:
            print(f"invalid: {lv.level_id}: {v.invariant}: {v.message}", file=sys.stderr)
    if bad and not args.skip_invalid:
        raise ValidationError(f"{len(bad)} invalid level(s); rerun with --skip-invalid to drop them")
    if bad:
        _warn(f"skipped {len(bad)} invalid level(s)")
    matrix = build_matrix(
        [lv for lv, _ in good], ctx.schema, ctx.registry, labeled=labeled, include_expert=args.include_expert
    )
    mask = write_matrix(matrix, args.out)
    _out(f"wrote {matrix.n_rows} x {len(ctx.schema)} matrix to {args.out} (mask {mask})")
    _out(format_group_summary(group_summary(matrix)))
    return 0


def _select_and_fit(matrix, family: str, plan: CvPlan):
    X, y = matrix.values, matrix.labels
    if len(np.unique(y)) < 2:
        raise DataError("training labels contain a single class")
    splits = prepare_splits(X, y, plan.inner_folds, plan.seed, plan.lasso, plan.stratified)
    search = inner_grid_search(
        X, y, family, plan.grids[family], plan.inner_folds, plan.seed,
        lasso=plan.lasso, stratified=plan.stratified, model_seed=plan.seed, splits=splits,
    )
    pipe = fit_pipeline(
        X, y, family, search.best_params,
        lasso=plan.lasso, seed=plan.seed, column_names=matrix.column_names,
        registry_version=matrix.schema.registry_version, imputation=matrix.imputation,
    )
    return pipe, search


def cmd_train(args, ctx: Context) -> int:
    matrix = _load_matrix(args.matrix, ctx)
    plan = ctx.plan()
    pipe, search = _select_and_fit(matrix, args.family, plan)
    metadata = {
        "matrix_fingerprint": matrix_fingerprint(matrix),
        "n_rows": matrix.n_rows,
        "n_positive": int(matrix.labels.sum()),
        "inner_folds": plan.inner_folds,
        "inner_mean": {k: (None if np.isnan(v) else v) for k, v in search.best.mean.items()},
        "inner_std": {k: (None if np.isnan(v) else v) for k, v in search.best.std.items()},
        "lasso": plan.lasso.to_dict(),
        "version": __version__,
    }
    pipe = dataclasses.replace(pipe, metadata=metadata)
    atomic_write_text(args.out, pipe.dumps())
    _out(f"family {args.family}: best {json.dumps(search.best_params, sort_keys=True)}")
    _out(f"inner ROC-AUC {search.best.mean['roc_auc']:.4f} ± {search.best.std['roc_auc']:.4f}")
    _out(f"selected columns ({len(pipe.selected_columns)}): {', '.join(pipe.selected_columns)}")
    _out(f"wrote model to {args.out}")
    return 0


def cmd_evaluate(args, ctx: Context) -> int:
    matrix = _load_matrix(args.matrix, ctx)
    override = {}
    if args.families:
        override["families"] = [f.strip() for f in args.families.split(",") if f.strip()]
    plan = ctx.plan(**override)
    report = nested_cv(matrix, plan, n_jobs=args.n_jobs, corpus_fingerprint=matrix_fingerprint(matrix))
    out = Path(args.out)
    json_path = Path(args.json) if args.json else out.with_suffix(".json")
    text = render_text(report)
    atomic_write_text(out, text)
    atomic_write_text(json_path, render_json(report))
    _out(text.rstrip("\n"))
    _out(f"\nwrote {out} and {json_path}")
    return 0


def cmd_screen(args, ctx: Context) -> int:
    model, model_fp = _load_model(args.model)
    if model.registry_version != ctx.registry.version:
        raise VersionError(
            f"model was trained with registry v{model.registry_version}, corpus uses v{ctx.registry.version}"
        )
    if tuple(model.column_names) != tuple(ctx.schema.names):
        raise VersionError("model column layout does not match the feature schema")
    levels = _read_corpus(args.corpus, ctx.registry)
    bad = [lv.level_id for lv in levels if not validate_level(lv, ctx.registry).ok]
    if bad:
        raise ValidationError(f"invalid level(s) in the screened corpus: {', '.join(bad)}")
    matrix = impute_and_encode(build_matrix(levels, ctx.schema, ctx.registry, labeled=False, include_expert=True))
    scores = model.score(matrix.values)
    queue = build_queue(
        matrix.level_ids,
        scores,
        model_fingerprint=model_fp,
        registry_version=model.registry_version,
        model_family=model.family,
        threshold=args.threshold,
        default_threshold=model.threshold,
        # SVM decision values pass only when strictly positive, like its predict
        strict=args.threshold is None and model.family == "svm",
        top_n=args.top_n,
        created_at=_created_at(args.created_at),
    )
    write_queue(queue, args.out)
    n_pending = len(queue.by_status(Status.PENDING))
    _out(f"screened {len(queue.entries)} levels: {n_pending} pending review, {len(queue.entries) - n_pending} below cutoff")
    _out(f"wrote queue {queue.queue_id} to {args.out}")
    return 0


def cmd_review(args, ctx: Context) -> int:
    queue = read_queue(args.queue)
    if args.decisions:
        decisions = parse_decisions(_load_json(args.decisions, "decisions"))
    elif args.interactive:
        decisions = interactive_review(queue, input)
    else:
        raise ConfigError("give --decisions FILE or --interactive")
    updated = apply_decisions(queue, decisions)
    out = args.out or args.queue
    if updated != queue or out != args.queue:
        write_queue(updated, out)
    counts = {s.value: len(updated.by_status(s)) for s in Status}
    _out(" ".join(f"{k}={v}" for k, v in counts.items()))
    return 0


def cmd_export_pool(args, ctx: Context) -> int:
    queue = read_queue(args.queue)
    if queue.registry_version != ctx.registry.version:
        raise VersionError(f"queue uses registry v{queue.registry_version}, corpus registry is v{ctx.registry.version}")
    levels = _read_corpus(args.corpus, ctx.registry)
    pool = build_pool(queue, levels, ctx.registry)
    write_json(args.out, pool)
    _out(f"exported {len(pool['level_ids'])} approved level(s) to {args.out}")
    return 0


# -- parser -------------------------------------------------------------------

def _global_options(default) -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=default, help="master seed (default 0)")
    g.add_argument("--registry", default=default, help="element registry JSON (default: built-in)")
    g.add_argument("--plan", default=default, help="cross-validation plan JSON")
    g.add_argument("--config", default=default, help=f"config JSON (default: ${CONFIG_ENV})")
    return common


def build_parser() -> argparse.ArgumentParser:
    # global flags work before or after the subcommand; SUPPRESS keeps a
    # subcommand from resetting a value given before it
    common = _global_options(argparse.SUPPRESS)
    parser = argparse.ArgumentParser(
        prog="level-screen", description=__doc__.splitlines()[0], parents=[_global_options(None)]
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic labeled corpus")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--manifest", help="planted-rule manifest path (default <out>.manifest.json)")
    p.add_argument("--synth-config", help="JSON with SynthConfig fields")
    p.add_argument("--n-levels", type=int)
    p.add_argument("--noise", type=float)
    p.add_argument("--rate", type=float, help="target positive rate")
    p.add_argument("--unlabeled", action="store_true", help="drop labels, as for a corpus to screen")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("extract", parents=[common], help="corpus -> feature matrix (+ mask)")
    p.add_argument("corpus")
    p.add_argument("-o", "--out", required=True)
    p.add_argument("--skip-invalid", action="store_true")
    p.add_argument("--include-expert", action="store_true")
    p.add_argument("--unlabeled", action="store_true")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train", parents=[common], help="grid-search one family and fit it on all rows")
    p.add_argument("matrix")
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="nested cross-validation report")
    p.add_argument("matrix")
    p.add_argument("-o", "--out", required=True, help="text report path")
    p.add_argument("--json", help="JSON companion path (default: <out>.json)")
    p.add_argument("--families", help="comma-separated subset of " + ",".join(FAMILIES))
    p.add_argument("--n-jobs", type=int, default=1)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("screen", parents=[common], help="score an unlabeled corpus into a review queue")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("-o", "--out", required=True)
    cut = p.add_mutually_exclusive_group()
    cut.add_argument("--threshold", type=float)
    cut.add_argument("--top-n", type=int)
    p.add_argument("--created-at", help="timestamp recorded in the queue (default: $SOURCE_DATE_EPOCH or none)")
    p.set_defaults(func=cmd_screen)

    p = sub.add_parser("review", parents=[common], help="apply reviewer decisions to a queue")
    p.add_argument("queue")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--decisions")
    src.add_argument("--interactive", action="store_true")
    p.add_argument("-o", "--out", help="write here instead of updating the queue in place")
    p.set_defaults(func=cmd_review)

    p = sub.add_parser("export-pool", parents=[common], help="write the approved levels as a pool")
    p.add_argument("queue")
    p.add_argument("corpus")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=cmd_export_pool)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        ctx = Context(args)
        return args.func(args, ctx)
    except LevelScreenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
