"""``genostrat`` command line: one pipeline task per invocation.

Every task writes into its own output directory (``--out``).  An existing
non-empty directory is never reused; a timestamp suffix is appended instead.
Options may also come from ``--config FILE`` holding ``key=value`` lines with
the long option names (``min-alt=12``, ``k=3``); flags given on the command line
win over the file.

Exit status: 0 success, 1 configuration error, 2 data or parse error,
3 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import os
import platform
import sys
import time
from datetime import datetime
from pathlib import Path

import numpy as np

from . import __version__, dbn, dec, featurize, genio, kmeans, metrics, mlp, store, synthgen
from .errors import ConfigError, DataError, GenostratError, InconsistentSampleSet
from .featurize import FeatureMatrix, FeatureSettings, LabeledDataset, SplitSpec
from .nncore import DropoutSpec, OptimizerConfig
from .rbm import CdConfig

EXIT_CODES = {"config": 1, "parse": 2, "data": 2, "numeric": 3}
WORKERS_ENV = "GENOSTRAT_WORKERS"


# config handling ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(f"{self.prog}: {message}")


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """``key=value`` per line; ``#`` starts a comment; keys use option spelling."""
    values: dict[str, str] = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from None
    for n, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{n}: expected key=value, got {raw!r}")
        values[key.strip().lstrip("-").replace("-", "_")] = value.strip()
    return values


def _int_list(text: str) -> tuple[int, ...]:
    try:
        out = tuple(int(t) for t in str(text).split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not out:
        raise argparse.ArgumentTypeError("expected at least one integer")
    return out


def _default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="output directory (default: runs/<task>)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", help="key=value file with option defaults")
    p.add_argument("--workers", type=int, default=None,
                   help=f"cap on data-parallel workers (default: ${WORKERS_ENV} or 1)")


def _add_inputs(p: argparse.ArgumentParser, need_labels: bool) -> None:
    p.add_argument("--vcf", nargs="+", help="VCF file(s), plain or gzip; one per chromosome is fine")
    p.add_argument("--matrix", help="matrix cache directory written by 'featurize'")
    p.add_argument("--panel", required=need_labels, help="panel file mapping samples to populations")
    p.add_argument("--level", choices=featurize.LEVELS, default="population")
    p.add_argument("--min-alt", type=int, default=12)
    p.add_argument("--missing", choices=featurize.MISSING_POLICIES, default="impute-zero")
    p.add_argument("--scaling", choices=featurize.SCALINGS, default="half")


def _add_split(p: argparse.ArgumentParser) -> None:
    p.add_argument("--train-fraction", type=float, default=0.6)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--validation-fraction", type=float, default=0.2)
    p.add_argument("--split-seed", type=int, default=None, help="default: --seed")


def _add_optimizer(p: argparse.ArgumentParser, rho: float, epsilon: float) -> None:
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--optimizer", choices=("adadelta", "sgd"), default="adadelta")
    p.add_argument("--rho", type=float, default=rho)
    p.add_argument("--epsilon", type=float, default=epsilon)
    p.add_argument("--learning-rate", type=float, default=0.01, help="SGD only")
    p.add_argument("--momentum", type=float, default=0.9, help="SGD only")
    p.add_argument("--batch-size", type=int, default=32)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="genostrat", description="Genotype clustering and population classification.")
    parser.add_argument("--version", action="version", version=f"genostrat {__version__}")
    sub = parser.add_subparsers(dest="task", required=True, parser_class=_Parser)

    p = sub.add_parser("synth", help="write a seeded synthetic cohort (VCF + panel)")
    _add_common(p)
    p.add_argument("--populations", type=int, default=3)
    p.add_argument("--samples", type=int, default=100, help="samples per population")
    p.add_argument("--variants", type=int, default=3000)
    p.add_argument("--divergence", type=float, default=0.1)

    p = sub.add_parser("featurize", help="VCF -> filtered alternate-allele count matrix cache")
    _add_common(p)
    _add_inputs(p, need_labels=False)
    p.add_argument("--export-csv", action="store_true", help="also write features.csv (needs --panel)")

    p = sub.add_parser("cluster-kmeans", help="K-means clustering of samples")
    _add_common(p)
    _add_inputs(p, need_labels=False)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--restarts", type=int, default=100)
    p.add_argument("--max-iterations", type=int, default=300)

    p = sub.add_parser("cluster-dec", help="deep embedded clustering of samples")
    _add_common(p)
    _add_inputs(p, need_labels=False)
    d = dec.DecConfig()
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--hidden-dims", type=_int_list, default=d.hidden_dims)
    p.add_argument("--corruption", type=float, default=d.corruption)
    p.add_argument("--pretrain-iterations", type=int, default=d.pretrain_iterations)
    p.add_argument("--finetune-iterations", type=int, default=d.finetune_iterations)
    p.add_argument("--ae-learning-rate", type=float, default=d.ae_learning_rate)
    p.add_argument("--ae-batch-size", type=int, default=d.ae_batch_size)
    p.add_argument("--lr-decay-every", type=int, default=d.lr_decay_every)
    p.add_argument("--learning-rate", type=float, default=d.learning_rate)
    p.add_argument("--momentum", type=float, default=d.momentum)
    p.add_argument("--batch-size", type=int, default=d.batch_size)
    p.add_argument("--max-iterations", type=int, default=d.max_iterations)
    p.add_argument("--update-interval", type=int, default=None)
    p.add_argument("--gamma", type=float, default=d.gamma)
    p.add_argument("--tol", type=float, default=d.tol)
    p.add_argument("--alpha", type=float, default=d.alpha)
    p.add_argument("--kmeans-restarts", type=int, default=d.kmeans_restarts)

    p = sub.add_parser("train-mlp", help="train and test a feed-forward classifier")
    _add_common(p)
    _add_inputs(p, need_labels=True)
    _add_split(p)
    m = mlp.MlpConfig()
    p.add_argument("--hidden", type=_int_list, default=m.hidden_layers)
    p.add_argument("--dropout", type=float, default=m.dropout.drop_probability)
    _add_optimizer(p, m.optimizer.rho, m.optimizer.epsilon)

    p = sub.add_parser("train-dbn", help="pre-train an RBM stack, fine-tune, test")
    _add_common(p)
    _add_inputs(p, need_labels=True)
    _add_split(p)
    b = dbn.DbnConfig()
    p.add_argument("--hidden", type=_int_list, default=b.hidden_widths)
    p.add_argument("--dropout", type=float, default=b.finetune.dropout.drop_probability)
    p.add_argument("--cd-learning-rate", type=float, default=b.pretrain.learning_rate)
    p.add_argument("--pretrain-epochs", type=int, default=b.pretrain.epochs)
    p.add_argument("--no-pretrain", action="store_true")
    _add_optimizer(p, b.finetune.optimizer.rho, b.finetune.optimizer.epsilon)

    p = sub.add_parser("evaluate", help="score predictions, or a saved classifier on labelled data")
    _add_common(p)
    _add_inputs(p, need_labels=False)
    p.add_argument("--truth", help="CSV with sample_id,label")
    p.add_argument("--pred", help="CSV with sample_id,label")
    p.add_argument("--model", help="saved mlp/dbn model directory")

    p = sub.add_parser("elbow", help="WCSS over a range of k")
    _add_common(p)
    _add_inputs(p, need_labels=False)
    p.add_argument("--k-min", type=int, default=1)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--max-iterations", type=int, default=300)
    return parser


def parse_args(argv: list[str]) -> argparse.Namespace:
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    found, _ = pre.parse_known_args(argv)
    subparsers = parser._subparsers._group_actions[0].choices  # type: ignore[union-attr]
    task = next((a for a in argv if a in subparsers), None)
    if found.config and task is not None:
        file_values = read_config_file(found.config)
        sub = subparsers[task]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(file_values) - known)
        if unknown:
            raise ConfigError(f"unknown keys in {found.config}: {', '.join(unknown)}")
        flags = dict(file_values)
        for action in sub._actions:
            if action.dest not in flags:
                continue
            # a value supplied by the file satisfies a required flag
            action.required = False
            if isinstance(action, argparse._StoreTrueAction):
                flags[action.dest] = flags[action.dest].lower() in ("1", "true", "yes", "on")
            elif action.nargs in ("+", "*"):
                flags[action.dest] = flags[action.dest].split()
        sub.set_defaults(**flags)
    return parser.parse_args(argv)


# shared plumbing ---------------------------------------------------------------

def prepare_output(out: str | None, task: str) -> Path:
    base = Path(out) if out else Path("runs") / task
    if base.exists() and (not base.is_dir() or any(base.iterdir())):
        stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
        candidate = base.with_name(f"{base.name}-{stamp}")
        for n in itertools.count(1):
            if not candidate.exists():
                break
            candidate = base.with_name(f"{base.name}-{stamp}-{n}")
        base = candidate
    base.mkdir(parents=True, exist_ok=True)
    return base


def settings_from(args) -> FeatureSettings:
    return FeatureSettings(args.min_alt, args.missing, args.scaling)


def load_matrix(args) -> tuple[FeatureMatrix, FeatureSettings]:
    if bool(args.vcf) == bool(args.matrix):
        raise ConfigError("give exactly one of --vcf or --matrix")
    if args.matrix:
        matrix, settings = featurize.read_matrix_cache(args.matrix)
        return matrix, FeatureSettings(settings.min_alt, settings.missing, args.scaling)
    settings = settings_from(args)
    samples = None
    iterators = []
    handles = []
    try:
        for path in args.vcf:
            fh = genio.open_text(path)
            handles.append(fh)
            names, records = genio.parse_vcf(fh)
            if samples is None:
                samples = names
            elif names != samples:
                raise InconsistentSampleSet(f"{path} lists a different sample set than {args.vcf[0]}")
            iterators.append(records)
        matrix = featurize.build_feature_matrix(itertools.chain(*iterators), samples or [],
                                                settings.min_alt, settings.missing)
    finally:
        for fh in handles:
            fh.close()
    return matrix, settings


def load_panel(path: str) -> list[genio.PanelEntry]:
    with genio.open_text(path) as fh:
        return genio.parse_panel(fh)


def load_dataset(args) -> tuple[LabeledDataset, FeatureSettings]:
    matrix, settings = load_matrix(args)
    return featurize.attach_labels(matrix, load_panel(args.panel), args.level), settings


def _write_text(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8")


def _write_labels_csv(path: Path, sample_ids, labels) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["sample_id", "label"])
        for s, lab in zip(sample_ids, labels):
            w.writerow([s, lab])


def read_labels_csv(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}") from None
    with fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0][:2]] != ["sample_id", "label"]:
        raise DataError(f"{path}: expected header 'sample_id,label'")
    for n, row in enumerate(rows[1:], 2):
        if not row:
            continue
        if len(row) < 2:
            raise DataError(f"{path}:{n}: expected two columns")
        if row[0] in out:
            raise DataError(f"{path}:{n}: duplicate sample {row[0]!r}")
        out[row[0]] = row[1]
    return out


def _report(lines: list[tuple[str, object]]) -> str:
    out = []
    for k, v in lines:
        out.append(f"{k}={repr(v) if isinstance(v, float) else v}")
    return "\n".join(out) + "\n"


def _optimizer(args) -> OptimizerConfig:
    if args.optimizer == "sgd":
        return OptimizerConfig.sgd(args.learning_rate, args.momentum, args.batch_size)
    return OptimizerConfig.adadelta(args.rho, args.epsilon, args.batch_size)


def _workers(args) -> int:
    return args.workers if args.workers is not None else _default_workers()


def _clustering_outputs(out: Path, args, matrix: FeatureMatrix, assignments, name: str,
                        extra: list[tuple[str, object]]) -> None:
    _write_labels_csv(out / "assignments.csv", matrix.sample_ids, [int(a) for a in assignments])
    lines = [("task", args.task), ("k", args.k), *extra]
    if args.panel:
        labelled = featurize.attach_labels(matrix, load_panel(args.panel), args.level)
        score = metrics.clustering_score(labelled.labels.tolist(), [int(a) for a in assignments])
        lines += [(f"{name}_{k}", v) for k, v in vars(score).items() if v is not None]
        metrics.write_score_csv([(k, v) for k, v in vars(score).items() if v is not None],
                                out / "scores.csv")
    _write_text(out / "report.txt", _report(lines))


# tasks -----------------------------------------------------------------------------

def task_synth(args, out: Path) -> dict:
    spec = synthgen.CohortSpec(args.populations, args.samples, args.variants, args.divergence, args.seed)
    vcf, panel = synthgen.write_cohort(spec, out)
    _write_text(out / "report.txt", _report([("task", "synth"), ("vcf", vcf.name), ("panel", panel.name),
                                             ("samples", spec.n_populations * spec.samples_per_population),
                                             ("variants", spec.n_variants)]))
    return {"outputs": f"{vcf.name},{panel.name}"}


def task_featurize(args, out: Path) -> dict:
    matrix, settings = load_matrix(args)
    featurize.write_matrix_cache(matrix, out / "matrix", settings)
    if args.panel:
        entries = {e.sample_id: e for e in load_panel(args.panel)}
        with open(out / "labels.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["sample_id", "population", "super_population"])
            for s in matrix.sample_ids:
                e = entries.get(s)
                w.writerow([s, e.population if e else "", e.super_population if e else ""])
        if args.export_csv:
            featurize.export_csv(featurize.attach_labels(matrix, entries.values(), args.level),
                                 out / "features.csv")
    elif args.export_csv:
        raise ConfigError("--export-csv needs --panel for the label column")
    rows, cols = matrix.shape
    _write_text(out / "report.txt", _report([("task", "featurize"), ("samples", rows), ("variants", cols),
                                             ("min_alt", settings.min_alt), ("missing", settings.missing),
                                             ("settings_hash", settings.digest())]))
    return {"settings_hash": settings.digest()}


def task_cluster_kmeans(args, out: Path) -> dict:
    matrix, settings = load_matrix(args)
    x = matrix.to_float(settings.scaling)
    model = kmeans.fit(x, args.k, args.max_iterations, args.restarts, args.seed, _workers(args))
    store.save_model(model, out / "model", settings.digest())
    _clustering_outputs(out, args, matrix, model.assignments, "kmeans",
                        [("wcss", model.wcss), ("iterations", model.iterations_run)])
    return {"settings_hash": settings.digest()}


def task_cluster_dec(args, out: Path) -> dict:
    matrix, settings = load_matrix(args)
    x = matrix.to_float(settings.scaling)
    cfg = dec.DecConfig(alpha=args.alpha, tol=args.tol, gamma=args.gamma, update_interval=args.update_interval,
                        learning_rate=args.learning_rate, momentum=args.momentum, batch_size=args.batch_size,
                        max_iterations=args.max_iterations, kmeans_restarts=args.kmeans_restarts,
                        seed=args.seed, hidden_dims=args.hidden_dims, corruption=args.corruption,
                        pretrain_iterations=args.pretrain_iterations,
                        finetune_iterations=args.finetune_iterations, ae_learning_rate=args.ae_learning_rate,
                        ae_batch_size=args.ae_batch_size, lr_decay_every=args.lr_decay_every or None)
    state, labels = dec.train_dec(x, args.k, cfg)
    store.save_model(state, out / "model", settings.digest())
    dec.write_embedding_csv(matrix.sample_ids, dec.encode(state.autoencoder, x), labels, out / "embedding.csv")
    dec.write_history_csv(state.history, out / "history.csv")
    _clustering_outputs(out, args, matrix, labels, "dec",
                        [("iterations", state.iterations_run), ("converged", int(state.converged)),
                         ("reconstruction_loss", dec.reconstruction_loss(state.autoencoder, x))])
    return {"settings_hash": settings.digest()}


def _split(args, dataset: LabeledDataset):
    seed = args.split_seed if args.split_seed is not None else args.seed
    spec = SplitSpec(args.train_fraction, args.test_fraction, args.validation_fraction, seed)
    return featurize.split(dataset, spec)


def _classifier_outputs(out: Path, args, model, history, test: LabeledDataset, settings) -> None:
    store.save_model(model, out / "model", settings.digest())
    pred = mlp.predict(model, test.matrix)
    score = metrics.classification_score(test.labels, pred, len(test.label_vocabulary))
    vocab = test.label_vocabulary
    cm = metrics.confusion_matrix([vocab[i] for i in test.labels], [vocab[i] for i in pred], vocab)
    metrics.write_confusion_csv(cm, out / "confusion.csv")
    _write_labels_csv(out / "predictions.csv", test.matrix.sample_ids, [vocab[i] for i in pred])
    lines = [("task", args.task), ("test_samples", len(test))]
    lines += [(k, v) for k, v in vars(score).items()]
    last = history[-1] if history else None
    if last is not None and last.val_loss:
        lines.append(("g", metrics.generalizability(last.loss, last.val_loss)))
    _write_text(out / "report.txt", _report(lines))
    metrics.write_score_csv(lines[2:], out / "scores.csv")


def task_train_mlp(args, out: Path) -> dict:
    dataset, settings = load_dataset(args)
    train, test, val = _split(args, dataset)
    cfg = mlp.MlpConfig(hidden_layers=args.hidden, epochs=args.epochs, dropout=DropoutSpec(args.dropout, args.seed),
                        optimizer=_optimizer(args), seed=args.seed, scaling=settings.scaling)
    model = mlp.train_mlp(train, cfg, val if len(val) else None)
    mlp.write_history_csv(model.history, out / "history.csv")
    _classifier_outputs(out, args, model, model.history, test, settings)
    return {"settings_hash": settings.digest()}


def task_train_dbn(args, out: Path) -> dict:
    dataset, settings = load_dataset(args)
    train, test, val = _split(args, dataset)
    cfg = dbn.DbnConfig(hidden_widths=args.hidden,
                        pretrain=CdConfig(args.cd_learning_rate, args.pretrain_epochs, args.batch_size, args.seed),
                        finetune=dbn.FinetuneConfig(_optimizer(args), args.epochs,
                                                    DropoutSpec(args.dropout, args.seed)),
                        seed=args.seed, pretrain_enabled=not args.no_pretrain, scaling=settings.scaling)
    model = dbn.train_dbn(train, cfg, val if len(val) else None)
    dbn.write_history_csv(model, out / "pretrain_history.csv", out / "history.csv")
    _classifier_outputs(out, args, model, model.finetune_history, test, settings)
    return {"settings_hash": settings.digest()}


def task_evaluate(args, out: Path) -> dict:
    if args.model:
        if args.truth or args.pred:
            raise ConfigError("use either --model or --truth/--pred")
        if not args.panel:
            raise ConfigError("--model evaluation needs --panel for the true labels")
        model = store.load_model(args.model)
        if store.model_kind(model) not in ("mlp", "dbn"):
            raise ConfigError("--model must be an mlp or dbn artifact")
        matrix, settings = load_matrix(args)
        truth = {e.sample_id: e for e in load_panel(args.panel)}
        vocab = model.label_vocabulary
        pred = [vocab[i] for i in mlp.predict(model, matrix)]
        true = []
        for s in matrix.sample_ids:
            if s not in truth:
                raise DataError(f"sample {s!r} missing from the panel")
            true.append(getattr(truth[s], args.level))
        ids = list(matrix.sample_ids)
        _write_labels_csv(out / "predictions.csv", ids, pred)
        settings_hash = settings.digest()
    else:
        if not (args.truth and args.pred):
            raise ConfigError("evaluate needs --truth and --pred, or --model")
        t, p = read_labels_csv(args.truth), read_labels_csv(args.pred)
        if set(t) != set(p):
            raise DataError("truth and prediction files cover different samples")
        ids = sorted(t)
        true = [t[s] for s in ids]
        pred = [p[s] for s in ids]
        vocab = tuple(sorted(set(true) | set(pred)))
        settings_hash = ""
    index = {lab: i for i, lab in enumerate(vocab)}
    for lab in true:
        if lab not in index:
            vocab = tuple(vocab) + (lab,)
            index[lab] = len(index)
    score = metrics.classification_score([index[v] for v in true], [index[v] for v in pred], len(vocab))
    cm = metrics.confusion_matrix(true, pred, vocab)
    metrics.write_confusion_csv(cm, out / "confusion.csv")
    lines = [("task", "evaluate"), ("samples", len(ids)), *vars(score).items()]
    _write_text(out / "report.txt", _report(lines))
    metrics.write_score_csv(lines[2:], out / "scores.csv")
    return {"settings_hash": settings_hash}


def task_elbow(args, out: Path) -> dict:
    matrix, settings = load_matrix(args)
    x = matrix.to_float(settings.scaling)
    if args.k_min < 1 or args.k_max < args.k_min:
        raise ConfigError("need 1 <= k-min <= k-max")
    report = kmeans.elbow_sweep(x, range(args.k_min, args.k_max + 1), args.restarts, args.seed,
                                args.max_iterations, _workers(args))
    report.write_csv(out / "elbow.csv")
    lines = [("task", "elbow"), ("k_min", args.k_min), ("k_max", args.k_max)]
    lines += [(f"wcss_{k}", w) for k, w in report.entries]
    lines += [(f"second_difference_{k}", v) for k, v in report.second_differences()]
    lines.append(("elbow", report.elbow() if report.elbow() is not None else "none"))
    _write_text(out / "report.txt", _report(lines))
    return {"settings_hash": settings.digest()}


TASKS = {
    "synth": task_synth,
    "featurize": task_featurize,
    "cluster-kmeans": task_cluster_kmeans,
    "cluster-dec": task_cluster_dec,
    "train-mlp": task_train_mlp,
    "train-dbn": task_train_dbn,
    "evaluate": task_evaluate,
    "elbow": task_elbow,
}


def write_run_summary(out: Path, args, info: dict, wall: float) -> None:
    skip = {"config", "out", "task"}
    lines = [("task", args.task), ("seed", args.seed), ("settings_hash", info.get("settings_hash", "")),
             ("genostrat_version", __version__), ("numpy_version", np.__version__),
             ("python_version", platform.python_version()), ("wall_seconds", round(wall, 3))]
    if args.config:
        lines.append(("config_file", args.config))
    for key in sorted(vars(args)):
        if key in skip:
            continue
        value = getattr(args, key)
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append((f"arg.{key}", value))
    _write_text(out / "run_summary.txt", "\n".join(f"{k}={v}" for k, v in lines) + "\n")


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = parse_args(argv)
        start = time.perf_counter()
        out = prepare_output(args.out, args.task)
        info = TASKS[args.task](args, out)
        write_run_summary(out, args, info, time.perf_counter() - start)
        print(out)
        return 0
    except GenostratError as exc:
        print(f"genostrat: {exc.category} error: {exc}", file=sys.stderr)
        return EXIT_CODES.get(exc.category, 2)
    except FileNotFoundError as exc:
        print(f"genostrat: data error: no such file: {exc.filename}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
