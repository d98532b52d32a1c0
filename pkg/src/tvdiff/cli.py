"""Command-line interface: prepare, train, eval, diagnose, sweep.

Exit codes: 0 success, 1 usage or configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import itertools
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import __version__
from . import denoiser as dn
from . import thermo
from .baselines import DivergenceError, MFConfig, init_mf, load_mf, save_mf, train_bpr_mf
from .checkpoint import CheckpointError, load_denoiser, save_denoiser
from .dataset import DatasetError, FORMATS, build_matrices, load_interactions, read_split, split_dataset, write_split
from .evalrank import evaluate, write_metrics
from .negsampler import GAMMA_PRESETS, NegSamplerConfig, ar_distribution_batch, gumbel_temper, tau
from .objective import ObjectiveConfig
from .trainer import TrainConfig, TrainingError, predict, train, write_train_log

log = logging.getLogger("tvdiff")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
MODELS = ("tv-diff", "bpr-mf")
SEED_ENV = "TVDIFF_SEED"
SWEEP_KEYS = ("temperature", "gamma", "T", "s", "beta_min", "beta_max")
KS = (10, 20)


class UsageError(Exception):
    pass


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _gamma(text: str) -> float:
    text = str(text).strip()
    return GAMMA_PRESETS[text] if text in GAMMA_PRESETS else float(text)


def _strategy(text: str) -> str:
    return str(text).strip().lower().replace("-", "_")


# config key -> (parser, section, field name inside the section)
KEYS = {
    "model": (str, "run", "model"),
    "batch_size": (int, "train", "batch_size"),
    "lr": (float, "train", "lr"),
    "reg": (float, "train", "reg"),
    "max_epochs": (int, "train", "max_epochs"),
    "patience": (int, "train", "patience"),
    "monitor": (str, "train", "monitor"),
    "seed": (int, "train", "seed"),
    "d": (int, "train", "d"),
    "T": (int, "train", "T"),
    "s": (float, "train", "s"),
    "beta_min": (float, "train", "beta_min"),
    "beta_max": (float, "train", "beta_max"),
    "val_fraction": (float, "train", "val_fraction"),
    "val_max_users": (int, "train", "val_max_users"),
    "temperature": (float, "objective", "temperature_H"),
    "entropy_variant": (str, "objective", "entropy_variant"),
    "target_mode": (str, "objective", "target_mode"),
    "bce_label_mode": (str, "objective", "bce_label_mode"),
    "paper_literal_sign": (_bool, "objective", "paper_literal_sign"),
    "gamma": (_gamma, "sampler", "gamma"),
    "lambda": (float, "sampler", "lam"),
    "epsilon": (float, "sampler", "epsilon"),
    "neg_strategy": (_strategy, "sampler", "strategy"),
    "mf_batch_size": (int, "mf", "batch_size"),
    "mf_neg_strategy": (_strategy, "mf", "strategy"),
}


@dataclass(frozen=True)
class RunConfig:
    model: str
    train: TrainConfig
    mf: MFConfig
    values: tuple  # resolved (key, value) pairs, sorted

    def flat(self) -> dict:
        return dict(self.values)

    def fingerprint(self) -> str:
        text = " ".join(f"{k}={v}" for k, v in self.values)
        digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]
        return f"sha256={digest} {text}"


def default_values() -> dict:
    cfg = TrainConfig()
    mf = MFConfig()
    sections = {"train": cfg, "objective": cfg.objective, "sampler": cfg.sampler}
    out = {"model": "tv-diff", "mf_batch_size": mf.batch_size, "mf_neg_strategy": mf.sampler.strategy}
    for key, (_, section, name) in KEYS.items():
        if section in sections:
            out[key] = getattr(sections[section], name)
    return out


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    problems = []
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep or not key.strip():
                problems.append(f"{path}:{lineno}: expected 'key = value'")
                continue
            values[key.strip()] = value.strip()
    if problems:
        raise UsageError("\n".join(problems))
    return values


def _check_field(cls, kwargs, name, value):
    try:
        cls(**{**kwargs, name: value})
    except (ValueError, TypeError) as exc:
        return str(exc)
    return None


def resolve_config(file_values: dict | None = None, overrides: dict | None = None, env=None) -> RunConfig:
    """Merge defaults < config file < ``TVDIFF_SEED`` < flag overrides and validate everything.

    All problems are reported together in a single :class:`UsageError`.
    """
    env = os.environ if env is None else env
    raw = dict(file_values or {})
    if env.get(SEED_ENV, "").strip():
        raw["seed"] = env[SEED_ENV].strip()
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})

    problems = []
    values = default_values()
    for key, text in raw.items():
        if key not in KEYS:
            problems.append(f"unknown config key {key!r}")
            continue
        parser = KEYS[key][0]
        try:
            values[key] = parser(text) if isinstance(text, str) else text
        except (ValueError, KeyError):
            problems.append(f"{key}: cannot parse {text!r}")
    if values["model"] not in MODELS:
        problems.append(f"model must be one of {MODELS}, got {values['model']!r}")

    sections = {"train": {}, "objective": {}, "sampler": {}, "mf": {}}
    for key, (_, section, name) in KEYS.items():
        if section in sections:
            sections[section][name] = values[key]
    for section, cls in (("objective", ObjectiveConfig), ("sampler", NegSamplerConfig)):
        for name, value in sections[section].items():
            msg = _check_field(cls, {}, name, value)
            if msg:
                problems.append(msg)
    mf_sampler = _check_field(NegSamplerConfig, {}, "strategy", sections["mf"]["strategy"])
    if mf_sampler:
        problems.append(f"mf_neg_strategy: {mf_sampler}")
    if sections["mf"]["batch_size"] < 1:
        problems.append("mf_batch_size must be >= 1")
    probe = TrainConfig.__new__(TrainConfig)
    for name, value in sections["train"].items():
        object.__setattr__(probe, name, value)
    problems.extend(probe.problems())
    if problems:
        raise UsageError("invalid configuration:\n  " + "\n  ".join(problems))

    objective = ObjectiveConfig(**sections["objective"])
    sampler = NegSamplerConfig(**sections["sampler"])
    tc = TrainConfig(objective=objective, sampler=sampler, **sections["train"])
    mf = MFConfig(
        d=tc.d, lr=tc.lr, reg=tc.reg, epochs=tc.max_epochs, batch_size=sections["mf"]["batch_size"],
        patience=tc.patience, monitor=tc.monitor, val_fraction=tc.val_fraction,
        sampler=replace(sampler, strategy=sections["mf"]["strategy"]),
    )
    return RunConfig(values["model"], tc, mf, tuple(sorted((k, values[k]) for k in KEYS)))


def write_run_config(config: RunConfig, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# tvdiff {__version__} resolved configuration\n")
        for key, value in config.values:
            fh.write(f"{key} = {value!r}\n" if isinstance(value, float) else f"{key} = {value}\n")


def load_run_config(run_dir) -> RunConfig:
    path = os.path.join(run_dir, "run.cfg")
    if not os.path.exists(path):
        raise UsageError(f"{run_dir} is not a training run (no run.cfg)")
    return resolve_config(read_config_file(path), env={})


# -- helpers -------------------------------------------------------------------

def _refuse_existing(paths, force: bool) -> None:
    existing = [p for p in paths if os.path.exists(p)]
    if existing and not force:
        raise UsageError("refusing to overwrite existing output (use --force): " + ", ".join(existing))


def _load_split(data_dir):
    if not os.path.isdir(data_dir) or not os.path.exists(os.path.join(data_dir, "meta")):
        raise FileNotFoundError(f"{data_dir}: no prepared split (run 'tvdiff prepare' first)")
    return read_split(data_dir)


def _flag_overrides(args) -> dict:
    names = {
        "entropy_variant": "entropy_variant", "neg_strategy": "neg_strategy", "temperature": "temperature",
        "gamma": "gamma", "lam": "lambda", "T": "T", "s": "s", "beta_min": "beta_min", "beta_max": "beta_max",
        "d": "d", "lr": "lr", "reg": "reg", "batch_size": "batch_size", "max_epochs": "max_epochs",
        "patience": "patience", "seed": "seed", "model": "model",
    }
    out = {}
    for attr, key in names.items():
        value = getattr(args, attr, None)
        if value is not None:
            out[key] = value
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _run_config_from_args(args) -> RunConfig:
    file_values = read_config_file(args.config) if getattr(args, "config", None) else {}
    return resolve_config(file_values, _flag_overrides(args))


def model_scores(config: RunConfig, params, dataset, matrices=None, users=None, mask: bool = True):
    if config.model == "bpr-mf":
        scores = params.scores(users)
        if mask:
            rows = np.arange(dataset.m) if users is None else np.asarray(users)
            for r, u in enumerate(rows):
                scores[r, dataset.train_items[u]] = -np.inf
        return scores
    return predict(params, dataset, config.train, matrices=matrices, users=users, mask=mask)


def _load_params(config: RunConfig, run_dir):
    path = os.path.join(run_dir, "checkpoint.bin")
    return load_mf(path) if config.model == "bpr-mf" else load_denoiser(path)


def fit_and_evaluate(dataset, config: RunConfig):
    """Train one model and score it on the test split; returns (params, result, aggregate)."""
    if config.model == "bpr-mf":
        result = train_bpr_mf(dataset, config.mf, seed=config.train.seed)
    else:
        result = train(dataset, config.train)
    scores = model_scores(config, result.params, dataset)
    return result, evaluate(scores, dataset.train_items, dataset.test_items, Ks=KS)


# -- subcommands -----------------------------------------------------------------

def cmd_prepare(args) -> int:
    out = args.out
    targets = [os.path.join(out, name) for name in ("train.tsv", "test.tsv", "meta")]
    _refuse_existing(targets, args.force)
    if not 0.0 < args.ratio < 1.0:
        raise UsageError("--ratio must lie in (0, 1)")
    records = load_interactions(args.input, args.format)
    dataset = split_dataset(records, ratio=args.ratio, seed=args.seed)
    write_split(dataset, out)
    print(f"m={dataset.m} n={dataset.n} train={dataset.n_train} test={dataset.n_test} -> {out}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _run_config_from_args(args)
    targets = [os.path.join(args.out, name) for name in ("checkpoint.bin", "train_log.csv", "run.cfg")]
    _refuse_existing(targets, args.force)
    dataset = _load_split(args.data)
    os.makedirs(args.out, exist_ok=True)
    fp = config.fingerprint()
    if config.model == "bpr-mf":
        result = train_bpr_mf(dataset, config.mf, seed=config.train.seed)
        save_mf(result.params, targets[0])
        with open(targets[1], "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# config {fp}\n")
            w = csv.DictWriter(fh, fieldnames=("epoch", "loss", "entropy", "monitor_value", "seconds"))
            w.writeheader()
            for row in result.log:
                w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    else:
        result = train(dataset, config.train)
        save_denoiser(result.params, targets[0])
        write_train_log(result.log, targets[1], fingerprint=fp)
    write_run_config(config, targets[2])
    print(f"{config.model}: best epoch {result.best_epoch} of {len(result.log)} -> {args.out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = load_run_config(args.run)
    out = args.out or os.path.join(args.run, "metrics.csv")
    _refuse_existing([out], args.force)
    dataset = _load_split(args.data)
    params = _load_params(config, args.run)
    scores = model_scores(config, params, dataset)
    result = evaluate(scores, dataset.train_items, dataset.test_items, Ks=tuple(args.k))
    write_metrics(result, out, config.model, fingerprint=config.fingerprint())
    for k in args.k:
        print(f"{config.model} R@{k}={result.aggregate[f'recall@{k}']:.4f} N@{k}={result.aggregate[f'ndcg@{k}']:.4f}")
    return EXIT_OK


def _initial_params(config: RunConfig, dataset):
    tc = config.train
    if config.model == "bpr-mf":
        return init_mf(dataset.m, dataset.n, tc.d, tc.seed)
    return dn.init_params(dataset.m, dataset.n, tc.T, tc.d, seed=tc.seed)


def thermo_reports(config: RunConfig, dataset, before, after, chunk: int = 512):
    """Before/after energy and entropy of the unmasked reconstruction, summed over user chunks."""
    matrices = build_matrices(dataset)
    genre = "softmax" if config.model == "bpr-mf" else "diffusion_norm"
    active = np.flatnonzero(dataset.user_degree > 0)
    totals = np.zeros(4)
    for lo in range(0, len(active), chunk):
        users = active[lo:lo + chunk]
        R = matrices.R[users]
        P_orig = matrices.R_hat[users]
        for j, params in enumerate((before, after)):
            P = thermo.normalize_reconstruction(model_scores(config, params, dataset, matrices, users, mask=False), genre)
            totals[2 * j] += thermo.energy(P, P_orig, R)
            totals[2 * j + 1] += thermo.entropy(P)
    U0, S0, U1, S1 = totals
    return [
        thermo.ThermoReport(f"{config.model}:before", U0, S0, 0.0, 0.0),
        thermo.ThermoReport(f"{config.model}:after", U1, S1, U1 - U0, S1 - S0),
    ]


def cmd_diagnose(args) -> int:
    config = load_run_config(args.run)
    name = "thermo_report.csv" if args.what == "thermo" else "sampler_report.csv"
    out = args.out or os.path.join(args.run, name)
    _refuse_existing([out], args.force)
    dataset = _load_split(args.data)
    params = _load_params(config, args.run)
    fp = config.fingerprint()
    if args.what == "thermo":
        reports = thermo_reports(config, dataset, _initial_params(config, dataset), params)
        thermo.write_reports(reports, out, fingerprint=fp)
        for r in reports:
            print(f"{r.phase}: U={r.U:.6g} S={r.S:.6g} dU={r.dU:.6g} dS={r.dS:.6g}")
        return EXIT_OK
    rows = sampler_histogram(config, dataset, params, args.timesteps, args.users, args.bins)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config {fp}\n")
        w = csv.writer(fh)
        w.writerow(["t", "tau", "log10_lo", "log10_hi", "p_n_count", "p_hat_count"])
        w.writerows(rows)
    print(f"sampler histogram ({len(rows)} rows) -> {out}")
    return EXIT_OK


def sampler_histogram(config: RunConfig, dataset, params, timesteps, n_users: int, bins: int, floor: float = -16.0):
    """Histogram of log10 p_n and log10 p̂_n over non-train items of a fixed user sample."""
    tc = config.train
    T = tc.T
    timesteps = list(timesteps) if timesteps else sorted({1, max(1, T // 2), T})
    bad = [t for t in timesteps if not 1 <= t <= T]
    if bad:
        raise UsageError(f"timesteps must lie in [1, {T}], got {bad}")
    rng = np.random.default_rng(tc.seed)
    active = np.flatnonzero(dataset.user_degree > 0)
    users = np.sort(rng.choice(active, size=min(n_users, len(active)), replace=False))
    scores = model_scores(config, params, dataset, users=users, mask=False)
    mask = np.zeros(scores.shape, dtype=bool)
    for r, u in enumerate(users):
        mask[r, dataset.train_items[u]] = True
    p_n, _ = ar_distribution_batch(scores, mask, tc.sampler.gamma, tc.sampler.epsilon)
    edges = np.linspace(floor, 0.0, bins + 1)
    free = ~mask

    def hist(P):
        vals = np.log10(np.maximum(P[free], 10.0 ** floor))
        return np.histogram(np.minimum(vals, 0.0), bins=edges)[0]

    rows = []
    for t in timesteps:
        p_hat = np.vstack([gumbel_temper(p_n[r], t, T, tc.sampler.lam, rng)[0] for r in range(len(users))])
        a, b = hist(p_n), hist(p_hat)
        temp = float(tau(t, T, tc.sampler.lam))
        for lo, hi, ca, cb in zip(edges[:-1], edges[1:], a, b):
            rows.append([t, repr(temp), repr(float(lo)), repr(float(hi)), int(ca), int(cb)])
    return rows


def parse_grid(specs) -> dict:
    grid = {}
    problems = []
    for spec in specs or []:
        key, sep, values = spec.partition("=")
        key = key.strip()
        if not sep or key not in SWEEP_KEYS:
            problems.append(f"--grid expects one of {SWEEP_KEYS} as key=v1,v2,..., got {spec!r}")
            continue
        parser = KEYS[key][0]
        try:
            grid[key] = [parser(v.strip()) for v in values.split(",") if v.strip()]
        except (ValueError, KeyError):
            problems.append(f"--grid {key}: cannot parse {values!r}")
            continue
        if not grid[key]:
            problems.append(f"--grid {key}: no values")
    if problems:
        raise UsageError("\n".join(problems))
    return grid


def _sweep_cell(payload):
    data_dir, base_values, cell = payload
    config = resolve_config(base_values, cell, env={})
    dataset = read_split(data_dir)
    result, ranking = fit_and_evaluate(dataset, config)
    return result.best_epoch, ranking.aggregate


def cmd_sweep(args) -> int:
    base = _run_config_from_args(args)
    if base.model != "tv-diff":
        raise UsageError("sweep only supports --model tv-diff")
    grid = parse_grid(args.grid)
    keys = list(grid)
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    if len(cells) > args.max_cells:
        raise UsageError(f"grid has {len(cells)} cells, above the budget of {args.max_cells} (raise --max-cells)")
    problems = []
    for cell in cells:
        try:
            resolve_config(base.flat(), cell, env={})
        except UsageError as exc:
            problems.append(f"cell {cell}: {exc}")
    if problems:
        raise UsageError("\n".join(problems))
    out = args.out
    _refuse_existing([out], args.force)
    _load_split(args.data)
    payloads = [(args.data, base.flat(), cell) for cell in cells]
    if args.jobs > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_cell, payloads))
    else:
        results = [_sweep_cell(p) for p in payloads]
    metric_cols = [f"{m}@{k}" for k in KS for m in ("recall", "ndcg")]
    parent = os.path.dirname(os.path.abspath(out))
    os.makedirs(parent, exist_ok=True)
    with open(out, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config {base.fingerprint()} grid={';'.join(args.grid or [])}\n")
        w = csv.writer(fh)
        w.writerow(keys + metric_cols + ["best_epoch"])
        for cell, (best_epoch, agg) in zip(cells, results):
            w.writerow([repr(cell[k]) if isinstance(cell[k], float) else cell[k] for k in keys]
                       + [repr(agg[c]) for c in metric_cols] + [best_epoch])
    print(f"{len(cells)} cells -> {out}")
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_model_flags(p, with_model=True):
    p.add_argument("--config", help="flat key = value config file")
    if with_model:
        p.add_argument("--model", choices=MODELS)
    p.add_argument("--entropy-variant", dest="entropy_variant", choices=("bce", "bpr", "nll", "none"))
    p.add_argument("--neg-strategy", dest="neg_strategy", choices=("ar-gsp", "rns", "sublinear", "ar_gsp"))
    p.add_argument("--temperature", type=float, help="weight of the entropy term")
    p.add_argument("--gamma", help="negative factor or preset (default/small/large)")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--T", dest="T", type=int)
    p.add_argument("--s", dest="s", type=float)
    p.add_argument("--beta-min", dest="beta_min", type=float)
    p.add_argument("--beta-max", dest="beta_max", type=float)
    p.add_argument("--d", dest="d", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--reg", type=float)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--max-epochs", dest="max_epochs", type=int)
    p.add_argument("--patience", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="any other config key")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tvdiff", description="Tri-view diffusion recommender.")
    parser.add_argument("--version", action="version", version=f"tvdiff {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prepare", help="split an interaction file into train/test artifacts")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=FORMATS, default="tsv_pair")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_prepare)

    p = sub.add_parser("train", help="train a model and write checkpoint.bin, train_log.csv, run.cfg")
    p.add_argument("--data", required=True, help="directory written by 'prepare'")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--force", action="store_true")
    _add_model_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="write metrics.csv for a trained run")
    p.add_argument("--data", required=True)
    p.add_argument("--run", required=True)
    p.add_argument("--out", help="default: <run>/metrics.csv")
    p.add_argument("--k", type=int, nargs="+", default=list(KS))
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diagnose", help="thermodynamic or sampler reports for a trained run")
    p.add_argument("what", choices=("thermo", "sampler"))
    p.add_argument("--data", required=True)
    p.add_argument("--run", required=True)
    p.add_argument("--out")
    p.add_argument("--timesteps", type=int, nargs="+", help="sampler: timesteps to report (default 1, T/2, T)")
    p.add_argument("--users", type=int, default=64, help="sampler: number of users sampled")
    p.add_argument("--bins", type=int, default=16, help="sampler: log10 histogram bins")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("sweep", help="train+eval over a cartesian hyperparameter grid")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2,...", help=f"one of {', '.join(SWEEP_KEYS)}")
    p.add_argument("--max-cells", dest="max_cells", type=int, default=64)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--force", action="store_true")
    _add_model_flags(p, with_model=False)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"tvdiff: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, DatasetError, CheckpointError, TrainingError, DivergenceError, ValueError) as exc:
        print(f"tvdiff: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
