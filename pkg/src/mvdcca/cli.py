"""Command-line entry point: ``mvdcca <command> ...``.

Commands that take ``--config`` also accept ``--<key> <value>`` for any
configuration key, overriding the file.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .artifacts import read_artifact
from .data import (DataError, GeneratorSpec, gen_admissions, load_dataset, read_key_values,
                   save_dataset)
from .gradcheck import run_gradchecks
from .harness.config import ConfigError, ExperimentConfig, load_config
from .harness.experiment import (Dataset, ExperimentError, MetricsRow, evaluate, fit_view,
                                 fold_pairs, run_dcca, run_experiment, run_unseen_pair,
                                 split_811, summarize, unseen_folds, write_csv)
from .harness.snapshots import load_snapshot, load_view_model, save_snapshot
from .harness.training import DccaResult, TrainingError
from .ontology import OntologyError, build_ontology, random_codes, read_codes, write_codes

log = logging.getLogger("mvdcca")


def _overrides(extra: list[str]) -> dict[str, str]:
    out = {}
    i = 0
    while i < len(extra):
        key = extra[i]
        if not key.startswith("--") or i + 1 >= len(extra):
            raise ConfigError(f"expected --key value pairs, got {extra[i:]}")
        out[key[2:].replace("-", "_")] = extra[i + 1]
        i += 2
    return out


def _config(args, extra) -> ExperimentConfig:
    return load_config(getattr(args, "config", None), _overrides(extra))


def _load_data(cfg: ExperimentConfig) -> Dataset:
    if not cfg.ontology or not cfg.data:
        raise ConfigError("config needs 'ontology' and 'data' paths")
    graph = build_ontology(read_codes(cfg.ontology), jumps=cfg.jumps)
    return Dataset(load_dataset(cfg.data, graph), graph, cfg.vocab_size)


def _seed(args, cfg) -> int:
    return args.seed if getattr(args, "seed", None) is not None else cfg.seed_list[0]


def cmd_gen_ontology(args, extra) -> None:
    branching = [int(b) for b in args.branching.split(",")]
    if len(branching) != args.depth:
        raise OntologyError(f"--branching needs {args.depth} entries, got {len(branching)}")
    codes = random_codes(branching, args.seed)
    write_codes(codes, args.out,
                header=f"depth={args.depth} branching={args.branching} seed={args.seed}")
    print(f"wrote {len(codes)} codes to {args.out}")


def cmd_gen_data(args, extra) -> None:
    graph = build_ontology(read_codes(args.ontology))
    values = read_key_values(args.spec) if args.spec else {}
    values.update(_overrides(extra))
    if args.seed is not None:
        values["seed"] = args.seed
    spec = GeneratorSpec.from_mapping(values)
    records = gen_admissions(graph, spec, args.n)
    save_dataset(records, args.out)
    print(f"wrote {len(records)} records to {args.out}")


def _split(cfg, seed):
    data = _load_data(cfg)
    tr, va, te = (data.subset(i) for i in split_811(len(data.records), seed))
    return data, tr, va, te


def cmd_train_dcca(args, extra) -> None:
    cfg = _config(args, extra)
    seed = _seed(args, cfg)
    data, tr, va, _ = _split(cfg, seed)
    res = run_dcca(tr, va, cfg, seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_snapshot(out / "dcca.snapshot", cfg, data.vocab_size, res.graph_encoder,
                  res.text_encoder, projection=res.projection,
                  extra={"seed": seed, "best_epoch": res.best_epoch,
                         "best_corr": res.best_corr})
    res.projection.save(out / "projection.bin")
    with open(out / "dcca_history.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("epoch", "valid_corr"))
        for e, c in enumerate(res.history):
            w.writerow((e, f"{c:.6f}"))
    print(f"best epoch {res.best_epoch}, validation correlation {res.best_corr:.4f}")


def cmd_finetune(args, extra) -> None:
    cfg = _config(args, extra)
    seed = _seed(args, cfg)
    data, tr, va, te = _split(cfg, seed)
    dcca = None
    corr = float("nan")
    if args.snapshot:
        meta, _, ge, tenc, _, proj = load_snapshot(args.snapshot, data.graph)
        if ge is None or tenc is None or proj is None:
            raise ExperimentError("--snapshot must be a train-dcca snapshot")
        dcca = DccaResult(ge, tenc, proj, int(meta["extra"].get("best_epoch", -1)),
                          float(meta["extra"].get("best_corr", np.sum(proj.correlations))))
        corr = dcca.best_corr
    model = fit_view(args.view, tr, va, cfg, seed, dcca)
    a, p = evaluate(model, te)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_snapshot(out / f"{args.view}.snapshot", cfg, data.vocab_size, model.graph_encoder,
                  model.text_encoder, model.head, model.projection, view=args.view,
                  extra={"seed": seed, "best_corr": corr})
    variant = "dcca" if dcca is not None else "base"
    write_csv([MetricsRow(cfg.task, args.view, variant, "0", str(seed), a, p, corr, 0.0)],
              out / "metrics.csv")
    print(f"{args.view}/{variant}: test AUROC {a:.4f}, AP {p:.4f}")


def cmd_eval(args, extra) -> None:
    cfg = _config(args, extra)
    if args.model:
        seed = _seed(args, cfg)
        data, _, _, te = _split(cfg, seed)
        model = load_view_model(args.model, data.graph)
        corr = float(read_artifact(args.model)[0]["extra"].get("best_corr", float("nan")))
        a, p = evaluate(model, te)
        variant = "dcca" if model.projection is not None else "base"
        rows = [MetricsRow(cfg.task, model.view, variant, "0", str(seed), a, p, corr, 0.0)]
        write_csv(rows, args.out)
    else:
        rows = run_experiment(_load_data(cfg), cfg, "standard", args.out)
    for r in rows:
        print(f"{r.view:5s} {r.variant:14s} seed {r.seed}: AUROC {r.auroc:.4f} AP {r.ap:.4f}")


def cmd_unseen_exp(args, extra) -> None:
    over = _overrides(extra)
    over["k"] = str(args.k)
    over["folds"] = args.folds
    if args.seed is not None:
        over["seeds"] = str(args.seed)
    cfg = load_config(args.config, over)
    data = _load_data(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for seed in cfg.seed_list:
        folds = unseen_folds(data, cfg, seed)
        for i, j in fold_pairs(cfg):
            pair_rows = run_unseen_pair(data, cfg, seed, folds, i, j)
            write_csv(pair_rows, out / f"seed{seed}_fold{i}-{j}.csv")
            rows.extend(pair_rows)
    write_csv(rows + summarize(rows), out / "summary.csv")
    for r in summarize(rows):
        if r.fold == "mean":
            print(f"{r.variant:14s} mean AUROC {r.auroc:.4f}")


def cmd_gradcheck(args, extra) -> None:
    results = run_gradchecks(seed=args.seed or 0)
    failed = False
    lines = []
    for name, err in results.items():
        ok = err <= args.tol
        failed |= not ok
        lines.append((name, f"{err:.3e}", "pass" if ok else "FAIL"))
        print(f"{'PASS' if ok else 'FAIL'} {name}: max relative error {err:.3e}")
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("block", "max_rel_err", "status"))
            w.writerows(lines)
    if failed:
        raise TrainingError("gradient check failed")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mvdcca", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("gen-ontology", help="write a random fixed-width code list")
    s.add_argument("--depth", type=int, required=True)
    s.add_argument("--branching", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_ontology)

    s = sub.add_parser("gen-data", help="generate a synthetic admissions dataset")
    s.add_argument("--ontology", required=True)
    s.add_argument("--spec", default=None)
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gen_data)

    s = sub.add_parser("train-dcca", help="correlation pre-training of both encoders")
    s.add_argument("--config", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_train_dcca)

    s = sub.add_parser("finetune", help="task fine-tuning of one inference path")
    s.add_argument("--config", default=None)
    s.add_argument("--view", choices=("code", "text", "both"), required=True)
    s.add_argument("--snapshot", default=None, help="train-dcca snapshot to start from")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_finetune)

    s = sub.add_parser("eval", help="standard experiment, or score a saved model")
    s.add_argument("--config", default=None)
    s.add_argument("--model", default=None)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("unseen-exp", help="unseen-code fold experiments")
    s.add_argument("--config", default=None)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--folds", default="all")
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_unseen_exp)

    s = sub.add_parser("gradcheck", help="finite-difference check of every gradient")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_gradcheck)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if extra and args.command in ("gen-ontology", "gradcheck"):
        parser.error(f"unrecognized arguments: {' '.join(extra)}")
    try:
        args.func(args, extra)
    except (ConfigError, DataError, OntologyError, ExperimentError, TrainingError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
