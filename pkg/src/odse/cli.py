"""Command-line interface.

Subcommands: matrix (pairwise dissimilarity dump), splits (split id
lists), synthesize (train and persist a model), classify (label a FASTA
file with a saved model), evaluate (full resampled comparison).

Settings come from an INI file with sections [split], [ga], [svm],
[knn], [estimator] and [experiment]; --seed overrides the split seed.
"""

from __future__ import annotations

import argparse
import configparser
import os
import sys

from .alignment import (
    BY_MAX_LENGTH,
    RAW,
    build_cost_model,
    load_similarity_matrix,
    pam120_path,
)
from .classifiers import MEDIAN_HEURISTIC, KnnConfig, SvmConfig
from .datasets import (
    SPLIT_NAMES,
    SplitSpec,
    load_dataset,
    make_split,
    solubility_histogram_csv,
)
from .embedding import RepresentationSet, compute_matrix, matrix_to_csv
from .errors import OdseError
from .experiment import (
    ALL_SYSTEMS,
    ExperimentConfig,
    report_to_csv,
    report_to_json,
    report_to_text,
    run_experiment,
)
from .model import (
    EstimatorConfig,
    FitnessWeights,
    GaConfig,
    classify_all,
    ga_optimize,
    load_model,
    save_model,
)
from .sequences import read_fasta

_DEFAULTS = {
    "split": {"name": "DS-200", "seed": "0", "resamples": "10"},
    "ga": {
        "population_size": "20",
        "crossover_prob": "0.9",
        "mutation_prob": "0.2",
        "max_generations": "50",
        "stall_epsilon": "1e-4",
    },
    "svm": {
        "c": "2",
        "kernel_gamma": MEDIAN_HEURISTIC,
        "kkt_tolerance": "1e-3",
        "max_passes": "200",
    },
    "knn": {"k": "5", "input_k": "5"},
    "estimator": {"kind": "QRE", "sigma": "0.5", "alpha": "0.5"},
    "experiment": {
        "systems": ",".join(ALL_SYSTEMS),
        "inner": "svm",
        "normalization": RAW,
        "input_gap_weight": "1.0",
        "w_acc": "0.8",
        "w_card": "0.1",
        "w_ent": "0.1",
    },
}


def _load_config(path: str | None) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp.read_dict(_DEFAULTS)
    if path is not None:
        if not os.path.exists(path):
            raise OdseError(f"config file {path!r} does not exist")
        cp.read(path)
    return cp


def _parse_gamma(text: str):
    if text == MEDIAN_HEURISTIC:
        return text
    try:
        return float(text)
    except ValueError:
        raise OdseError(
            f"kernel_gamma must be a number or {MEDIAN_HEURISTIC!r}, got {text!r}"
        ) from None


def _svm_config(cp, space: str) -> SvmConfig:
    sec = cp["svm"]
    return SvmConfig(
        c=sec.getfloat("c"),
        kernel_gamma=_parse_gamma(sec.get("kernel_gamma")),
        kkt_tolerance=sec.getfloat("kkt_tolerance"),
        max_passes=sec.getint("max_passes"),
        space=space,
    )


def _ga_config(cp, seed: int) -> GaConfig:
    sec = cp["ga"]
    return GaConfig(
        population_size=sec.getint("population_size"),
        crossover_prob=sec.getfloat("crossover_prob"),
        mutation_prob=sec.getfloat("mutation_prob"),
        max_generations=sec.getint("max_generations"),
        stall_epsilon=sec.getfloat("stall_epsilon"),
        rng_seed=seed,
    )


def _estimator_config(cp) -> EstimatorConfig:
    sec = cp["estimator"]
    return EstimatorConfig(
        kind=sec.get("kind").upper(),
        sigma=sec.getfloat("sigma"),
        alpha=sec.getfloat("alpha"),
    )


def _fitness_weights(cp) -> FitnessWeights:
    sec = cp["experiment"]
    return FitnessWeights(
        w_acc=sec.getfloat("w_acc"),
        w_card=sec.getfloat("w_card"),
        w_ent=sec.getfloat("w_ent"),
    )


def _split_seed(cp, args) -> int:
    return args.seed if args.seed is not None else cp["split"].getint("seed")


def _write_output(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _cmd_matrix(args) -> int:
    seqs = read_fasta(args.fasta)
    sim = load_similarity_matrix(args.matrix)
    cm = build_cost_model(
        sim, gap_weight=args.gap_weight, normalization=args.normalization
    )
    d = compute_matrix(seqs, RepresentationSet(tuple(seqs)), cm, args.threads)
    _write_output(matrix_to_csv(d), args.out)
    return 0


def _cmd_splits(args) -> int:
    import json

    cp = _load_config(args.config)
    data = load_dataset(args.fasta, args.solubility)
    name = args.split or cp["split"].get("name")
    seed = _split_seed(cp, args)
    sim = load_similarity_matrix(args.matrix)
    cm = build_cost_model(
        sim,
        gap_weight=cp["experiment"].getfloat("input_gap_weight"),
        normalization=cp["experiment"].get("normalization"),
    )
    train, test = make_split(name, data, seed, cm=cm, threads=args.threads)
    doc = {
        "split": name,
        "seed": seed,
        "train": [{"id": s.id, "label": lab} for s, lab in train],
        "test": [{"id": s.id, "label": lab} for s, lab in test],
    }
    _write_output(json.dumps(doc, indent=1) + "\n", args.out)
    if args.histogram:
        with open(args.histogram, "w", encoding="utf-8") as fh:
            fh.write(solubility_histogram_csv(data))
    return 0


def _cmd_synthesize(args) -> int:
    cp = _load_config(args.config)
    data = load_dataset(args.fasta, args.solubility)
    sim = load_similarity_matrix(args.matrix)
    seed = _split_seed(cp, args)
    name = args.split or cp["split"].get("name")
    normalization = cp["experiment"].get("normalization")
    cm = build_cost_model(
        sim,
        gap_weight=cp["experiment"].getfloat("input_gap_weight"),
        normalization=normalization,
    )
    train, _ = make_split(name, data, seed, cm=cm, threads=args.threads)
    inner_kind = cp["experiment"].get("inner").lower()
    if inner_kind == "knn":
        inner = KnnConfig(k=cp["knn"].getint("k"))
    elif inner_kind == "svm":
        inner = _svm_config(cp, "embedded-gaussian")
    else:
        raise OdseError(f"[experiment] inner must be 'knn' or 'svm', got {inner_kind!r}")
    model = ga_optimize(
        train,
        None,
        sim,
        inner,
        _fitness_weights(cp),
        _estimator_config(cp),
        _ga_config(cp, seed),
        threads=args.threads,
        normalization=normalization,
    )
    out = args.out or "model.json"
    save_model(model, out)
    g = model.genome
    print(
        f"saved {out}: fitness {model.fitness:.4f}, "
        f"{len(model.representation)} prototypes, "
        f"sigma={g.sigma:.4f} tau_c={g.tau_c:.4f} tau_e={g.tau_e:.4f} "
        f"gap_weight={g.gap_weight:.4f}"
    )
    return 0


def _cmd_classify(args) -> int:
    model = load_model(args.model)
    seqs = read_fasta(args.fasta)
    labels = classify_all(model, seqs, threads=args.threads)
    lines = ["id,label"] + [f"{s.id},{lab}" for s, lab in zip(seqs, labels)]
    _write_output("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_evaluate(args) -> int:
    cp = _load_config(args.config)
    data = load_dataset(args.fasta, args.solubility)
    sim = load_similarity_matrix(args.matrix)
    seed = _split_seed(cp, args)
    name = args.split or cp["split"].get("name")
    systems = tuple(
        s.strip() for s in cp["experiment"].get("systems").split(",") if s.strip()
    )
    cfg = ExperimentConfig(
        split=SplitSpec(name, seed, cp["split"].getint("resamples")),
        systems=systems,
        ga=_ga_config(cp, seed),
        fitness=_fitness_weights(cp),
        estimator=_estimator_config(cp),
        knn_k=cp["knn"].getint("k"),
        svm=_svm_config(cp, "embedded-gaussian"),
        input_knn_k=cp["knn"].getint("input_k"),
        input_svm=_svm_config(cp, "input-levenshtein-kernel"),
        input_gap_weight=cp["experiment"].getfloat("input_gap_weight"),
        normalization=cp["experiment"].get("normalization"),
        threads=args.threads,
    )
    report = run_experiment(data, sim, cfg)
    outdir = args.out or "."
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, "report.csv"), "w", encoding="utf-8") as fh:
        fh.write(report_to_csv(report))
    with open(os.path.join(outdir, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report_to_json(report))
    text = report_to_text(report)
    with open(os.path.join(outdir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(text)
    print(text, end="")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="odse",
        description="Dissimilarity-space sequence classification toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=int, help="override the split seed")
    common.add_argument("--out", help="output file or directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads")

    matrix_args = argparse.ArgumentParser(add_help=False)
    matrix_args.add_argument(
        "--matrix",
        default=str(pam120_path()),
        help="substitution-matrix file (bundled PAM120 by default)",
    )

    p = sub.add_parser(
        "matrix",
        parents=[common, matrix_args],
        help="dump pairwise dissimilarities as CSV",
    )
    p.add_argument("--fasta", required=True)
    p.add_argument("--gap-weight", type=float, default=1.0)
    p.add_argument(
        "--normalization", choices=(RAW, BY_MAX_LENGTH), default=RAW
    )
    p.set_defaults(func=_cmd_matrix)

    p = sub.add_parser(
        "splits",
        parents=[common, matrix_args],
        help="emit train/test id lists for a split",
    )
    p.add_argument("--fasta", required=True)
    p.add_argument("--solubility", required=True)
    p.add_argument("--split", choices=SPLIT_NAMES)
    p.add_argument("--histogram", help="also write a solubility histogram CSV here")
    p.set_defaults(func=_cmd_splits)

    p = sub.add_parser(
        "synthesize",
        parents=[common, matrix_args],
        help="optimize and save a classification model",
    )
    p.add_argument("--fasta", required=True)
    p.add_argument("--solubility", required=True)
    p.add_argument("--split", choices=SPLIT_NAMES)
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser(
        "classify",
        parents=[common],
        help="label sequences with a saved model",
    )
    p.add_argument("--model", required=True)
    p.add_argument("--fasta", required=True)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser(
        "evaluate",
        parents=[common, matrix_args],
        help="run the resampled system comparison and write reports",
    )
    p.add_argument("--fasta", required=True)
    p.add_argument("--solubility", required=True)
    p.add_argument("--split", choices=SPLIT_NAMES)
    p.set_defaults(func=_cmd_evaluate)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except OdseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
