"""Resampled evaluation protocol, significance testing and reporting.

Four systems can be compared: the optimized embedding with an inner kNN
or C-SVM, and two references working directly on sequences (kNN under
the alignment distance, C-SVM with the uncorrected alignment kernel).
Each resample draws its own seed from the master seed, so any single
resample can be reproduced in isolation.
"""

from __future__ import annotations

import dataclasses
import io
import csv
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import t as student_t

from .alignment import RAW, SimilarityMatrix, build_cost_model
from .classifiers import (
    EMBEDDED_GAUSSIAN,
    INPUT_LEVENSHTEIN_KERNEL,
    KnnConfig,
    SvmConfig,
    knn_label_from_distances,
    svm_decision_from_distances,
    svm_train,
)
from .datasets import DS200, SplitSpec, make_split
from .embedding import RepresentationSet, compute_matrix
from .errors import OdseError
from .model import (
    EstimatorConfig,
    FitnessWeights,
    GaConfig,
    classify_all,
    ga_optimize,
)

ODSE_KNN = "odse-knn"
ODSE_SVM = "odse-svm"
INPUT_KNN = "input-knn"
INPUT_SVM = "input-svm"
ALL_SYSTEMS = (ODSE_KNN, ODSE_SVM, INPUT_KNN, INPUT_SVM)

SIGNIFICANCE_ALPHA = 1e-4


def welch_t_test(a, b) -> float:
    """Two-sided Welch t-test p-value for unequal-variance samples.

    Degrees of freedom follow Welch-Satterthwaite.  When both samples
    have zero variance the p-value degenerates to 1 for equal means and
    0 otherwise.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.size < 2 or y.size < 2:
        raise OdseError("welch_t_test needs at least two samples per side")
    vx = float(x.var(ddof=1))
    vy = float(y.var(ddof=1))
    mx, my = float(x.mean()), float(y.mean())
    if vx == 0.0 and vy == 0.0:
        return 1.0 if mx == my else 0.0
    sx, sy = vx / x.size, vy / y.size
    tstat = (mx - my) / math.sqrt(sx + sy)
    df = (sx + sy) ** 2 / (sx**2 / (x.size - 1) + sy**2 / (y.size - 1))
    return float(2.0 * student_t.sf(abs(tstat), df))


@dataclass(frozen=True)
class ExperimentConfig:
    split: SplitSpec
    systems: tuple[str, ...] = ALL_SYSTEMS
    ga: GaConfig = GaConfig()
    fitness: FitnessWeights = FitnessWeights()
    estimator: EstimatorConfig = EstimatorConfig()
    knn_k: int = 5
    svm: SvmConfig = SvmConfig()
    input_knn_k: int = 5
    input_svm: SvmConfig = SvmConfig(space=INPUT_LEVENSHTEIN_KERNEL)
    input_gap_weight: float = 1.0
    normalization: str = RAW
    threads: int = 1

    def __post_init__(self):
        if not self.systems:
            raise OdseError("at least one system must be evaluated")
        unknown = [s for s in self.systems if s not in ALL_SYSTEMS]
        if unknown:
            raise OdseError(f"unknown systems {unknown}; choose from {ALL_SYSTEMS}")
        if self.svm.space != EMBEDDED_GAUSSIAN:
            raise OdseError("the inner SVM must use the embedded space")
        if self.input_svm.space != INPUT_LEVENSHTEIN_KERNEL:
            raise OdseError("the reference SVM must use the input space")


@dataclass(frozen=True)
class ResampleOutcome:
    system_id: str
    resample: int
    seed: int
    errors0: int
    errors1: int
    n0: int
    n1: int

    @property
    def accuracy(self) -> float:
        total = self.n0 + self.n1
        return (total - self.errors0 - self.errors1) / total


@dataclass(frozen=True)
class SystemSummary:
    system_id: str
    params: str
    mean_errors0: float
    std_errors0: float
    mean_errors1: float
    std_errors1: float
    mean_accuracy: float
    std_accuracy: float


@dataclass(frozen=True)
class PairwiseTest:
    system_a: str
    system_b: str
    p_value: float

    @property
    def significant(self) -> bool:
        return self.p_value < SIGNIFICANCE_ALPHA


@dataclass(frozen=True)
class EvaluationReport:
    split_name: str
    master_seed: int
    resamples: int
    rows: tuple[SystemSummary, ...]
    outcomes: tuple[ResampleOutcome, ...]
    pairwise: tuple[PairwiseTest, ...]


def _system_params(system: str, cfg: ExperimentConfig) -> str:
    if system == ODSE_KNN:
        return f"k={cfg.knn_k}"
    if system == ODSE_SVM:
        return f"C={cfg.svm.c:g}"
    if system == INPUT_KNN:
        return f"k={cfg.input_knn_k}"
    return f"C={cfg.input_svm.c:g}"


def _run_system(system, train, test, sim, cfg, cm_ref, d_train, d_test, seed):
    """Predicted labels for the test set under one system."""
    train_seqs = [s for s, _ in train]
    train_labels = np.array([lab for _, lab in train])
    test_seqs = [s for s, _ in test]
    if system in (ODSE_KNN, ODSE_SVM):
        inner = KnnConfig(k=cfg.knn_k) if system == ODSE_KNN else cfg.svm
        ga = dataclasses.replace(cfg.ga, rng_seed=seed)
        model = ga_optimize(
            train,
            None,
            sim,
            inner,
            cfg.fitness,
            cfg.estimator,
            ga,
            threads=cfg.threads,
            normalization=cfg.normalization,
        )
        return classify_all(model, test_seqs, threads=cfg.threads)
    if system == INPUT_KNN:
        return [
            knn_label_from_distances(row, train_labels, cfg.input_knn_k)
            for row in d_test
        ]
    svm = svm_train(train_seqs, train_labels, cfg.input_svm, cm_ref,
                    pairwise_dist=d_train)
    position = {s.id: i for i, s in enumerate(train_seqs)}
    support_cols = [position[s.id] for s in svm.inputs]
    return [
        1 if svm_decision_from_distances(svm, row[support_cols]) > 0.0 else 0
        for row in d_test
    ]


def run_experiment(data, sim: SimilarityMatrix, cfg: ExperimentConfig) -> EvaluationReport:
    """Evaluate the configured systems over resampled splits.

    The DS-200 split runs once whatever the resample count says; the
    other splits run cfg.split.resamples times with seeds derived from
    the master seed.  A failing resample aborts the experiment and names
    the derived seed so the case can be replayed alone.
    """
    n_resamples = 1 if cfg.split.name == DS200 else cfg.split.resamples
    seeds = [
        int(s)
        for s in np.random.SeedSequence(cfg.split.seed).generate_state(
            n_resamples, dtype=np.uint64
        )
    ]
    cm_ref = build_cost_model(
        sim, gap_weight=cfg.input_gap_weight, normalization=cfg.normalization
    )
    need_input = any(s in (INPUT_KNN, INPUT_SVM) for s in cfg.systems)

    outcomes: list[ResampleOutcome] = []
    for r, seed in enumerate(seeds):
        try:
            train, test = make_split(
                cfg.split.name, data, seed, cm=cm_ref, threads=cfg.threads
            )
            train_seqs = [s for s, _ in train]
            test_seqs = [s for s, _ in test]
            d_train = d_test = None
            if need_input:
                proto = RepresentationSet(tuple(train_seqs))
                d_train = compute_matrix(train_seqs, proto, cm_ref, cfg.threads).values
                d_test = compute_matrix(test_seqs, proto, cm_ref, cfg.threads).values
            for system in cfg.systems:
                preds = _run_system(
                    system, train, test, sim, cfg, cm_ref, d_train, d_test, seed
                )
                err0 = sum(
                    1 for (_, lab), p in zip(test, preds) if lab == 0 and p != 0
                )
                err1 = sum(
                    1 for (_, lab), p in zip(test, preds) if lab == 1 and p != 1
                )
                n0 = sum(1 for _, lab in test if lab == 0)
                n1 = len(test) - n0
                outcomes.append(
                    ResampleOutcome(system, r, seed, err0, err1, n0, n1)
                )
        except OdseError as exc:
            raise OdseError(
                f"resample {r} (derived seed {seed}) failed: {exc}"
            ) from exc

    def summarize(system: str) -> SystemSummary:
        runs = [o for o in outcomes if o.system_id == system]

        def agg(values):
            arr = np.array(values, dtype=np.float64)
            std = float(arr.std(ddof=1)) if len(arr) >= 2 else 0.0
            return float(arr.mean()), std

        m0, s0 = agg([o.errors0 for o in runs])
        m1, s1 = agg([o.errors1 for o in runs])
        ma, sa = agg([o.accuracy for o in runs])
        return SystemSummary(system, _system_params(system, cfg), m0, s0, m1, s1, ma, sa)

    rows = tuple(summarize(s) for s in cfg.systems)

    pairwise = []
    if n_resamples >= 2:
        for i, sa in enumerate(cfg.systems):
            acc_a = [o.accuracy for o in outcomes if o.system_id == sa]
            for sb in cfg.systems[i + 1 :]:
                acc_b = [o.accuracy for o in outcomes if o.system_id == sb]
                pairwise.append(PairwiseTest(sa, sb, welch_t_test(acc_a, acc_b)))

    return EvaluationReport(
        split_name=cfg.split.name,
        master_seed=cfg.split.seed,
        resamples=n_resamples,
        rows=rows,
        outcomes=tuple(outcomes),
        pairwise=tuple(pairwise),
    )


# --------------------------------------------------------------------------
# report output


def report_to_csv(report: EvaluationReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "system", "params", "resamples",
            "mean_errors0", "std_errors0",
            "mean_errors1", "std_errors1",
            "mean_accuracy", "std_accuracy",
        ]
    )
    for row in report.rows:
        writer.writerow(
            [
                row.system_id, row.params, report.resamples,
                repr(row.mean_errors0), repr(row.std_errors0),
                repr(row.mean_errors1), repr(row.std_errors1),
                repr(row.mean_accuracy), repr(row.std_accuracy),
            ]
        )
    return buf.getvalue()


def report_to_json(report: EvaluationReport) -> str:
    doc = {
        "split": report.split_name,
        "master_seed": report.master_seed,
        "resamples": report.resamples,
        "significance_alpha": SIGNIFICANCE_ALPHA,
        "systems": [dataclasses.asdict(r) for r in report.rows],
        "outcomes": [
            {**dataclasses.asdict(o), "accuracy": o.accuracy}
            for o in report.outcomes
        ],
        "pairwise": [
            {**dataclasses.asdict(p), "significant": p.significant}
            for p in report.pairwise
        ],
    }
    return json.dumps(doc, indent=1)


def report_to_text(report: EvaluationReport) -> str:
    lines = [
        f"split {report.split_name}  seed {report.master_seed}  "
        f"resamples {report.resamples}",
        "",
        f"{'system':<12}{'params':<10}{'err0':<16}{'err1':<16}{'accuracy':<18}",
    ]
    for r in report.rows:
        lines.append(
            f"{r.system_id:<12}{r.params:<10}"
            f"{f'{r.mean_errors0:.2f}+-{r.std_errors0:.2f}':<16}"
            f"{f'{r.mean_errors1:.2f}+-{r.std_errors1:.2f}':<16}"
            f"{f'{r.mean_accuracy:.4f}+-{r.std_accuracy:.4f}':<18}"
        )
    lines.append("")
    if report.pairwise:
        lines.append(f"pairwise Welch t-tests (significant at p < {SIGNIFICANCE_ALPHA:g}):")
        for p in report.pairwise:
            mark = "significant" if p.significant else "not significant"
            lines.append(
                f"  {p.system_a} vs {p.system_b}: p = {p.p_value:.3e} ({mark})"
            )
    else:
        lines.append("pairwise tests skipped: a single run gives no variance")
    lines.append("")
    return "\n".join(lines)
