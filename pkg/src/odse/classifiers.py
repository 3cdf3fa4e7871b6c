"""kNN and binary C-SVM classifiers.

Both classifiers run in two spaces: on plain feature vectors (Euclidean
distance, Gaussian kernel) and directly on symbol sequences (alignment
distance, kernel exp(-gamma * d^2) used without any positive-definiteness
correction).  The SVM is trained by a deterministic SMO loop so that
training is reproducible bit for bit.

Class labels are 0 and 1 throughout; the SVM maps them to -1/+1
internally and a decision value of exactly zero resolves to class 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .alignment import AlignmentCostModel, dissimilarities_to_targets, levenshtein
from .errors import OdseError, TrainingError
from .sequences import Sequence

EMBEDDED_EUCLIDEAN = "embedded-euclidean"
INPUT_LEVENSHTEIN = "input-levenshtein"
EMBEDDED_GAUSSIAN = "embedded-gaussian"
INPUT_LEVENSHTEIN_KERNEL = "input-levenshtein-kernel"
MEDIAN_HEURISTIC = "median-heuristic"

# A pair step smaller than this does not count as progress; it is well
# below any decision-relevant scale but keeps the sweep loop from
# spinning on float noise.
_STEP_EPS = 1e-7
_SUPPORT_EPS = 1e-10


@dataclass(frozen=True)
class KnnConfig:
    k: int = 5
    space: str = EMBEDDED_EUCLIDEAN

    def __post_init__(self):
        if self.k < 1 or self.k % 2 == 0:
            raise OdseError("k must be a positive odd integer")
        if self.space not in (EMBEDDED_EUCLIDEAN, INPUT_LEVENSHTEIN):
            raise OdseError(f"unknown kNN space {self.space!r}")


@dataclass(frozen=True)
class SvmConfig:
    c: float = 2.0
    kernel_gamma: float | str = MEDIAN_HEURISTIC
    kkt_tolerance: float = 1e-3
    max_passes: int = 200
    space: str = EMBEDDED_GAUSSIAN

    def __post_init__(self):
        if not self.c > 0.0:
            raise OdseError("c must be positive")
        if self.kernel_gamma != MEDIAN_HEURISTIC and not (
            isinstance(self.kernel_gamma, (int, float)) and self.kernel_gamma > 0
        ):
            raise OdseError("kernel_gamma must be positive or 'median-heuristic'")
        if not self.kkt_tolerance > 0.0:
            raise OdseError("kkt_tolerance must be positive")
        if self.max_passes < 1:
            raise OdseError("max_passes must be at least 1")
        if self.space not in (EMBEDDED_GAUSSIAN, INPUT_LEVENSHTEIN_KERNEL):
            raise OdseError(f"unknown SVM space {self.space!r}")


@dataclass(frozen=True)
class TrainedSvm:
    """Support set of a trained binary SVM.

    inputs holds the support items: a float matrix of vectors in the
    embedded space, a tuple of Sequence in the input space.  targets are
    the mapped -1/+1 labels of those items.
    """

    space: str
    inputs: object
    alphas: np.ndarray
    targets: np.ndarray
    bias: float
    gamma: float


# --------------------------------------------------------------------------
# kNN


def knn_label_from_distances(distances, labels, k: int) -> int:
    """Majority label of the k closest items given precomputed distances.

    Ties in distance at rank k go to the lower training index.  A tied
    vote goes to the class with the smaller mean distance among its
    voting neighbors, then to the lower class label.
    """
    dist = np.asarray(distances, dtype=np.float64)
    labels = np.asarray(labels)
    n = dist.shape[0]
    if n == 0:
        raise TrainingError("kNN needs a non-empty training set")
    if n < k:
        raise TrainingError(f"kNN needs at least k={k} training items, got {n}")
    order = np.lexsort((np.arange(n), dist))[:k]
    votes: dict[int, list[float]] = {}
    for idx in order:
        votes.setdefault(int(labels[idx]), []).append(float(dist[idx]))
    best_count = max(len(v) for v in votes.values())
    tied = [lab for lab, v in votes.items() if len(v) == best_count]
    if len(tied) == 1:
        return tied[0]
    return min(tied, key=lambda lab: (math.fsum(votes[lab]) / len(votes[lab]), lab))


def knn_predict(train_inputs, train_labels, query, cfg: KnnConfig,
                cm: AlignmentCostModel | None = None) -> int:
    if cfg.space == EMBEDDED_EUCLIDEAN:
        x = np.asarray(train_inputs, dtype=np.float64)
        q = np.asarray(query, dtype=np.float64)
        if x.ndim != 2 or q.shape != (x.shape[1],):
            raise OdseError("query dimension does not match training vectors")
        dist = np.sqrt(np.einsum("ij,ij->i", x - q, x - q))
    else:
        if cm is None:
            raise OdseError("input-space kNN needs a cost model")
        dist = dissimilarities_to_targets(query, list(train_inputs), cm)
    return knn_label_from_distances(dist, train_labels, cfg.k)


# --------------------------------------------------------------------------
# kernels


def gaussian_kernel(x, y, gamma: float) -> float:
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(y, dtype=np.float64)
    if a.shape != b.shape:
        raise OdseError("kernel arguments must have the same dimension")
    d = a - b
    return float(np.exp(-gamma * np.dot(d, d)))


def levenshtein_kernel(s: Sequence, t: Sequence, gamma: float,
                       cm: AlignmentCostModel) -> float:
    d = levenshtein(s, t, cm)
    return float(np.exp(-gamma * d * d))


def _euclidean_pairwise(x: np.ndarray) -> np.ndarray:
    diff = x[:, None, :] - x[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diff, diff)
    return np.sqrt(np.maximum(sq, 0.0))


def _sequence_pairwise(seqs, cm: AlignmentCostModel) -> np.ndarray:
    n = len(seqs)
    out = np.zeros((n, n), dtype=np.float64)
    for i in range(n):
        # one row per batched call; mirror for symmetry
        out[i] = dissimilarities_to_targets(seqs[i], seqs, cm)
    return out


def median_heuristic_gamma(distances: np.ndarray) -> float:
    """1 / (2 * median^2) of the off-diagonal pairwise distances.

    Falls back to 1.0 when the median is zero (all points coincide).
    """
    n = distances.shape[0]
    if n < 2:
        return 1.0
    med = float(np.median(distances[np.triu_indices(n, k=1)]))
    if med <= 0.0:
        return 1.0
    return 1.0 / (2.0 * med * med)


# --------------------------------------------------------------------------
# SMO


def smo_solve(gram, targets, c: float, tol: float, max_passes: int):
    """Pairwise coordinate ascent on the SVM dual over a fixed Gram matrix.

    targets must be -1/+1.  The loop is fully deterministic: the first
    index sweeps in order; partners are tried by decreasing |E_i - E_j|
    (ties toward the lower index) until one yields a real step, so a
    violator is never abandoned just because its best partner is stuck
    at a bound.  Pairs whose curvature K_ii + K_jj - 2 K_ij is not
    positive are skipped, which keeps the update well defined when the
    Gram matrix is indefinite; alphas stay in [0, C] regardless.  Stops
    after a sweep with no significant step (no alpha would ever move
    again under the same deterministic order) or after max_passes sweeps.
    """
    k = np.asarray(gram, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    n = y.shape[0]
    alphas = np.zeros(n, dtype=np.float64)
    b = 0.0
    for _ in range(max_passes):
        errors = k @ (alphas * y) + b - y
        changed = 0
        for i in range(n):
            e_i = errors[i]
            r_i = e_i * y[i]
            if not ((r_i < -tol and alphas[i] < c) or (r_i > tol and alphas[i] > 0)):
                continue
            gap = np.abs(errors - e_i)
            for j in np.lexsort((np.arange(n), -gap)):
                j = int(j)
                if j == i:
                    continue
                a_i, a_j = alphas[i], alphas[j]
                if y[i] != y[j]:
                    lo, hi = max(0.0, a_j - a_i), min(c, c + a_j - a_i)
                else:
                    lo, hi = max(0.0, a_i + a_j - c), min(c, a_i + a_j)
                if lo >= hi:
                    continue
                eta = k[i, i] + k[j, j] - 2.0 * k[i, j]
                if eta <= 0.0:
                    continue
                a_j_new = min(max(a_j + y[j] * (e_i - errors[j]) / eta, lo), hi)
                if abs(a_j_new - a_j) < _STEP_EPS:
                    continue
                a_i_new = a_i + y[i] * y[j] * (a_j - a_j_new)
                d_i = y[i] * (a_i_new - a_i)
                d_j = y[j] * (a_j_new - a_j)
                b1 = b - e_i - d_i * k[i, i] - d_j * k[i, j]
                b2 = b - errors[j] - d_i * k[i, j] - d_j * k[j, j]
                if 0.0 < a_i_new < c:
                    b_new = b1
                elif 0.0 < a_j_new < c:
                    b_new = b2
                else:
                    b_new = 0.5 * (b1 + b2)
                errors += d_i * k[:, i] + d_j * k[:, j] + (b_new - b)
                alphas[i], alphas[j] = a_i_new, a_j_new
                b = b_new
                changed += 1
                break
        if changed == 0:
            break
    # recompute the bias from the free support vectors when there are any;
    # averaging is more stable than the last pairwise estimate
    free = (alphas > _SUPPORT_EPS) & (alphas < c - _SUPPORT_EPS)
    if np.any(free):
        f_wo_b = k[free] @ (alphas * y)
        b = float(np.mean(y[free] - f_wo_b))
    return alphas, b


def svm_train(train_inputs, train_labels, cfg: SvmConfig,
              cm: AlignmentCostModel | None = None,
              pairwise_dist=None) -> TrainedSvm:
    """Train a binary C-SVM on vectors or sequences.

    pairwise_dist, when given, must be the full symmetric training
    distance matrix and skips recomputing it (the Gram matrix and the
    median-heuristic width are both derived from distances).
    """
    labels = np.asarray(train_labels)
    n = labels.shape[0]
    classes = set(int(v) for v in labels)
    if not classes <= {0, 1}:
        raise TrainingError(f"labels must be 0/1, got {sorted(classes)}")
    if len(classes) != 2:
        raise TrainingError("training set must contain both classes")
    if cfg.space == EMBEDDED_GAUSSIAN:
        x = np.asarray(train_inputs, dtype=np.float64)
        if x.ndim != 2 or x.shape[0] != n:
            raise TrainingError("expected one training vector per label")
        dist = np.asarray(pairwise_dist, dtype=np.float64) if pairwise_dist is not None \
            else _euclidean_pairwise(x)
        stored = x
    else:
        if cm is None:
            raise TrainingError("input-space SVM needs a cost model")
        seqs = tuple(train_inputs)
        if len(seqs) != n:
            raise TrainingError("expected one training sequence per label")
        dist = np.asarray(pairwise_dist, dtype=np.float64) if pairwise_dist is not None \
            else _sequence_pairwise(seqs, cm)
        stored = seqs
    if dist.shape != (n, n):
        raise TrainingError("pairwise distance matrix has the wrong shape")
    gamma = cfg.kernel_gamma if cfg.kernel_gamma != MEDIAN_HEURISTIC \
        else median_heuristic_gamma(dist)
    gram = np.exp(-gamma * dist * dist)
    y = np.where(labels == 1, 1.0, -1.0)
    alphas, bias = smo_solve(gram, y, cfg.c, cfg.kkt_tolerance, cfg.max_passes)
    keep = alphas > _SUPPORT_EPS
    if cfg.space == EMBEDDED_GAUSSIAN:
        support = stored[keep]
    else:
        support = tuple(s for s, f in zip(stored, keep) if f)
    return TrainedSvm(space=cfg.space, inputs=support, alphas=alphas[keep],
                      targets=y[keep], bias=float(bias), gamma=float(gamma))


def svm_decision_from_distances(model: TrainedSvm, distances) -> float:
    """Decision value given precomputed query-to-support distances."""
    dist = np.asarray(distances, dtype=np.float64)
    if dist.shape != model.alphas.shape:
        raise OdseError("expected one distance per support item")
    kvals = np.exp(-model.gamma * dist * dist)
    return float(np.dot(model.alphas * model.targets, kvals) + model.bias)


def svm_decision(model: TrainedSvm, query,
                 cm: AlignmentCostModel | None = None) -> float:
    if len(model.alphas) == 0:
        return model.bias
    if model.space == EMBEDDED_GAUSSIAN:
        x = np.asarray(model.inputs, dtype=np.float64)
        q = np.asarray(query, dtype=np.float64)
        if q.shape != (x.shape[1],):
            raise OdseError("query dimension does not match support vectors")
        d = x - q
        dist = np.sqrt(np.einsum("ij,ij->i", d, d))
    else:
        if cm is None:
            raise OdseError("input-space SVM needs a cost model")
        dist = dissimilarities_to_targets(query, list(model.inputs), cm)
    return svm_decision_from_distances(model, dist)


def svm_predict(model: TrainedSvm, query,
                cm: AlignmentCostModel | None = None) -> int:
    return 1 if svm_decision(model, query, cm) > 0.0 else 0
