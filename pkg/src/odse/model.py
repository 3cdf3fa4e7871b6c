"""Dissimilarity-space classification model.

A model is synthesized from a 4-gene genome (Parzen width, two entropy
thresholds, gap weight): the training set seeds the prototype set, columns
of the training dissimilarity matrix are scored by normalized entropy,
low-entropy prototypes are compressed away, high-entropy ones are replaced
by per-class medoids, and an inner feature-space classifier is trained on
the embedded vectors.  A genetic algorithm searches the genome space for
the fittest model.
"""

from __future__ import annotations

import dataclasses
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .alignment import (
    RAW,
    AlignmentCostModel,
    SimilarityMatrix,
    build_cost_model,
    dissimilarities_to_targets,
)
from .classifiers import (
    EMBEDDED_EUCLIDEAN,
    EMBEDDED_GAUSSIAN,
    KnnConfig,
    SvmConfig,
    TrainedSvm,
    knn_label_from_distances,
    svm_predict,
    svm_train,
)
from .embedding import (
    EXPANSION_MEDOID,
    DissimilarityMatrix,
    RepresentationSet,
    compute_matrix,
    embed_one,
)
from .entropy import (
    MST,
    EstimatorConfig,
    normalized_column_entropy,
    normalized_vector_entropy,
)
from .errors import OdseError, SynthesisError, TrainingError
from .sequences import Sequence

SIGMA_BOUNDS = (0.01, 5.0)
GAP_WEIGHT_MAX = 4.0
# gap_weight is bounded below by an open interval at 0; sampling and
# repair use this floor so the bound is never violated
GAP_WEIGHT_FLOOR = 1e-3


@dataclass(frozen=True)
class OdseGenome:
    """Model parameters the genetic search optimizes."""

    sigma: float
    tau_c: float
    tau_e: float
    gap_weight: float

    def __post_init__(self):
        if not SIGMA_BOUNDS[0] <= self.sigma <= SIGMA_BOUNDS[1]:
            raise OdseError(f"sigma {self.sigma} outside {SIGMA_BOUNDS}")
        if not 0.0 <= self.tau_c <= 1.0 or not 0.0 <= self.tau_e <= 1.0:
            raise OdseError("entropy thresholds must lie in [0, 1]")
        if self.tau_c > self.tau_e:
            raise OdseError("tau_c must not exceed tau_e")
        if not 0.0 < self.gap_weight <= GAP_WEIGHT_MAX:
            raise OdseError(f"gap_weight {self.gap_weight} outside (0, 4]")

    def as_vector(self) -> np.ndarray:
        return np.array(
            [self.sigma, self.tau_c, self.tau_e, self.gap_weight], dtype=np.float64
        )


def repair_genome(sigma, tau_c, tau_e, gap_weight) -> OdseGenome:
    """Clamp genes into bounds and swap the thresholds when inverted."""
    sigma = min(max(float(sigma), SIGMA_BOUNDS[0]), SIGMA_BOUNDS[1])
    tau_c = min(max(float(tau_c), 0.0), 1.0)
    tau_e = min(max(float(tau_e), 0.0), 1.0)
    gap_weight = min(max(float(gap_weight), GAP_WEIGHT_FLOOR), GAP_WEIGHT_MAX)
    if tau_c > tau_e:
        tau_c, tau_e = tau_e, tau_c
    return OdseGenome(sigma, tau_c, tau_e, gap_weight)


@dataclass(frozen=True)
class FitnessWeights:
    w_acc: float = 0.8
    w_card: float = 0.1
    w_ent: float = 0.1

    def __post_init__(self):
        if min(self.w_acc, self.w_card, self.w_ent) < 0.0:
            raise OdseError("fitness weights must be nonnegative")
        if abs(self.w_acc + self.w_card + self.w_ent - 1.0) > 1e-9:
            raise OdseError("fitness weights must sum to 1")


@dataclass(frozen=True)
class GaConfig:
    population_size: int = 20
    crossover_prob: float = 0.9
    mutation_prob: float = 0.2
    max_generations: int = 50
    stall_epsilon: float = 1e-4
    rng_seed: int = 0

    def __post_init__(self):
        if self.population_size < 4 or self.population_size % 2 != 0:
            raise OdseError("population_size must be an even integer >= 4")
        if not 0.0 <= self.crossover_prob <= 1.0:
            raise OdseError("crossover_prob must lie in [0, 1]")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise OdseError("mutation_prob must lie in [0, 1]")
        if self.max_generations < 1:
            raise OdseError("max_generations must be at least 1")
        if not self.stall_epsilon > 0.0:
            raise OdseError("stall_epsilon must be positive")


@dataclass(frozen=True)
class GenerationStat:
    generation: int
    best: float
    mean: float


@dataclass(frozen=True, eq=False)
class KnnInner:
    """Inner kNN over embedded vectors; keeps the whole training embedding."""

    vectors: np.ndarray
    labels: np.ndarray
    config: KnnConfig

    def predict(self, vector) -> int:
        q = np.asarray(vector, dtype=np.float64)
        d = self.vectors - q
        dist = np.sqrt(np.einsum("ij,ij->i", d, d))
        return knn_label_from_distances(dist, self.labels, self.config.k)


@dataclass(frozen=True, eq=False)
class SvmInner:
    model: TrainedSvm
    config: SvmConfig

    def predict(self, vector) -> int:
        return svm_predict(self.model, vector)


def train_inner(vectors: np.ndarray, labels, cfg):
    """Train the configured inner classifier on embedded vectors."""
    labels = np.asarray(labels)
    if isinstance(cfg, KnnConfig):
        if cfg.space != EMBEDDED_EUCLIDEAN:
            raise TrainingError("inner kNN must use the embedded space")
        if vectors.shape[0] < cfg.k:
            raise TrainingError("fewer training vectors than k")
        return KnnInner(vectors=np.array(vectors), labels=labels, config=cfg)
    if isinstance(cfg, SvmConfig):
        if cfg.space != EMBEDDED_GAUSSIAN:
            raise TrainingError("inner SVM must use the embedded space")
        return SvmInner(model=svm_train(vectors, labels, cfg), config=cfg)
    raise TrainingError(f"unknown inner classifier config {type(cfg).__name__}")


@dataclass(frozen=True, eq=False)
class OdseModel:
    genome: OdseGenome
    representation: RepresentationSet
    cost_model: AlignmentCostModel
    inner: object
    fitness: float
    synthesis_log: tuple[GenerationStat, ...] = ()

    def __post_init__(self):
        if not -1e-9 <= self.fitness <= 1.0 + 1e-9:
            raise OdseError(f"fitness {self.fitness} outside [0, 1]")


# --------------------------------------------------------------------------
# prototype set transformations


def compress(
    d: DissimilarityMatrix,
    r: RepresentationSet,
    tau_c: float,
    est: EstimatorConfig,
) -> tuple[RepresentationSet, tuple[int, ...]]:
    """Drop every prototype whose column scores at or below tau_c.

    If nothing would survive, the single best-scoring prototype is kept
    (ties to the lowest column index).  Returns the reduced set plus the
    kept column indices, in input order.
    """
    scores = np.array(
        [normalized_column_entropy(d.column(j), est).normalized for j in range(len(r))]
    )
    kept = [j for j in range(len(r)) if scores[j] > tau_c]
    if not kept:
        kept = [int(np.argmax(scores))]
    reduced = RepresentationSet(
        prototypes=tuple(r.prototypes[j] for j in kept),
        provenance=tuple(r.provenance[j] for j in kept),
    )
    return reduced, tuple(kept)


def _per_class_medoids(train, cm: AlignmentCostModel, pairwise=None):
    """One medoid per class: the member minimizing the summed input-space
    dissimilarity to its classmates, ties to the lowest dataset index.

    pairwise, when given, is the full train-by-train dissimilarity matrix
    in dataset order.
    """
    by_class: dict[int, list[int]] = {}
    for i, (_, label) in enumerate(train):
        by_class.setdefault(int(label), []).append(i)
    medoids = []
    for label in sorted(by_class):
        idx = by_class[label]
        members = [train[i][0] for i in idx]
        if pairwise is not None:
            sums = pairwise[np.ix_(idx, idx)].sum(axis=0)
        else:
            sums = np.zeros(len(idx))
            for s in members:
                sums += dissimilarities_to_targets(s, members, cm)
        best = int(np.argmin(sums))
        medoids.append((label, train[idx[best]][0]))
    return medoids


def expand(
    d: DissimilarityMatrix,
    r: RepresentationSet,
    tau_e: float,
    train,
    cm: AlignmentCostModel,
    est: EstimatorConfig,
    pairwise=None,
) -> RepresentationSet:
    """Replace prototypes whose column scores at or above tau_e.

    Removed prototypes are replaced collectively by one medoid per class
    drawn from the training data; medoids whose id already survives are
    not re-added.  When no column reaches tau_e the set is returned
    unchanged.
    """
    if not train:
        raise SynthesisError("expansion needs a non-empty training set")
    scores = np.array(
        [normalized_column_entropy(d.column(j), est).normalized for j in range(len(r))]
    )
    removed = scores >= tau_e
    if not removed.any():
        return r
    protos = [p for j, p in enumerate(r.prototypes) if not removed[j]]
    tags = [t for j, t in enumerate(r.provenance) if not removed[j]]
    present = {p.id for p in protos}
    for _, medoid in _per_class_medoids(train, cm, pairwise):
        if medoid.id in present:
            continue
        present.add(medoid.id)
        protos.append(medoid)
        tags.append(EXPANSION_MEDOID)
    return RepresentationSet(prototypes=tuple(protos), provenance=tuple(tags))


# --------------------------------------------------------------------------
# synthesis


def _split_labeled(pairs):
    seqs = [s for s, _ in pairs]
    labels = np.array([int(lab) for _, lab in pairs])
    return seqs, labels


def synthesize_instance(
    g: OdseGenome,
    train,
    validation,
    sim: SimilarityMatrix,
    inner_cfg,
    fw: FitnessWeights,
    est: EstimatorConfig,
    normalization: str = RAW,
) -> tuple[OdseModel, float]:
    """Build and score one model for a fixed genome.

    train and validation are lists of (Sequence, label) pairs with
    disjoint ids.  Fitness combines validation accuracy, prototype-set
    shrinkage and the normalized spread of the embedded training vectors.
    """
    if not train or not validation:
        raise SynthesisError("train and validation sets must be non-empty")
    train_seqs, train_labels = _split_labeled(train)
    val_seqs, val_labels = _split_labeled(validation)
    overlap = {s.id for s in train_seqs} & {s.id for s in val_seqs}
    if overlap:
        raise SynthesisError(f"train/validation ids overlap: {sorted(overlap)[:5]}")
    if not set(val_labels) <= set(train_labels):
        raise SynthesisError("validation contains a class absent from training")

    cm = build_cost_model(sim, gap_weight=g.gap_weight, normalization=normalization)
    # the genome's Parzen width drives column scoring; it is ignored by
    # the MST estimator so substituting unconditionally is harmless
    est_g = dataclasses.replace(est, sigma=g.sigma)

    r0 = RepresentationSet(prototypes=tuple(train_seqs))
    d0 = compute_matrix(train_seqs, r0, cm)
    rc, kept = compress(d0, r0, g.tau_c, est_g)
    dc = DissimilarityMatrix(d0.values[:, list(kept)], d0.row_ids, rc.ids)
    # with the initial prototypes equal to the training set, d0 doubles as
    # the input-space pairwise matrix the medoid search needs
    r1 = expand(dc, rc, g.tau_e, train, cm, est_g, pairwise=d0.values)

    # every prototype of r1 is a training sequence, so the embedded
    # training matrix is a column selection of d0 (bit-identical to a
    # fresh computation; lanes of the batch kernel are independent)
    col_of = {pid: j for j, pid in enumerate(r0.ids)}
    d1 = DissimilarityMatrix(
        d0.values[:, [col_of[pid] for pid in r1.ids]], d0.row_ids, r1.ids
    )

    try:
        inner = train_inner(d1.values, train_labels, inner_cfg)
    except TrainingError as exc:
        err = SynthesisError(f"inner classifier training failed: {exc}")
        err.genome = g
        raise err from exc

    d_val = compute_matrix(val_seqs, r1, cm)
    hits = sum(
        1
        for row, label in zip(d_val.values, val_labels)
        if inner.predict(row) == int(label)
    )
    pi = hits / len(val_seqs)
    # expansion can push |R'| past |train|; the shrinkage reward bottoms
    # out at 0 so fitness stays in [0, 1]
    card = max(0.0, 1.0 - len(r1) / len(train_seqs))
    if len(train_seqs) >= 2:
        h_norm = normalized_vector_entropy(
            d1.values, dataclasses.replace(est_g, kind=MST)
        ).normalized
    else:
        h_norm = 0.0
    fitness = fw.w_acc * pi + fw.w_card * card + fw.w_ent * h_norm
    model = OdseModel(
        genome=g,
        representation=r1,
        cost_model=cm,
        inner=inner,
        fitness=fitness,
    )
    return model, fitness


# --------------------------------------------------------------------------
# genetic optimization


def _random_genome(rng: np.random.Generator) -> OdseGenome:
    return repair_genome(
        rng.uniform(*SIGMA_BOUNDS),
        rng.uniform(0.0, 1.0),
        rng.uniform(0.0, 1.0),
        rng.uniform(GAP_WEIGHT_FLOOR, GAP_WEIGHT_MAX),
    )


def _crossover(a: OdseGenome, b: OdseGenome, rng: np.random.Generator):
    va, vb = a.as_vector(), b.as_vector()
    p1, p2 = sorted(rng.choice(np.array([1, 2, 3]), size=2, replace=False))
    ca, cb = va.copy(), vb.copy()
    ca[p1:p2], cb[p1:p2] = vb[p1:p2], va[p1:p2]
    return repair_genome(*ca), repair_genome(*cb)


_GENE_BOUNDS = (
    SIGMA_BOUNDS,
    (0.0, 1.0),
    (0.0, 1.0),
    (GAP_WEIGHT_FLOOR, GAP_WEIGHT_MAX),
)


def _mutate(g: OdseGenome, rng: np.random.Generator, prob: float) -> OdseGenome:
    v = g.as_vector()
    for gene, (lo, hi) in enumerate(_GENE_BOUNDS):
        if rng.random() < prob:
            v[gene] = rng.uniform(lo, hi)
    return repair_genome(*v)


def _select_index(fits: np.ndarray, rng: np.random.Generator) -> int:
    total = float(fits.sum())
    if total <= 0.0:
        return int(rng.integers(len(fits)))
    return int(rng.choice(len(fits), p=fits / total))


def _next_population(pop, fits: np.ndarray, rng: np.random.Generator, cfg: GaConfig):
    children = [pop[int(np.argmax(fits))]]  # elite passes unchanged
    while len(children) < cfg.population_size:
        g1 = pop[_select_index(fits, rng)]
        g2 = pop[_select_index(fits, rng)]
        if rng.random() < cfg.crossover_prob:
            g1, g2 = _crossover(g1, g2, rng)
        g1 = _mutate(g1, rng, cfg.mutation_prob)
        g2 = _mutate(g2, rng, cfg.mutation_prob)
        children.append(g1)
        if len(children) < cfg.population_size:
            children.append(g2)
    return children


def _stratified_holdout(train, fraction: float, rng: np.random.Generator):
    """Split labeled pairs into (train, validation), keeping at least one
    member of every class on the training side."""
    by_class: dict[int, list[int]] = {}
    for i, (_, label) in enumerate(train):
        by_class.setdefault(int(label), []).append(i)
    val_idx: set[int] = set()
    for label in sorted(by_class):
        idx = by_class[label]
        n_val = min(int(round(fraction * len(idx))), len(idx) - 1)
        if n_val > 0:
            pick = rng.choice(len(idx), size=n_val, replace=False)
            val_idx.update(idx[int(p)] for p in pick)
    if not val_idx:
        raise SynthesisError(
            "could not hold out a validation set; provide one explicitly"
        )
    train_part = [train[i] for i in range(len(train)) if i not in val_idx]
    val_part = [train[i] for i in sorted(val_idx)]
    return train_part, val_part


def ga_optimize(
    train,
    validation,
    sim: SimilarityMatrix,
    inner_cfg,
    fw: FitnessWeights,
    est: EstimatorConfig,
    cfg: GaConfig,
    threads: int = 1,
    normalization: str = RAW,
) -> OdseModel:
    """Genetic search over genomes; returns the best model ever evaluated.

    validation may be None, in which case a stratified 30% of train is
    held out (drawn from the run's seed).  Fitness evaluation is a pure
    function of the genome, so results are identical for any thread
    count, and the whole run replays exactly from rng_seed.
    """
    rng = np.random.default_rng(cfg.rng_seed)
    if validation is None:
        train, validation = _stratified_holdout(train, 0.3, rng)

    def evaluate_one(g: OdseGenome):
        return synthesize_instance(
            g, train, validation, sim, inner_cfg, fw, est, normalization
        )

    def evaluate(pop):
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(evaluate_one, pop))
        else:
            results = [evaluate_one(g) for g in pop]
        models = [m for m, _ in results]
        fits = np.array([f for _, f in results], dtype=np.float64)
        return models, fits

    pop = [_random_genome(rng) for _ in range(cfg.population_size)]
    models, fits = evaluate(pop)
    best_i = int(np.argmax(fits))
    best_model, best_fit = models[best_i], float(fits[best_i])
    log = [GenerationStat(0, float(fits.max()), float(fits.mean()))]

    for gen in range(1, cfg.max_generations + 1):
        recent = [stat.best for stat in log[-5:]]
        if len(recent) == 5 and max(recent) - min(recent) < cfg.stall_epsilon:
            break
        pop = _next_population(pop, fits, rng, cfg)
        models, fits = evaluate(pop)
        gen_best = int(np.argmax(fits))
        if float(fits[gen_best]) > best_fit:
            best_model, best_fit = models[gen_best], float(fits[gen_best])
        log.append(GenerationStat(gen, float(fits.max()), float(fits.mean())))

    return dataclasses.replace(best_model, synthesis_log=tuple(log))


# --------------------------------------------------------------------------
# classification


def classify(model: OdseModel, s: Sequence) -> int:
    """Label one sequence: embed against the model's prototypes, then ask
    the inner classifier."""
    return model.inner.predict(embed_one(s, model.representation, model.cost_model))


def classify_all(model: OdseModel, seqs, threads: int = 1) -> list[int]:
    d = compute_matrix(list(seqs), model.representation, model.cost_model, threads)
    return [model.inner.predict(row) for row in d.values]


# --------------------------------------------------------------------------
# persistence

_FORMAT = "odse-model/1"


def _inner_to_dict(inner) -> dict:
    if isinstance(inner, KnnInner):
        return {
            "kind": "knn",
            "config": {"k": inner.config.k, "space": inner.config.space},
            "vectors": inner.vectors.tolist(),
            "labels": [int(v) for v in inner.labels],
        }
    if isinstance(inner, SvmInner):
        cfg = inner.config
        svm = inner.model
        return {
            "kind": "svm",
            "config": {
                "c": cfg.c,
                "kernel_gamma": cfg.kernel_gamma,
                "kkt_tolerance": cfg.kkt_tolerance,
                "max_passes": cfg.max_passes,
                "space": cfg.space,
            },
            "space": svm.space,
            "support": np.asarray(svm.inputs).tolist(),
            "alphas": svm.alphas.tolist(),
            "targets": svm.targets.tolist(),
            "bias": svm.bias,
            "gamma": svm.gamma,
        }
    raise OdseError(f"cannot serialize inner classifier {type(inner).__name__}")


def _inner_from_dict(rec: dict):
    if rec["kind"] == "knn":
        cfg = KnnConfig(k=rec["config"]["k"], space=rec["config"]["space"])
        return KnnInner(
            vectors=np.array(rec["vectors"], dtype=np.float64),
            labels=np.array(rec["labels"], dtype=np.int64),
            config=cfg,
        )
    if rec["kind"] == "svm":
        c = rec["config"]
        cfg = SvmConfig(
            c=c["c"],
            kernel_gamma=c["kernel_gamma"],
            kkt_tolerance=c["kkt_tolerance"],
            max_passes=c["max_passes"],
            space=c["space"],
        )
        svm = TrainedSvm(
            space=rec["space"],
            inputs=np.array(rec["support"], dtype=np.float64),
            alphas=np.array(rec["alphas"], dtype=np.float64),
            targets=np.array(rec["targets"], dtype=np.float64),
            bias=float(rec["bias"]),
            gamma=float(rec["gamma"]),
        )
        return SvmInner(model=svm, config=cfg)
    raise OdseError(f"unknown inner classifier kind {rec.get('kind')!r}")


def model_to_json(model: OdseModel) -> str:
    doc = {
        "format": _FORMAT,
        "genome": {
            "sigma": model.genome.sigma,
            "tau_c": model.genome.tau_c,
            "tau_e": model.genome.tau_e,
            "gap_weight": model.genome.gap_weight,
        },
        "fitness": model.fitness,
        "representation": [
            {"id": p.id, "symbols": p.symbols, "provenance": tag}
            for p, tag in zip(model.representation.prototypes, model.representation.provenance)
        ],
        "cost_model": {
            "alphabet": "".join(model.cost_model.alphabet),
            "sub_cost": model.cost_model.sub_cost.tolist(),
            "gap_cost": model.cost_model.gap_cost,
            "normalization": model.cost_model.normalization,
        },
        "inner": _inner_to_dict(model.inner),
        "synthesis_log": [
            {"generation": s.generation, "best": s.best, "mean": s.mean}
            for s in model.synthesis_log
        ],
    }
    return json.dumps(doc, indent=1)


def model_from_json(text: str) -> OdseModel:
    doc = json.loads(text)
    if doc.get("format") != _FORMAT:
        raise OdseError(f"unsupported model archive format {doc.get('format')!r}")
    genome = OdseGenome(**doc["genome"])
    rep = RepresentationSet(
        prototypes=tuple(Sequence(r["id"], r["symbols"]) for r in doc["representation"]),
        provenance=tuple(r["provenance"] for r in doc["representation"]),
    )
    cmrec = doc["cost_model"]
    cm = AlignmentCostModel(
        alphabet=tuple(cmrec["alphabet"]),
        sub_cost=np.array(cmrec["sub_cost"], dtype=np.float64),
        gap_cost=float(cmrec["gap_cost"]),
        normalization=cmrec["normalization"],
    )
    log = tuple(
        GenerationStat(s["generation"], s["best"], s["mean"])
        for s in doc["synthesis_log"]
    )
    return OdseModel(
        genome=genome,
        representation=rep,
        cost_model=cm,
        inner=_inner_from_dict(doc["inner"]),
        fitness=float(doc["fitness"]),
        synthesis_log=log,
    )


def save_model(model: OdseModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_json(model))


def load_model(path) -> OdseModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_json(fh.read())
