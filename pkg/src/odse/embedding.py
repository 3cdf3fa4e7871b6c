"""Dissimilarity-space embedding against a set of prototype sequences."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .alignment import AlignmentCostModel, dissimilarities_to_targets
from .errors import OdseError
from .sequences import Sequence

INITIAL = "initial"
EXPANSION_MEDOID = "expansion-medoid"


@dataclass(frozen=True)
class RepresentationSet:
    """Ordered prototypes the embedding is computed against."""

    prototypes: tuple[Sequence, ...]
    provenance: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if len(self.prototypes) < 1:
            raise OdseError("representation set must hold at least one prototype")
        if not self.provenance:
            object.__setattr__(
                self, "provenance", tuple(INITIAL for _ in self.prototypes)
            )
        if len(self.provenance) != len(self.prototypes):
            raise OdseError("provenance tags must match prototype count")
        ids = [p.id for p in self.prototypes]
        if len(set(ids)) != len(ids):
            raise OdseError("duplicate prototype ids in representation set")

    def __len__(self):
        return len(self.prototypes)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.prototypes)


@dataclass(frozen=True)
class DissimilarityMatrix:
    """n x m table of sequence-to-prototype dissimilarities."""

    values: np.ndarray
    row_ids: tuple[str, ...]
    col_ids: tuple[str, ...]

    def __post_init__(self):
        n, m = self.values.shape
        if n != len(self.row_ids) or m != len(self.col_ids):
            raise OdseError("dissimilarity matrix ids do not match its shape")

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]


@dataclass(frozen=True)
class EmbeddedDataset:
    """Rows of a dissimilarity matrix with their class labels."""

    vectors: np.ndarray
    labels: tuple[int, ...]

    @property
    def dim(self) -> int:
        return int(self.vectors.shape[1])


def embed_one(s: Sequence, r: RepresentationSet, cm: AlignmentCostModel) -> np.ndarray:
    """Dissimilarity vector of one sequence against every prototype."""
    return dissimilarities_to_targets(s, r.prototypes, cm)


def compute_matrix(
    data: list[Sequence],
    r: RepresentationSet,
    cm: AlignmentCostModel,
    threads: int = 1,
) -> DissimilarityMatrix:
    """Dissimilarity matrix of `data` (rows) against `r` (columns).

    Rows are independent, so worker count never changes the result.
    """
    if not data:
        raise OdseError("cannot embed an empty dataset")
    values = np.empty((len(data), len(r)), dtype=np.float64)
    if threads > 1:
        def fill(i):
            values[i] = embed_one(data[i], r, cm)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill, range(len(data))))
    else:
        for i, s in enumerate(data):
            values[i] = embed_one(s, r, cm)
    return DissimilarityMatrix(
        values=values,
        row_ids=tuple(s.id for s in data),
        col_ids=r.ids,
    )


def matrix_to_csv(d: DissimilarityMatrix) -> str:
    """CSV dump with a header row of prototype ids; floats use repr so a
    round trip is exact."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", *d.col_ids])
    for rid, row in zip(d.row_ids, d.values):
        writer.writerow([rid, *(repr(float(v)) for v in row)])
    return buf.getvalue()


def matrix_from_csv(text: str) -> DissimilarityMatrix:
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[0] != "id":
        raise OdseError("dissimilarity CSV must start with an 'id' header column")
    col_ids = tuple(header[1:])
    row_ids = []
    rows = []
    for rec in reader:
        if not rec:
            continue
        row_ids.append(rec[0])
        rows.append([float(v) for v in rec[1:]])
    values = np.array(rows, dtype=np.float64).reshape(len(row_ids), len(col_ids))
    return DissimilarityMatrix(values, tuple(row_ids), col_ids)
