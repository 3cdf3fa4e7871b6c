import numpy as np
import pytest

from odse.embedding import (
    EXPANSION_MEDOID,
    INITIAL,
    RepresentationSet,
    compute_matrix,
    embed_one,
    matrix_from_csv,
    matrix_to_csv,
)
from odse.alignment import levenshtein
from odse.errors import OdseError
from odse.sequences import Sequence

from conftest import random_sequences


@pytest.fixture
def sample_sets(toy_cm):
    rng = np.random.default_rng(101)
    data = random_sequences(rng, 15, lo=2, hi=9, prefix="d")
    protos = RepresentationSet(tuple(random_sequences(rng, 6, lo=2, hi=7, prefix="r")))
    return data, protos


class TestRepresentationSet:
    def test_default_provenance_is_initial(self):
        r = RepresentationSet((Sequence("a", "AR"), Sequence("b", "ND")))
        assert r.provenance == (INITIAL, INITIAL)
        assert r.ids == ("a", "b")
        assert len(r) == 2

    def test_explicit_provenance_kept(self):
        r = RepresentationSet(
            (Sequence("a", "AR"),), provenance=(EXPANSION_MEDOID,)
        )
        assert r.provenance == (EXPANSION_MEDOID,)

    def test_empty_rejected(self):
        with pytest.raises(OdseError, match="at least one"):
            RepresentationSet(())

    def test_duplicate_ids_rejected(self):
        with pytest.raises(OdseError, match="duplicate prototype ids"):
            RepresentationSet((Sequence("a", "AR"), Sequence("a", "ND")))

    def test_provenance_length_mismatch_rejected(self):
        with pytest.raises(OdseError, match="provenance"):
            RepresentationSet(
                (Sequence("a", "AR"), Sequence("b", "ND")),
                provenance=(INITIAL,),
            )


class TestEmbedding:
    def test_embed_one_matches_pairwise_distance(self, toy_cm, sample_sets):
        data, protos = sample_sets
        vec = embed_one(data[0], protos, toy_cm)
        assert vec.shape == (len(protos),)
        for j, p in enumerate(protos.prototypes):
            assert vec[j] == levenshtein(data[0], p, toy_cm)

    def test_matrix_rows_and_ids(self, toy_cm, sample_sets):
        data, protos = sample_sets
        d = compute_matrix(data, protos, toy_cm)
        assert d.values.shape == (len(data), len(protos))
        assert d.row_ids == tuple(s.id for s in data)
        assert d.col_ids == protos.ids
        for i, s in enumerate(data):
            assert np.array_equal(d.values[i], embed_one(s, protos, toy_cm))

    def test_column_accessor(self, toy_cm, sample_sets):
        data, protos = sample_sets
        d = compute_matrix(data, protos, toy_cm)
        assert np.array_equal(d.column(2), d.values[:, 2])

    def test_empty_dataset_rejected(self, toy_cm, sample_sets):
        _, protos = sample_sets
        with pytest.raises(OdseError, match="empty dataset"):
            compute_matrix([], protos, toy_cm)

    def test_thread_count_never_changes_values(self, toy_cm, sample_sets):
        data, protos = sample_sets
        base = compute_matrix(data, protos, toy_cm, threads=1)
        for threads in (2, 4, 8):
            other = compute_matrix(data, protos, toy_cm, threads=threads)
            assert np.array_equal(base.values, other.values)
            assert other.row_ids == base.row_ids
            assert other.col_ids == base.col_ids

    def test_self_matrix_zero_diagonal(self, toy_cm):
        rng = np.random.default_rng(103)
        seqs = random_sequences(rng, 8, prefix="z")
        d = compute_matrix(seqs, RepresentationSet(tuple(seqs)), toy_cm)
        assert np.all(np.diagonal(d.values) == 0.0)


class TestCsv:
    def test_round_trip_is_bit_exact(self, toy_cm, sample_sets):
        data, protos = sample_sets
        d = compute_matrix(data, protos, toy_cm)
        back = matrix_from_csv(matrix_to_csv(d))
        assert np.array_equal(back.values, d.values)
        assert back.row_ids == d.row_ids
        assert back.col_ids == d.col_ids

    def test_round_trip_exact_for_awkward_floats(self):
        # values with no short decimal form survive repr round-tripping
        from odse.embedding import DissimilarityMatrix

        values = np.array([[0.1 + 0.2, 1e-17], [np.pi, 2.0 / 3.0]])
        d = DissimilarityMatrix(values, ("r1", "r2"), ("c1", "c2"))
        back = matrix_from_csv(matrix_to_csv(d))
        assert np.array_equal(back.values, values)

    def test_missing_header_rejected(self):
        with pytest.raises(OdseError, match="'id' header"):
            matrix_from_csv("foo,c1\nr1,0.5\n")

    def test_empty_text_rejected(self):
        with pytest.raises(OdseError, match="'id' header"):
            matrix_from_csv("")
