import math

import numpy as np
import pytest

from odse.alignment import (
    BY_MAX_LENGTH,
    build_cost_model,
    dissimilarities_to_targets,
    levenshtein,
    load_similarity_matrix,
    pam120_path,
    parse_similarity_matrix,
)
from odse.errors import CostModelError, MatrixFormatError, SymbolError
from odse.sequences import Sequence

from conftest import TOY_MATRIX_TEXT, alignment_oracle, random_sequences


def seq(symbols, sid="q"):
    return Sequence(sid, symbols)


class TestMatrixParsing:
    def test_toy_matrix_shape_and_scores(self, toy_sim):
        assert toy_sim.alphabet == ("A", "R", "N", "D")
        assert toy_sim.score("A", "A") == 4
        assert toy_sim.score("A", "D") == 2
        assert toy_sim.score("D", "A") == 2

    def test_comment_and_blank_lines_skipped(self):
        m = parse_similarity_matrix("# c\n\n A R\nA 2 0\n# mid\nR 0 2\n")
        assert m.alphabet == ("A", "R")

    def test_multichar_header_symbol_rejected(self):
        with pytest.raises(MatrixFormatError, match="not a single character"):
            parse_similarity_matrix(" AB R\nAB 1 0\nR 0 1\n")

    def test_duplicate_header_symbol_rejected(self):
        with pytest.raises(MatrixFormatError, match="duplicate header"):
            parse_similarity_matrix(" A A\nA 1 1\n")

    def test_unknown_row_symbol_rejected(self):
        err = None
        with pytest.raises(MatrixFormatError, match="unknown row symbol") as err:
            parse_similarity_matrix(" A R\nA 2 0\nQ 0 2\n")
        assert err.value.line == 3

    def test_duplicate_row_rejected(self):
        with pytest.raises(MatrixFormatError, match="duplicate row"):
            parse_similarity_matrix(" A R\nA 2 0\nA 2 0\nR 0 2\n")

    def test_wrong_entry_count_rejected(self):
        with pytest.raises(MatrixFormatError, match="expected 2"):
            parse_similarity_matrix(" A R\nA 2 0 1\nR 0 2\n")

    def test_non_integer_entry_rejected(self):
        exc = None
        with pytest.raises(MatrixFormatError) as exc:
            parse_similarity_matrix(" A R\nA 2 x\nR 0 2\n")
        assert exc.value.line == 2

    def test_missing_row_rejected(self):
        with pytest.raises(MatrixFormatError, match="not square"):
            parse_similarity_matrix(" A R\nA 2 0\n")

    def test_empty_text_rejected(self):
        with pytest.raises(MatrixFormatError, match="no header row"):
            parse_similarity_matrix("# only comments\n")

    def test_asymmetric_matrix_rejected(self):
        with pytest.raises(MatrixFormatError, match="asymmetric"):
            parse_similarity_matrix(" A R\nA 2 1\nR 0 2\n")


class TestCostModel:
    def test_toy_costs_are_exact(self, toy_cm):
        # numerators over max 4: AR 4, AN 3, AD 2, RN/RD/ND 1
        assert toy_cm.cost("A", "R") == 1.0
        assert toy_cm.cost("A", "N") == 0.75
        assert toy_cm.cost("A", "D") == 0.5
        assert toy_cm.cost("R", "N") == 0.25
        assert toy_cm.cost("R", "D") == 0.25
        assert toy_cm.cost("N", "D") == 0.25
        for a in toy_cm.alphabet:
            assert toy_cm.cost(a, a) == 0.0

    def test_toy_gap_cost(self, toy_sim, toy_cm):
        # mean off-diagonal cost = 2*(1+0.75+0.5+0.25*3)/12 = 0.5
        assert toy_cm.gap_cost == 0.5
        assert build_cost_model(toy_sim, gap_weight=2.0).gap_cost == 1.0
        assert build_cost_model(toy_sim, gap_weight=0.5).gap_cost == 0.25

    def test_gap_weight_bounds(self, toy_sim):
        with pytest.raises(CostModelError, match="gap_weight"):
            build_cost_model(toy_sim, gap_weight=0.0)
        with pytest.raises(CostModelError, match="gap_weight"):
            build_cost_model(toy_sim, gap_weight=4.5)
        build_cost_model(toy_sim, gap_weight=4.0)  # boundary allowed

    def test_unknown_normalization_rejected(self, toy_sim):
        with pytest.raises(CostModelError, match="normalization"):
            build_cost_model(toy_sim, normalization="per-residue")

    def test_non_dominant_matrix_rejected(self):
        # S(A,R) exceeds both self-similarities: negative cost numerator
        m = parse_similarity_matrix(" A R\nA 1 3\nR 3 1\n")
        with pytest.raises(CostModelError, match="not diagonally dominant"):
            build_cost_model(m)

    def test_constant_matrix_rejected(self):
        m = parse_similarity_matrix(" A R\nA 2 2\nR 2 2\n")
        with pytest.raises(CostModelError, match="all costs are zero"):
            build_cost_model(m)

    def test_pam120_costs_well_formed(self):
        cm = build_cost_model(load_similarity_matrix(pam120_path()))
        c = cm.sub_cost
        assert len(cm.alphabet) == 24
        assert np.array_equal(c, c.T)
        assert np.all(np.diagonal(c) == 0.0)
        assert c.min() >= 0.0
        assert c.max() == 1.0  # the normalizer is attained
        assert cm.gap_cost > 0.0

    def test_foreign_symbol_reported_with_position(self, toy_cm):
        with pytest.raises(SymbolError) as exc:
            levenshtein(seq("ARQ", "bad"), seq("A", "t"), toy_cm)
        assert exc.value.sequence_id == "bad"
        assert exc.value.position == 2
        assert exc.value.symbol == "Q"


class TestLevenshtein:
    def test_identical_sequences_cost_zero(self, toy_cm):
        rng = np.random.default_rng(7)
        for s in random_sequences(rng, 10, lo=0, hi=9):
            assert levenshtein(s, s, toy_cm) == 0.0

    def test_empty_versus_nonempty_is_gap_times_length(self, toy_cm):
        assert levenshtein(seq(""), seq("ARND", "t"), toy_cm) == 4 * 0.5
        assert levenshtein(seq("ARN"), seq("", "t"), toy_cm) == 3 * 0.5
        assert levenshtein(seq(""), seq("", "t"), toy_cm) == 0.0

    def test_single_substitution(self, toy_cm):
        assert levenshtein(seq("AR"), seq("AN", "t"), toy_cm) == 0.25

    def test_substitution_beats_double_gap_when_cheaper(self, toy_cm):
        # c(A,R)=1.0 equals two gaps; DP takes the minimum either way
        assert levenshtein(seq("A"), seq("R", "t"), toy_cm) == 1.0
        # c(A,D)=0.5 < 1.0, must substitute
        assert levenshtein(seq("A"), seq("D", "t"), toy_cm) == 0.5

    def test_matches_edit_script_oracle_exactly(self, toy_cm):
        rng = np.random.default_rng(11)
        for _ in range(60):
            a, b = random_sequences(rng, 2, lo=0, hi=4)
            assert levenshtein(a, b, toy_cm) == alignment_oracle(a, b, toy_cm)

    def test_symmetry_exact_on_dyadic_costs(self, toy_cm):
        rng = np.random.default_rng(13)
        for _ in range(30):
            a, b = random_sequences(rng, 2, lo=0, hi=8)
            assert levenshtein(a, b, toy_cm) == levenshtein(b, a, toy_cm)

    def test_symmetry_close_on_pam120(self):
        cm = build_cost_model(load_similarity_matrix(pam120_path()))
        rng = np.random.default_rng(17)
        for _ in range(20):
            a, b = random_sequences(rng, 2, lo=0, hi=12, alphabet="ARNDCQEGHILK")
            assert levenshtein(a, b, cm) == pytest.approx(
                levenshtein(b, a, cm), abs=1e-12
            )

    def test_triangle_inequality_on_toy_metric(self, toy_cm):
        rng = np.random.default_rng(19)
        for _ in range(60):
            a, b, c = random_sequences(rng, 3, lo=0, hi=6)
            dab = levenshtein(a, b, toy_cm)
            dbc = levenshtein(b, c, toy_cm)
            dac = levenshtein(a, c, toy_cm)
            assert dac <= dab + dbc + 1e-12

    def test_nonnegative_random(self, toy_cm):
        rng = np.random.default_rng(23)
        for _ in range(30):
            a, b = random_sequences(rng, 2, lo=0, hi=8)
            assert levenshtein(a, b, toy_cm) >= 0.0


class TestBatch:
    def test_batch_equals_scalar_calls(self, toy_cm):
        rng = np.random.default_rng(29)
        targets = random_sequences(rng, 12, lo=0, hi=9, prefix="t")
        query = random_sequences(rng, 1, lo=3, hi=7, prefix="q")[0]
        batch = dissimilarities_to_targets(query, targets, toy_cm)
        for j, t in enumerate(targets):
            assert batch[j] == levenshtein(query, t, toy_cm)

    def test_batch_equals_scalar_calls_pam120(self):
        cm = build_cost_model(load_similarity_matrix(pam120_path()))
        rng = np.random.default_rng(31)
        targets = random_sequences(rng, 8, lo=1, hi=15, alphabet="ACDEFGHIKL")
        query = Sequence("q", "ACDKLH")
        batch = dissimilarities_to_targets(query, targets, cm)
        for j, t in enumerate(targets):
            assert batch[j] == levenshtein(query, t, cm)

    def test_padding_never_leaks_between_targets(self, toy_cm):
        # mixing very long and very short targets in one batch must give
        # the same numbers as singleton batches
        targets = [
            Sequence("long", "ARNDARNDARND"),
            Sequence("short", "D"),
            Sequence("empty", ""),
        ]
        query = seq("RNA")
        batch = dissimilarities_to_targets(query, targets, toy_cm)
        singles = [levenshtein(query, t, toy_cm) for t in targets]
        assert list(batch) == singles


class TestNormalization:
    def test_by_max_length_divides_raw(self, toy_sim):
        raw_cm = build_cost_model(toy_sim)
        norm_cm = build_cost_model(toy_sim, normalization=BY_MAX_LENGTH)
        rng = np.random.default_rng(37)
        for _ in range(30):
            a, b = random_sequences(rng, 2, lo=0, hi=8)
            raw = levenshtein(a, b, raw_cm)
            expected = raw / max(len(a), len(b)) if max(len(a), len(b)) else 0.0
            assert levenshtein(a, b, norm_cm) == expected

    def test_by_max_length_bounded_when_costs_allow(self, toy_sim):
        # max substitution cost 1 and gap 0.5 bound the per-column cost by 1
        norm_cm = build_cost_model(toy_sim, normalization=BY_MAX_LENGTH)
        rng = np.random.default_rng(41)
        for _ in range(30):
            a, b = random_sequences(rng, 2, lo=1, hi=8)
            assert levenshtein(a, b, norm_cm) <= 1.0 + 1e-12

    def test_both_empty_normalized_zero(self, toy_sim):
        norm_cm = build_cost_model(toy_sim, normalization=BY_MAX_LENGTH)
        assert levenshtein(seq(""), seq("", "t"), norm_cm) == 0.0


def test_cost_model_validation_catches_bad_tables(toy_cm):
    from odse.alignment import AlignmentCostModel

    good = toy_cm.sub_cost.copy()
    with pytest.raises(CostModelError, match="diagonal"):
        bad = good.copy()
        bad[0, 0] = 0.1
        AlignmentCostModel(toy_cm.alphabet, bad, 0.5)
    with pytest.raises(CostModelError, match=r"\[0, 1\]"):
        bad = good.copy()
        bad[0, 1] = 1.5
        bad[1, 0] = 1.5
        AlignmentCostModel(toy_cm.alphabet, bad, 0.5)
    with pytest.raises(CostModelError, match="symmetric"):
        bad = good.copy()
        bad[0, 1] = 0.3
        AlignmentCostModel(toy_cm.alphabet, bad, 0.5)
    with pytest.raises(CostModelError, match="gap"):
        AlignmentCostModel(toy_cm.alphabet, good, -0.1)
    assert math.isfinite(toy_cm.gap_cost)
