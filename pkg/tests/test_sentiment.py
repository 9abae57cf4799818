import json
import math

import pytest
from hypothesis import given, strategies as st

from sentindex.errors import DataError
from sentindex.sentiment import (
    DEFAULT_ALPHA,
    ClassifierOutput,
    Lexicon,
    SentimentScore,
    bundled_lexicon,
    load_external_scores,
    load_lexicon,
    load_scores,
    prob_to_score,
    save_scores,
    score_text_lexicon,
    tokenize,
)


def squash(total: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Independent one-line calculator for the composite score."""
    return total / math.sqrt(total * total + alpha)


# real lexicons carry decimal-resolution valences; this also keeps sums away
# from the subnormal range where squaring underflows
valences = st.integers(min_value=-40, max_value=40).map(lambda v: v / 10.0)


class TestTokenize:
    def test_splits_on_punctuation(self):
        assert tokenize("Markets rally, banks surge!") == ["markets", "rally", "banks", "surge"]

    def test_empty_text(self):
        assert tokenize("") == []

    def test_hyphen_splits(self):
        assert tokenize("re-run") == ["re", "run"]

    def test_underscore_is_a_separator(self):
        assert tokenize("politics_and_nation") == ["politics", "and", "nation"]

    @given(st.text(max_size=200))
    def test_tokens_are_lowercase_alnum(self, text):
        for token in tokenize(text):
            assert token
            assert token == token.lower()
            assert all(ch.isalnum() for ch in token)


class TestLexiconScore:
    def test_no_hits_scores_zero(self):
        lex = Lexicon({"up": 2.0})
        assert score_text_lexicon("completely unrelated words", lex) == 0.0

    def test_single_token_valence_four(self):
        # oracle: 4 / sqrt(4^2 + 15) = 0.7184212081070996
        lex = Lexicon({"soar": 4.0})
        value = score_text_lexicon("soar", lex)
        assert value == pytest.approx(squash(4.0), abs=1e-15)
        assert value == pytest.approx(0.7184212081070996, abs=1e-12)

    def test_only_the_sum_matters(self):
        # valences {3, -1, 2} sum to 4: identical score to a single 4
        lex = Lexicon({"good": 3.0, "dip": -1.0, "gain": 2.0})
        value = score_text_lexicon("good dip gain", lex)
        assert value == pytest.approx(0.7184212081070996, abs=1e-12)

    def test_negated_valences_negate_the_score(self):
        lex = Lexicon({"a": 3.0, "b": -1.0, "c": 2.5})
        mirrored = Lexicon({"a": -3.0, "b": 1.0, "c": -2.5})
        text = "a b c a"
        assert score_text_lexicon(text, mirrored) == -score_text_lexicon(text, lex)

    def test_alpha_must_be_positive(self):
        with pytest.raises(ValueError):
            score_text_lexicon("x", Lexicon({}), alpha=0.0)

    def test_custom_alpha_follows_the_formula(self):
        lex = Lexicon({"up": 2.0})
        assert score_text_lexicon("up", lex, alpha=1.0) \
            == pytest.approx(squash(2.0, 1.0), abs=1e-15)
        assert score_text_lexicon("up", lex, alpha=100.0) \
            == pytest.approx(squash(2.0, 100.0), abs=1e-15)

    @given(st.lists(valences, max_size=30))
    def test_score_strictly_inside_unit_interval(self, vals):
        words = [f"w{i}" for i in range(len(vals))]
        lex = Lexicon(dict(zip(words, vals)))
        value = score_text_lexicon(" ".join(words), lex)
        assert -1.0 < value < 1.0
        total = 0.0
        for v in vals:
            total += v
        assert (value == 0.0) == (total == 0.0)

    @given(st.lists(valences, min_size=1, max_size=20), st.lists(valences, min_size=1, max_size=20))
    def test_strictly_increasing_in_valence_sum(self, vals_a, vals_b):
        # sums 1 ulp apart squash to the same double, so strictness is only
        # observable once the gap is resolvable
        lex_a = Lexicon({f"a{i}": v for i, v in enumerate(vals_a)})
        lex_b = Lexicon({f"b{i}": v for i, v in enumerate(vals_b)})
        text_a = " ".join(f"a{i}" for i in range(len(vals_a)))
        text_b = " ".join(f"b{i}" for i in range(len(vals_b)))
        sum_a, sum_b = sum(vals_a), sum(vals_b)
        score_a = score_text_lexicon(text_a, lex_a)
        score_b = score_text_lexicon(text_b, lex_b)
        if sum_a == sum_b:
            assert score_a == score_b
        elif sum_a < sum_b - 1e-9:
            assert score_a < score_b
        elif sum_a > sum_b + 1e-9:
            assert score_a > score_b


class TestProbToScore:
    def test_positive_98_percent(self):
        assert prob_to_score("POSITIVE", 0.98) == pytest.approx(1.69, abs=0.005)

    def test_negative_98_percent(self):
        assert prob_to_score("NEGATIVE", 0.98) == pytest.approx(-1.69, abs=0.005)

    def test_even_odds_score_zero(self):
        assert prob_to_score("POSITIVE", 0.5) == 0.0

    def test_certainty_is_capped_by_epsilon(self):
        value = prob_to_score("POSITIVE", 1.0, epsilon=1e-6)
        assert value == pytest.approx(math.log10((1 - 1e-6) / 1e-6), abs=1e-9)
        assert value == pytest.approx(6.0, abs=1e-5)

    @pytest.mark.parametrize("prob", [0.49, -0.1, 1.01, 2.0])
    def test_out_of_range_probability(self, prob):
        with pytest.raises(DataError):
            prob_to_score("POSITIVE", prob)

    def test_unknown_label(self):
        with pytest.raises(DataError):
            prob_to_score("neutral", 0.9)

    @given(st.floats(min_value=0.5, max_value=1.0))
    def test_positive_negates_negative(self, prob):
        assert prob_to_score("POSITIVE", prob) == -prob_to_score("NEGATIVE", prob)

    @given(
        st.floats(min_value=0.5, max_value=0.999996),
        st.floats(min_value=1e-9, max_value=1e-6),
    )
    def test_strictly_increasing_below_the_epsilon_cap(self, prob, bump):
        higher = prob + bump  # stays below the 1 - 1e-6 cap
        if higher > prob:
            assert prob_to_score("POSITIVE", higher) > prob_to_score("POSITIVE", prob)


class TestClassifierOutput:
    def test_rejects_low_probability(self):
        with pytest.raises(DataError):
            ClassifierOutput(id="a", label="POSITIVE", prob=0.2)

    def test_rejects_bad_label(self):
        with pytest.raises(DataError):
            ClassifierOutput(id="a", label="meh", prob=0.9)


class TestLoadExternalScores:
    def test_three_valid_lines(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        rows = [
            {"id": "a", "label": "POSITIVE", "prob": 0.9},
            {"id": "b", "label": "NEGATIVE", "prob": 0.7},
            {"id": "c", "label": "POSITIVE", "prob": 0.5},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n", "utf-8")
        outputs = load_external_scores(path)
        assert len(outputs) == 3
        assert outputs["b"].label == "NEGATIVE"

    def test_neutral_label_is_a_schema_error(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        path.write_text('{"id": "a", "label": "neutral", "prob": 0.9}\n', "utf-8")
        with pytest.raises(DataError, match="line 1"):
            load_external_scores(path)

    def test_empty_file_empty_map(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        path.write_text("", "utf-8")
        assert load_external_scores(path) == {}

    def test_duplicate_id_keeps_last_with_warning(self, tmp_path, caplog):
        path = tmp_path / "scores.jsonl"
        path.write_text(
            '{"id": "a", "label": "POSITIVE", "prob": 0.6}\n'
            '{"id": "a", "label": "NEGATIVE", "prob": 0.8}\n',
            "utf-8",
        )
        with caplog.at_level("WARNING"):
            outputs = load_external_scores(path)
        assert outputs["a"].label == "NEGATIVE"
        assert "duplicate id" in caplog.text

    def test_malformed_json_names_the_line(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        path.write_text('{"id": "a", "label": "POSITIVE", "prob": 0.9}\nnot json\n', "utf-8")
        with pytest.raises(DataError, match="line 2"):
            load_external_scores(path)

    def test_out_of_range_prob_is_an_error(self, tmp_path):
        path = tmp_path / "scores.jsonl"
        path.write_text('{"id": "a", "label": "POSITIVE", "prob": 0.3}\n', "utf-8")
        with pytest.raises(DataError, match="line 1"):
            load_external_scores(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_external_scores(tmp_path / "nope.jsonl")


class TestLexicon:
    def test_valence_bounds_enforced(self):
        with pytest.raises(DataError):
            Lexicon({"x": 4.5})

    def test_lowercase_keys_enforced(self):
        with pytest.raises(DataError):
            Lexicon({"Shout": 1.0})

    def test_load_lexicon_tsv(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("# comment\ngood\t1.5\nbad\t-2.0\n", "utf-8")
        lex = load_lexicon(path)
        assert lex.valence("good") == 1.5
        assert lex.valence("missing") == 0.0

    def test_load_lexicon_bad_line(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("good\t1.5\nbroken line\n", "utf-8")
        with pytest.raises(DataError, match="line 2"):
            load_lexicon(path)

    def test_load_lexicon_bad_valence(self, tmp_path):
        path = tmp_path / "lex.tsv"
        path.write_text("good\tnine\n", "utf-8")
        with pytest.raises(DataError, match="line 1"):
            load_lexicon(path)

    def test_bundled_lexicon_is_valid(self):
        lex = bundled_lexicon()
        assert len(lex) > 200
        for word, valence in lex.entries.items():
            assert word == word.lower()
            assert -4.0 <= valence <= 4.0


class TestScoreFiles:
    def test_roundtrip(self, tmp_path):
        scores = [
            SentimentScore(id="a", value=0.25, source="LEXICON"),
            SentimentScore(id="b", value=-1.69, source="CLASSIFIER"),
        ]
        path = tmp_path / "scored.jsonl"
        save_scores(scores, path)
        assert load_scores(path) == scores

    def test_bad_source_rejected(self, tmp_path):
        path = tmp_path / "scored.jsonl"
        path.write_text('{"id": "a", "value": 0.5, "source": "GUESS"}\n', "utf-8")
        with pytest.raises(DataError, match="line 1"):
            load_scores(path)
