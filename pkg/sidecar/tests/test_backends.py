import os

import pytest

from headline_scorer.backends import (
    BuiltinClassifier,
    ModelLoadError,
    TransformersClassifier,
    load_classifier,
)


class TestBuiltinClassifier:
    def test_positive_and_negative_headlines(self):
        clf = BuiltinClassifier()
        results = clf.classify([
            "markets rally on record profit growth",
            "crash fears deepen as crisis spreads",
        ])
        assert results[0][0] == "POSITIVE"
        assert results[1][0] == "NEGATIVE"

    def test_probabilities_in_range(self):
        clf = BuiltinClassifier()
        texts = ["profit", "loss", "", "the index", "soar surge boom", "crash panic ruin"]
        for label, prob in clf.classify(texts):
            assert label in ("POSITIVE", "NEGATIVE")
            assert 0.5 <= prob <= 1.0

    def test_neutral_text_scores_even_odds(self):
        clf = BuiltinClassifier()
        [(label, prob)] = clf.classify(["the committee met on tuesday"])
        assert label == "POSITIVE"
        assert prob == pytest.approx(0.5)

    def test_empty_string_accepted(self):
        clf = BuiltinClassifier()
        [(label, prob)] = clf.classify([""])
        assert prob == pytest.approx(0.5)

    def test_deterministic(self):
        clf = BuiltinClassifier()
        texts = ["profit growth", "crisis warning"]
        assert clf.classify(texts) == clf.classify(texts)

    def test_custom_weights(self):
        clf = BuiltinClassifier({"bias": 0.0, "weights": {"up": 2.0}})
        [(label, prob)] = clf.classify(["up up up"])
        assert label == "POSITIVE"
        assert prob > 0.95


class TestLoadClassifier:
    def test_builtin_name(self):
        assert isinstance(load_classifier("builtin"), BuiltinClassifier)

    def test_bogus_model_raises_model_error(self):
        with pytest.raises(ModelLoadError):
            load_classifier("/definitely/not/a/model/path")


class FakePipeline:
    def __init__(self, outputs):
        self.outputs = outputs

    def __call__(self, texts, truncation=True):
        return self.outputs[: len(texts)]


class TestTransformersLabelMapping:
    def make(self, outputs) -> TransformersClassifier:
        clf = TransformersClassifier.__new__(TransformersClassifier)
        clf._pipe = FakePipeline(outputs)
        return clf

    def test_standard_labels_pass_through(self):
        clf = self.make([{"label": "POSITIVE", "score": 0.98},
                         {"label": "NEGATIVE", "score": 0.75}])
        assert clf.classify(["a", "b"]) == [("POSITIVE", 0.98), ("NEGATIVE", 0.75)]

    def test_label_0_1_convention(self):
        clf = self.make([{"label": "LABEL_1", "score": 0.9},
                         {"label": "LABEL_0", "score": 0.8}])
        assert clf.classify(["a", "b"]) == [("POSITIVE", 0.9), ("NEGATIVE", 0.8)]

    def test_lowercase_variants(self):
        clf = self.make([{"label": "positive", "score": 0.66}])
        assert clf.classify(["a"]) == [("POSITIVE", 0.66)]

    def test_non_binary_label_rejected(self):
        clf = self.make([{"label": "neutral", "score": 0.9}])
        with pytest.raises(ModelLoadError, match="non-binary"):
            clf.classify(["a"])

    def test_sub_half_probability_rejected(self):
        clf = self.make([{"label": "POSITIVE", "score": 0.4}])
        with pytest.raises(ModelLoadError, match="0.4"):
            clf.classify(["a"])


@pytest.mark.skipif(
    not os.environ.get("HEADLINE_SCORER_MODEL"),
    reason="set HEADLINE_SCORER_MODEL to a local binary sentiment model directory",
)
def test_real_transformers_model():
    clf = load_classifier(os.environ["HEADLINE_SCORER_MODEL"])
    results = clf.classify(["markets rally on record profit", "crisis deepens as panic spreads"])
    assert len(results) == 2
    for label, prob in results:
        assert label in ("POSITIVE", "NEGATIVE")
        assert 0.5 <= prob <= 1.0
