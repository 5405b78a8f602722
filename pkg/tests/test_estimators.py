import numpy as np
import pytest
from sklearn.base import clone
from sklearn.pipeline import make_pipeline

from cranebeach.estimators import FormulaClassifier, ProtocolClassifier, WorkZoneTransformer, check_words
from cranebeach.words import WordError

TOY = "exists x. forall y. (a(x) & (x < y -> b(y)))"
WORDS = ["aabb", "acb", "ab", "ba", "", "bab"]


def test_formula_classifier():
    clf = FormulaClassifier(TOY).fit(WORDS)
    assert clf.predict(WORDS).tolist() == [True, False, True, True, False, True]
    assert clf.score(WORDS, [True, False, True, True, False, True]) == 1.0
    assert clone(clf).get_params()["formula"] == TOY


def test_formula_classifier_rejects_bad_input():
    with pytest.raises(WordError):
        FormulaClassifier(TOY, alphabet="ab").fit(["abc"])
    with pytest.raises(WordError):
        FormulaClassifier(TOY).fit("aabb")
    with pytest.raises(ValueError):
        FormulaClassifier(TOY).fit(["a"], [True, False])


def test_check_words_column():
    assert check_words(np.array([["ab"], ["b"]], dtype=object)) == ["ab", "b"]


def test_protocol_classifier_matches_formula_for_neutral_letter():
    # b is neutral for "exists x. a(x)", so the padding does not change answers
    f = "exists x. a(x)"
    words = ["", "b", "ab", "bbb", "bab", "cc"]
    got = ProtocolClassifier(f, neutral="b", with_oracle=True).fit(words).predict(words)
    want = FormulaClassifier(f).fit(words).predict(words)
    assert got.tolist() == want.tolist()


def test_workzone_transformer_in_pipeline():
    pipe = make_pipeline(WorkZoneTransformer(alphabet="ab"))
    out = pipe.fit_transform(["exists x. a(x)", "true"])
    assert len(out) == 2 and all(isinstance(s, str) for s in out)
