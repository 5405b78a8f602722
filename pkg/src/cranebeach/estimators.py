"""scikit-learn style wrappers.

A formula is a fixed (not learned) classifier of words, so ``fit`` only
validates its inputs and records the label set. The wrappers exist so that
formulas plug into sklearn tooling (``cross_val_score``, pipelines,
``get_params``/``clone``).
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .evaluator import EvalEnv, compile_formula
from .formula import Formula, parse_formula, print_formula
from .predicates import Registry, default_registry, sample_family
from .words import Alphabet, WordError

__all__ = ["check_words", "check_formula", "FormulaClassifier", "ProtocolClassifier",
           "WorkZoneTransformer"]


def check_words(X, alphabet: str | Alphabet | None = None) -> list[str]:
    """Accept a sequence of strings (or an array/column of them) and check
    every letter against ``alphabet``."""
    if isinstance(X, str):
        raise WordError("expected a sequence of words, got a single string")
    arr = np.asarray(X, dtype=object)
    if arr.ndim == 2 and arr.shape[1] == 1:
        arr = arr[:, 0]
    if arr.ndim != 1:
        raise WordError(f"expected a 1-d collection of words, got shape {arr.shape}")
    words = []
    letters = Alphabet.of(alphabet) if alphabet is not None else None
    for i, w in enumerate(arr):
        if not isinstance(w, str):
            raise WordError(f"sample {i} is {type(w).__name__}, not a word")
        if letters is not None:
            for j, ch in enumerate(w):
                if ch not in letters:
                    raise WordError(f"sample {i}: letter {ch!r} at position {j} not in alphabet {letters}")
        words.append(w)
    return words


def check_formula(f: str | Formula) -> Formula:
    return parse_formula(f) if isinstance(f, str) else f


class FormulaClassifier(ClassifierMixin, BaseEstimator):
    """Predict membership of each word in the language of ``formula``."""

    def __init__(self, formula: str = "true", alphabet: str = "abc", registry: Registry | None = None):
        self.formula = formula
        self.alphabet = alphabet
        self.registry = registry

    def fit(self, X, y=None):
        words = check_words(X, self.alphabet)
        if y is not None and len(y) != len(words):
            raise ValueError(f"X has {len(words)} samples but y has {len(y)}")
        self.formula_ = check_formula(self.formula)
        self.env_ = EvalEnv(self.registry or default_registry(), Alphabet.of(self.alphabet))
        self.classes_ = np.array([False, True])
        self.n_features_in_ = 1
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "formula_")
        cf = compile_formula(self.formula_, self.env_)
        return np.array([cf(w) for w in check_words(X, self.alphabet)], dtype=bool)


class ProtocolClassifier(ClassifierMixin, BaseEstimator):
    """Membership decided by the two-party protocol, splitting each word
    at ``split`` (a fraction of its length) into Alice's and Bob's parts."""

    def __init__(self, formula: str = "true", family: str = "succ", neutral: str = "c",
                 alphabet: str = "abc", split: float = 0.5, with_oracle: bool = False):
        self.formula = formula
        self.family = family
        self.neutral = neutral
        self.alphabet = alphabet
        self.split = split
        self.with_oracle = with_oracle

    def fit(self, X, y=None):
        check_words(X, self.alphabet)
        if not 0.0 <= self.split <= 1.0:
            raise ValueError("split must be in [0, 1]")
        if self.neutral not in Alphabet.of(self.alphabet):
            raise WordError(f"neutral letter {self.neutral!r} not in alphabet {self.alphabet}")
        self.formula_ = check_formula(self.formula)
        self.family_ = sample_family(self.family)
        self.classes_ = np.array([False, True])
        self.n_features_in_ = 1
        return self

    def predict(self, X) -> np.ndarray:
        from .protocol import run_protocol
        check_is_fitted(self, "formula_")
        out = []
        for w in check_words(X, self.alphabet):
            cut = int(round(self.split * len(w)))
            tr = run_protocol(self.formula_, w[:cut], w[cut:], self.family_, self.neutral,
                              with_oracle=self.with_oracle)
            out.append(tr.result)
        return np.array(out, dtype=bool)


class WorkZoneTransformer(TransformerMixin, BaseEstimator):
    """Map formula texts to their work-zone compilations (as text)."""

    def __init__(self, alphabet: str = "ab"):
        self.alphabet = alphabet

    def fit(self, X, y=None):
        self.formulas_ = [check_formula(f) for f in X]
        return self

    def transform(self, X) -> list[str]:
        from .workzone import workzone_transform
        out = []
        for f in X:
            res = workzone_transform(check_formula(f), alphabet=self.alphabet)
            out.append(print_formula(res.formula))
        return out
