"""Alphabets and words, including the padded form ``u . e^N . v``."""
from __future__ import annotations

from dataclasses import dataclass

__all__ = ["Alphabet", "Word", "PaddedWord", "WordError"]


class WordError(ValueError):
    pass


@dataclass(frozen=True)
class Alphabet:
    letters: tuple[str, ...]

    def __post_init__(self):
        letters = tuple(self.letters)
        object.__setattr__(self, "letters", letters)
        if not letters:
            raise WordError("alphabet must be nonempty")
        if len(set(letters)) != len(letters):
            raise WordError(f"duplicate letters in alphabet {letters}")
        for a in letters:
            if len(a) != 1 or not ("a" <= a <= "z"):
                raise WordError(f"letters must be lowercase ASCII characters, got {a!r}")

    @classmethod
    def of(cls, spec: "str | Alphabet | tuple[str, ...]") -> "Alphabet":
        if isinstance(spec, Alphabet):
            return spec
        return cls(tuple(spec))

    def __contains__(self, letter: object) -> bool:
        return letter in self.letters

    def __iter__(self):
        return iter(self.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        return "".join(self.letters)


@dataclass(frozen=True)
class Word:
    alphabet: Alphabet
    symbols: str

    def __post_init__(self):
        for i, a in enumerate(self.symbols):
            if a not in self.alphabet:
                raise WordError(f"letter {a!r} at position {i} is not in alphabet {self.alphabet}")

    @classmethod
    def of(cls, symbols: str, alphabet=None) -> "Word":
        if alphabet is None:
            alphabet = "".join(sorted(set(symbols))) or "a"
        return cls(Alphabet.of(alphabet), symbols)

    def __len__(self) -> int:
        return len(self.symbols)

    def letter_at(self, p: int) -> str:
        if not 0 <= p < len(self.symbols):
            raise IndexError(f"position {p} outside word of length {len(self.symbols)}")
        return self.symbols[p]

    def __str__(self) -> str:
        return self.symbols


@dataclass(frozen=True)
class PaddedWord:
    """The word ``u . e^N . v`` without materializing the padding."""
    u: str
    e: str
    n_pad: int
    v: str

    def __len__(self) -> int:
        return len(self.u) + self.n_pad + len(self.v)

    def letter_at(self, p: int) -> str:
        lu = len(self.u)
        if 0 <= p < lu:
            return self.u[p]
        if lu <= p < lu + self.n_pad:
            return self.e
        q = p - lu - self.n_pad
        if 0 <= q < len(self.v):
            return self.v[q]
        raise IndexError(f"position {p} outside word of length {len(self)}")

    def materialize(self) -> str:
        return self.u + self.e * self.n_pad + self.v

    def __str__(self) -> str:
        return f"{self.u}.{self.e}^{self.n_pad}.{self.v}"
