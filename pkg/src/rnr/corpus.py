"""Reading corpora and extracting word and grapheme inventories."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable


def read_lines(path) -> list[str]:
    """Non-empty lines of a UTF-8 text file, whitespace-normalized."""
    text = Path(path).read_text(encoding="utf-8")
    return [" ".join(line.split()) for line in text.splitlines() if line.strip()]


def write_lines(path, lines: Iterable[str]) -> None:
    Path(path).write_text("".join(f"{line}\n" for line in lines), encoding="utf-8")


@dataclass(frozen=True)
class Inventory:
    """Sorted ``(item, count)`` pairs for words and for graphemes."""

    words: tuple[tuple[str, int], ...]
    graphemes: tuple[tuple[str, int], ...]

    @property
    def vocabulary(self) -> list[str]:
        return [w for w, _ in self.words]

    @property
    def alphabet(self) -> list[str]:
        return [g for g, _ in self.graphemes]


def vocab_extract(corpus: Iterable[str], split: Callable[[str], list[str]] = list) -> Inventory:
    """Word and grapheme counts of ``corpus`` (one utterance per item).

    ``split`` turns a word into graphemes; code points by default.
    """
    words: Counter = Counter()
    for line in corpus:
        words.update(line.split())
    graphemes: Counter = Counter()
    for w, c in words.items():
        for g in split(w):
            graphemes[g] += c
    return Inventory(tuple(sorted(words.items())), tuple(sorted(graphemes.items())))


def format_counts(pairs: Iterable[tuple[str, int]]) -> str:
    return "".join(f"{item}\t{count}\n" for item, count in pairs)


def read_word_list(path) -> list[str]:
    """First column of each non-empty, non-comment line (a plain list or a counts TSV)."""
    words = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip() and not line.startswith("#"):
            words.append(line.split()[0])
    return words
