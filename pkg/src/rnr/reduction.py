"""Many-to-one grapheme reduction maps.

A mapping file is UTF-8 TSV with one ``original<TAB>reduced`` pair per line.
Lines starting with ``#`` are comments, except ``#!`` directives::

    #! name rho1
    #! expect 63 27          # required |original| and |reduced|
    #! passthrough 0123456789.,

Whitespace always passes through unchanged.  Graphemes default to single code
points; multi-code-point originals (or reduced symbols) are matched
longest-first.
"""

from __future__ import annotations

import logging
import random
import re
import string
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

log = logging.getLogger(__name__)

DEFAULT_PASSTHROUGH = frozenset(string.digits)


class ReductionError(ValueError):
    pass


def _segmenter(graphemes):
    multi = sorted((g for g in graphemes if len(g) > 1), key=len, reverse=True)
    if not multi:
        return list
    pattern = re.compile("|".join(map(re.escape, multi)) + "|.", re.S)
    return pattern.findall


@dataclass(frozen=True)
class ReductionMap:
    pairs: tuple[tuple[str, str], ...]
    name: str = "mapping"
    passthrough: frozenset[str] = DEFAULT_PASSTHROUGH
    expected_sizes: tuple[int, int] | None = None

    def __post_init__(self):
        if not self.pairs:
            raise ReductionError(f"{self.name}: mapping is empty")
        seen = {}
        for orig, red in self.pairs:
            if not orig or not red or _has_space(orig) or _has_space(red):
                raise ReductionError(f"{self.name}: invalid pair {orig!r} -> {red!r}")
            if orig in seen:
                raise ReductionError(
                    f"{self.name}: duplicate original grapheme {orig!r} "
                    f"(mapped to {seen[orig]!r} and {red!r})")
            seen[orig] = red
        for red in set(seen.values()):
            if red in seen and seen[red] != red:
                raise ReductionError(
                    f"{self.name}: reduced grapheme {red!r} is also an original grapheme "
                    f"mapped elsewhere ({red!r} -> {seen[red]!r}); reduced text would be ambiguous")
        clash = self.passthrough & set(seen)
        if clash:
            object.__setattr__(self, "passthrough", self.passthrough - clash)
        if self.expected_sizes is not None:
            got = (len(self.original_alphabet), len(self.reduced_alphabet))
            if got != tuple(self.expected_sizes):
                raise ReductionError(
                    f"{self.name}: expected {self.expected_sizes[0]} -> {self.expected_sizes[1]} "
                    f"graphemes, mapping has {got[0]} -> {got[1]}")

    @cached_property
    def mapping(self) -> dict[str, str]:
        return dict(self.pairs)

    @cached_property
    def original_alphabet(self) -> tuple[str, ...]:
        return tuple(o for o, _ in self.pairs)

    @cached_property
    def reduced_alphabet(self) -> tuple[str, ...]:
        return tuple(dict.fromkeys(r for _, r in self.pairs))

    @cached_property
    def classes(self) -> dict[str, tuple[str, ...]]:
        """Reduced grapheme -> the originals it covers, in file order."""
        out: dict[str, list[str]] = {}
        for o, r in self.pairs:
            out.setdefault(r, []).append(o)
        return {r: tuple(v) for r, v in out.items()}

    @property
    def sizes(self) -> tuple[int, int]:
        return len(self.original_alphabet), len(self.reduced_alphabet)

    def is_identity(self) -> bool:
        return all(o == r for o, r in self.pairs)

    @cached_property
    def _split_original(self):
        return _segmenter(self.original_alphabet)

    @cached_property
    def _split_reduced(self):
        return _segmenter(self.reduced_alphabet)

    def graphemes(self, word: str, reduced: bool = False) -> list[str]:
        """Segment ``word`` into graphemes of the original (or reduced) alphabet."""
        return (self._split_reduced if reduced else self._split_original)(word)

    def describe(self) -> str:
        n, k = self.sizes
        return f"{self.name}: {n} -> {k} graphemes"


def _has_space(s: str) -> bool:
    return any(c.isspace() for c in s)


def parse_mapping(text: str, name: str = "mapping") -> ReductionMap:
    pairs = []
    passthrough = DEFAULT_PASSTHROUGH
    expected = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        if line.startswith("#!"):
            key, _, value = line[2:].strip().partition(" ")
            value = value.strip()
            if key == "name":
                name = value
            elif key == "expect":
                try:
                    a, b = (int(v) for v in value.split())
                except ValueError:
                    raise ReductionError(f"line {lineno}: '#! expect' needs two integers") from None
                expected = (a, b)
            elif key == "passthrough":
                passthrough = frozenset(value)
            else:
                raise ReductionError(f"line {lineno}: unknown directive {key!r}")
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 2:
            raise ReductionError(f"line {lineno}: expected 'original<TAB>reduced', got {line!r}")
        pairs.append((cols[0].strip(), cols[1].strip()))
    if not pairs:
        raise ReductionError(f"{name}: mapping file has no grapheme pairs")
    return ReductionMap(tuple(pairs), name=name, passthrough=passthrough, expected_sizes=expected)


def load_mapping(path) -> ReductionMap:
    path = Path(path)
    m = parse_mapping(path.read_text(encoding="utf-8"), name=path.stem)
    log.info("loaded %s", m.describe())
    return m


def write_mapping(m: ReductionMap) -> str:
    lines = [f"#! name {m.name}"]
    if m.passthrough != DEFAULT_PASSTHROUGH:
        lines.append("#! passthrough " + "".join(sorted(m.passthrough)))
    if m.expected_sizes is not None:
        lines.append(f"#! expect {m.expected_sizes[0]} {m.expected_sizes[1]}")
    lines.extend(f"{o}\t{r}" for o, r in m.pairs)
    return "\n".join(lines) + "\n"


def identity_map(alphabet, name: str = "identity", passthrough: frozenset | None = None) -> ReductionMap:
    return ReductionMap(tuple((g, g) for g in alphabet), name=name,
                        passthrough=DEFAULT_PASSTHROUGH if passthrough is None else passthrough)


def apply_reduction(m: ReductionMap, text: str, *, strict: bool = True,
                    unknown: Counter | None = None) -> str:
    """Replace every grapheme of ``text`` by its reduced counterpart.

    With ``strict=False`` unknown graphemes are copied through and tallied in
    ``unknown``.
    """
    table = m.mapping
    out = []
    for lineno, line in enumerate(text.split("\n"), 1):
        pieces = []
        for token in re.split(r"(\s+)", line):
            if not token or token.isspace():
                pieces.append(token)
                continue
            reduced = []
            for g in m.graphemes(token):
                r = table.get(g)
                if r is None:
                    if g in m.passthrough:
                        r = g
                    elif strict:
                        raise ReductionError(
                            f"{m.name}: unknown grapheme {g!r} in word {token!r} on line {lineno}")
                    else:
                        if unknown is not None:
                            unknown[g] += 1
                        r = g
                reduced.append(r)
            pieces.append("".join(reduced))
        out.append("".join(pieces))
    return "\n".join(out)


def generate_random_reduction(alphabet, target_size: int, seed=0, name: str | None = None) -> ReductionMap:
    """Random partition of ``alphabet`` into exactly ``target_size`` classes.

    Each class is named after its first member in alphabet order, so reduced
    symbols are themselves original graphemes that map to themselves.
    """
    alphabet = list(dict.fromkeys(alphabet))
    if not 1 <= target_size <= len(alphabet):
        raise ReductionError(f"target size {target_size} outside 1..{len(alphabet)}")
    rng = seed if isinstance(seed, random.Random) else random.Random(seed)
    order = alphabet[:]
    rng.shuffle(order)
    label = {g: i for i, g in enumerate(order[:target_size])}
    for g in order[target_size:]:
        label[g] = rng.randrange(target_size)
    rep: dict[int, str] = {}
    for g in alphabet:
        rep.setdefault(label[g], g)
    pairs = tuple((g, rep[label[g]]) for g in alphabet)
    return ReductionMap(pairs, name=name or f"random{target_size}")


def induced_identity(m: ReductionMap) -> ReductionMap:
    """Identity over the reduced alphabet, used to check idempotence on reduced text."""
    return identity_map(m.reduced_alphabet, name=f"{m.name}-identity")
