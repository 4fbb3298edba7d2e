"""Interpolated Kneser-Ney n-gram language models in ARPA form.

Probabilities and backoff weights are stored as log10 values keyed by word
tuples, exactly as an ARPA file lists them.  A conditional probability is
looked up with the usual backoff rule: use the stored n-gram if present,
otherwise add the history's backoff weight and retry with a shorter history.
"""

from __future__ import annotations

import math
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

# ARPA convention for "never predicted" (the <s> unigram)
NO_PROB = -99.0

FALLBACK_DISCOUNT = 0.75


class LMError(ValueError):
    pass


@dataclass
class NGramModel:
    order: int
    probs: dict[tuple[str, ...], float]
    bows: dict[tuple[str, ...], float] = field(default_factory=dict)
    discounts: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        self.vocab = frozenset(w for (w,) in (k for k in self.probs if len(k) == 1))

    @property
    def has_unk(self) -> bool:
        return (UNK,) in self.probs

    def words(self) -> list[str]:
        """Predictable words (everything in the unigram table except ``<s>``), sorted."""
        return sorted(w for w in self.vocab if w != BOS)

    def map_oov(self, word: str) -> str:
        return word if word in self.vocab else UNK

    def logprob(self, word: str, context: Sequence[str] = ()) -> float:
        """log10 p(word | context); OOV words are scored as ``<unk>``."""
        word = self.map_oov(word)
        ctx = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        acc = 0.0
        while True:
            p = self.probs.get(ctx + (word,))
            if p is not None and p > NO_PROB:
                return acc + p
            if not ctx:
                return -math.inf
            acc += self.bows.get(ctx, 0.0)
            ctx = ctx[1:]

    def counts(self) -> dict[int, int]:
        c = Counter(len(k) for k in self.probs)
        return {n: c.get(n, 0) for n in range(1, self.order + 1)}


def _pad(sentence) -> list[str]:
    words = sentence.split() if isinstance(sentence, str) else list(sentence)
    return [BOS] + words + [EOS]


def train(corpus: Iterable, order: int = 3, discount: float | None = None) -> NGramModel:
    """Train an interpolated Kneser-Ney model with one discount per order.

    ``corpus`` holds sentences as strings or word lists.  Lower orders use
    continuation counts, except n-grams starting with ``<s>`` which keep their
    raw counts.  Without an explicit ``discount`` each order uses
    ``n1 / (n1 + 2 n2)`` over its counts-of-counts (0.75 when n1 or n2 is 0).
    The unigram level leaves its discounted mass to ``<unk>``.
    """
    if order < 1:
        raise LMError(f"order must be >= 1, got {order}")
    if discount is not None and not 0 <= discount < 1:
        raise LMError(f"discount must be in [0, 1), got {discount}")
    sentences = [_pad(s) for s in corpus]
    if not sentences:
        raise LMError("cannot train on an empty corpus")

    raw = [Counter() for _ in range(order + 1)]
    for toks in sentences:
        for n in range(1, order + 1):
            for i in range(len(toks) - n + 1):
                gram = tuple(toks[i:i + n])
                if gram == (BOS,):
                    continue
                raw[n][gram] += 1

    adjusted = [Counter() for _ in range(order + 1)]
    adjusted[order] = Counter(raw[order])
    for n in range(order - 1, 0, -1):
        left = Counter(g[1:] for g in raw[n + 1])
        for g, c in raw[n].items():
            adjusted[n][g] = c if g[0] == BOS else left[g]

    discounts = {}
    for n in range(1, order + 1):
        if discount is not None:
            discounts[n] = float(discount)
            continue
        coc = Counter(adjusted[n].values())
        n1, n2 = coc.get(1, 0), coc.get(2, 0)
        discounts[n] = n1 / (n1 + 2 * n2) if n1 and n2 else FALLBACK_DISCOUNT

    probs: dict[tuple[str, ...], float] = {}
    bows: dict[tuple[str, ...], float] = {}

    d = discounts[1]
    total = sum(adjusted[1].values())
    types = len(adjusted[1])
    unigram = {g: (a - d) / total for g, a in adjusted[1].items()}
    unigram[(UNK,)] = unigram.get((UNK,), 0.0) + d * types / total
    for g, p in unigram.items():
        probs[g] = math.log10(p) if p > 0 else NO_PROB
    probs[(BOS,)] = NO_PROB
    lm = NGramModel(1, probs, bows, discounts)

    for n in range(2, order + 1):
        d = discounts[n]
        by_hist: dict[tuple[str, ...], dict[str, int]] = defaultdict(dict)
        for g, a in adjusted[n].items():
            by_hist[g[:-1]][g[-1]] = a
        new_probs = {}
        for hist in sorted(by_hist):
            nexts = by_hist[hist]
            total = sum(nexts.values())
            gamma = d * len(nexts) / total
            for w, a in nexts.items():
                lower = 10.0 ** lm.logprob(w, hist[1:])
                new_probs[hist + (w,)] = math.log10((a - d) / total + gamma * lower)
            if hist not in probs:
                raise LMError(f"history {hist} has no lower-order entry")
            bows[hist] = math.log10(gamma) if gamma > 0 else NO_PROB
        probs.update(new_probs)
        lm = NGramModel(n, probs, bows, discounts)
    return lm


def score_sentence(lm: NGramModel, sentence) -> float:
    """Total log10 probability of ``sentence`` including the end-of-sentence event."""
    toks = _pad(sentence)
    total = 0.0
    for i in range(1, len(toks)):
        total += lm.logprob(toks[i], toks[max(0, i - lm.order + 1):i])
    return total


@dataclass(frozen=True)
class Perplexity:
    ppl: float
    logprob: float
    tokens: int
    sentences: int
    oovs: int


def perplexity(lm: NGramModel, corpus: Iterable) -> Perplexity:
    """Perplexity over words plus one ``</s>`` per sentence.

    OOV words are scored as ``<unk>`` and also counted separately.
    """
    total = 0.0
    tokens = oovs = n = 0
    for s in corpus:
        words = s.split() if isinstance(s, str) else list(s)
        n += 1
        tokens += len(words) + 1
        oovs += sum(1 for w in words if w not in lm.vocab)
        total += score_sentence(lm, words)
    if n == 0:
        raise LMError("cannot compute perplexity of an empty corpus")
    return Perplexity(10.0 ** (-total / tokens), total, tokens, n, oovs)


def conditional_sums(lm: NGramModel) -> dict[tuple[str, ...], float]:
    """Sum of p(w | h) over the predictable vocabulary for every history with a backoff weight."""
    words = lm.words()
    hists = [()] + sorted(lm.bows)
    return {h: math.fsum(10.0 ** lm.logprob(w, h) for w in words) for h in hists}


def _fmt(x: float) -> str:
    return repr(float(x))


def export_arpa(lm: NGramModel) -> str:
    counts = lm.counts()
    out = ["", "\\data\\"]
    out.extend(f"ngram {n}={counts[n]}" for n in range(1, lm.order + 1))
    for n in range(1, lm.order + 1):
        out.append("")
        out.append(f"\\{n}-grams:")
        for gram in sorted(g for g in lm.probs if len(g) == n):
            line = f"{_fmt(lm.probs[gram])}\t{' '.join(gram)}"
            if gram in lm.bows:
                line += f"\t{_fmt(lm.bows[gram])}"
            out.append(line)
    out.append("")
    out.append("\\end\\")
    return "\n".join(out) + "\n"


_SECTION = re.compile(r"^\\(\d+)-grams:$")


def parse_arpa(text: str) -> NGramModel:
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].strip() != "\\data\\":
        i += 1
    if i == len(lines):
        raise LMError("missing \\data\\ header")
    i += 1
    declared: dict[int, int] = {}
    while i < len(lines) and not lines[i].strip().startswith("\\"):
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        m = re.fullmatch(r"ngram\s+(\d+)\s*=\s*(\d+)", line)
        if not m:
            raise LMError(f"line {i}: malformed count line {line!r}")
        declared[int(m.group(1))] = int(m.group(2))
    if not declared or sorted(declared) != list(range(1, max(declared) + 1)):
        raise LMError("\\data\\ section must declare ngram counts for orders 1..N")
    order = max(declared)
    probs: dict[tuple[str, ...], float] = {}
    bows: dict[tuple[str, ...], float] = {}
    seen = Counter()
    current = None
    ended = False
    while i < len(lines):
        raw = lines[i].strip()
        i += 1
        if not raw:
            continue
        if raw == "\\end\\":
            ended = True
            break
        m = _SECTION.match(raw)
        if m:
            current = int(m.group(1))
            if current not in declared:
                raise LMError(f"line {i}: section {raw} not declared in \\data\\")
            continue
        if current is None:
            raise LMError(f"line {i}: n-gram line outside of a section")
        parts = raw.split()
        try:
            if len(parts) == current + 1:
                p, gram, bow = float(parts[0]), tuple(parts[1:]), None
            elif len(parts) == current + 2:
                p, gram, bow = float(parts[0]), tuple(parts[1:-1]), float(parts[-1])
            else:
                raise ValueError
        except ValueError:
            raise LMError(f"line {i}: malformed {current}-gram line {raw!r}") from None
        probs[gram] = p
        if bow is not None:
            bows[gram] = bow
        seen[current] += 1
    if not ended:
        raise LMError("missing \\end\\ marker")
    for n, c in declared.items():
        if seen[n] != c:
            raise LMError(f"\\data\\ declares {c} {n}-grams but {seen[n]} were listed")
    return NGramModel(order, probs, bows, {})


def write_arpa(lm: NGramModel, path) -> None:
    Path(path).write_text(export_arpa(lm), encoding="utf-8")


def import_arpa(path) -> NGramModel:
    return parse_arpa(Path(path).read_text(encoding="utf-8"))
