"""WER, reduced WER, grapheme alignments and the substitution-correction rate."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .ngram import UNK
from .reduction import ReductionMap, apply_reduction

CORRECT = "correct"
SUBSTITUTION = "substitution"
INSERTION = "insertion"
DELETION = "deletion"

SPACE = " "


@dataclass(frozen=True)
class AlignmentReport:
    """Ref/hyp token pairs; ``None`` marks a gap."""

    pairs: tuple[tuple[str | None, str | None, str], ...]

    def _count(self, tag):
        return sum(1 for p in self.pairs if p[2] == tag)

    @property
    def matches(self) -> int:
        return self._count(CORRECT)

    @property
    def substitutions(self) -> int:
        return self._count(SUBSTITUTION)

    @property
    def insertions(self) -> int:
        return self._count(INSERTION)

    @property
    def deletions(self) -> int:
        return self._count(DELETION)

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def n_ref(self) -> int:
        return self.matches + self.substitutions + self.deletions

    def by_ref_index(self) -> list[tuple[str | None, str | None, str]]:
        """Pairs that consume a reference token, indexed by reference position."""
        return [p for p in self.pairs if p[2] != INSERTION]


def _tokens(x) -> list[str]:
    return x.split() if isinstance(x, str) else list(x)


def align(ref: Sequence[str], hyp: Sequence[str]) -> AlignmentReport:
    """Minimum edit alignment; ties go to substitution/match, then insertion, then deletion."""
    n, m = len(ref), len(hyp)
    cost = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        cost[i][0] = i
    for j in range(1, m + 1):
        cost[0][j] = j
    for i in range(1, n + 1):
        row, prev, r = cost[i], cost[i - 1], ref[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (r != hyp[j - 1]), row[j - 1] + 1, prev[j] + 1)
    pairs = []
    i, j = n, m
    while i or j:
        c = cost[i][j]
        if i and j and c == cost[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            tag = CORRECT if ref[i - 1] == hyp[j - 1] else SUBSTITUTION
            pairs.append((ref[i - 1], hyp[j - 1], tag))
            i, j = i - 1, j - 1
        elif j and c == cost[i][j - 1] + 1:
            pairs.append((None, hyp[j - 1], INSERTION))
            j -= 1
        else:
            pairs.append((ref[i - 1], None, DELETION))
            i -= 1
    return AlignmentReport(tuple(reversed(pairs)))


def wer(ref, hyp) -> tuple[float, AlignmentReport]:
    """(S + I + D) / N.  An empty reference gives 0 for an empty hypothesis, else ``inf``."""
    report = align(_tokens(ref), _tokens(hyp))
    if report.n_ref == 0:
        return (0.0 if report.insertions == 0 else math.inf), report
    return report.errors / report.n_ref, report


@dataclass(frozen=True)
class CorpusWER:
    errors: int
    n_ref: int
    substitutions: int
    insertions: int
    deletions: int

    @property
    def rate(self) -> float:
        if self.n_ref == 0:
            return 0.0 if self.errors == 0 else math.inf
        return self.errors / self.n_ref

    @property
    def percent(self) -> float:
        return 100.0 * self.rate


def corpus_wer(refs: Iterable, hyps: Iterable) -> CorpusWER:
    refs, hyps = list(refs), list(hyps)
    if len(refs) != len(hyps):
        raise ValueError(f"{len(refs)} references but {len(hyps)} hypotheses")
    e = n = s = ins = d = 0
    for r, h in zip(refs, hyps):
        rep = align(_tokens(r), _tokens(h))
        e += rep.errors
        n += rep.n_ref
        s += rep.substitutions
        ins += rep.insertions
        d += rep.deletions
    return CorpusWER(e, n, s, ins, d)


def reduce_tokens(m: ReductionMap, tokens) -> list[str]:
    return [t if t == UNK else apply_reduction(m, t) for t in _tokens(tokens)]


def r_wer(m: ReductionMap, ref, hyp) -> float:
    """WER after reducing both sides; ``<unk>`` tokens are left as they are."""
    return wer(reduce_tokens(m, ref), reduce_tokens(m, hyp))[0]


def corpus_r_wer(m: ReductionMap, refs, hyps) -> CorpusWER:
    return corpus_wer((reduce_tokens(m, r) for r in refs), (reduce_tokens(m, h) for h in hyps))


def grapheme_sequence(text, split) -> list[str]:
    """Graphemes of ``text`` with one ``" "`` token between consecutive words."""
    out: list[str] = []
    for i, word in enumerate(_tokens(text)):
        if i:
            out.append(SPACE)
        out.extend(split(word))
    return out


@dataclass(frozen=True)
class SubstitutionCorrection:
    x: int
    y: int

    @property
    def defined(self) -> bool:
        return self.x > 0

    @property
    def percent(self) -> float:
        return 100.0 * self.y / self.x if self.x else 0.0


def substitution_correction(ref, identity_hyp, m: ReductionMap, reduced_hyp) -> SubstitutionCorrection:
    """How many identity-system grapheme substitutions the reduced system gets right.

    ``x`` counts grapheme substitutions in the alignment of ``identity_hyp``
    against ``ref``; ``y`` counts those whose reference position is aligned as
    correct when ``reduced_hyp`` is aligned against the reduced reference.
    Positions are matched through the reference grapheme index, which the
    reduction preserves.  Pass lists of sentences to pool a corpus.
    """
    if isinstance(ref, str):
        ref, identity_hyp, reduced_hyp = [ref], [identity_hyp], [reduced_hyp]
    ref, identity_hyp, reduced_hyp = list(ref), list(identity_hyp), list(reduced_hyp)
    if not len(ref) == len(identity_hyp) == len(reduced_hyp):
        raise ValueError("reference and hypothesis lists differ in length")
    x = y = 0
    for r, ih, rh in zip(ref, identity_hyp, reduced_hyp):
        r_orig = grapheme_sequence(r, m.graphemes)
        r_red = grapheme_sequence(apply_reduction(m, " ".join(_tokens(r))), lambda w: m.graphemes(w, True))
        a1 = align(r_orig, grapheme_sequence(ih, m.graphemes)).by_ref_index()
        a2 = align(r_red, grapheme_sequence(rh, lambda w: m.graphemes(w, True))).by_ref_index()
        assert len(a1) == len(r_orig) == len(a2) == len(r_red), "reference grapheme counts diverged"
        for p1, p2 in zip(a1, a2):
            if p1[2] == SUBSTITUTION:
                x += 1
                if p2[2] == CORRECT:
                    y += 1
    return SubstitutionCorrection(x, y)


def substitution_correction_pct(ref, identity_hyp, m: ReductionMap, reduced_hyp) -> tuple[float, bool]:
    """``(100 * y / x, defined)``; the percentage is 0 and ``defined`` False when x is 0."""
    sc = substitution_correction(ref, identity_hyp, m, reduced_hyp)
    return sc.percent, sc.defined


def _fmt(v) -> str:
    if isinstance(v, float):
        return "inf" if math.isinf(v) else f"{v:.2f}"
    return str(v)


def report(rows: Iterable[dict], columns: Sequence[str], key: str | None = None) -> tuple[str, str]:
    """Render ``rows`` as (aligned text, TSV), sorted by ``key`` (default: first column)."""
    key = key or columns[0]
    rows = sorted(rows, key=lambda r: str(r.get(key, "")))
    cells = [[_fmt(r.get(c, "")) for c in columns] for r in rows]
    widths = [max([len(c)] + [len(row[i]) for row in cells]) for i, c in enumerate(columns)]
    lines = ["  ".join(c.ljust(w) for c, w in zip(columns, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(v.ljust(w) for v, w in zip(row, widths)).rstrip())
    tsv = ["\t".join(columns)] + ["\t".join(row) for row in cells]
    return "\n".join(lines) + "\n", "\n".join(tsv) + "\n"
