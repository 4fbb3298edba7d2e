"""The synthetic end-to-end experiment driven by a ``PipelineConfig``.

One run trains the LM on the original training text, builds reconstruction
assets for the identity map and the configured reduction, corrupts the dev
and test references with one seeded noise channel (in the original
alphabet), feeds each system the noisy text in its own alphabet, reconstructs
it at d=0 and at the configured d, and writes the reports plus every
intermediate artifact to the output directory.  Identical configs give
byte-identical output directories.
"""

from __future__ import annotations

import hashlib
import logging
import random
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import metrics, ngram
from .config import PipelineConfig
from .corpus import format_counts, read_lines, vocab_extract, write_lines
from .reconstruct import (Hypothesis, Reconstruction, build_assets, reconstruct_many,
                          simulate_noise, write_reconstructions)
from .reduction import ReductionMap, apply_reduction, identity_map, load_mapping

log = logging.getLogger(__name__)

SPLITS = ("dev", "test")


@dataclass
class PipelineResult:
    """Everything the reports are made of, keyed for tests."""

    # (system, d) -> split -> CorpusWER after reconstruction
    wer: dict[tuple[str, int], dict[str, metrics.CorpusWER]] = field(default_factory=dict)
    # split -> CorpusWER of the noisy original-alphabet text (no reconstruction)
    baseline: dict[str, metrics.CorpusWER] = field(default_factory=dict)
    # system -> split -> reduced WER of the system's hypotheses
    reduced_wer: dict[str, dict[str, metrics.CorpusWER]] = field(default_factory=dict)
    # text kind ("original" / mapping name) -> Perplexity on the test split
    ppl: dict[str, ngram.Perplexity] = field(default_factory=dict)
    # split -> substitution correction of the reduced hypotheses
    subcorrection: dict[str, metrics.SubstitutionCorrection] = field(default_factory=dict)
    files: list[str] = field(default_factory=list)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()[:16]


def _classes(cfg: PipelineConfig) -> list[list[str]]:
    return [c.split() if " " in c else list(c) for c in cfg.confusions]


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    cfg.validate()
    t0 = time.perf_counter()
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    result = PipelineResult()
    written: list[str] = []

    def emit(name: str, text: str) -> None:
        (out / name).write_text(text, encoding="utf-8")
        written.append(name)

    rho = load_mapping(cfg.mapping)
    ident = identity_map(rho.original_alphabet, passthrough=rho.passthrough)
    systems: list[tuple[str, ReductionMap]] = [("identity", ident), (rho.name, rho)]
    if rho.name == "identity":
        raise ValueError("the configured mapping must not be named 'identity'")

    train = read_lines(cfg.train)
    refs = {s: read_lines(getattr(cfg, s)) for s in SPLITS}

    inv = vocab_extract(train, rho.graphemes)
    emit("vocab.tsv", format_counts(inv.words))
    emit("alphabet.tsv", format_counts(inv.graphemes))

    lm = ngram.train(train, cfg.order)
    emit("lm.arpa", ngram.export_arpa(lm))
    log.info("trained %d-gram LM on %d sentences", cfg.order, len(train))

    # one generator for every random draw of the run, consumed in a fixed order
    rng = random.Random(cfg.seed)
    classes = _classes(cfg)
    noisy: dict[str, list[str]] = {}
    for split in SPLITS:
        noisy[split] = [simulate_noise(r, rho.original_alphabet, cfg.p_sub, cfg.p_del, cfg.p_ins,
                                       rng, classes, cfg.p_within) for r in refs[split]]
        write_lines(out / f"noisy.{split}.txt", noisy[split])
        written.append(f"noisy.{split}.txt")
        result.baseline[split] = metrics.corpus_wer(refs[split], noisy[split])

    hyps: dict[tuple[str, str], list[str]] = {}
    for name, m in systems:
        result.reduced_wer[name] = {}
        for split in SPLITS:
            h = [apply_reduction(m, line) for line in noisy[split]]
            hyps[name, split] = h
            emit(f"hyp.{name}.{split}.txt", "".join(f"{i:06d}\t{x}\n" for i, x in enumerate(h, 1)))
            result.reduced_wer[name][split] = metrics.corpus_r_wer(m, refs[split], noisy[split])

    for split in SPLITS:
        result.subcorrection[split] = metrics.substitution_correction(
            refs[split], noisy[split], rho, hyps[rho.name, split])

    for d in sorted({0, cfg.d}):
        for name, m in systems:
            assets = build_assets(m, inv.vocabulary, lm, d=d, lam=cfg.lam, eta=cfg.eta)
            per_split = {}
            for split in SPLITS:
                batch = [Hypothesis.from_text(x, f"{i:06d}") for i, x in enumerate(hyps[name, split], 1)]
                recs: list[Reconstruction] = reconstruct_many(batch, assets, cfg.jobs)
                failed = [r for r in recs if r.error]
                if failed:
                    raise RuntimeError(f"{name} d={d} {split}: {failed[0].utt_id}: {failed[0].error}")
                emit(f"recon.{name}.d{d}.{split}.tsv", write_reconstructions(recs))
                per_split[split] = metrics.corpus_wer(refs[split], [r.text for r in recs])
            result.wer[name, d] = per_split
            log.info("reconstructed %s at d=%d", name, d)

    ppl_train = {"original": train, rho.name: [apply_reduction(rho, s) for s in train]}
    ppl_test = {"original": refs["test"], rho.name: [apply_reduction(rho, s) for s in refs["test"]]}
    for kind in ppl_train:
        result.ppl[kind] = ngram.perplexity(ngram.train(ppl_train[kind], cfg.ppl_order), ppl_test[kind])

    emit("report.txt", render_report(cfg, rho, result))
    emit("table_wer.tsv", _wer_table(cfg, rho, result)[1])
    emit("table_ppl.tsv", _ppl_table(cfg, result)[1])
    emit("manifest.tsv", _manifest(cfg, written))
    result.files = sorted(written)
    log.info("pipeline finished in %.1fs", time.perf_counter() - t0)
    return result


def _pct(c: metrics.CorpusWER) -> float:
    return round(c.percent, 2)


def _wer_table(cfg, rho, res: PipelineResult) -> tuple[str, str]:
    cols = ["row", "d", "lambda", "reduction", "dev_wer", "test_wer"]
    rows = [{"row": "0", "d": "-", "lambda": "-", "reduction": "baseline",
             "dev_wer": _pct(res.baseline["dev"]), "test_wer": _pct(res.baseline["test"])}]
    i = 1
    for d in sorted({0, cfg.d}):
        for name in ("identity", rho.name):
            w = res.wer[name, d]
            rows.append({"row": str(i), "d": str(d), "lambda": f"{cfg.lam:g}", "reduction": name,
                         "dev_wer": _pct(w["dev"]), "test_wer": _pct(w["test"])})
            i += 1
    return metrics.report(rows, cols, key="row")


def _reduced_table(rho, res: PipelineResult) -> tuple[str, str]:
    cols = ["reduction", "dev_rwer", "test_rwer"]
    rows = [{"reduction": name, "dev_rwer": _pct(res.reduced_wer[name]["dev"]),
             "test_rwer": _pct(res.reduced_wer[name]["test"])} for name in ("identity", rho.name)]
    return metrics.report(rows, cols)


def _ppl_table(cfg, res: PipelineResult) -> tuple[str, str]:
    cols = ["text", "ppl", "oovs", "tokens"]
    rows = [{"text": k, "ppl": round(p.ppl, 2), "oovs": p.oovs, "tokens": p.tokens}
            for k, p in res.ppl.items()]
    return metrics.report(rows, cols)


def render_report(cfg: PipelineConfig, rho: ReductionMap, res: PipelineResult) -> str:
    n, k = rho.sizes
    parts = [
        f"# seed={cfg.seed} order={cfg.order} d={cfg.d} lambda={cfg.lam:g} eta={cfg.eta:g} "
        f"p_sub={cfg.p_sub:g} p_del={cfg.p_del:g} p_ins={cfg.p_ins:g} p_within={cfg.p_within:g}",
        f"# reduction {rho.name}: {n} -> {k} graphemes",
        "",
        "WER after reconstruction (%)",
        _wer_table(cfg, rho, res)[0],
        "Reduced WER of the hypotheses before reconstruction (%)",
        _reduced_table(rho, res)[0],
        f"Test perplexity, {cfg.ppl_order}-gram LM trained on the training text",
        _ppl_table(cfg, res)[0],
        "Substitution correction of the reduced hypotheses",
    ]
    for split in SPLITS:
        sc = res.subcorrection[split]
        pct = f"{sc.percent:.2f}%" if sc.defined else "undefined"
        parts.append(f"{split}: {sc.y}/{sc.x} = {pct}")
    return "\n".join(parts) + "\n"


def _manifest(cfg: PipelineConfig, files: list[str]) -> str:
    lines = ["# key\tvalue"]
    for key, value in cfg.items():
        if key in ("mapping", "train", "dev", "test") and value:
            value = f"{Path(value).name}\tsha256:{_digest(Path(value))}"
        elif key == "out":
            continue
        lines.append(f"{key}\t{value}")
    lines.extend(f"artifact\t{name}" for name in sorted(files))
    return "\n".join(lines) + "\n"
