"""Reduce-and-reconstruct: grapheme alphabet reduction for ASR and WFST-based recovery."""

from .ngram import NGramModel, import_arpa, export_arpa, perplexity, score_sentence, train
from .reconstruct import (Assets, Hypothesis, Reconstruction, build_assets, reconstruct,
                          reconstruct_file, simulate_noise)
from .reduction import ReductionMap, apply_reduction, generate_random_reduction, load_mapping
from .wfst import SymbolTable, Wfst, compose, shortest_path

__version__ = "0.1.0"

__all__ = [
    "Assets", "Hypothesis", "NGramModel", "Reconstruction", "ReductionMap", "SymbolTable", "Wfst",
    "apply_reduction", "build_assets", "compose", "export_arpa", "generate_random_reduction",
    "import_arpa", "load_mapping", "perplexity", "reconstruct", "reconstruct_file",
    "score_sentence", "shortest_path", "simulate_noise", "train",
]
