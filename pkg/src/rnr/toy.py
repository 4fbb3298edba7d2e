"""Seeded generator for the small English toy corpus shipped under ``data/toy``.

Sentences come from a handful of templates over slot word lists.  Most words
are several graphemes long and rich in the toy reduction classes (c/k/g, i/y,
o/u), so reducing them removes many distinctions; words that would become
homographs of each other only share a context in the fixed phrases.  The
templates combine freely enough that an n-gram model trained
on 400 sentences stays uncertain about the content words.
"""

from __future__ import annotations

import random
from pathlib import Path

PEOPLE = ["teacher", "cousin", "farmer", "doctor", "captain", "gardener", "baker",
          "sailor", "student", "grandmother", "neighbour", "cook", "king", "guard",
          "clerk", "painter", "driver", "singer", "monkey", "rabbit", "girl"]
VERBS = ["carried", "collected", "painted", "cleaned", "counted", "cooked", "brought",
         "bought", "dropped", "found", "guarded", "kicked", "locked", "opened", "ordered",
         "packed", "picked", "polished", "repaired", "wrapped", "washed", "sold",
         "gathered", "covered", "checked", "forgot", "lifted", "got"]
THINGS = ["basket", "bucket", "candle", "carpet", "cabbage", "jacket", "kettle", "ladder",
          "letter", "packet", "pocket", "blanket", "bottle", "camera", "guitar", "cookie",
          "carrot", "cupboard", "wagon", "ticket", "window", "trumpet", "biscuit",
          "coconut", "magazine", "pumpkin", "rocket", "hammer", "gold"]
PLACES = ["in the kitchen", "near the garage", "behind the cottage", "at the market",
          "in the garden", "under the bridge", "by the river", "after dinner",
          "before sunset", "on monday", "at the castle", "in the closet", "at the college"]
ADJECTIVES = ["golden", "broken", "clean", "warm", "quiet", "sticky", "heavy", "purple",
              "crooked", "cozy", "clumsy", "lucky", "curious", "good", "green", "quick"]
FIXED = ["the game is on", "call the bus", "come back home", "the game is on tonight",
         "call the doctor", "keep the change", "go to the market", "the cook came back"]


def _det(rng: random.Random) -> str:
    return rng.choice(["the", "the", "a", "my", "our"])


def sentence(rng: random.Random) -> str:
    r = rng.random()
    subj = f"{_det(rng)} {rng.choice(PEOPLE)}"
    obj = f"{_det(rng)} {rng.choice(THINGS)}"
    if r < 0.10:
        return rng.choice(FIXED)
    if r < 0.40:
        return f"{subj} {rng.choice(VERBS)} {obj}"
    if r < 0.70:
        return f"{subj} {rng.choice(VERBS)} {obj} {rng.choice(PLACES)}"
    if r < 0.85:
        return f"the {rng.choice(THINGS)} is {rng.choice(ADJECTIVES)}"
    return f"{subj} {rng.choice(['is', 'was'])} {rng.choice(ADJECTIVES)} {rng.choice(PLACES)}"


def generate(n: int = 500, seed: int = 2024) -> list[str]:
    rng = random.Random(seed)
    return [sentence(rng) for _ in range(n)]


def split(sentences: list[str], dev: int = 50, test: int = 50) -> tuple[list[str], list[str], list[str]]:
    train_end = len(sentences) - dev - test
    return sentences[:train_end], sentences[train_end:train_end + dev], sentences[train_end + dev:]


def write_splits(out, n: int = 500, seed: int = 2024) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    for name, part in zip(("train", "dev", "test"), split(generate(n, seed))):
        (out / f"{name}.txt").write_text("\n".join(part) + "\n", encoding="utf-8")


if __name__ == "__main__":
    import sys

    write_splits(sys.argv[1] if len(sys.argv) > 1 else ".")
