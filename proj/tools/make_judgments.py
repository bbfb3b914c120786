#!/usr/bin/env python3
"""Writes the transcribed judgment files under data/eval.

Each file holds 40 sentences with five references apiece. Per-sentence
counts are fixed below; which reference slots carry a label is shuffled
with a fixed seed so files are reproducible.
"""
import csv
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "data" / "eval"
N_SENTENCES = 40
TOP_K = 5

# name: (method, judge, [(sentence count, valid per sentence, relevant per sentence), ...])
FILES = {
    "system_human": ("SYSTEM", "human", [(28, 5, 5), (7, 5, 4), (5, 5, 0)]),
    "system_llm": ("SYSTEM", "llm", [(27, 5, 5), (10, 5, 4), (3, 5, 0)]),
    "baseline_a_human": ("BASELINE_A", "human", [(32, 5, 4), (8, 5, 0)]),
    "baseline_a_llm": ("BASELINE_A", "llm", [(11, 5, 5), (23, 5, 4), (6, 5, 0)]),
    "baseline_b_human": ("BASELINE_B", "human", [(23, 4, 3), (5, 4, 4), (12, 3, 3)]),
    "baseline_b_llm": ("BASELINE_B", "llm", [(12, 4, 3), (16, 4, 4), (12, 3, 3)]),
}


def rows_for(name, method, judge, plan):
    rng = random.Random(name)
    shape = [(v, r) for count, v, r in plan for _ in range(count)]
    assert len(shape) == N_SENTENCES, name
    rng.shuffle(shape)
    for s, (valid, relevant) in enumerate(shape, start=1):
        slots = list(range(TOP_K))
        rng.shuffle(slots)
        valid_slots = set(slots[:valid])
        relevant_slots = set(slots[:relevant])
        for k in range(TOP_K):
            yield {
                "sentence_id": f"s{s:02d}",
                "method": method,
                "ref_id": f"{method.lower()}-s{s:02d}-r{k + 1}",
                "valid": int(k in valid_slots),
                "relevant": "" if k not in valid_slots else int(k in relevant_slots),
                "judge": judge,
            }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for name, (method, judge, plan) in FILES.items():
        with open(OUT / f"{name}.csv", "w", newline="") as f:
            w = csv.DictWriter(f, ["sentence_id", "method", "ref_id", "valid", "relevant", "judge"],
                               lineterminator="\n")
            w.writeheader()
            w.writerows(rows_for(name, method, judge, plan))


if __name__ == "__main__":
    main()
