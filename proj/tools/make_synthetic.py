#!/usr/bin/env python3
"""Regenerates data/synthetic: questions, a mock endpoint script and per-mode outcomes.

Three small datasets with scripted next-token distributions:
  synth-rising   entropy climbs over the probe      (routes Direct)
  synth-falling  entropy decays over the probe      (routes CoT)
  synth-flat     low, trendless entropy             (routes Standard)
A few synth-flat completions end before the probe length.
"""

import argparse
import json
import math
import pathlib
import random

PROBE = 64
PER_DATASET = 24
TOP_K = 20

# per-mode (accuracy, mean tokens)
OUTCOMES = {
    "synth-rising": {"direct": (0.80, 6), "standard": (0.74, 140), "cot": (0.70, 310)},
    "synth-falling": {"direct": (0.35, 6), "standard": (0.55, 160), "cot": (0.85, 290)},
    "synth-flat": {"direct": (0.50, 5), "standard": (0.78, 120), "cot": (0.76, 260)},
}


def support_sizes(kind, rng):
    ks = []
    for t in range(PROBE):
        frac = t / (PROBE - 1)
        if kind == "synth-rising":
            base = 1 + 11 * frac
        elif kind == "synth-falling":
            base = 12 - 11 * frac
        else:
            base = rng.choice([1, 2, 2])
        k = round(base + rng.uniform(-0.6, 0.6)) if kind != "synth-flat" else base
        ks.append(max(1, min(TOP_K, k)))
    return ks


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "synthetic"))
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    questions, rules, records = [], [], []
    for dataset in OUTCOMES:
        for i in range(PER_DATASET):
            iid = f"{dataset}-{i:03d}"
            kind = "choice" if dataset == "synth-flat" else "answer"
            questions.append({"instance_id": iid, "dataset_id": dataset,
                              "question": f"[{iid}] Synthetic question {i} of {dataset}.", "task_kind": kind})
            length = 256
            if dataset == "synth-flat" and i % 8 == 7:
                length = 20 + i
            rules.append({"match": f"[{iid}]", "uniform": support_sizes(dataset, rng), "length": length})
            rec = {"instance_id": iid, "dataset_id": dataset}
            for mode, (acc, tokens) in OUTCOMES[dataset].items():
                rec[mode] = {"correct": 1 if rng.random() < acc else 0,
                             "tokens": max(1, int(round(rng.gauss(tokens, tokens * 0.2))))}
            records.append(rec)

    with open(out / "questions.jsonl", "w") as f:
        for q in questions:
            f.write(json.dumps(q, sort_keys=True) + "\n")
    with open(out / "records.jsonl", "w") as f:
        for r in records:
            f.write(json.dumps(r, sort_keys=True) + "\n")
    with open(out / "mock_script.json", "w") as f:
        json.dump({"supports_logprobs": True, "rules": rules}, f, indent=1, sort_keys=True)
        f.write("\n")
    print(f"wrote {len(questions)} questions to {out}")


if __name__ == "__main__":
    main()
