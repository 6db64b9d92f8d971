"""Sweep random models and compare enumeration and mutation against oracles.

Prints per-error candidate and mutant totals, the number of oracle mismatches
and misclassified mutants, and timings. Exit status 1 on any mismatch.
"""

import argparse
import sys
import time
from collections import Counter
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from oracles import expected_counts  # noqa: E402

from seqfmeca import classify, enumerate_candidates, mutate, nominal_trace  # noqa: E402
from seqfmeca.catalog import ErrorModel  # noqa: E402
from seqfmeca.synth import SynthConfig, random_model  # noqa: E402


def sweep(n: int, start: int, cfg: SynthConfig):
    cand_total, mut_total = Counter(), Counter()
    mismatches, misclassified = [], []
    t0 = time.perf_counter()
    for seed in range(start, start + n):
        model = random_model(seed, cfg)
        cands = enumerate_candidates(model)
        got = Counter(c.error.name for c in cands)
        if got != expected_counts(model):
            mismatches.append(seed)
        cand_total.update(got)
        for c in cands:
            inter = model.interaction(c.interaction)
            nominal = nominal_trace(inter)
            for mt in mutate(inter, c, seed=seed):
                mut_total[c.error.name] += 1
                if classify(nominal, mt.trace) is not c.error:
                    misclassified.append(c.id)
    return cand_total, mut_total, mismatches, misclassified, time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("-n", type=int, default=1000, help="number of models")
    ap.add_argument("--start", type=int, default=0, help="first seed")
    ap.add_argument("--max-messages", type=int, default=8)
    ap.add_argument("--max-parameters", type=int, default=3)
    args = ap.parse_args()
    cfg = SynthConfig(max_messages=args.max_messages, max_parameters=args.max_parameters)
    cands, muts, bad, wrong, secs = sweep(args.n, args.start, cfg)

    print(f"{'error':6} {'candidates':>10} {'mutants':>8}")
    for e in ErrorModel:
        print(f"{e.name:6} {cands[e.name]:>10} {muts[e.name]:>8}")
    print(f"{'total':6} {sum(cands.values()):>10} {sum(muts.values()):>8}")
    print(f"models: {args.n}  oracle mismatches: {len(bad)}  misclassified mutants: {len(wrong)}  "
          f"time: {secs:.2f}s")
    if bad:
        print("mismatching seeds:", bad[:20])
    if wrong:
        print("misclassified:", wrong[:20])
    return 1 if bad or wrong else 0


if __name__ == "__main__":
    sys.exit(main())
