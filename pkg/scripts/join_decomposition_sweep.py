#!/usr/bin/env python3
"""Sweep every ordered pair of presets: check that both derivative operators
distribute over the join stage by stage, and that each classification
property holds in the join exactly when it holds in a component."""
import itertools
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from linvar import presets
from linvar.classification import check_join_decomposition


def main():
    corpus = presets.presets()
    failures = 0
    started = time.time()
    for a, b in itertools.product(corpus, repeat=2):
        report = check_join_decomposition(a, b)
        ok = report.decomposition_holds and report.prime_filter_holds
        stages = "/".join(str(op.stages_compared) for op in report.operators)
        props = " ".join(
            f"{name}={'y' if j else 'n'}({'y' if l else 'n'},{'y' if r else 'n'})"
            for name, j, l, r in report.properties)
        flag = "ok " if ok else "FAIL"
        print(f"{flag} {a.name:>20} | {b.name:<20} stages={stages:<5} {props}")
        failures += 0 if ok else 1
    print(f"\n{len(corpus) ** 2} pairs in {time.time() - started:.1f}s, "
          f"{failures} failures")
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
