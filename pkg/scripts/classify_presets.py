#!/usr/bin/env python3
"""Classify every preset theory and print a verdict table with timings."""
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from linvar import presets
from linvar.classification import classify


def label(answer):
    return {True: "yes", False: "no", None: "?"}[answer]


def main():
    rows = []
    for theory in presets.presets():
        started = time.time()
        report = classify(theory)
        elapsed = time.time() - started
        certs = []
        for v in report.verdicts:
            if v.derivation is not None:
                certs.append(f"{v.property_name}:{len(v.derivation.steps)}-step proof")
            elif v.model is not None:
                certs.append(f"{v.property_name}:size-{v.model.size} model")
        rows.append((theory.name, label(report.cm.answer), label(report.nci.answer),
                     label(report.nperm.answer), f"{elapsed:.2f}s", "; ".join(certs)))

    header = ("theory", "CM", "NCI", "NPERM", "time", "certificates")
    widths = [max(len(str(r[i])) for r in rows + [header]) for i in range(6)]
    for row in [header] + rows:
        print("  ".join(str(cell).ljust(w) for cell, w in zip(row, widths)))


if __name__ == "__main__":
    main()
