#!/usr/bin/env python3
"""Empirical budget-sensitivity check for the flat-saturation engine.

How many context variables a flattened derivation can need at once has no
sharp known bound; the engine defaults to 2*max_arity + 2.  This sweep
recomputes every preset's weak-independence profile, derivable-fact set,
and full classification across a range of budgets (and does the profile
check on all pairwise joins), reporting any verdict that changes.  A clean
sweep is evidence the default budget is saturating everything the corpus
can express.
"""
import itertools
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from linvar import presets
from linvar.classification import classify
from linvar.derivatives import order_fact_set, weak_independence_profile
from linvar.saturation import default_budget
from linvar.theories import join_disjoint


def main():
    corpus = presets.presets()
    started = time.time()
    drift = 0

    for theory in corpus:
        base_budget = default_budget(theory)
        budgets = [max(2, theory.max_arity() + 2), base_budget,
                   base_budget + 2, base_budget + 4]
        profiles = {b: weak_independence_profile(theory, b).pairs for b in budgets}
        facts = {b: order_fact_set(theory, b) for b in budgets}
        verdicts = {b: tuple(v.answer for v in classify(theory, b).verdicts)
                    for b in budgets}
        for b in budgets[1:]:
            if profiles[b] != profiles[budgets[0]]:
                print(f"DRIFT {theory.name}: profile differs at budget {b}")
                drift += 1
            if facts[b] != facts[budgets[0]]:
                print(f"DRIFT {theory.name}: fact set differs at budget {b}")
                drift += 1
            if verdicts[b] != verdicts[budgets[0]]:
                print(f"DRIFT {theory.name}: verdicts differ at budget {b}: "
                      f"{verdicts[budgets[0]]} vs {verdicts[b]}")
                drift += 1
        print(f"{theory.name:22s} budgets {budgets}: profile/facts/verdicts stable")

    for a, b in itertools.combinations(corpus, 2):
        joined = join_disjoint(a, b)
        base_budget = default_budget(joined)
        small = max(2, joined.max_arity() + 2)
        if weak_independence_profile(joined, small).pairs != \
                weak_independence_profile(joined, base_budget + 2).pairs:
            print(f"DRIFT join({a.name},{b.name}): profile budget-sensitive")
            drift += 1
    print(f"\n{len(corpus)} presets and {len(corpus) * (len(corpus) - 1) // 2} joins "
          f"swept in {time.time() - started:.1f}s; {drift} drifting results")
    return 1 if drift else 0


if __name__ == "__main__":
    raise SystemExit(main())
