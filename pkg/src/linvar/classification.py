"""Three-property classification with certificates, and the join test.

For a linear idempotent presentation:
  - congruence modularity (CM) holds iff the derivative is inconsistent;
  - a nontrivial congruence identity (NCI) holds iff some iterated
    derivative is inconsistent;
  - n-permutability for some n (NPERM) holds iff some iterated order
    derivative is inconsistent.

Yes verdicts carry an inconsistency derivation; no verdicts carry a small
model of the stabilized stage when one exists in range.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

from . import derivatives, models, rewriting
from .derivatives import IterationTrace, WeakIndependenceProfile
from .rewriting import Derivation, SearchBounds, bfs_prove
from .saturation import Entailed
from .terms import Variable
from .theories import (
    Identity,
    Theory,
    ValidationReport,
    idempotency_identity,
    validate,
)

PropertyName = Literal["cm", "nci", "nperm"]


class NotLinearIdempotentError(Exception):
    def __init__(self, report: ValidationReport):
        self.report = report
        problems = []
        if not report.is_linear:
            problems.append("not linear")
        bad = [name for name, status in report.idempotency
               if status == "not-established"]
        if bad:
            problems.append(f"idempotency not established for {', '.join(bad)}")
        super().__init__(f"{report.theory_name}: {'; '.join(problems)}")


@dataclass(frozen=True)
class Verdict:
    property_name: str
    answer: Optional[bool]  # None only in sufficient-only mode
    stages_used: int
    certificate_kind: Literal["derivation", "model", "none"]
    derivation: Optional[Derivation] = None
    model: Optional[models.FiniteAlgebra] = None
    note: str = ""

    def to_json(self) -> dict:
        out: dict = {
            "property": self.property_name,
            "answer": {True: "yes", False: "no", None: "unknown"}[self.answer],
            "stages_used": self.stages_used,
            "certificate": self.certificate_kind,
        }
        if self.derivation is not None:
            out["derivation"] = rewriting.derivation_to_json(self.derivation)
        if self.model is not None:
            out["model"] = self.model.to_json()
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class ClassificationReport:
    theory_name: str
    validation: ValidationReport
    cm: Verdict
    nci: Verdict
    nperm: Verdict
    traces: tuple[IterationTrace, ...] = ()
    mode: str = "exact"

    @property
    def verdicts(self) -> tuple[Verdict, Verdict, Verdict]:
        return (self.cm, self.nci, self.nperm)

    def answer(self, prop: PropertyName) -> Optional[bool]:
        return getattr(self, prop).answer

    def to_json(self) -> dict:
        return {
            "theory": self.theory_name,
            "mode": self.mode,
            "verdicts": {
                "cm": self.cm.to_json(),
                "nci": self.nci.to_json(),
                "nperm": self.nperm.to_json(),
            },
            "traces": [
                {
                    "operator": tr.operator,
                    "budget": tr.budget,
                    "stop": tr.stop_reason,
                    "stages": [t.name for t in tr.stages],
                    "stage_sizes": [len(t.identities) for t in tr.stages],
                }
                for tr in self.traces
            ],
        }


def _no_verdict(prop: str, stage: Theory, stages_used: int,
                model_range: tuple[int, int]) -> Verdict:
    found = models.find_model(stage, *model_range)
    if found is None:
        return Verdict(prop, False, stages_used, "none",
                       note=f"saturation fixpoint consistent; no model of size "
                            f"{model_range[0]}..{model_range[1]} found")
    algebra, _ = found
    return Verdict(prop, False, stages_used, "model", model=algebra)


def _trace_verdict(prop: str, trace: IterationTrace,
                   model_range: tuple[int, int]) -> Verdict:
    if trace.stop_reason == "inconsistent":
        assert isinstance(trace.certificate, Entailed)
        return Verdict(prop, True, len(trace.stages) - 1, "derivation",
                       derivation=trace.certificate.derivation)
    return _no_verdict(prop, trace.final, len(trace.stages) - 1, model_range)


def classify(theory: Theory, budget: Optional[int] = None,
             model_range: tuple[int, int] = (2, 3),
             sufficient_only: bool = False) -> ClassificationReport:
    """Decide all three properties; certificates attached per verdict.

    Inputs must be linear and idempotent; `sufficient_only` admits
    idempotent non-linear input and reports only the sound direction
    (derivative inconsistency implies CM), leaving the rest unknown.
    """
    report = validate(theory, budget)
    if not report.ok:
        if sufficient_only:
            return _classify_sufficient_only(theory, report)
        raise NotLinearIdempotentError(report)

    d_trace = derivatives.iterate(theory, "derivative", budget)
    o_trace = derivatives.iterate(theory, "order_derivative", budget)

    if d_trace.stop_reason == "inconsistent" and len(d_trace.stages) == 2:
        assert isinstance(d_trace.certificate, Entailed)
        cm = Verdict("cm", True, 1, "derivation",
                     derivation=d_trace.certificate.derivation)
    elif d_trace.stop_reason == "inconsistent" and len(d_trace.stages) == 1:
        # The input itself is already inconsistent.
        assert isinstance(d_trace.certificate, Entailed)
        cm = Verdict("cm", True, 0, "derivation",
                     derivation=d_trace.certificate.derivation)
    else:
        first = derivatives.derivative(theory, budget)
        cm = _no_verdict("cm", first, 1, model_range)

    nci = _trace_verdict("nci", d_trace, model_range)
    nperm = _trace_verdict("nperm", o_trace, model_range)

    assert not (cm.answer and not nci.answer), \
        "an inconsistent derivative must stop the iteration at stage one"
    return ClassificationReport(theory.name, report, cm, nci, nperm,
                                traces=(d_trace, o_trace))


def _bfs_idempotent(theory: Theory, report: ValidationReport,
                    bounds: SearchBounds) -> bool:
    for name, status in report.idempotency:
        if status != "not-established":
            continue
        symbol = theory.symbol_named(name)
        assert symbol is not None
        outcome = bfs_prove(theory, idempotency_identity(symbol), bounds)
        if not isinstance(outcome, rewriting.Proved):
            return False
    return True


def _classify_sufficient_only(theory: Theory, report: ValidationReport
                              ) -> ClassificationReport:
    """One-directional check for idempotent non-linear presentations.

    Weak independences are collected by bounded proof search, so the profile
    is a sound under-approximation; an inconsistency proof for the resulting
    derivative is then conclusive for CM.
    """
    bounds = SearchBounds(max_terms=5_000, max_depth=4, max_term_size=20)
    if not _bfs_idempotent(theory, report, bounds):
        raise NotLinearIdempotentError(report)
    pairs = []
    witnesses = []
    x = Variable("x")
    for s in theory.symbols:
        for i in range(1, s.arity + 1):
            for w in derivatives._canonical_tuples(s.arity):
                if w[i - 1] == 0:
                    continue
                fact = derivatives._fact_identity(s, w)
                if isinstance(bfs_prove(theory, fact, bounds), rewriting.Proved):
                    pairs.append((s.name, i))
                    witnesses.append((s.name, i, fact))
                    break
    profile = WeakIndependenceProfile(frozenset(pairs), tuple(witnesses))
    first = derivatives._derivative_from_profile(theory, profile)
    outcome = bfs_prove(first, Identity(x, Variable("y")), bounds)
    if isinstance(outcome, rewriting.Proved):
        cm = Verdict("cm", True, 1, "derivation", derivation=outcome.derivation,
                     note="sufficient-only: derivative inconsistency proved by search")
    else:
        cm = Verdict("cm", None, 1, "none",
                     note="sufficient-only: search found no inconsistency proof")
    unknown = Verdict("nci", None, 0, "none", note="not evaluated: input not linear")
    unknown2 = Verdict("nperm", None, 0, "none", note="not evaluated: input not linear")
    return ClassificationReport(theory.name, report, cm, unknown, unknown2,
                                mode="sufficient-only")


@dataclass(frozen=True)
class OperatorDecomposition:
    operator: str
    stages_compared: int
    equal_per_stage: tuple[bool, ...]

    @property
    def holds(self) -> bool:
        return all(self.equal_per_stage)


@dataclass(frozen=True)
class JoinDecompositionReport:
    left: str
    right: str
    join: str
    operators: tuple[OperatorDecomposition, ...]
    # per property: (join answer, left answer, right answer)
    properties: tuple[tuple[str, bool, bool, bool], ...]

    @property
    def decomposition_holds(self) -> bool:
        return all(op.holds for op in self.operators)

    @property
    def prime_filter_holds(self) -> bool:
        return all(j == (a or b) for _, j, a, b in self.properties)

    def to_json(self) -> dict:
        return {
            "left": self.left,
            "right": self.right,
            "join": self.join,
            "operators": [
                {"operator": op.operator, "stages": op.stages_compared,
                 "equal_per_stage": list(op.equal_per_stage)}
                for op in self.operators
            ],
            "properties": [
                {"property": name, "join": j, "left": a, "right": b}
                for name, j, a, b in self.properties
            ],
            "decomposition_holds": self.decomposition_holds,
            "prime_filter_holds": self.prime_filter_holds,
        }


def _extended_stage(trace: IterationTrace, theory: Theory, n: int,
                    operator: derivatives.Operator, budget: Optional[int]) -> Theory:
    """Stage n of the iteration, recomputed past the recorded trace if needed."""
    try:
        return trace.stage(n)
    except IndexError:
        cur = trace.stages[-1]
        op = derivatives.derivative if operator == "derivative" \
            else derivatives.order_derivative
        for _ in range(n - (len(trace.stages) - 1)):
            cur = op(cur, budget)
        return cur


def check_join_decomposition(left: Theory, right: Theory,
                             budget: Optional[int] = None
                             ) -> JoinDecompositionReport:
    """Stage-by-stage distribution of both operators over the join, plus the
    prime-filter comparison for all three properties."""
    from .theories import join_disjoint, theory_equal

    joined = join_disjoint(left, right)
    ops = []
    for operator in ("derivative", "order_derivative"):
        join_trace = derivatives.iterate(joined, operator, budget)
        left_trace = derivatives.iterate(left, operator, budget)
        right_trace = derivatives.iterate(right, operator, budget)
        flags = []
        for n in range(len(join_trace.stages)):
            a = _extended_stage(left_trace, left, n, operator, budget)
            b = _extended_stage(right_trace, right, n, operator, budget)
            combined = join_disjoint(a, b)
            flags.append(theory_equal(join_trace.stages[n], combined))
        ops.append(OperatorDecomposition(operator, len(flags), tuple(flags)))

    reports = [classify(t, budget) for t in (joined, left, right)]
    props = []
    for prop in ("cm", "nci", "nperm"):
        j, a, b = (r.answer(prop) for r in reports)
        assert j is not None and a is not None and b is not None
        props.append((prop, j, a, b))
    return JoinDecompositionReport(left.name, right.name, joined.name,
                                   tuple(ops), tuple(props))
