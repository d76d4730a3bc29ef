"""Ratio analysis of gap length sets and its structural consequences.

Given a truncated gap enumeration and a distinguished gap theta, this module
mines the common ratios of geometric sequences inside the gap set, computes
the rational-rank invariants of those ratios (the algebraic dependence and
independence numbers) either from the instance's contraction ratios or
intrinsically from gap data alone, checks commensurability between candidate
generating ratio sets, derives lower bounds on generating-system
cardinality, and prunes redundant maps from one-vertex systems whose
children overlap by containment.

Ratio candidates live in two tiers.  Certified ratios come with an exact
closed-path certificate (theta is realized at a vertex carrying a closed
path of that ratio product, so the whole geometric ladder provably lies in
the gap set).  Empirical ratios merely survive the truncated chain test plus
symbolic spot checks below the floor; both tiers are computed and compared
so a spurious survivor is reported loudly instead of silently absorbed.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Union

from . import symgaps
from .exactnum import QSpan, factor, format_rational, nonneg_solve, qrank
from .model import (
    GDInstance,
    HULL_DISJOINT,
    SSC_CERTIFIED,
    cover_intervals,
    hausdorff_distance,
    hulls,
    separation_check,
)
from .symgaps import GapEnumeration, SymbolicGapSet

PASS = "pass"
FAIL = "fail"
INCONCLUSIVE = "inconclusive"

DEFAULT_MIN_WITNESSES = 4
DEFAULT_VERIFY_DEPTH = 12
_Z_BUDGET = 200_000


class PruneError(RuntimeError):
    """Pruning could not restore separation under the stated hypothesis."""


@dataclass(frozen=True)
class MonomialCone:
    """Finite set of positive rational generators, considered through the
    monoid (integer exponents) and cone (nonnegative rational exponents)
    they generate multiplicatively."""

    generators: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        gens = tuple(sorted({Fraction(g) for g in self.generators}))
        if any(g <= 0 for g in gens):
            raise ValueError("generators must be positive")
        if not gens:
            raise ValueError("need at least one generator")
        object.__setattr__(self, "generators", gens)


@dataclass(frozen=True)
class ConeDecision:
    status: str  # "yes" | "no" | "unknown"
    exponents: Optional[tuple[int, ...]] = None
    coefficients: Optional[tuple[Fraction, ...]] = None

    def to_json(self) -> dict:
        out: dict = {"status": self.status}
        if self.exponents is not None:
            out["exponents"] = list(self.exponents)
        if self.coefficients is not None:
            out["coefficients"] = [format_rational(c) for c in self.coefficients]
        return out


def cone_contains_z(cone: MonomialCone, x, budget: int = _Z_BUDGET) -> ConeDecision:
    """Is x a product of generators with nonnegative integer exponents
    (empty product allowed, so x == 1 is always a member)?

    Definitive both ways when all generators sit on one side of 1 (the
    search space is then finite); with mixed generators an exhausted budget
    returns "unknown" rather than guessing.
    """
    x = Fraction(x)
    if x <= 0:
        raise ValueError("x must be positive")
    gens = [g for g in cone.generators if g != 1]
    if x == 1:
        return ConeDecision("yes", exponents=tuple(0 for _ in cone.generators))
    if not gens:
        return ConeDecision("no")
    below = all(g < 1 for g in gens)
    above = all(g > 1 for g in gens)
    complete = below or above

    def overshoot(value: Fraction) -> bool:
        return value < x if below else (value > x if above else False)

    exps = [0] * len(gens)
    nodes = 0

    def search(i: int, value: Fraction) -> Optional[tuple[int, ...]]:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise _BudgetExhausted()
        if value == x and any(exps):
            return tuple(exps)
        if i == len(gens):
            return None
        m = 0
        cur = value
        while not overshoot(cur) and m <= budget:
            exps[i] = m
            found = search(i + 1, cur)
            if found is not None:
                return found
            m += 1
            cur = cur * gens[i]
        exps[i] = 0
        return None

    try:
        found = search(0, Fraction(1))
    except _BudgetExhausted:
        return ConeDecision("unknown")
    if found is not None:
        witness = []
        it = iter(found)
        for g in cone.generators:
            witness.append(next(it) if g != 1 else 0)
        return ConeDecision("yes", exponents=tuple(witness))
    return ConeDecision("no") if complete else ConeDecision("unknown")


class _BudgetExhausted(Exception):
    pass


def cone_contains_q(cone: MonomialCone, x) -> ConeDecision:
    """Is x a product of generators with nonnegative rational exponents?
    Decided exactly through prime-exponent vectors; the empty product is
    allowed, so x == 1 is always a member."""
    x = Fraction(x)
    if x <= 0:
        raise ValueError("x must be positive")
    if x == 1:
        return ConeDecision(
            "yes", coefficients=tuple(Fraction(0) for _ in cone.generators)
        )
    target = factor(x)
    gen_vecs = [factor(g) for g in cone.generators]
    sol = nonneg_solve(target, gen_vecs)
    if sol is None:
        return ConeDecision("no")
    return ConeDecision("yes", coefficients=tuple(sol))


@dataclass(frozen=True)
class EmpiricalRatio:
    """A ratio surviving the truncated chain test: the maximal geometric
    ladder through theta, all members >= floor present in the set, topped at
    theta_prime with `witnesses` present members."""

    ratio: Fraction
    theta_prime: Fraction
    witnesses: int
    verified: bool
    verified_depth: int

    def to_json(self) -> dict:
        return {
            "ratio": format_rational(self.ratio),
            "theta_prime": format_rational(self.theta_prime),
            "witnesses": self.witnesses,
            "verified": self.verified,
            "verified_depth": self.verified_depth,
        }


@dataclass(frozen=True)
class RatioReport:
    theta: Fraction
    floor: Fraction
    min_witnesses: int
    verify_depth: int
    certified: tuple[Fraction, ...]
    empirical: tuple[EmpiricalRatio, ...]
    symbolic_used: bool

    def verified_ratios(self) -> tuple[Fraction, ...]:
        """Certified ratios plus empirical ones that passed verification."""
        out = set(self.certified)
        out.update(e.ratio for e in self.empirical if e.verified)
        return tuple(sorted(out, reverse=True))

    def all_ratios(self) -> tuple[Fraction, ...]:
        out = set(self.certified)
        out.update(e.ratio for e in self.empirical)
        return tuple(sorted(out, reverse=True))

    def to_json(self) -> dict:
        return {
            "theta": format_rational(self.theta),
            "floor": format_rational(self.floor),
            "min_witnesses": self.min_witnesses,
            "verify_depth": self.verify_depth,
            "certified": [format_rational(r) for r in self.certified],
            "empirical": [e.to_json() for e in self.empirical],
            "symbolic_used": self.symbolic_used,
        }


def ratios_of(
    theta_set: Union[GapEnumeration, Iterable[Fraction]],
    theta,
    min_witnesses: int = DEFAULT_MIN_WITNESSES,
    verify_depth: int = DEFAULT_VERIFY_DEPTH,
    symbolic: Optional[SymbolicGapSet] = None,
) -> RatioReport:
    """Mine ratios r in (0,1) of geometric sequences through theta.

    Any ratio whose truncated ladder has a second member in the set is a
    pairwise quotient with theta on one side, so those quotients are the
    complete candidate pool; closed-path products at theta's realization
    vertices join the pool when a symbolic set is supplied, and are
    certified exactly.  Empirical candidates need `min_witnesses` present
    members at or above the floor and, with a symbolic set, must pass
    membership checks for `verify_depth` further members below the floor.
    """
    theta = Fraction(theta)
    if min_witnesses < 3:
        raise ValueError("min_witnesses below 3 would admit accidental pairs")
    if isinstance(theta_set, GapEnumeration):
        values = set(theta_set.values)
        floor = theta_set.cutoff
    else:
        values = {Fraction(v) for v in theta_set}
        if not values:
            raise ValueError("theta set must be nonempty")
        floor = min(values)
    if theta not in values:
        raise ValueError("theta must be a member of the enumerated set")
    candidates: set[Fraction] = set()
    for v in values:
        if v < theta:
            candidates.add(v / theta)
        elif v > theta:
            candidates.add(theta / v)
    certified_pool: frozenset[Fraction] = frozenset()
    if symbolic is not None:
        realize = symgaps.realization_vertices(symbolic, theta)
        pool: set[Fraction] = set()
        for v in realize:
            pool.update(
                p for p in symgaps.cycle_products(symbolic, v, floor) if p < 1
            )
        certified_pool = frozenset(pool)
        candidates.update(certified_pool)
    certified: list[Fraction] = []
    empirical: list[EmpiricalRatio] = []
    for r in sorted(candidates, reverse=True):
        is_certified = r in certified_pool
        if is_certified:
            certified.append(r)
        top = theta
        while top / r in values:
            top = top / r
        witnesses = 0
        cur = top
        broken = False
        while cur >= floor:
            if cur not in values:
                broken = True
                break
            witnesses += 1
            cur = cur * r
        if broken or witnesses < min_witnesses:
            continue
        verified = False
        depth_checked = 0
        if symbolic is not None:
            if is_certified:
                # the closed-path certificate already guarantees every
                # deeper member, no point-by-point checks needed
                verified = True
                depth_checked = verify_depth
            else:
                verified = True
                term = cur  # first member below the floor
                for _ in range(verify_depth):
                    if not symgaps.contains(symbolic, term):
                        verified = False
                        break
                    depth_checked += 1
                    term = term * r
                if not verified:
                    continue  # spurious truncation artifact, drop it
        empirical.append(
            EmpiricalRatio(r, top, witnesses, verified, depth_checked)
        )
    return RatioReport(
        theta,
        floor,
        min_witnesses,
        verify_depth,
        tuple(certified),
        tuple(empirical),
        symbolic is not None,
    )


@dataclass(frozen=True)
class AlgdepReport:
    """Rational-rank invariants of a ratio set.

    independence_number is the dimension of the Q-span of the log-ratios
    (computed exactly through prime-exponent vectors); dependence_number is
    one less.
    """

    independence_number: int
    dependence_number: int
    basis: QSpan
    ratios: tuple[Fraction, ...]
    certified_dimension: Optional[int] = None
    warnings: tuple[str, ...] = ()

    def to_json(self) -> dict:
        return {
            "independence_number": self.independence_number,
            "dependence_number": self.dependence_number,
            "ratios": [format_rational(r) for r in self.ratios],
            "basis": [{str(p): e for p, e in v.entries} for v in self.basis.basis],
            "certified_dimension": self.certified_dimension,
            "warnings": list(self.warnings),
        }


def algdep_of_ifs(g: GDInstance) -> AlgdepReport:
    """Dependence/independence numbers of the instance's contraction ratios."""
    ratios = g.ratio_set()
    span = qrank([factor(r) for r in ratios if r != 1])
    return AlgdepReport(span.dimension, span.dimension - 1, span, ratios)


def algdep_from_gaps(report: RatioReport) -> AlgdepReport:
    """Dependence/independence numbers computed intrinsically from mined gap
    ratios, with the certified tier compared against the full verified set;
    a dimension mismatch is a loud warning, never silently merged."""
    certified = [r for r in report.certified if r != 1]
    verified = [r for r in report.verified_ratios() if r != 1]
    warnings: list[str] = []
    ratios = verified
    if not ratios:
        unverified = [r for r in report.all_ratios() if r != 1]
        if unverified:
            ratios = unverified
            warnings.append(
                "no symbolic verification available; using raw truncated ratios"
            )
        else:
            return AlgdepReport(
                0, -1, QSpan(), (), None, ("empty ratio set: degenerate report",)
            )
    span = qrank([factor(r) for r in ratios])
    cert_dim: Optional[int] = None
    if certified:
        cert_dim = qrank([factor(r) for r in certified]).dimension
        if cert_dim != span.dimension:
            warnings.append(
                f"tier mismatch: certified ratios span dimension {cert_dim} "
                f"but the verified set spans {span.dimension}; inspect the "
                "empirical survivors before trusting either number"
            )
    return AlgdepReport(
        span.dimension,
        span.dimension - 1,
        span,
        tuple(sorted(ratios, reverse=True)),
        cert_dim,
        tuple(warnings),
    )


def lower_bound(report: AlgdepReport) -> int:
    """The independence number bounds the size of any generating system of
    the same attractor from below (each generator contributes at most one
    new log-ratio direction)."""
    return max(report.independence_number, 0)


@dataclass(frozen=True)
class Verdict:
    """Outcome of a structural verification: pass, fail, or inconclusive,
    with the machine-checkable claim it instantiates and exact witnesses."""

    claim: str
    status: str
    summary: str
    details: dict

    def to_json(self) -> dict:
        return {
            "claim": self.claim,
            "status": self.status,
            "summary": self.summary,
            "details": self.details,
        }


def verify_commensurability(
    ratios_a: Iterable[Fraction], ratios_x: Iterable[Fraction]
) -> Verdict:
    """Check that each ratio set lies in the nonnegative rational monomial
    cone of the other; two generating systems of one dust-like set must pass
    both inclusions, so a counterexample separates the systems."""
    a = MonomialCone(tuple(Fraction(r) for r in ratios_a))
    x = MonomialCone(tuple(Fraction(r) for r in ratios_x))
    details: dict = {"x_in_cone_a": [], "a_in_cone_x": []}
    failures: list[str] = []
    for label, members, cone in (
        ("x_in_cone_a", x.generators, a),
        ("a_in_cone_x", a.generators, x),
    ):
        for r in members:
            decision = cone_contains_q(cone, r)
            details[label].append(
                {"ratio": format_rational(r), **decision.to_json()}
            )
            if decision.status != "yes":
                failures.append(f"{format_rational(r)} escapes {label.split('_')[-1]}")
    if failures:
        return Verdict(
            "commensurability",
            FAIL,
            "counterexample: " + "; ".join(failures),
            details,
        )
    return Verdict(
        "commensurability", PASS, "both cone inclusions hold", details
    )


def _truncated_certificate_pool(
    s: SymbolicGapSet, theta: Fraction, floor: Fraction
) -> tuple[Fraction, ...]:
    """Closed-path products >= floor at theta's realization vertices: the
    ratios whose full ladders through theta provably lie in the gap set."""
    out: set[Fraction] = set()
    for v in symgaps.realization_vertices(s, theta):
        out.update(p for p in symgaps.cycle_products(s, v, floor) if p < 1)
    return tuple(sorted(out, reverse=True))


def verify_sandwich(
    g: GDInstance,
    s: SymbolicGapSet,
    theta,
    floor,
    min_witnesses: int = DEFAULT_MIN_WITNESSES,
    verify_depth: int = DEFAULT_VERIFY_DEPTH,
    report: Optional[RatioReport] = None,
) -> Verdict:
    """Squeeze the mined ratio set from both sides.

    Lower: every truncated closed-path product at theta's realization
    vertices (for one-vertex systems: every product of contraction ratios
    >= floor) must be certified.  Upper: every verified ratio must lie in
    the nonnegative rational cone of the contraction ratios.  theta must
    sit below the residual threshold for the ladder structure to apply;
    otherwise the verdict is inconclusive rather than a failure.
    """
    theta = Fraction(theta)
    floor = Fraction(floor)
    enum = symgaps.enumerate_gaps(s, floor)
    if theta not in set(enum.values):
        return Verdict(
            "ratio-sandwich",
            INCONCLUSIVE,
            "theta is not an enumerated gap at this floor",
            {"theta": format_rational(theta)},
        )
    threshold = symgaps.natural_delta(s)
    if theta >= threshold:
        return Verdict(
            "ratio-sandwich",
            INCONCLUSIVE,
            "theta is not below the residual threshold "
            f"{format_rational(threshold)}; the ladder structure does not "
            "apply this high",
            {
                "theta": format_rational(theta),
                "threshold": format_rational(threshold),
            },
        )
    if report is None:
        report = ratios_of(
            enum,
            theta,
            min_witnesses=min_witnesses,
            verify_depth=verify_depth,
            symbolic=s,
        )
    lower_pool = _truncated_certificate_pool(s, theta, floor)
    certified = set(report.certified)
    missing = [r for r in lower_pool if r not in certified]
    cone = MonomialCone(g.ratio_set())
    escapes = []
    upper_checks = []
    for r in report.verified_ratios():
        decision = cone_contains_q(cone, r)
        upper_checks.append({"ratio": format_rational(r), **decision.to_json()})
        if decision.status != "yes":
            escapes.append(r)
    details = {
        "theta": format_rational(theta),
        "floor": format_rational(floor),
        "lower_pool": [format_rational(r) for r in lower_pool],
        "certified": [format_rational(r) for r in report.certified],
        "upper_checks": upper_checks,
    }
    if missing or escapes:
        parts = []
        if missing:
            parts.append(
                "uncertified ladder products: "
                + ", ".join(format_rational(r) for r in missing)
            )
        if escapes:
            parts.append(
                "ratios escaping the rational cone: "
                + ", ".join(format_rational(r) for r in escapes)
            )
        return Verdict("ratio-sandwich", FAIL, "; ".join(parts), details)
    return Verdict(
        "ratio-sandwich",
        PASS,
        f"{len(lower_pool)} ladder products certified and "
        f"{len(upper_checks)} mined ratios inside the rational cone",
        details,
    )


def verify_intrinsic_dependence(
    g: GDInstance,
    floor=Fraction(1, 1000),
    theta=None,
    root: Optional[str] = None,
    min_witnesses: int = DEFAULT_MIN_WITNESSES,
    verify_depth: int = DEFAULT_VERIFY_DEPTH,
) -> Verdict:
    """Compare the dependence number computed intrinsically from gap data
    with the one computed from the instance's contraction ratios.

    One-vertex systems must agree exactly; for larger graphs the gap-side
    dimension can only be bounded above by the instance-side independence
    number, so the check is an inequality there.
    """
    floor = Fraction(floor)
    sep = separation_check(g)
    if sep.verdict != HULL_DISJOINT:
        return Verdict(
            "intrinsic-dependence",
            INCONCLUSIVE,
            f"requires a hull-disjoint instance, got {sep.verdict!r}",
            {"separation": sep.verdict},
        )
    s = symgaps.build(g, root=root, separation=sep)
    enum = symgaps.enumerate_gaps(s, floor)
    threshold = symgaps.natural_delta(s)
    eligible = [v for v in enum.values if v < threshold]
    if theta is None:
        if not eligible:
            return Verdict(
                "intrinsic-dependence",
                INCONCLUSIVE,
                "no enumerated gap below the residual threshold; lower the floor",
                {"threshold": format_rational(threshold)},
            )
        theta = eligible[0]  # largest eligible gap: cheapest ladder base
    theta = Fraction(theta)
    report = ratios_of(
        enum,
        theta,
        min_witnesses=min_witnesses,
        verify_depth=verify_depth,
        symbolic=s,
    )
    gaps_rep = algdep_from_gaps(report)
    ifs_rep = algdep_of_ifs(g)
    details = {
        "theta": format_rational(theta),
        "floor": format_rational(floor),
        "from_gaps": gaps_rep.to_json(),
        "from_ifs": ifs_rep.to_json(),
    }
    if g.one_vertex:
        ok = gaps_rep.independence_number == ifs_rep.independence_number
        summary = (
            f"dependence {gaps_rep.dependence_number} "
            f"{'=' if ok else '!='} {ifs_rep.dependence_number}"
        )
        return Verdict("intrinsic-dependence", PASS if ok else FAIL, summary, details)
    ok = gaps_rep.independence_number <= ifs_rep.independence_number
    summary = (
        f"gap-side dimension {gaps_rep.independence_number} "
        f"{'<=' if ok else '>'} instance independence {ifs_rep.independence_number}"
    )
    return Verdict("intrinsic-dependence", PASS if ok else FAIL, summary, details)


@dataclass(frozen=True)
class Removal:
    removed: str
    kept: str
    word: tuple[str, ...]

    def to_json(self) -> dict:
        return {"removed": self.removed, "kept": self.kept, "word": list(self.word)}


@dataclass(frozen=True)
class PruneResult:
    pruned: GDInstance
    removals: tuple[Removal, ...]
    separation: str
    hausdorff_distance: Fraction
    hausdorff_bound: Fraction
    check_depth: int


def prune_to_ssc(
    g: GDInstance,
    full_measure_asserted: bool,
    depth: int = 10,
) -> PruneResult:
    """Drop maps whose children nest inside siblings until separation holds.

    Under the full-measure hypothesis an overlapping pair of children must
    nest, so each removal keeps the attractor identical; removals carry the
    exact composition word as an audit certificate, and the surviving
    system's depth-`depth` cover is compared against the original within the
    rigorous Hausdorff bound 2 * max_ratio**depth * diameter.  The caller
    must assert the hypothesis explicitly; without it pruning is refused.
    """
    if not full_measure_asserted:
        raise ValueError(
            "refusing to prune: the full-measure hypothesis was not asserted"
        )
    if not g.one_vertex:
        raise ValueError("pruning is defined for one-vertex systems")
    current = g
    removals: list[Removal] = []
    while True:
        sep = separation_check(current, refine_depth=depth)
        if sep.verdict in (HULL_DISJOINT, SSC_CERTIFIED):
            break
        nested = sorted(
            (w for w in sep.witnesses if w.kind == "nested"),
            key=lambda w: w.inner,
        )
        if not nested:
            raise PruneError(
                f"full-measure hypothesis not confirmed at depth {depth}: "
                "children overlap without a nesting certificate"
            )
        w = nested[0]
        outer = w.edge_ids[0] if w.edge_ids[1] == w.inner else w.edge_ids[1]
        if len(current.edges) <= 2:
            raise PruneError("pruning would leave fewer than two maps")
        current = current.without_edge(w.inner)
        removals.append(Removal(w.inner, outer, w.word))
    root = g.vertices[0]
    cover_orig = cover_intervals(g, root, depth)
    cover_pruned = cover_intervals(current, root, depth)
    h = hulls(g)
    bound = 2 * g.max_ratio**depth * h.diameter(root)
    dist = hausdorff_distance(cover_orig, cover_pruned)
    if dist > bound:
        raise PruneError(
            "pruned attractor deviates beyond the cover tolerance; the "
            "full-measure hypothesis does not hold for this instance"
        )
    return PruneResult(
        current, tuple(removals), sep.verdict, dist, bound, depth
    )
