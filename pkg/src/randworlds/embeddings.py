"""Probabilistic propositional logic and defaults, run through random worlds.

Propositions become unary predicates of one variable. A probability
constraint ``Pr(b | b') = l`` turns into a conditional proportion statement
with its own tolerance index; a query about ``Pr(b | b')`` becomes the
question of ``b(c)`` given ``b'(c)`` for a fresh constant ``c``.

Default rules ``B -> C`` become ``||C(x) | B(x)||_x ~=[1] 1`` (all defaults
share tolerance 1) and strict rules ``B => C`` become ``forall x (B(x) -> C(x))``.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

from .canonical import to_canonical
from .engine import DEFAULT, BeliefConfig, BeliefResult, believe, value_at
from .maxent import SolverError
from .parser import ParseError, parse_formula
from .syntax import (
    TRUE, CondProp, Compare, Const, Forall, Formula, Implies, Num, Prop, RandWorldsError,
    Vocabulary, conj, substitute,
)

X = "x"
QUERY_CONST = "c"
_IDENT = re.compile(r"[A-Za-z][A-Za-z0-9_']*")
_KEYWORDS = {"true", "false"}


# ---------------------------------------------------------------------------
# propositional formulas


def _lift(text: str) -> str:
    return _IDENT.sub(lambda m: m.group(0) if m.group(0) in _KEYWORDS else f"{m.group(0)}({X})", text)


def propositions_in(text: str) -> list[str]:
    seen = []
    for m in _IDENT.finditer(text):
        w = m.group(0)
        if w not in _KEYWORDS and w not in seen:
            seen.append(w)
    return seen


def prop_formula(text: str, vocab: Vocabulary) -> Formula:
    """Read a propositional formula as an essentially propositional one in x."""
    return parse_formula(_lift(text), vocab, free_vars=(X,))


def at_constant(xi: Formula, c: str = QUERY_CONST) -> Formula:
    return substitute(xi, {X: Const(c)})


# ---------------------------------------------------------------------------
# probability constraints


@dataclass(frozen=True)
class PropConstraint:
    """lo <= Pr(beta | given) <= hi; ``lo == hi`` is an equality."""

    beta: str
    given: str | None
    lo: Fraction | None
    hi: Fraction | None

    def __str__(self):
        target = f"Pr({self.beta}" + (f" | {self.given})" if self.given else ")")
        if self.lo is not None and self.lo == self.hi:
            return f"{target} = {self.lo}"
        if self.lo is None:
            return f"{target} <= {self.hi}"
        if self.hi is None:
            return f"{target} >= {self.lo}"
        return f"{target} in [{self.lo}, {self.hi}]"


_CONSTRAINT = re.compile(
    r"^\s*Pr\s*\((?P<body>.*)\)\s*(?:(?P<op><=|>=|=)\s*(?P<val>[0-9./]+)"
    r"|in\s*\[\s*(?P<lo>[0-9./]+)\s*,\s*(?P<hi>[0-9./]+)\s*\])\s*$")


def _split_bar(body: str) -> tuple[str, str | None]:
    """Split ``b | b'`` at the first top-level bar.

    A disjunction on the left must be parenthesized; alternatively write
    ``b given b'``.
    """
    if " given " in body:
        a, b = body.split(" given ", 1)
        return a.strip(), b.strip()
    depth = 0
    for i, ch in enumerate(body):
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif ch == "|" and depth == 0:
            return body[:i].strip(), body[i + 1:].strip()
    return body.strip(), None


def parse_constraint(text: str) -> PropConstraint:
    m = _CONSTRAINT.match(text)
    if not m:
        raise ParseError(f"cannot read probability constraint {text!r}")
    beta, given = _split_bar(m.group("body"))
    if m.group("op"):
        v = Fraction(m.group("val"))
        lo, hi = {"=": (v, v), "<=": (None, v), ">=": (v, None)}[m.group("op")]
    else:
        lo, hi = Fraction(m.group("lo")), Fraction(m.group("hi"))
        if lo > hi:
            raise ParseError(f"empty interval in {text!r}")
    for b in (lo, hi):
        if b is not None and not 0 <= b <= 1:
            raise ParseError(f"probability bound {b} outside [0, 1]")
    return PropConstraint(beta, given, lo, hi)


@dataclass
class PropConstraintSet:
    constraints: list[PropConstraint] = field(default_factory=list)
    propositions: list[str] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str, propositions: Sequence[str] = ()) -> "PropConstraintSet":
        items = [s for s in (p.strip() for p in re.split(r"[;\n]", text)) if s and not s.startswith("#")]
        return cls.of([parse_constraint(s) for s in items], propositions)

    @classmethod
    def of(cls, constraints: Iterable[PropConstraint], propositions: Sequence[str] = ()) -> "PropConstraintSet":
        cs = list(constraints)
        props = list(propositions)
        for c in cs:
            for p in propositions_in(c.beta) + propositions_in(c.given or ""):
                if p not in props:
                    props.append(p)
        return cls(cs, props)

    def vocabulary(self, extra: Iterable[str] = ()) -> Vocabulary:
        props = list(self.propositions)
        for p in extra:
            if p not in props:
                props.append(p)
        return Vocabulary(tuple(props), (QUERY_CONST,))


def _proportion(beta: Formula, given: Formula | None):
    return Prop(beta, (X,)) if given is None else CondProp(beta, given, (X,))


def nilsson_translate(lam: PropConstraintSet, query: tuple[str, str | None] = ("true", None),
                      vocab: Vocabulary | None = None) -> tuple[Formula, Formula, Formula, Vocabulary]:
    """(KB, phi, psi, vocabulary) for the constraint set and a query Pr(beta | beta')."""
    beta, given = query
    if vocab is None:
        vocab = lam.vocabulary(propositions_in(beta) + propositions_in(given or ""))
    parts = []
    index = 1
    for c in lam.constraints:
        e = _proportion(prop_formula(c.beta, vocab), prop_formula(c.given, vocab) if c.given else None)
        if c.lo is not None and c.lo == c.hi:
            parts.append(Compare(e, "~=", Num(c.lo), index))
            index += 1
            continue
        if c.hi is not None:
            parts.append(Compare(e, "<~", Num(c.hi), index))
            index += 1
        if c.lo is not None:
            parts.append(Compare(Num(c.lo), "<~", e, index))
            index += 1
    kb = conj(parts)
    phi = at_constant(prop_formula(beta, vocab))
    psi = at_constant(prop_formula(given, vocab)) if given else TRUE
    return kb, phi, psi, vocab


def nilsson_believe(lam: PropConstraintSet, beta: str, given: str | None = None,
                    config: BeliefConfig = DEFAULT) -> BeliefResult:
    kb, phi, psi, vocab = nilsson_translate(lam, (beta, given))
    full = kb if psi == TRUE else conj([kb, psi])
    label = f"Pr({beta}" + (f" | {given})" if given else ")")
    return believe(phi, full, vocab, config=config, query=label)


# ---------------------------------------------------------------------------
# defaults


@dataclass(frozen=True)
class Rule:
    body: str
    head: str
    strict: bool

    def __str__(self):
        return f"{self.body} {'=>' if self.strict else '->'} {self.head}"


def _split_rule(text: str) -> Rule:
    depth = 0
    for i in range(len(text) - 1):
        ch = text[i]
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        elif depth == 0 and text[i:i + 2] in ("->", "=>"):
            body, head = text[:i].strip(), text[i + 2:].strip()
            if not body or not head:
                break
            return Rule(body, head, text[i] == "=")
    raise ParseError(f"expected 'B -> C' or 'B => C', got {text!r}")


@dataclass
class DefaultRuleSet:
    rules: list[Rule] = field(default_factory=list)

    @classmethod
    def parse(cls, text: str) -> "DefaultRuleSet":
        text = "\n".join(line.split("#", 1)[0] for line in text.splitlines())
        return cls([_split_rule(s.strip()) for s in text.split(";") if s.strip()])

    def propositions(self, extra: Iterable[str] = ()) -> list[str]:
        props: list[str] = []
        for r in self.rules:
            for p in propositions_in(r.body) + propositions_in(r.head):
                if p not in props:
                    props.append(p)
        for p in extra:
            if p not in props:
                props.append(p)
        return props

    def vocabulary(self, extra: Iterable[str] = ()) -> Vocabulary:
        return Vocabulary(tuple(self.propositions(extra)), (QUERY_CONST,))


def defaults_translate(rules: DefaultRuleSet, vocab: Vocabulary | None = None) -> Formula:
    vocab = vocab or rules.vocabulary()
    parts = []
    for r in rules.rules:
        b, h = prop_formula(r.body, vocab), prop_formula(r.head, vocab)
        if r.strict:
            parts.append(Forall(X, Implies(b, h)))
        else:
            parts.append(Compare(CondProp(h, b, (X,)), "~=", Num(1), 1))
    return conj(parts)


TAU_SEQUENCE = (1e-1, 1e-2, 1e-3, 1e-4)
TRUE_VERDICT, FALSE_VERDICT, UNDEFINED, INCONCLUSIVE = "TRUE", "FALSE", "UNDEFINED", "INCONCLUSIVE"


@dataclass
class Plausibility:
    query: str
    verdict: str
    trace: list[dict]
    limit: float | None
    slope: float | None
    monotone: bool | None
    criterion: str

    def as_dict(self):
        return dict(self.__dict__)


def me_plausible(rules: DefaultRuleSet, query: str | Rule, taus: Sequence[float] = TAU_SEQUENCE,
                 tol: float = 1e-3, config: BeliefConfig = DEFAULT) -> Plausibility:
    """Is ``B -> C`` endorsed by maximum entropy over the default rules?

    Pr^tau(C(c) | B(c) & rules) is computed for each shared tolerance in
    ``taus``. The last two points fix a line in tau; the verdict is TRUE when
    that line meets tau = 0 within ``tol`` of 1.
    """
    q = _split_rule(query) if isinstance(query, str) else query
    vocab = rules.vocabulary(propositions_in(q.body) + propositions_in(q.head))
    kb = defaults_translate(rules, vocab)
    b = at_constant(prop_formula(q.body, vocab))
    phi = at_constant(prop_formula(q.head, vocab))
    cf = to_canonical(conj([kb, b]), vocab)
    criterion = f"linear extrapolation of the last two points to tau = 0 is within {tol} of 1"
    trace, values = [], []
    for t in taus:
        tau = {1: t}
        try:
            tv = value_at(phi, cf, tau, vocab, config)
        except (SolverError, RandWorldsError) as exc:
            trace.append({"tau": t, "status": "error", "detail": str(exc)})
            return Plausibility(str(q), INCONCLUSIVE, trace, None, None, None, criterion)
        entry = {"tau": t, "status": tv.status}
        if tv.lo is not None:
            entry.update(value=round(float(tv.lo), 12), hi=round(float(tv.hi), 12))
        trace.append(entry)
        values.append(None if tv.status not in ("defined", "interval") else float(tv.lo))
    if all(v is None for v in values):
        return Plausibility(str(q), UNDEFINED, trace, None, None, None, criterion)
    if any(v is None for v in values):
        return Plausibility(str(q), INCONCLUSIVE, trace, None, None, None, criterion)
    (t1, v1), (t2, v2) = list(zip(taus, values))[-2:]
    slope = (v1 - v2) / (t1 - t2)
    limit = v2 - slope * t2
    monotone = all(b >= a - 1e-9 for a, b in zip(values, values[1:]))
    verdict = TRUE_VERDICT if abs(1.0 - limit) <= tol else FALSE_VERDICT
    return Plausibility(str(q), verdict, trace, round(limit, 12), round(-slope, 12), monotone, criterion)
