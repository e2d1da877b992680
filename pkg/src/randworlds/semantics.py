"""Finite-world semantics and exact world counting.

This module is the ground truth for everything else, so it deliberately
shares no code with the canonicalizer: formulas are evaluated directly in a
world, with exact rational arithmetic.

Worlds are evaluated through a *class structure*: the domain is split into
classes of indistinguishable elements, each with an atom, a size and the
constants it denotes.  An explicit world is the special case where every
class is a single element; the aggregated backend uses one anonymous class
per atom, which is what makes counting for N in the hundreds cheap.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from . import _kernels
from .syntax import (
    APPROX_EQ, APPROX_LEQ, EXACT_EQ, EXACT_LEQ,
    Add, And, CondProp, Compare, Eps, Equals, Exists, Forall, Formula,
    Implies, Mul, Not, Num, Or, Pred, Prop, RandWorldsError, ToleranceVector,
    Truth, Var, Vocabulary, atom_holds, children, pexpr_terms,
    relations_of,
)


class CapacityError(RandWorldsError):
    """The requested enumeration is beyond the backend's budget."""


class AggregationUnsupported(RandWorldsError):
    """The formula's truth is not determined by the aggregated group."""


EXHAUSTIVE_CAP = 10_000_000
AGGREGATED_CAP = 5_000_000


# ---------------------------------------------------------------------------
# worlds


@dataclass(frozen=True)
class World:
    """A finite model over elements 0..N-1 (printed as 1..N).

    ``atoms[e]`` is the 0-based atom index (the bitmask) of element ``e``.
    """

    N: int
    atoms: tuple[int, ...]
    consts: Mapping[str, int] = field(default_factory=dict)
    relations: Mapping[str, frozenset] = field(default_factory=dict)

    def __post_init__(self):
        if self.N < 1 or len(self.atoms) != self.N:
            raise RandWorldsError("atom assignment must cover exactly N >= 1 elements")
        for c, e in self.consts.items():
            if not 0 <= e < self.N:
                raise RandWorldsError(f"constant {c} denotes {e}, outside the domain")

    def point(self, K: int) -> tuple[Fraction, ...]:
        """pi(W): the fraction of elements in each atom."""
        c = Counter(self.atoms)
        return tuple(Fraction(c.get(j, 0), self.N) for j in range(K))


@dataclass
class _Structure:
    N: int
    masks: list[int]          # atom of each class
    sizes: list[int]
    const_cls: dict[str, int]
    singleton: list[bool]
    relations: dict[str, frozenset] | None = None
    truth: list[list[bool]] = field(default_factory=list)  # truth[pred][cls]


def _structure_from_world(w: World, vocab: Vocabulary) -> _Structure:
    k = vocab.k
    truth = [[atom_holds(m, k, i) for m in w.atoms] for i in range(k)]
    rels = {name: frozenset(ts) for name, ts in w.relations.items()}
    return _Structure(w.N, list(w.atoms), [1] * w.N, dict(w.consts), [True] * w.N, rels, truth)


def _structure_from_group(counts: Sequence[int], blocks: Sequence[tuple[int, tuple[str, ...]]],
                          vocab: Vocabulary) -> _Structure:
    """Class structure for an aggregated group.

    ``blocks`` lists (atom, constants) for each distinct named element.
    """
    masks, sizes, single, const_cls = [], [], [], {}
    used = Counter(a for a, _ in blocks)
    for a, names in blocks:
        for c in names:
            const_cls[c] = len(masks)
        masks.append(a)
        sizes.append(1)
        single.append(True)
    for j, n in enumerate(counts):
        rest = n - used.get(j, 0)
        if rest > 0:
            masks.append(j)
            sizes.append(rest)
            single.append(rest == 1)
    k = vocab.k
    truth = [[atom_holds(m, k, i) for m in masks] for i in range(k)]
    return _Structure(sum(counts), masks, sizes, const_cls, single, None, truth)


# ---------------------------------------------------------------------------
# compilation of formulas into closures over (structure, env)


class _Compiler:
    def __init__(self, vocab: Vocabulary, tau: Mapping[int, Fraction] | None):
        self.vocab = vocab
        self.tau = tau
        self.nslots = 0

    def tau_of(self, i: int) -> Fraction:
        if self.tau is None:
            raise RandWorldsError(f"formula uses tolerance index {i} but no tolerance vector was given")
        try:
            return Fraction(self.tau[i])
        except (KeyError, RandWorldsError):
            raise RandWorldsError(f"no tolerance given for index {i}") from None

    def new_slot(self) -> int:
        self.nslots += 1
        return self.nslots - 1

    def term(self, t, scope):
        if isinstance(t, Var):
            if t.name not in scope:
                raise RandWorldsError(f"free variable {t.name} in evaluated formula")
            slot = scope[t.name]
            return lambda S, env: env[slot]
        name = t.name
        if name not in self.vocab.constants:
            raise RandWorldsError(f"undeclared constant {name}")
        return lambda S, env: S.const_cls[name]

    def formula(self, f: Formula, scope: dict) -> Callable:
        if isinstance(f, Truth):
            v = f.value
            return lambda S, env: v
        if isinstance(f, Pred):
            if len(f.args) == 1:
                pi = self.vocab.pred_index(f.name)
                t = self.term(f.args[0], scope)
                return lambda S, env: S.truth[pi][t(S, env)]
            name = f.name
            ts = [self.term(a, scope) for a in f.args]

            def rel(S, env):
                if S.relations is None:
                    raise AggregationUnsupported("relations need an explicit world")
                return tuple(t(S, env) for t in ts) in S.relations.get(name, ())
            return rel
        if isinstance(f, Equals):
            a, b = self.term(f.left, scope), self.term(f.right, scope)

            def eq(S, env):
                x, y = a(S, env), b(S, env)
                if x != y:
                    return False
                if S.singleton[x]:
                    return True
                raise AggregationUnsupported("equality between elements of an aggregated class")
            return eq
        if isinstance(f, Not):
            g = self.formula(f.arg, scope)
            return lambda S, env: not g(S, env)
        if isinstance(f, And):
            gs = [self.formula(a, scope) for a in f.args]
            return lambda S, env: all(g(S, env) for g in gs)
        if isinstance(f, Or):
            gs = [self.formula(a, scope) for a in f.args]
            return lambda S, env: any(g(S, env) for g in gs)
        if isinstance(f, Implies):
            a, b = self.formula(f.left, scope), self.formula(f.right, scope)
            return lambda S, env: (not a(S, env)) or b(S, env)
        if isinstance(f, (Exists, Forall)):
            slot = self.new_slot()
            body = self.formula(f.body, {**scope, f.var: slot})
            want = isinstance(f, Exists)

            def quant(S, env):
                for c in range(len(S.sizes)):
                    env[slot] = c
                    if body(S, env) == want:
                        return want
                return not want
            return quant
        if isinstance(f, Compare):
            return self.compare(f, scope)
        raise TypeError(f"cannot evaluate {f!r}")

    def compare(self, f: Compare, scope) -> Callable:
        left, right = self.pexpr(f.left, scope), self.pexpr(f.right, scope)
        # every value is a pair (n, d) with d >= 0 and n == 0 whenever d == 0,
        # so the sign test on n is the multiplied-out comparison
        if f.op == EXACT_LEQ:
            def leq(S, env):
                n, _ = _sub(left(S, env), right(S, env))
                return n <= 0
            return leq
        if f.op == EXACT_EQ:
            def eq(S, env):
                n, _ = _sub(left(S, env), right(S, env))
                return n == 0
            return eq
        t = self.tau_of(f.index)
        if f.op == APPROX_LEQ:
            def aleq(S, env):
                n, d = _sub(left(S, env), right(S, env))
                return n - t * d <= 0
            return aleq
        if f.op == APPROX_EQ:
            def aeq(S, env):
                n, d = _sub(left(S, env), right(S, env))
                return n - t * d <= 0 and -n - t * d <= 0
            return aeq
        raise TypeError(f.op)

    def pexpr(self, e, scope) -> Callable:
        if isinstance(e, Num):
            v = (e.value, Fraction(1))
            return lambda S, env: v
        if isinstance(e, Eps):
            v = (self.tau_of(e.index), Fraction(1))
            return lambda S, env: v
        if isinstance(e, Prop):
            count = self.proportion(e.vars, e.body, None, scope)

            def prop(S, env):
                num, _, tot = count(S, env)
                return (Fraction(num, tot), Fraction(1))
            return prop
        if isinstance(e, CondProp):
            count = self.proportion(e.vars, e.body, e.given, scope)

            def cprop(S, env):
                num, den, tot = count(S, env)
                return (Fraction(num, tot), Fraction(den, tot))
            return cprop
        if isinstance(e, Add):
            gs = [self.pexpr(a, scope) for a in e.args]

            def add(S, env):
                n, d = gs[0](S, env)
                for g in gs[1:]:
                    n2, d2 = g(S, env)
                    if d == d2:
                        n = n + n2
                    else:
                        n, d = n * d2 + n2 * d, d * d2
                return (n, d)
            return add
        if isinstance(e, Mul):
            gs = [self.pexpr(a, scope) for a in e.args]

            def mul(S, env):
                n, d = Fraction(1), Fraction(1)
                for g in gs:
                    n2, d2 = g(S, env)
                    n, d = n * n2, d * d2
                return (n, d)
            return mul
        raise TypeError(f"cannot evaluate {e!r}")

    def proportion(self, vars_, body, given, scope):
        slots = [self.new_slot() for _ in vars_]
        inner = dict(scope)
        inner.update(zip(vars_, slots))
        b = self.formula(body, inner)
        g = self.formula(given, inner) if given is not None else None
        m = len(vars_)

        def count(S, env):
            num = den = 0
            ncls = len(S.sizes)
            for tup in itertools.product(range(ncls), repeat=m):
                wgt = 1
                for s, c in zip(slots, tup):
                    env[s] = c
                    wgt *= S.sizes[c]
                if g is None:
                    if b(S, env):
                        num += wgt
                elif g(S, env):
                    den += wgt
                    if b(S, env):
                        num += wgt
            return num, den, S.N ** m
        return count


def _sub(a, b):
    n1, d1 = a
    n2, d2 = b
    if d1 == d2:
        return (n1 - n2, d1)
    return (n1 * d2 - n2 * d1, d1 * d2)


@dataclass
class CompiledFormula:
    fn: Callable
    nslots: int

    def __call__(self, S: _Structure, env: list | None = None) -> bool:
        return bool(self.fn(S, env if env is not None else [None] * max(self.nslots, 1)))


def compile_formula(f: Formula, vocab: Vocabulary, tau=None, free: Sequence[str] = ()) -> CompiledFormula:
    c = _Compiler(vocab, tau)
    scope = {v: c.new_slot() for v in free}
    fn = c.formula(f, scope)
    return CompiledFormula(fn, c.nslots)


def evaluate(w: World, valuation: Mapping[str, int] | None, tau, f: Formula,
             vocab: Vocabulary) -> bool:
    """Truth of ``f`` in world ``w`` under ``valuation`` (variable -> element)."""
    valuation = dict(valuation or {})
    c = _Compiler(vocab, tau)
    names = sorted(valuation)
    scope = {v: c.new_slot() for v in names}
    fn = c.formula(f, scope)
    env = [None] * max(c.nslots, 1)
    for v in names:
        env[scope[v]] = valuation[v]
    return bool(fn(_structure_from_world(w, vocab), env))


# alias with the operation's usual name
eval_formula = evaluate


def proportion_value(w: World, e, vocab: Vocabulary, tau=None) -> Fraction:
    """Value of a closed proportion expression in ``w``; conditionals must have d > 0."""
    c = _Compiler(vocab, tau)
    fn = c.pexpr(e, {})
    n, d = fn(_structure_from_world(w, vocab), [None] * max(c.nslots, 1))
    if d == 0:
        raise ZeroDivisionError("conditional proportion with an empty condition")
    return n / d


# ---------------------------------------------------------------------------
# enumeration


def _mentions_var_equality(f) -> bool:
    if isinstance(f, Equals):
        return isinstance(f.left, Var) and isinstance(f.right, Var)
    if isinstance(f, Compare):
        for side in (f.left, f.right):
            for t in pexpr_terms(side):
                if _mentions_var_equality(t.body):
                    return True
                if isinstance(t, CondProp) and _mentions_var_equality(t.given):
                    return True
        return False
    return any(_mentions_var_equality(c) for c in children(f))


def aggregation_ok(vocab: Vocabulary, *formulas: Formula) -> bool:
    return all(not relations_of(f, vocab) and not _mentions_var_equality(f) for f in formulas)


def relation_factor(vocab: Vocabulary, N: int, skip: Iterable[str] = ()) -> int:
    """h(N) restricted to relations not in ``skip``."""
    skip = set(skip)
    e = sum(N ** a for n, a in vocab.relations if n not in skip)
    return 1 << e


def _relation_interpretations(vocab: Vocabulary, N: int, names: Sequence[str]):
    arities = dict(vocab.relations)
    spaces = []
    for n in names:
        tuples = list(itertools.product(range(N), repeat=arities[n]))
        spaces.append((n, tuples))
    sizes = [len(ts) for _, ts in spaces]
    for bits in itertools.product(*[range(1 << s) for s in sizes]):
        out = {}
        for (n, ts), b in zip(spaces, bits):
            out[n] = frozenset(t for i, t in enumerate(ts) if (b >> i) & 1)
        yield out


def exhaustive_states(vocab: Vocabulary, N: int, rel_names: Sequence[str] = ()) -> int:
    arities = dict(vocab.relations)
    bits = sum(N ** arities[n] for n in rel_names)
    return N * vocab.K ** N * N ** len(vocab.constants) * (1 << bits)


def iter_worlds(vocab: Vocabulary, N: int, rel_names: Sequence[str] | None = None) -> Iterator[World]:
    """Every world of size N (relations only for ``rel_names``, default all)."""
    if rel_names is None:
        rel_names = [n for n, _ in vocab.relations]
    A, _ = _kernels.assignments(N, vocab.K)
    consts = vocab.constants
    for row in A:
        atoms = tuple(int(a) for a in row)
        for place in itertools.product(range(N), repeat=len(consts)):
            cmap = dict(zip(consts, place))
            for rels in _relation_interpretations(vocab, N, rel_names):
                yield World(N, atoms, cmap, rels)


def compositions(N: int, K: int) -> Iterator[tuple[int, ...]]:
    if K == 1:
        yield (N,)
        return
    for first in range(N + 1):
        for rest in compositions(N - first, K - 1):
            yield (first,) + rest


def set_partitions(items: Sequence[str]) -> Iterator[list[tuple[str, ...]]]:
    items = list(items)
    if not items:
        yield []
        return
    head, tail = items[0], items[1:]
    for part in set_partitions(tail):
        yield [(head,)] + part
        for i in range(len(part)):
            yield part[:i] + [(head,) + part[i]] + part[i + 1:]


def falling(n: int, r: int) -> int:
    out = 1
    for i in range(r):
        out *= n - i
    return out


def multinomial(counts: Sequence[int]) -> int:
    out, tot = 1, 0
    for c in counts:
        tot += c
        out *= math.comb(tot, c)
    return out


def iter_groups(vocab: Vocabulary, N: int):
    """Yield (counts, blocks, weight) for the aggregated backend.

    ``blocks`` is a list of (atom, constants) pairs, one per distinct named
    element, and ``weight`` is the exact number of worlds in the group.
    """
    K = vocab.K
    partitions = list(set_partitions(vocab.constants))
    for counts in compositions(N, K):
        mult = multinomial(counts)
        for part in partitions:
            for atoms in itertools.product(range(K), repeat=len(part)):
                used = Counter(atoms)
                place = 1
                for j, b in used.items():
                    place *= falling(counts[j], b)
                if place == 0:
                    continue
                yield counts, list(zip(atoms, part)), mult * place


def aggregated_states(vocab: Vocabulary, N: int) -> int:
    ncomp = math.comb(N + vocab.K - 1, vocab.K - 1)
    m = len(vocab.constants)
    place = sum(vocab.K ** len(p) for p in set_partitions(vocab.constants)) if m else 1
    return ncomp * place


# ---------------------------------------------------------------------------
# counting


@dataclass
class CountReport:
    total: int
    histogram: dict[tuple[Fraction, ...], int] | None = None
    backend: str = "exhaustive"

    def histogram_csv(self) -> str:
        if self.histogram is None:
            raise RandWorldsError("no histogram was requested")
        return histogram_csv(self.histogram)


def histogram_csv(hist: Mapping[tuple[Fraction, ...], int]) -> str:
    from .parser import format_number
    rows = []
    for u in sorted(hist):
        rows.append(",".join([format_number(x) for x in u] + [str(hist[u])]))
    return "\n".join(rows) + "\n"


def _choose_backend(backend: str, vocab: Vocabulary, N: int, formulas, rel_names) -> str:
    if backend == "auto":
        backend = "aggregated" if aggregation_ok(vocab, *formulas) else "exhaustive"
    if backend == "aggregated":
        if not aggregation_ok(vocab, *formulas):
            raise AggregationUnsupported("aggregated counting needs unary formulas without variable equality")
        if aggregated_states(vocab, N) > AGGREGATED_CAP:
            raise CapacityError(f"aggregated backend: too many groups for N={N}, K={vocab.K}")
    elif backend == "exhaustive":
        if exhaustive_states(vocab, N, rel_names) > EXHAUSTIVE_CAP:
            raise CapacityError(f"exhaustive backend: N={N} exceeds the enumeration budget")
    else:
        raise RandWorldsError(f"unknown backend {backend!r}")
    return backend


def _tau_map(tau):
    if tau is None:
        return None
    if isinstance(tau, ToleranceVector):
        return tau
    return ToleranceVector(tau)


def count_worlds(vocab: Vocabulary, N: int, tau, f: Formula, want_histogram: bool = False,
                 backend: str = "auto") -> CountReport:
    """Exact number of size-N worlds satisfying ``f`` (optionally by pi(W))."""
    tau = _tau_map(tau)
    rel_names = sorted(relations_of(f, vocab))
    backend = _choose_backend(backend, vocab, N, [f], rel_names)
    cf = compile_formula(f, vocab, tau)
    hist: Counter | None = Counter() if want_histogram else None
    total = 0
    factor = relation_factor(vocab, N, rel_names)
    if backend == "aggregated":
        for counts, blocks, weight in iter_groups(vocab, N):
            S = _structure_from_group(counts, blocks, vocab)
            if cf(S):
                total += weight
                if hist is not None:
                    hist[tuple(Fraction(c, N) for c in counts)] += weight * factor
    else:
        for w in iter_worlds(vocab, N, rel_names):
            if cf(_structure_from_world(w, vocab)):
                total += 1
                if hist is not None:
                    hist[w.point(vocab.K)] += factor
    return CountReport(total * factor, dict(hist) if hist is not None else None, backend)


def pr_counts(vocab: Vocabulary, N: int, tau, phi: Formula, kb: Formula,
              backend: str = "auto") -> tuple[int, int]:
    """(#worlds(phi & KB), #worlds(KB)) up to the common relation factor."""
    tau = _tau_map(tau)
    rel_names = sorted(relations_of(phi, vocab) | relations_of(kb, vocab))
    backend = _choose_backend(backend, vocab, N, [phi, kb], rel_names)
    cphi = compile_formula(phi, vocab, tau)
    ckb = compile_formula(kb, vocab, tau)
    num = den = 0
    if backend == "aggregated":
        for counts, blocks, weight in iter_groups(vocab, N):
            S = _structure_from_group(counts, blocks, vocab)
            if ckb(S):
                den += weight
                if cphi(S):
                    num += weight
        return num, den
    # exhaustive: KB never mentions relations, so evaluate it once per base world
    kb_rels = relations_of(kb, vocab)
    A, _ = _kernels.assignments(N, vocab.K)
    consts = vocab.constants
    for row in A:
        atoms = tuple(int(a) for a in row)
        for place in itertools.product(range(N), repeat=len(consts)):
            base = World(N, atoms, dict(zip(consts, place)))
            if not kb_rels:
                S = _structure_from_world(base, vocab)
                if not ckb(S):
                    continue
                for rels in _relation_interpretations(vocab, N, rel_names):
                    S.relations = rels
                    den += 1
                    if cphi(S):
                        num += 1
            else:
                for rels in _relation_interpretations(vocab, N, rel_names):
                    S = _structure_from_world(World(N, atoms, base.consts, rels), vocab)
                    if ckb(S):
                        den += 1
                        if cphi(S):
                            num += 1
    return num, den


def pr_n(vocab: Vocabulary, N: int, tau, phi: Formula, kb: Formula,
         backend: str = "auto") -> Fraction | None:
    """Pr_N^tau(phi | KB), or None when no size-N world satisfies KB."""
    num, den = pr_counts(vocab, N, tau, phi, kb, backend)
    if den == 0:
        return None
    return Fraction(num, den)


@dataclass
class PrSequence:
    values: list[tuple[int, Fraction | None]]
    inf: Fraction | None
    sup: Fraction | None

    def defined(self) -> list[tuple[int, Fraction]]:
        return [(n, v) for n, v in self.values if v is not None]


def pr_sequence(vocab: Vocabulary, Ns: Iterable[int], tau, phi: Formula, kb: Formula,
                backend: str = "auto") -> PrSequence:
    values = []
    for N in Ns:
        values.append((N, pr_n(vocab, N, tau, phi, kb, backend)))
    got = [v for _, v in values if v is not None]
    return PrSequence(values, min(got) if got else None, max(got) if got else None)


def closed_form_count(u: Sequence, N: int, vocab: Vocabulary) -> int:
    """Number of worlds W of size N with pi(W) = u (constants and relations free)."""
    u = [Fraction(x) for x in u]
    if len(u) != vocab.K:
        raise RandWorldsError(f"point has {len(u)} coordinates, expected {vocab.K}")
    counts = []
    for x in u:
        n = x * N
        if n.denominator != 1 or n < 0:
            raise RandWorldsError(f"{x} is not a multiple of 1/{N}")
        counts.append(int(n))
    if sum(counts) != N:
        raise RandWorldsError("coordinates must sum to 1")
    return relation_factor(vocab, N) * N ** len(vocab.constants) * multinomial(counts)


# ---------------------------------------------------------------------------
# concentration summaries (k = 1 style checks and Stirling comparisons)


def log_group_sizes(N: int, K: int):
    """(lattice counts, log multinomial) for every point of the 1/N lattice."""
    C = _kernels.lattice(N, K)
    return C, _kernels.log_multinomial(C)


def tail_fraction(N: int, center: Fraction, radius: Fraction) -> Fraction:
    """Fraction of k=1 worlds whose u_1 is farther than ``radius`` from ``center``."""
    far = sum(math.comb(N, n) for n in range(N + 1) if abs(Fraction(n, N) - center) > radius)
    return Fraction(far, 2 ** N)
