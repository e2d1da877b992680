"""Concrete syntax for knowledge-base files and formulas.

File layout::

    # comment
    vocab {
      predicates Hepatitis, Jaundice;
      constants Eric;
      relations Likes/2;
    }
    kb {
      forall x (Hepatitis(x) -> Jaundice(x));
      ||Hepatitis(x) | Jaundice(x)||_{x} ~=[1] 0.8;
    }
    query { Hepatitis(Eric); }

Formula precedence is ``!`` > ``&`` > ``|`` > ``->``; quantifiers bind like
``!``.  Inside ``|| ... ||`` a bare ``|`` separates the conditioning formula,
so a disjunction there has to be parenthesised.  Exact comparisons ``=``,
``<=``, ``>=`` and the tolerance variable ``eps[i]`` give the exact language.
"""
from __future__ import annotations

import re
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

from .syntax import (
    APPROX_EQ, APPROX_LEQ, EXACT_EQ, EXACT_LEQ, FALSE, TRUE,
    Add, And, CondProp, Compare, Const, Eps, Equals, Exists, Forall, Formula,
    Implies, Mul, Not, Num, Or, PExpr, Pred, Prop, RandWorldsError, Truth, Var,
    Vocabulary, children, has_equality, neg, pexpr_terms,
)


class ParseError(RandWorldsError):
    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line, self.col = line, col
        where = f"line {line}, column {col}: " if line is not None else ""
        super().__init__(where + msg)


class ToleranceIndexWarning(UserWarning):
    pass


@dataclass
class SourceFile:
    vocab: Vocabulary
    kb: list[Formula]
    query: list[Formula] = field(default_factory=list)
    positions: list[tuple[int, int]] = field(default_factory=list, compare=False)

    @property
    def kb_formula(self) -> Formula:
        if not self.kb:
            return TRUE
        return self.kb[0] if len(self.kb) == 1 else And(tuple(self.kb))


# ---------------------------------------------------------------------------
# lexer

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+|\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?(?:/\d+)?|\.\d+)
  | (?P<ident>[A-Za-z][A-Za-z0-9_']*)
  | (?P<op>\|\||->|=>|~=|<~|>~|<=|>=|!=|[|&!(){}\[\],;=+*\-_/])
""", re.VERBOSE)

KEYWORDS = {"exists", "forall", "true", "false", "eps", "vocab", "kb", "query"}


@dataclass
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        tok = m.group()
        if kind != "ws":
            out.append(Token(kind, tok, line, pos - line_start + 1))
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    out.append(Token("eof", "", line, pos - line_start + 1))
    return out


def _number(text: str) -> Fraction:
    return Fraction(text)


# ---------------------------------------------------------------------------
# parser


class _Backtrack(Exception):
    pass


class Parser:
    def __init__(self, text: str, vocab: Vocabulary | None = None, free_vars=()):
        self.toks = tokenize(text)
        self.i = 0
        self.vocab = vocab or Vocabulary()
        self.scope: list[str] = list(free_vars)
        self.no_bar = 0  # >0 while parsing the body of a proportion term

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, off=1) -> Token:
        return self.toks[min(self.i + off, len(self.toks) - 1)]

    def at(self, text: str) -> bool:
        return self.tok.text == text and self.tok.kind in ("op", "ident")

    def expect(self, text: str) -> Token:
        if not self.at(text):
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    def error(self, msg: str, tok: Token | None = None):
        tok = tok or self.tok
        raise ParseError(msg, tok.line, tok.col)

    def ident(self) -> Token:
        if self.tok.kind != "ident":
            self.error(f"expected identifier, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    # -- file
    def parse_file(self) -> SourceFile:
        vocab = None
        kb, query, positions = [], [], []
        while self.tok.kind != "eof":
            head = self.ident()
            if head.text == "vocab":
                if vocab is not None:
                    self.error("duplicate vocab block", head)
                vocab = self.parse_vocab()
                self.vocab = vocab
            elif head.text in ("kb", "query"):
                if vocab is None:
                    self.error("vocab block must come first", head)
                self.expect("{")
                while not self.at("}"):
                    start = self.tok
                    f = self.parse_closed()
                    self.expect(";")
                    if head.text == "kb":
                        check_kb_formula(f, vocab, start)
                        kb.append(f)
                        positions.append((start.line, start.col))
                    else:
                        query.append(f)
                self.expect("}")
            else:
                self.error(f"unknown block {head.text!r}", head)
        if vocab is None:
            raise ParseError("missing vocab block")
        _warn_repeated_indices(kb)
        return SourceFile(vocab, kb, query, positions)

    def parse_vocab(self) -> Vocabulary:
        preds, consts, rels = [], [], []
        self.expect("{")
        while not self.at("}"):
            kw = self.ident()
            if kw.text not in ("predicates", "constants", "relations"):
                self.error(f"unknown vocabulary section {kw.text!r}", kw)
            while not self.at(";"):
                name = self.ident()
                if name.text in KEYWORDS:
                    self.error(f"reserved word {name.text!r} used as a symbol", name)
                if kw.text == "relations":
                    self.expect("/")
                    ar = self.tok
                    if ar.kind != "num" or not ar.text.isdigit():
                        self.error("relation arity must be an integer")
                    self.i += 1
                    rels.append((name.text, int(ar.text)))
                elif kw.text == "predicates":
                    preds.append(name.text)
                else:
                    consts.append(name.text)
                if not self.at(";"):
                    self.expect(",")
            self.expect(";")
        self.expect("}")
        try:
            return Vocabulary(tuple(preds), tuple(consts), tuple(rels))
        except RandWorldsError as e:
            raise ParseError(str(e)) from None

    # -- formulas
    def parse_closed(self) -> Formula:
        return self.formula()

    def formula(self) -> Formula:
        left = self.disjunction()
        if self.at("->"):
            self.i += 1
            right = self.formula()
            return Implies(left, right)
        return left

    def disjunction(self) -> Formula:
        args = [self.conjunction()]
        while self.at("|") and not self.no_bar:
            self.i += 1
            args.append(self.conjunction())
        return args[0] if len(args) == 1 else Or(tuple(args))

    def conjunction(self) -> Formula:
        args = [self.unary()]
        while self.at("&"):
            self.i += 1
            args.append(self.unary())
        return args[0] if len(args) == 1 else And(tuple(args))

    def unary(self) -> Formula:
        t = self.tok
        if self.at("!"):
            self.i += 1
            return Not(self.unary())
        if t.kind == "ident" and t.text in ("exists", "forall"):
            self.i += 1
            v = self.ident()
            if v.text in KEYWORDS or self.vocab.arity(v.text) is not None or v.text in self.vocab.constants:
                self.error(f"{v.text!r} cannot be used as a variable", v)
            self.scope.append(v.text)
            try:
                body = self.unary()
            finally:
                self.scope.pop()
            return (Exists if t.text == "exists" else Forall)(v.text, body)
        return self.primary()

    def primary(self) -> Formula:
        t = self.tok
        if t.kind == "ident" and t.text == "true":
            self.i += 1
            return TRUE
        if t.kind == "ident" and t.text == "false":
            self.i += 1
            return FALSE
        if t.kind == "ident" and t.text != "eps":
            if self.peek().text == "(":
                return self.application()
            left = self.term()
            if self.at("="):
                self.i += 1
                return Equals(left, self.term())
            if self.at("!="):
                self.i += 1
                return Not(Equals(left, self.term()))
            self.error(f"expected '=' or '!=' after term {t.text!r}")
        # comparison, or parenthesised formula
        save = self.i
        try:
            return self.comparison()
        except _Backtrack:
            self.i = save
        except ParseError:
            if not self.at("(") and self.toks[save].text != "(":
                raise
            self.i = save
        if self.at("("):
            self.i += 1
            outer, self.no_bar = self.no_bar, 0
            try:
                f = self.formula()
            finally:
                self.no_bar = outer
            self.expect(")")
            return f
        self.error(f"unexpected {t.text or 'end of input'!r}")

    def application(self) -> Formula:
        name = self.ident()
        ar = self.vocab.arity(name.text)
        if ar is None:
            self.error(f"undeclared predicate {name.text!r}", name)
        self.expect("(")
        args = [self.term()]
        while self.at(","):
            self.i += 1
            args.append(self.term())
        self.expect(")")
        if len(args) != ar:
            self.error(f"{name.text} expects {ar} argument(s), got {len(args)}", name)
        return Pred(name.text, tuple(args))

    def term(self):
        t = self.ident()
        if t.text in self.vocab.constants:
            return Const(t.text)
        if t.text in self.scope:
            return Var(t.text)
        self.error(f"undeclared symbol {t.text!r}", t)

    # -- comparisons and proportion expressions
    def comparison(self) -> Formula:
        if not (self.tok.kind == "num" or self.at("||") or self.at("(") or self.at("-")
                or self.at("eps")):
            raise _Backtrack
        left = self.pexpr()
        op_tok = self.tok
        op = op_tok.text
        if op in ("~=", "<~", ">~"):
            self.i += 1
            self.expect("[")
            it = self.tok
            if it.kind != "num" or not it.text.isdigit() or int(it.text) < 1:
                self.error("tolerance index must be a positive integer")
            self.i += 1
            self.expect("]")
            right = self.pexpr()
            idx = int(it.text)
            if op == "~=":
                return Compare(left, APPROX_EQ, right, idx)
            if op == "<~":
                return Compare(left, APPROX_LEQ, right, idx)
            return Compare(right, APPROX_LEQ, left, idx)
        if op in ("=", "<=", ">="):
            self.i += 1
            right = self.pexpr()
            if op == "=":
                return Compare(left, EXACT_EQ, right)
            if op == "<=":
                return Compare(left, EXACT_LEQ, right)
            return Compare(right, EXACT_LEQ, left)
        raise _Backtrack

    def pexpr(self) -> PExpr:
        args = [self.pterm()]
        while self.at("+") or self.at("-"):
            minus = self.at("-")
            self.i += 1
            a = self.pterm()
            args.append(neg(a) if minus else a)
        return args[0] if len(args) == 1 else Add(tuple(args))

    def pterm(self) -> PExpr:
        args = [self.pfactor()]
        while self.at("*"):
            self.i += 1
            args.append(self.pfactor())
        return args[0] if len(args) == 1 else Mul(tuple(args))

    def pfactor(self) -> PExpr:
        t = self.tok
        if self.at("-"):
            self.i += 1
            return neg(self.pfactor())
        if t.kind == "num":
            self.i += 1
            return Num(_number(t.text))
        if self.at("eps"):
            self.i += 1
            self.expect("[")
            it = self.tok
            if it.kind != "num" or not it.text.isdigit() or int(it.text) < 1:
                self.error("tolerance index must be a positive integer")
            self.i += 1
            self.expect("]")
            return Eps(int(it.text))
        if self.at("||"):
            return self.proportion()
        if self.at("("):
            self.i += 1
            e = self.pexpr()
            self.expect(")")
            return e
        raise _Backtrack

    def proportion(self) -> PExpr:
        self.expect("||")
        # variables are only known after the body, so scan ahead for the subscript
        names = self._lookahead_subscript()
        self.scope.extend(names)
        self.no_bar += 1
        try:
            body = self.formula()
            given = None
            if self.at("|"):
                self.i += 1
                given = self.formula()
        finally:
            self.no_bar -= 1
            del self.scope[len(self.scope) - len(names):]
        self.expect("||")
        self.expect("_")
        self.expect("{")
        got = [self.ident().text]
        while self.at(","):
            self.i += 1
            got.append(self.ident().text)
        self.expect("}")
        assert got == names
        if given is None:
            return Prop(body, tuple(names))
        return CondProp(body, given, tuple(names))

    def _lookahead_subscript(self) -> list[str]:
        depth, j = 0, self.i
        while True:
            t = self.toks[j]
            if t.kind == "eof":
                self.error("unterminated proportion term")
            if t.text == "||" and t.kind == "op":
                if self.toks[j + 1].text == "_" and depth == 0:
                    break
                if self.toks[j + 1].text == "_":
                    depth -= 1
                else:
                    depth += 1
            j += 1
        if self.toks[j + 2].text != "{":
            self.error("expected '{' after '||_'", self.toks[j + 2])
        names, j = [], j + 3
        while True:
            t = self.toks[j]
            if t.kind != "ident":
                self.error("expected variable in proportion subscript", t)
            if t.text in KEYWORDS or t.text in self.vocab.constants or self.vocab.arity(t.text) is not None:
                self.error(f"{t.text!r} cannot be used as a variable", t)
            names.append(t.text)
            if self.toks[j + 1].text == ",":
                j += 2
                continue
            if self.toks[j + 1].text != "}":
                self.error("expected '}' in proportion subscript", self.toks[j + 1])
            break
        if len(set(names)) != len(names):
            self.error("repeated variable in proportion subscript")
        return names


def _warn_repeated_indices(fs: list[Formula]) -> None:
    c: Counter = Counter()

    def walk(f):
        if isinstance(f, Compare):
            if f.index is not None:
                c[f.index] += 1
            for side in (f.left, f.right):
                for t in pexpr_terms(side):
                    walk(t.body)
                    if isinstance(t, CondProp):
                        walk(t.given)
        else:
            for ch in children(f):
                walk(ch)

    for f in fs:
        walk(f)
    rep = sorted(i for i, n in c.items() if n > 1)
    if rep:
        warnings.warn(f"tolerance index used in more than one comparison: {rep}",
                      ToleranceIndexWarning, stacklevel=3)


def check_kb_formula(f: Formula, vocab: Vocabulary, tok: Token | None = None) -> None:
    """Reject equality and relations of arity >= 2 on the knowledge-base side."""
    line, col = (tok.line, tok.col) if tok else (None, None)
    if has_equality(f):
        raise ParseError("equality is not allowed in the knowledge base", line, col)
    rels = {n for n, _ in vocab.relations}

    def walk(g):
        if isinstance(g, Pred) and g.name in rels:
            raise ParseError(f"relation {g.name} is not allowed in the knowledge base", line, col)
        if isinstance(g, Compare):
            for side in (g.left, g.right):
                for t in pexpr_terms(side):
                    walk(t.body)
                    if isinstance(t, CondProp):
                        walk(t.given)
        for ch in children(g):
            walk(ch)

    walk(f)


def parse(text: str) -> SourceFile:
    return Parser(text).parse_file()


def parse_formula(text: str, vocab: Vocabulary, free_vars=()) -> Formula:
    p = Parser(text, vocab, free_vars)
    f = p.formula()
    if p.tok.kind != "eof":
        if p.at(";") and p.peek().kind == "eof":
            return f
        p.error(f"unexpected {p.tok.text!r} after formula")
    return f


def parse_kb(text: str, vocab: Vocabulary) -> Formula:
    """Parse a ``;``-separated list of KB formulas and conjoin them."""
    p = Parser(text, vocab)
    fs = []
    while p.tok.kind != "eof":
        start = p.tok
        f = p.formula()
        check_kb_formula(f, vocab, start)
        fs.append(f)
        if p.tok.kind != "eof":
            p.expect(";")
    if not fs:
        return TRUE
    return fs[0] if len(fs) == 1 else And(tuple(fs))


# ---------------------------------------------------------------------------
# printer

_PREC = {Implies: 1, Or: 2, And: 3}


def format_number(q: Fraction) -> str:
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    return f"{q.numerator}/{q.denominator}"


def format_term(t) -> str:
    return t.name


def format_formula(f: Formula, in_bar: bool = False) -> str:
    return _fmt(f, 0, in_bar)


def _fmt(f: Formula, ctx: int, in_bar: bool = False) -> str:
    if isinstance(f, Truth):
        return "true" if f.value else "false"
    if isinstance(f, Pred):
        return f"{f.name}({', '.join(format_term(a) for a in f.args)})"
    if isinstance(f, Equals):
        s = f"{format_term(f.left)} = {format_term(f.right)}"
        return f"({s})" if ctx >= 4 else s
    if isinstance(f, Not):
        return "!" + _fmt(f.arg, 5)
    if isinstance(f, (Exists, Forall)):
        kw = "exists" if isinstance(f, Exists) else "forall"
        return f"{kw} {f.var} " + _fmt(f.body, 5)
    if isinstance(f, Compare):
        s = _fmt_compare(f)
        # comparisons bind tighter than the connectives
        return f"({s})" if ctx >= 5 else s
    if isinstance(f, Implies):
        # right associative: a left-hand implication needs parentheses
        s = _fmt(f.left, 2, in_bar) + " -> " + _fmt(f.right, 1, in_bar)
        return s if ctx <= 1 and not in_bar else f"({s})"
    if isinstance(f, (And, Or)):
        p = _PREC[type(f)]
        sep = " & " if isinstance(f, And) else " | "
        # children of the same connective keep their grouping
        s = sep.join(_fmt(a, p + 1, in_bar) for a in f.args)
        if ctx > p or (in_bar and isinstance(f, Or)):
            return f"({s})"
        return s
    raise TypeError(f"cannot print {f!r}")


def _fmt_compare(f: Compare) -> str:
    left, right = format_pexpr(f.left), format_pexpr(f.right)
    if f.op in (APPROX_EQ, APPROX_LEQ):
        return f"{left} {f.op}[{f.index}] {right}"
    return f"{left} {f.op} {right}"


def format_pexpr(e: PExpr, ctx: int = 0) -> str:
    if isinstance(e, Num):
        return format_number(e.value)
    if isinstance(e, Eps):
        return f"eps[{e.index}]"
    if isinstance(e, Prop):
        return f"||{_fmt(e.body, 0, True)}||_{{{','.join(e.vars)}}}"
    if isinstance(e, CondProp):
        return f"||{_fmt(e.body, 0, True)} | {_fmt(e.given, 0, True)}||_{{{','.join(e.vars)}}}"
    if isinstance(e, Add):
        s = " + ".join(format_pexpr(a, 1) for a in e.args)
        return f"({s})" if ctx >= 1 else s
    if isinstance(e, Mul):
        s = " * ".join(format_pexpr(a, 2) for a in e.args)
        return f"({s})" if ctx >= 2 else s
    raise TypeError(f"cannot print {e!r}")


def format_vocab(v: Vocabulary) -> str:
    lines = ["vocab {"]
    if v.predicates:
        lines.append(f"  predicates {', '.join(v.predicates)};")
    if v.constants:
        lines.append(f"  constants {', '.join(v.constants)};")
    if v.relations:
        lines.append(f"  relations {', '.join(f'{n}/{a}' for n, a in v.relations)};")
    lines.append("}")
    return "\n".join(lines)


def format_source(src: SourceFile) -> str:
    parts = [format_vocab(src.vocab), "kb {"]
    parts += [f"  {format_formula(f)};" for f in src.kb]
    parts.append("}")
    if src.query:
        parts.append("query {")
        parts += [f"  {format_formula(f)};" for f in src.query]
        parts.append("}")
    return "\n".join(parts) + "\n"


def to_text(obj) -> str:
    """Print a SourceFile, Formula or proportion expression."""
    if isinstance(obj, SourceFile):
        return format_source(obj)
    if isinstance(obj, Formula):
        return format_formula(obj)
    if isinstance(obj, PExpr):
        return format_pexpr(obj)
    raise TypeError(type(obj))
