"""Command-line interface: ``randworlds <command> FILE [options]``.

Exit status is 0 on success, 1 for bad input and 2 when a solver fails or a
counting job exceeds its capacity. With ``--json`` exactly one JSON document
is written to standard output.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from fractions import Fraction
from importlib.resources import files
from pathlib import Path

from . import __version__
from .canonical import format_literal, to_canonical
from .constraints import (
    check_eventual_consistency, gamma, solution_space, weakened_space, zero_tau,
)
from .embeddings import TAU_SEQUENCE, DefaultRuleSet, me_plausible
from .engine import DEFAULT, BeliefConfig, believe, oracle_check, probe_tau
from .maxent import MaxEntConfig, SolverError, maximize
from .parser import ParseError, format_formula, parse, parse_formula
from .semantics import AggregationUnsupported, CapacityError, count_worlds, pr_n
from .syntax import RandWorldsError, tolerance_indices

EXIT_OK, EXIT_USER, EXIT_SOLVER = 0, 1, 2


class UserError(RandWorldsError):
    pass


# ---------------------------------------------------------------------------
# argument helpers


def read_input(path: str) -> tuple[str, str]:
    """Text of ``path``; bundled data files are found by base name as a fallback."""
    p = Path(path)
    if p.is_file():
        return p.read_text(), str(p)
    bundled = files("randworlds") / "data" / p.name
    if bundled.is_file():
        return bundled.read_text(), f"randworlds/data/{p.name}"
    raise UserError(f"no such file: {path}")


def parse_tau(spec: str | None, tau_all: str | None, needed) -> dict[int, Fraction] | None:
    needed = sorted(needed)
    if spec is None and tau_all is None:
        return None
    out: dict[int, Fraction] = {}
    if tau_all is not None:
        v = _positive(tau_all)
        out = {i: v for i in needed}
    if spec:
        for item in spec.split(","):
            if "=" not in item:
                raise UserError(f"--tau expects i=value pairs, got {item!r}")
            i, v = item.split("=", 1)
            try:
                idx = int(i)
            except ValueError:
                raise UserError(f"bad tolerance index {i!r}") from None
            if idx < 1:
                raise UserError("tolerance indices start at 1")
            out[idx] = _positive(v)
    missing = [i for i in needed if i not in out]
    if missing:
        raise UserError(f"missing tolerance values for indices {missing}")
    return out


def _positive(text: str) -> Fraction:
    try:
        v = Fraction(text.strip())
    except (ValueError, ZeroDivisionError):
        raise UserError(f"bad tolerance value {text!r}") from None
    if v <= 0:
        raise UserError(f"tolerances must be positive, got {text}")
    return v


def parse_ints(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UserError(f"expected a comma-separated list of sizes, got {text!r}") from None
    if not out or any(n < 1 for n in out):
        raise UserError("domain sizes must be positive")
    return out


def parse_floats(text: str) -> list[float]:
    try:
        out = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UserError(f"expected comma-separated numbers, got {text!r}") from None
    if not out or any(x <= 0 for x in out):
        raise UserError("values must be positive")
    return out


def _tau_json(tau):
    return None if tau is None else {str(i): float(v) for i, v in sorted(tau.items())}


def _config(args) -> BeliefConfig:
    me = MaxEntConfig(seed=args.seed, max_iter=args.max_iter)
    return replace(DEFAULT, maxent=me)


def _load(args):
    text, name = read_input(args.file)
    src = parse(text)
    if getattr(args, "query", None):
        phi = parse_formula(args.query, src.vocab)
    elif src.query:
        phi = src.query[0]
    else:
        phi = None
    return src, phi, name


def _need_query(phi):
    if phi is None:
        raise UserError("no query: give --query or a query block in the file")
    return phi


def _emit(args, doc: dict, text: str) -> None:
    if args.json:
        sys.stdout.write(json.dumps(doc, sort_keys=True, indent=2) + "\n")
    else:
        sys.stdout.write(text.rstrip("\n") + "\n")


# ---------------------------------------------------------------------------
# commands


def cmd_check(args) -> int:
    src, phi, name = _load(args)
    kb = src.kb_formula
    cf = to_canonical(kb, src.vocab)
    rep = check_eventual_consistency(cf)
    doc = {
        "file": name,
        "predicates": list(src.vocab.predicates),
        "constants": list(src.vocab.constants),
        "relations": [[n, a] for n, a in src.vocab.relations],
        "kb_formulas": len(src.kb),
        "tolerance_indices": sorted(tolerance_indices(kb)),
        "query": None if phi is None else format_formula(phi),
        "canonical_disjuncts": len(cf.disjuncts),
        "eventually_consistent": rep.as_dict(),
    }
    lines = [f"{name}: ok",
             f"predicates: {', '.join(src.vocab.predicates) or '-'}",
             f"constants: {', '.join(src.vocab.constants) or '-'}",
             f"kb formulas: {len(src.kb)}; tolerance indices: {doc['tolerance_indices']}",
             f"canonical disjuncts: {len(cf.disjuncts)}",
             f"eventually consistent: {'yes' if rep.consistent else 'no'}"]
    if phi is not None:
        lines.append(f"query: {doc['query']}")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


def cmd_canon(args) -> int:
    src, _, _ = _load(args)
    cf = to_canonical(src.kb_formula, src.vocab)
    doc = {"formula": str(cf),
           "disjuncts": [[format_literal(l, src.vocab) for l in d] for d in cf.disjuncts]}
    _emit(args, doc, str(cf))
    return EXIT_OK


def cmd_constraints(args) -> int:
    src, _, _ = _load(args)
    cf = to_canonical(src.kb_formula, src.vocab)
    g = gamma(cf)
    tau = parse_tau(args.tau, args.tau_all, g.eps_indices())
    doc = {"K": g.K, "symbolic": [[str(c) for c in d] for d in g.disjuncts], "tau": _tau_json(tau)}
    text = [g.format()]
    if tau is not None:
        inst = g.instantiate(tau)
        region = solution_space(g, tau)
        doc["instantiated"] = [[str(c) for c in d] for d in inst.disjuncts]
        doc["cells"] = [c.format() for c in region.cells]
        text += ["", f"at tau = {_fmt_tau(tau)}:", inst.format(), "", region.format()]
    _emit(args, doc, "\n".join(text))
    return EXIT_OK


def _fmt_tau(tau) -> str:
    return ", ".join(f"{i}={float(v):g}" for i, v in sorted(tau.items())) or "(none)"


def cmd_maxent(args) -> int:
    src, _, _ = _load(args)
    cfg = _config(args)
    cf = to_canonical(src.kb_formula, src.vocab)
    g = gamma(cf)
    tau = parse_tau(args.tau, args.tau_all, g.eps_indices())
    if args.weak:
        region, label = weakened_space(g), "S^<=0"
    elif tau is None:
        region, label = solution_space(g, zero_tau(cf)), "S^0"
    else:
        region, label = solution_space(g, tau), "S^tau"
    res = maximize(region, cfg.maxent)
    doc = {
        "space": label,
        "tau": _tau_json(tau),
        "feasible": res.feasible,
        "unique": res.unique,
        "entropy": None if res.entropy is None else round(res.entropy, 12),
        "points": [[round(float(x), 12) for x in m.point] for m in res.maxima],
        "residuals": [float(m.residual) for m in res.maxima],
        "config": cfg.maxent.as_dict(),
    }
    if not res.feasible:
        text = f"{label} is empty"
    else:
        text = "\n".join([f"{label}: {res.unique}, entropy {res.entropy:.12g}"] +
                         ["  (" + ", ".join(f"{x:.9g}" for x in p) + ")" for p in doc["points"]])
    _emit(args, doc, text)
    return EXIT_OK


def cmd_believe(args) -> int:
    src, phi, _ = _load(args)
    phi = _need_query(phi)
    cfg = _config(args)
    kb = src.kb_formula
    cf = to_canonical(kb, src.vocab)
    tau = parse_tau(args.tau, args.tau_all, gamma(cf).eps_indices() | tolerance_indices(phi))
    r = believe(phi, kb, src.vocab, tau=tau, config=cfg, query=format_formula(phi))
    if args.N:
        otau = tau or {i: Fraction(args.oracle_tau) for i in tolerance_indices(kb) | tolerance_indices(phi)}
        r.oracle = oracle_check(phi, kb, src.vocab, parse_ints(args.N), otau)
    doc = r.as_dict()
    doc["config"] = cfg.as_dict()
    _emit(args, doc, _belief_text(r))
    return EXIT_OK


def _belief_text(r) -> str:
    lines = [f"query: {r.query}", f"class: {r.query_class}", f"status: {r.status}"]
    if r.value is not None:
        lines.append(f"value: {r.value:.10g}")
    if r.interval is not None:
        lines.append(f"interval: [{r.interval[0]:.10g}, {r.interval[1]:.10g}]")
    if r.reason:
        lines.append(f"reason: {r.reason}")
    for p in r.maxent_points:
        lines.append("maxent point: (" + ", ".join(f"{x:.6g}" for x in p) + ")")
    if r.probes:
        lines.append("probes:")
        lines += ["  " + _probe_row(p) for p in r.probes]
    for o in r.oracle:
        lines.append(f"oracle N={o['N']}: {o['value']}")
    return "\n".join(lines)


def _probe_row(p: dict) -> str:
    tau = ", ".join(f"t{i}={v:g}" for i, v in p["tau"].items())
    if p["lo"] is None:
        return f"{tau}: {p['status']}"
    if p["status"] == "interval":
        return f"{tau}: [{p['lo']:.6g}, {p['hi']:.6g}]"
    return f"{tau}: {p['lo']:.6g}"


def cmd_oracle(args) -> int:
    src, phi, _ = _load(args)
    kb = src.kb_formula
    needed = tolerance_indices(kb) | (tolerance_indices(phi) if phi is not None else set())
    if args.tau is None and args.tau_all is None and needed:
        raise UserError("oracle needs explicit tolerances: use --tau or --tau-all")
    tau = parse_tau(args.tau, args.tau_all, needed) or {}
    Ns = parse_ints(args.N)
    if args.histogram:
        if len(Ns) != 1:
            raise UserError("--histogram takes a single --N")
        rep = count_worlds(src.vocab, Ns[0], tau, kb, want_histogram=True, backend=args.backend)
        header = ",".join(f"u{j + 1}" for j in range(src.vocab.K)) + ",count\n"
        if args.json:
            doc = {"N": Ns[0], "total": rep.total, "backend": rep.backend, "tau": _tau_json(tau),
                   "histogram": [{"u": [f"{x.numerator}/{x.denominator}" if x.denominator != 1 else str(x.numerator)
                                        for x in u], "count": c} for u, c in sorted(rep.histogram.items())]}
            _emit(args, doc, "")
        else:
            sys.stdout.write(header + rep.histogram_csv())
        return EXIT_OK
    if phi is None:
        rows = []
        for N in Ns:
            rep = count_worlds(src.vocab, N, tau, kb, backend=args.backend)
            rows.append({"N": N, "worlds": rep.total})
        _emit(args, {"tau": _tau_json(tau), "counts": rows},
              "\n".join(f"N={r['N']}: {r['worlds']} worlds" for r in rows))
        return EXIT_OK
    rows = []
    for N in Ns:
        v = pr_n(src.vocab, N, tau, phi, kb, backend=args.backend)
        rows.append({"N": N, "value": None if v is None else float(v),
                     "exact": None if v is None else f"{v.numerator}/{v.denominator}"})
    doc = {"query": format_formula(phi), "tau": _tau_json(tau), "values": rows}
    _emit(args, doc, "\n".join(f"N={r['N']}: {r['value'] if r['value'] is not None else 'undefined'}"
                               for r in rows))
    return EXIT_OK


def cmd_probe(args) -> int:
    src, phi, _ = _load(args)
    phi = _need_query(phi)
    cfg = _config(args)
    cf = to_canonical(src.kb_formula, src.vocab)
    scales = parse_floats(args.scales) if args.scales else None
    rep = probe_tau(phi, cf, src.vocab, cfg, scales)
    doc = {"query": format_formula(phi), "probes": rep.as_list(), "spread": rep.spread,
           "finest_scale": rep.scale, "nonrobust": rep.nonrobust, "config": cfg.as_dict()}
    text = "\n".join([_probe_row(p) for p in rep.as_list()] +
                     [f"spread at finest scale: {rep.spread}", f"nonrobust: {'yes' if rep.nonrobust else 'no'}"])
    _emit(args, doc, text)
    return EXIT_OK


def cmd_defaults(args) -> int:
    text, _ = read_input(args.file)
    rules = DefaultRuleSet.parse(text)
    if not args.query:
        raise UserError("defaults needs --query 'B -> C'")
    taus = parse_floats(args.taus) if args.taus else TAU_SEQUENCE
    res = me_plausible(rules, args.query, taus, config=_config(args))
    doc = res.as_dict()
    doc["rules"] = [str(r) for r in rules.rules]
    lines = [f"{res.query}: {res.verdict}"]
    for t in res.trace:
        lines.append(f"  tau={t['tau']:g}: {t.get('value', t['status'])}")
    if res.limit is not None:
        lines.append(f"  extrapolated limit: {res.limit:.9g}")
    _emit(args, doc, "\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


class _ArgParser(argparse.ArgumentParser):
    def error(self, message):
        # usage mistakes are user errors (exit 1); 2 is reserved for solver failures
        self.print_usage(sys.stderr)
        self.exit(EXIT_USER, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _ArgParser(prog="randworlds", description="Random-worlds degrees of belief.")
    ap.add_argument("--version", action="version", version=f"randworlds {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_ArgParser)

    def common(p, query=True, tau=True, solver=True):
        p.add_argument("file", help="knowledge base (.rwkb) or rules file")
        p.add_argument("--json", action="store_true", help="emit one JSON document")
        if query:
            p.add_argument("--query", help="query formula overriding the file's query block")
        if tau:
            p.add_argument("--tau", help="tolerances as i=value pairs, e.g. 1=0.05,2=0.01")
            p.add_argument("--tau-all", dest="tau_all", help="one tolerance for every index")
        if solver:
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--max-iter", dest="max_iter", type=int, default=2000)
        return p

    p = common(sub.add_parser("check", help="parse and validate a knowledge base"), tau=False, solver=False)
    p.set_defaults(func=cmd_check)
    p = common(sub.add_parser("canon", help="print the canonical form"), query=False, tau=False, solver=False)
    p.set_defaults(func=cmd_canon)
    p = common(sub.add_parser("constraints", help="print the constraint formula"), query=False, solver=False)
    p.set_defaults(func=cmd_constraints)
    p = common(sub.add_parser("maxent", help="maximum-entropy points of the solution space"), query=False)
    p.add_argument("--weak", action="store_true", help="use the weakened zero-tolerance space")
    p.set_defaults(func=cmd_maxent)
    p = common(sub.add_parser("believe", help="degree of belief in the query"))
    p.add_argument("--N", help="also report finite-N values for these sizes")
    p.add_argument("--oracle-tau", dest="oracle_tau", default="1/20",
                   help="tolerance for the finite-N cross-check when --tau is absent")
    p.set_defaults(func=cmd_believe)
    p = common(sub.add_parser("oracle", help="exact finite-N probabilities by counting worlds"), solver=False)
    p.add_argument("--N", required=True, help="domain size(s), comma separated")
    p.add_argument("--histogram", action="store_true", help="CSV of world counts per simplex point")
    p.add_argument("--backend", default="auto", choices=["auto", "exhaustive", "aggregated"])
    p.set_defaults(func=cmd_oracle)
    p = common(sub.add_parser("probe", help="values at a grid of small tolerances"), tau=False)
    p.add_argument("--scales", help="comma-separated tolerance scales (default 0.1,0.01,0.001)")
    p.set_defaults(func=cmd_probe)
    p = common(sub.add_parser("defaults", help="maximum-entropy plausibility of a default"), tau=False)
    p.add_argument("--taus", help="comma-separated shared tolerances (default 0.1,...,0.0001)")
    p.set_defaults(func=cmd_defaults)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:  # usage errors, --help and --version
        return exc.code if isinstance(exc.code, int) else EXIT_USER
    try:
        return args.func(args)
    except (SolverError, CapacityError, AggregationUnsupported) as exc:
        print(f"randworlds: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ParseError, RandWorldsError) as exc:
        print(f"randworlds: {exc}", file=sys.stderr)
        return EXIT_USER


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
