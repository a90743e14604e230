"""Command-line front end: lattice or group -> context -> counts, densities, bounds.

Exit codes: 0 success, 1 parse/usage error, 2 cap exceeded, 3 counter
overflow, 4 I/O error, 5 a verification check failed.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from decimal import Decimal, localcontext
from fractions import Fraction
from pathlib import Path

from . import formulas, oracle
from .cbo import CounterOverflow, LimitExceeded, count_concepts, enumerate_concepts
from .context import (
    ContextError,
    FormalContext,
    build_reduced_context,
    codensity,
    density,
    export_fimi,
    export_pbm,
    import_fimi,
    sort_rows_for_cbo,
)
from .groups import DEFAULT_ORDER_CAP, CapExceeded, GroupError, parse_group_spec, subgroup_lattice
from .lattice import LatticeCapExceeded, LatticeError, parse_lattice_spec

EXIT_PARSE, EXIT_CAP, EXIT_OVERFLOW, EXIT_IO, EXIT_VERIFY = 1, 2, 3, 4, 5


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_PARSE, f"{self.prog}: error: {message}\n")


def format_rational(value: Fraction, places: int = 12) -> str:
    """``num/den`` followed by the value rounded to ``places`` decimals."""
    with localcontext() as ctx:
        ctx.prec = max(50, len(str(value.numerator)) + places + 10)
        dec = (Decimal(value.numerator) / Decimal(value.denominator)).quantize(Decimal(1).scaleb(-places))
    return f"{value.numerator}/{value.denominator}\t{dec}"


def format_count(n: int) -> str:
    return f"{n}\t{n:,}"


def _report(msg: str):
    print(msg, file=sys.stderr)


# sources


def _add_source(p, required=True):
    grp = p.add_mutually_exclusive_group(required=required)
    grp.add_argument("--group", metavar="SPEC", help="e.g. S:4, cyclic:2^5, elem-abelian:2^3, perm:(01);(012)")
    grp.add_argument("--lattice", metavar="SPEC", help="chain:n | grid:n1,n2,... | boolean:k | subspaces:p,n")
    grp.add_argument("--input", metavar="PATH", help="FIMI .dat file, or - for stdin")
    p.add_argument("--attributes", type=int, metavar="N", help="column count for --input (default 1 + max index)")
    p.add_argument("--order-cap", type=int, default=DEFAULT_ORDER_CAP, help="largest group order accepted")


def _lattice(args):
    if args.group:
        return subgroup_lattice(parse_group_spec(args.group, cap=args.order_cap), cap=args.order_cap)
    if args.lattice:
        return parse_lattice_spec(args.lattice)
    raise UsageError("this command needs --group or --lattice")


def _read_input(path: str) -> bytes:
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _context(args) -> tuple[FormalContext, float]:
    t0 = time.perf_counter()
    if getattr(args, "input", None):
        ctx = import_fimi(_read_input(args.input), n_attributes=args.attributes)
    else:
        ctx = build_reduced_context(_lattice(args))
    if getattr(args, "sort", False):
        ctx = sort_rows_for_cbo(ctx)
    return ctx, (time.perf_counter() - t0) * 1000


def _write(data: bytes, out: str | None):
    if out is None or out == "-":
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    else:
        Path(out).write_bytes(data)


def _serialize(ctx: FormalContext, fmt: str) -> bytes:
    return export_pbm(ctx) if fmt == "pbm" else export_fimi(ctx)


# commands


def cmd_context(args):
    ctx, t_ctx = _context(args)
    _write(_serialize(ctx, args.format), args.out)
    if args.png:
        from .plotting import plot_context

        plot_context(ctx, args.png)
    _report(f"rows={ctx.shape[0]} cols={ctx.shape[1]} ones={ctx.ones} t_context_ms={t_ctx:.1f}")
    return 0


cmd_export = cmd_context


def cmd_count(args):
    ctx, t_ctx = _context(args)
    t0 = time.perf_counter()
    if args.enumerate:
        concepts = enumerate_concepts(ctx, limit=args.limit)
        n = len(concepts)
    else:
        n = count_concepts(ctx, workers=args.threads, split_depth=args.depth, algorithm=args.algorithm)
    t_count = (time.perf_counter() - t0) * 1000
    if args.json:
        rows, cols = ctx.shape
        payload = {
            "rows": rows,
            "cols": cols,
            "ones": ctx.ones,
            "density": None,
            "codensity": None,
            "count": n,
            "t_context_ms": round(t_ctx, 3),
            "t_count_ms": round(t_count, 3),
        }
        if rows and cols:
            payload["density"] = str(density(ctx))
            payload["codensity"] = str(codensity(ctx))
        print(json.dumps(payload))
    else:
        if args.enumerate:
            for c in concepts:
                print(" ".join(map(str, sorted(c.extent))) + " | " + " ".join(map(str, sorted(c.intent))))
        print(format_count(n))
        _report(f"rows={ctx.shape[0]} cols={ctx.shape[1]} t_context_ms={t_ctx:.1f} t_count_ms={t_count:.1f}")
    return 0


def cmd_density(args):
    ctx, _ = _context(args)
    rows, cols = ctx.shape
    print(f"rows\t{rows}")
    print(f"cols\t{cols}")
    print(f"ones\t{ctx.ones}")
    print(f"density\t{format_rational(density(ctx))}")
    print(f"codensity\t{format_rational(codensity(ctx))}")
    return 0


def _relation_text(rel, labels) -> str:
    arrows = sorted(rel.nontrivial())
    return ", ".join(f"{labels[x]}->{labels[y]}" for x, y in arrows) or "(identity)"


def cmd_oracle(args):
    lat = _lattice(args)
    if args.saturated:
        systems = oracle.enumerate_saturated(lat)
    else:
        systems = oracle.enumerate_transfer_systems(lat, cap=args.cap)
    if args.action == "count":
        print(format_count(len(systems)))
        return 0
    if args.action == "list":
        for t in systems:
            print(_relation_text(t, lat.labels))
        return 0
    results = verify_lattice(lat, systems, saturated=args.saturated, cap=args.cap)
    for name, ok in results:
        print(f"{'PASS' if ok else 'FAIL'}\t{name}")
    return 0 if all(ok for _, ok in results) else EXIT_VERIFY


def verify_lattice(lat, systems=None, saturated=False, cap=oracle.DEFAULT_ORBIT_CAP) -> list[tuple[str, bool]]:
    """Cross-check the oracle against the context on one lattice."""
    out = []
    ctx = build_reduced_context(lat)
    reps = ctx.objects
    tr = systems if systems is not None and not saturated else oracle.enumerate_transfer_systems(lat, cap=cap)
    out.append(("oracle count equals concept count", len(tr) == count_concepts(ctx, workers=1)))
    floors = [oracle.floor_closure(lat, x, y) for x, y in reps]
    rlps = [oracle.rlp_transfer(lat, x, y) for x, y in reps]
    joins, meets = oracle.irreducibles_of_family(tr)
    out.append(("join-irreducibles are the generated systems", set(joins) == set(floors) and len(set(floors)) == len(reps)))
    out.append(("meet-irreducibles are the lifting systems", set(meets) == set(rlps) and len(set(rlps)) == len(reps)))
    inc_ok = all(
        (floors[i] <= rlps[j]) == bool(ctx.incidence[i, j]) for i in range(len(reps)) for j in range(len(reps))
    )
    out.append(("generated <= lifting matches incidence", inc_ok))
    concepts = {(frozenset(c.extent), frozenset(c.intent)) for c in enumerate_concepts(ctx, limit=len(tr) + 1)}
    images = [oracle.concept_of(t, reps, rlps) for t in tr]
    bij = len(set(images)) == len(tr) and set(images) == concepts
    order_ok = all((a <= b) == (images[i][0] <= images[j][0]) for i, a in enumerate(tr) for j, b in enumerate(tr))
    out.append(("systems biject with concepts", bij))
    out.append(("bijection preserves order", order_ok))
    if saturated:
        sat = systems if systems is not None else oracle.enumerate_saturated(lat)
        out.append(("saturated systems are saturated transfer systems",
                    all(oracle.is_saturated(t) and oracle.is_transfer_system(t) for t in sat)))
        out.append(("saturated family equals filtered transfer systems",
                    set(sat) == {t for t in tr if oracle.is_saturated(t)}))
    return out


def cmd_formula(args):
    op = args.op
    f = formulas
    if op == "rho-chain":
        print(format_rational(f.rho_chain(args.n)))
    elif op == "rho-grid":
        print(format_rational(f.rho_grid(args.n, args.m)))
    elif op == "rho-cyclic":
        print(format_rational(f.rho_cyclic(_int_list(args.ns))))
    elif op == "rho-boolean":
        print(format_rational(f.rho_boolean(args.k)))
    elif op == "rho-elem-abelian":
        if args.p > 1 and not f.is_probable_prime(args.p):
            _report(f"warning: p = {args.p} is not prime; evaluating the q-analogue")
        print(format_rational(f.rho_elem_abelian(args.p, args.n)))
    elif op == "j-count":
        params = _int_list(",".join(args.params))
        print(f.j_count(args.family, *params))
    elif op == "bounds":
        return _bounds(args)
    elif op == "complexity":
        return cmd_complexity(args)
    elif op == "conjecture":
        value = f.conjectured_limit(args.k)
        print(f"limit\t{format_rational(value)}")
        if args.n is not None:
            actual = f.rho_cyclic([args.n] * args.k)
            ok = abs(actual - value) <= Fraction(args.tol)
            print(f"rho\t{format_rational(actual)}")
            print(f"within_tol\t{ok}")
            return 0 if ok else EXIT_VERIFY
    return 0


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.replace(" ", ",").split(",") if t]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}") from None


def _bounds(args):
    ctx, _ = _context(args)
    rows, cols = ctx.shape
    ones = ctx.ones
    print(f"ones\t{ones}")
    print(f"schuett\t{formulas.schuett_bound(ones)}")
    print(f"trivial\t{formulas.trivial_bound(rows, cols)}")
    if args.count:
        print(f"count\t{count_concepts(ctx)}")
    return 0


def cmd_complexity(args):
    ctx, _ = _context(args)
    k = formulas.contranomial_max_k(ctx.incidence, budget=args.budget)
    print(f"complexity\t{int(k)}")
    print(f"exact\t{k.exact}")
    print(f"ncfree_bound\t{formulas.ncfree_bound(int(k) + 1, ctx.shape[0])}")
    return 0


def cmd_report(args):
    from .plotting import plot_codensity_limits, plot_context

    out = Path(args.dir)
    out.mkdir(parents=True, exist_ok=True)
    ctx, t_ctx = _context(args)
    t0 = time.perf_counter()
    n = count_concepts(ctx, workers=args.threads, split_depth=args.depth)
    t_count = (time.perf_counter() - t0) * 1000
    rows, cols = ctx.shape
    summary = [
        ("rows", rows),
        ("cols", cols),
        ("ones", ctx.ones),
        ("density", str(density(ctx))),
        ("codensity", str(codensity(ctx))),
        ("count", n),
        ("schuett_bound", formulas.schuett_bound(ctx.ones)),
        ("trivial_bound", formulas.trivial_bound(rows, cols)),
    ]
    (out / "summary.tsv").write_text("".join(f"{k}\t{v}\n" for k, v in summary))
    lines = ["\t" + "\t".join(str(a) for a in ctx.attributes)]
    for label, row in zip(ctx.objects, ctx.incidence):
        lines.append(str(label) + "\t" + "\t".join("1" if v else "0" for v in row))
    (out / "context.tsv").write_text("\n".join(lines) + "\n")
    (out / "context.dat").write_bytes(export_fimi(ctx))
    (out / "context.pbm").write_bytes(export_pbm(ctx))
    plot_context(ctx, out / "context.png")
    if args.limits:
        rows_out = ["k\tn\tcodensity\tlimit"]
        for k in range(1, 6):
            for n_ in (1, 10, 100, 1000, 10000):
                rows_out.append(f"{k}\t{n_}\t{float(formulas.rho_cyclic([n_] * k)):.12f}\t{float(formulas.conjectured_limit(k)):.12f}")
        (out / "limits.tsv").write_text("\n".join(rows_out) + "\n")
        plot_codensity_limits(out / "limits.png")
    _report(f"rows={rows} cols={cols} t_context_ms={t_ctx:.1f} t_count_ms={t_count:.1f}")
    print(format_count(n))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="trfca", description="Transfer systems via formal concept analysis.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    for name, fn, helptext in (
        ("context", cmd_context, "build a reduced context and write it"),
        ("export", cmd_export, "write a context in FIMI or PBM form"),
    ):
        c = sub.add_parser(name, help=helptext)
        _add_source(c)
        c.add_argument("--out", help="output path (default stdout)")
        c.add_argument("--format", choices=("fimi", "pbm"), default="fimi")
        c.add_argument("--png", help="also render the matrix to this PNG")
        c.add_argument("--sort", action="store_true", help="sort rows for CbO before writing")
        c.set_defaults(fn=fn)

    c = sub.add_parser("count", help="count concepts (= transfer systems)")
    _add_source(c)
    c.add_argument("--threads", type=int, default=None)
    c.add_argument("--depth", type=int, default=None, help="split depth (default min(7, rows/4))")
    c.add_argument("--algorithm", choices=("fcbo", "cbo"), default="fcbo")
    c.add_argument("--sort", action="store_true")
    c.add_argument("--enumerate", action="store_true", help="list concepts instead of only counting")
    c.add_argument("--limit", type=int, default=100_000)
    c.add_argument("--json", action="store_true")
    c.set_defaults(fn=cmd_count)

    c = sub.add_parser("density", help="density and codensity of the context")
    _add_source(c)
    c.set_defaults(fn=cmd_density)

    c = sub.add_parser("complexity", help="largest contranomial scale in the context")
    _add_source(c)
    c.add_argument("--budget", type=int, default=5_000_000)
    c.set_defaults(fn=cmd_complexity)

    c = sub.add_parser("oracle", help="brute-force transfer systems on small lattices")
    c.add_argument("action", choices=("count", "list", "verify"))
    grp = c.add_mutually_exclusive_group(required=True)
    grp.add_argument("--group")
    grp.add_argument("--lattice")
    c.add_argument("--order-cap", type=int, default=DEFAULT_ORDER_CAP)
    c.add_argument("--saturated", action="store_true")
    c.add_argument("--cap", type=int, default=oracle.DEFAULT_ORBIT_CAP, help="largest number of relation orbits")
    c.set_defaults(fn=cmd_oracle, input=None)

    c = sub.add_parser("formula", help="closed-form values in exact arithmetic")
    fs = c.add_subparsers(dest="op", required=True, parser_class=_Parser)
    s = fs.add_parser("rho-chain")
    s.add_argument("n", type=int)
    s = fs.add_parser("rho-grid")
    s.add_argument("n", type=int)
    s.add_argument("m", type=int)
    s = fs.add_parser("rho-cyclic")
    s.add_argument("ns", help="comma-separated exponents, e.g. 2,3,1")
    s = fs.add_parser("rho-boolean")
    s.add_argument("k", type=int)
    s = fs.add_parser("rho-elem-abelian")
    s.add_argument("p", type=int)
    s.add_argument("n", type=int)
    s = fs.add_parser("j-count")
    s.add_argument("family", choices=("chain", "grid", "cyclic", "boolean", "elem-abelian"))
    s.add_argument("params", nargs="+")
    s = fs.add_parser("bounds")
    _add_source(s)
    s.add_argument("--count", action="store_true", help="also count concepts")
    s = fs.add_parser("complexity")
    _add_source(s)
    s.add_argument("--budget", type=int, default=5_000_000)
    s = fs.add_parser("conjecture")
    s.add_argument("k", type=int)
    s.add_argument("--n", type=int)
    s.add_argument("--tol", type=float, default=1e-3)
    c.set_defaults(fn=cmd_formula)

    c = sub.add_parser("report", help="count plus TSV tables and PNG figures in a directory")
    _add_source(c)
    c.add_argument("--dir", required=True)
    c.add_argument("--threads", type=int, default=None)
    c.add_argument("--depth", type=int, default=None)
    c.add_argument("--sort", action="store_true")
    c.add_argument("--limits", action="store_true", help="also tabulate and plot codensity limits")
    c.set_defaults(fn=cmd_report)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (CapExceeded, oracle.OracleCapExceeded, LimitExceeded, LatticeCapExceeded) as exc:
        _report(f"error: {exc}")
        return EXIT_CAP
    except CounterOverflow as exc:
        _report(f"error: {exc}")
        return EXIT_OVERFLOW
    except OSError as exc:
        _report(f"error: {exc}")
        return EXIT_IO
    except (UsageError, GroupError, LatticeError, ContextError, ValueError) as exc:
        _report(f"error: {exc}")
        return EXIT_PARSE


if __name__ == "__main__":
    sys.exit(main())
