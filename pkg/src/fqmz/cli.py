"""Command-line entry point: ``mz zeta|ratio|verify|search|table|identities``."""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, fields, replace

from .field import FieldError, parse_field
from .laurent import RATIONAL
from .multizeta import default_precision, zeta, zeta_ratio
from .powersum import IDENTITIES, Composition, IdentityError, identity_instances, set_cache_limit, verify_identity
from .relations import (
    FAIL,
    PASS,
    FAMILIES,
    RelationConstraintError,
    TheoremParams,
    certificate_text,
    classify,
    closure,
    emit_table,
    family_params,
    records_from_json,
    records_to_json,
    search,
    verify,
)

SCHEMA = "mz/1"
EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_USAGE = 0, 2, 3, 64


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    field: str = "q=2"
    precision: int | None = None  # None: max(8 * weight, 160)
    guard: int = 20
    depths: tuple = ((2, 2),)
    wmax: int = 12
    format: str = "text"
    output: str | None = None
    workers: int = 1
    cache_size: int = 0

    def validate(self) -> "RunConfig":
        if self.precision is not None and self.precision < 16:
            raise ConfigError(f"precision must be >= 16, got {self.precision}")
        if self.guard < 1:
            raise ConfigError(f"guard must be >= 1, got {self.guard}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if self.cache_size < 0:
            raise ConfigError("cache_size must be >= 0")
        if self.format not in ("text", "csv", "json"):
            raise ConfigError(f"format must be text, csv or json, got {self.format!r}")
        try:
            parse_field(self.field)
        except FieldError as exc:
            raise ConfigError(str(exc)) from None
        return self


_ALIASES = {
    "q": "field", "field": "field",
    "prec": "precision", "precision": "precision", "n": "precision",
    "guard": "guard",
    "depths": "depths", "depth_pairs": "depths",
    "wmax": "wmax", "weight_max": "wmax",
    "format": "format",
    "output": "output",
    "workers": "workers",
    "cache_size": "cache_size", "cache": "cache_size",
}


def parse_depths(text) -> tuple:
    if isinstance(text, (list, tuple)):
        return tuple((int(a), int(b)) for a, b in text)
    out = []
    for tok in str(text).split(","):
        tok = tok.strip().lower()
        if not tok:
            continue
        a, sep, b = tok.partition("x")
        if not sep:
            raise ValueError(f"depth pair {tok!r} should look like 2x2")
        out.append((int(a), int(b)))
    if not out:
        raise ValueError("no depth pairs given")
    return tuple(out)


def _coerce(key: str, value):
    if key == "field":
        s = str(value)
        return s if s.startswith("q=") else f"q={s}"
    if key == "precision":
        return None if value in (None, "", "auto") else int(value)
    if key in ("guard", "wmax", "workers", "cache_size"):
        return int(value)
    if key == "depths":
        return parse_depths(value)
    return None if value in ("", None) else str(value)


def load_config(path: str | None) -> RunConfig:
    """Read key=value lines (``#`` comments) or a JSON object."""
    cfg = RunConfig()
    if not path:
        return cfg
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    items: list[tuple[int, str, object]] = []
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from None
        items = [(0, k, v) for k, v in doc.items()]
    else:
        for no, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{no}: expected key=value, got {line!r}")
            k, v = line.split("=", 1)
            items.append((no, k.strip(), v.strip()))
    updates = {}
    for no, k, v in items:
        where = f"{path}:{no}" if no else path
        key = _ALIASES.get(k.lower())
        if key is None:
            raise ConfigError(f"{where}: unknown key {k!r}")
        try:
            updates[key] = _coerce(key, v)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {k}: {exc}") from None
    cfg = replace(cfg, **updates)
    try:
        return cfg.validate()
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def merge_flags(cfg: RunConfig, args: argparse.Namespace) -> RunConfig:
    updates = {}
    for f in fields(RunConfig):
        v = getattr(args, f.name, None)
        if v is not None:
            updates[f.name] = _coerce(f.name, v)
    return replace(cfg, **updates).validate()


# -- output helpers --------------------------------------------------------------

def _dump(doc: dict) -> str:
    doc = {"schema": SCHEMA, **doc}
    return json.dumps(doc, sort_keys=True, indent=1)


def _write(cfg: RunConfig, text: str):
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def _progress(label: str):
    last = [-1]

    def report(done: int, total: int):
        pct = 100 * done // max(total, 1)
        if pct != last[0] and (pct % 5 == 0 or done == total):
            last[0] = pct
            print(f"\r{label}: {done}/{total} ({pct}%)", end="\n" if done == total else "", file=sys.stderr, flush=True)

    return report


def _status_code(statuses) -> int:
    statuses = list(statuses)
    if any(s == FAIL for s in statuses):
        return EXIT_FAIL
    if any(s != PASS for s in statuses):
        return EXIT_INCONCLUSIVE
    return EXIT_OK


# -- subcommands -----------------------------------------------------------------

def cmd_zeta(cfg: RunConfig, args) -> int:
    spec = parse_field(cfg.field)
    comp = Composition.parse(args.tuple)
    N = cfg.precision or default_precision(comp.weight)
    z = zeta(spec, comp, N)
    if cfg.format == "json":
        _write(cfg, _dump({"field": spec.designation(), "tuple": comp.text(), "terms": z.terms_summed,
                           "series": z.series.to_dict()}))
    else:
        _write(cfg, f"zeta{comp} over F_{spec.q} = {z.series}")
    return EXIT_OK


def cmd_ratio(cfg: RunConfig, args) -> int:
    spec = parse_field(cfg.field)
    a, b = Composition.parse(args.left), Composition.parse(args.right)
    N = cfg.precision or default_precision(a.weight)
    _, cf = zeta_ratio(spec, a, b, N, cfg.guard)
    if cfg.format == "json":
        doc = {
            "field": spec.designation(), "left": a.text(), "right": b.text(), "precision": N,
            "verdict": cf.verdict, "guard_used": cf.guard_used,
            "factor_num": cf.reconstructed.num.to_text() if cf.reconstructed else "",
            "factor_den": cf.reconstructed.den.to_text() if cf.reconstructed else "",
            "quotient_degrees": [p.degree for p in cf.quotients],
        }
        _write(cfg, _dump(doc))
    else:
        line = f"zeta{a}/zeta{b}: {cf.verdict}"
        if cf.reconstructed is not None:
            line += f" = {cf.reconstructed}"
        elif cf.reason:
            line += f" ({cf.reason})"
        _write(cfg, line)
    return EXIT_OK if cf.verdict == RATIONAL else EXIT_INCONCLUSIVE


def cmd_verify(cfg: RunConfig, args) -> int:
    spec = parse_field(cfg.field)
    N = cfg.precision or 400
    if args.grid:
        plist = list(family_params(spec, args.family, args.kmax))
    else:
        plist = [TheoremParams.parse(args.family, args.params or "")]
    reports = []
    for i, P in enumerate(plist):
        reports.append(verify(args.family, P, spec, N, cfg.guard))
        print(f"\rverify {args.family}: {i + 1}/{len(plist)}", end="", file=sys.stderr, flush=True)
    print(file=sys.stderr)
    if cfg.format == "json":
        _write(cfg, _dump({"field": spec.designation(), "reports": [r.to_dict() for r in reports]}))
    else:
        lines = []
        for r in reports:
            line = f"{r.params} {r.left} {r.right} factor {r.factor}: {r.status} (precision {r.attained_precision}, cf {r.cf_verdict}"
            line += ", factor match)" if r.cf_factor_match else ")"
            if r.reason:
                line += f" - {r.reason}"
            if r.family == "conjecture":
                line += " [conjecture: numerical evidence, not a proof]"
            lines.append(line)
        _write(cfg, "\n".join(lines))
    return _status_code(r.status for r in reports)


def cmd_search(cfg: RunConfig, args) -> int:
    spec = parse_field(cfg.field)
    if cfg.cache_size:
        set_cache_limit(cfg.cache_size)
    recs = search(spec, cfg.wmax, cfg.depths, cfg.precision, cfg.guard, cfg.workers,
                  weight_min=args.wmin, progress=_progress("search"), confirm=not args.no_confirm)
    rational = [r for r in recs if r.verdict == RATIONAL]
    for r in rational:
        classify(r, cfg.guard, external=not args.no_external)
    if args.closure:
        extra = closure(rational, spec=spec)
        have = {(r.left, r.right) for r in recs}
        recs.extend(r for r in extra if (r.left, r.right) not in have)
    print(f"search: {len(rational)} Rational, {len(recs) - len(rational)} Inconclusive", file=sys.stderr)
    if cfg.format == "json":
        meta = {"field": spec.designation(), "wmax": cfg.wmax, "depths": [list(d) for d in cfg.depths],
                "precision": cfg.precision if cfg.precision is not None else "auto", "guard": cfg.guard}
        _write(cfg, records_to_json(recs, meta))
    else:
        _write(cfg, emit_table(recs, cfg.format))
    return EXIT_OK


def cmd_table(cfg: RunConfig, args) -> int:
    try:
        with open(args.input, encoding="utf-8") as fh:
            recs = records_from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        print(f"mz table: cannot read {args.input}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.closure:
        by_field: dict = {}
        for r in recs:
            by_field.setdefault(r.spec, []).append(r)
        have = {(r.spec, r.left, r.right) for r in recs}
        for spec, group in by_field.items():
            recs.extend(r for r in closure(group, spec=spec) if (spec, r.left, r.right) not in have)
    fmt = "text" if args.style == "paper" else args.style
    text = emit_table(recs, fmt, markers_on=not args.no_markers)
    if args.certificates:
        lines = [f"{r.left} {r.right}: {certificate_text(r)}" for r in recs if r.certificate]
        if lines:
            text += "\ncertificates\n" + "\n".join(lines) + "\n"
    _write(cfg, text)
    return EXIT_OK


def cmd_identities(cfg: RunConfig, args) -> int:
    spec = parse_field(cfg.field)
    N = cfg.precision or 200
    reports = []
    insts = identity_instances(spec)
    for i, (name, params) in enumerate(insts):
        d_min = IDENTITIES[name].d_min
        reports.extend(verify_identity(spec, name, params, range(d_min, args.dmax + 1), N))
        print(f"\ridentities: {i + 1}/{len(insts)}", end="", file=sys.stderr, flush=True)
    print(file=sys.stderr)
    if cfg.format == "json":
        _write(cfg, _dump({"field": spec.designation(), "reports": reports}))
    else:
        lines = []
        for r in reports:
            ps = ",".join(f"{k}={v}" for k, v in sorted(r["params"].items()))
            lines.append(f"{r['identity']}({ps}) d={r['d']}: {r['status']}")
        n_pass = sum(r["status"] == PASS for r in reports)
        lines.append(f"{n_pass}/{len(reports)} Pass")
        _write(cfg, "\n".join(lines))
    return _status_code(r["status"] for r in reports)


# -- argument parsing ------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _common(p: argparse.ArgumentParser, fmt_choices=("text", "csv", "json")):
    p.add_argument("--config", help="key=value or JSON config file (flags win)")
    p.add_argument("--q", dest="field", help="field, e.g. 4 or 4:1,1,1")
    p.add_argument("--prec", dest="precision", type=int, help="absolute precision N")
    p.add_argument("--guard", type=int)
    p.add_argument("--format", choices=fmt_choices)
    p.add_argument("--output", help="write to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="mz", description="Multizeta values over F_q[t] and their two-term relations.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("zeta", help="print zeta(s_1,...,s_r) as a Laurent series in 1/t")
    _common(p, ("text", "json"))
    p.add_argument("--tuple", required=True, help="composition, e.g. 2,3")
    p.add_argument("--json", dest="format", action="store_const", const="json", help="same as --format json")

    p = sub.add_parser("ratio", help="continued-fraction test of zeta(left)/zeta(right)")
    _common(p, ("text", "json"))
    p.add_argument("--left", "--num", dest="left", required=True)
    p.add_argument("--right", "--den", dest="right", required=True)

    p = sub.add_parser("verify", help="check a relation family instance")
    _common(p, ("text", "json"))
    p.add_argument("--family", required=True, choices=FAMILIES + ("conj",))
    p.add_argument("--params", default="", help="k=3,s=1,ks=2,ls=1 (lists as 0/1) or JSON")
    p.add_argument("--grid", action="store_true", help="run every admissible parameter set with k <= --kmax")
    p.add_argument("--kmax", type=int, default=2)

    p = sub.add_parser("search", help="search same-weight pairs for rational ratios")
    _common(p)
    p.add_argument("--wmax", type=int)
    p.add_argument("--wmin", type=int, default=1)
    p.add_argument("--depths", help="depth pairs, e.g. 2x2,3x2")
    p.add_argument("--workers", type=int)
    p.add_argument("--cache-size", dest="cache_size", type=int)
    p.add_argument("--closure", action="store_true", help="append pairs derived by closure")
    p.add_argument("--no-external", action="store_true", help="skip the zetalike test behind the external tag")
    p.add_argument("--no-confirm", action="store_true", help="accept Rational without the 3N/2 re-check")

    p = sub.add_parser("table", help="render a search JSON file")
    _common(p)
    p.add_argument("--input", required=True)
    p.add_argument("--style", choices=("paper", "csv", "json"), default="paper")
    p.add_argument("--no-markers", action="store_true")
    p.add_argument("--closure", action="store_true")
    p.add_argument("--certificates", action="store_true")

    p = sub.add_parser("identities", help="check the power-sum identities against brute force")
    _common(p, ("text", "json"))
    p.add_argument("--dmax", type=int, default=4)
    return ap


_COMMANDS = {
    "zeta": cmd_zeta,
    "ratio": cmd_ratio,
    "verify": cmd_verify,
    "search": cmd_search,
    "table": cmd_table,
    "identities": cmd_identities,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if not args.command:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = merge_flags(load_config(args.config), args)
    except (ConfigError, ValueError) as exc:
        print(f"mz: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](cfg, args)
    except (RelationConstraintError, IdentityError, FieldError, ValueError) as exc:
        # bad tuples, unequal weights and malformed params are usage errors
        print(f"mz {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
