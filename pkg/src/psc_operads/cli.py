"""Command line front end.

Exit status: 0 on success, 1 when a validation or property check fails,
2 on usage or input errors.
"""

import argparse
import json
import math
import sys

import numpy as np

from . import little_disks as ld
from . import metric_descriptors as md
from . import psc_action as pa
from . import tree_operad as tr
from . import warp_profiles as wp
from .errors import PscError

REPORT_SCHEMA = "psc-report/1"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# io

def _read(path):
    if path == "-":
        return sys.stdin.read()
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _write(path, text):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc.strerror}") from None


def _configs(path):
    return ld.parse_configs(_read(path)) if path else {}


def _tree(path, configs_path=None):
    return tr.parse_document(_read(path), _configs(configs_path) or None)


def emit_report(kind, results, ok, table, path=None):
    """Write the JSON summary to ``path`` (if given) and print the table."""
    doc = {"schema": REPORT_SCHEMA, "kind": kind, "ok": bool(ok), "results": results}
    if path:
        _write(path, json.dumps(doc, sort_keys=True, indent=2) + "\n")
    if table:
        print(table)
    return doc


def _table(rows, headers):
    if not rows:
        return "(no results)"
    cols = [headers] + [[str(x) for x in r] for r in rows]
    widths = [max(len(r[i]) for r in cols) for i in range(len(headers))]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths))]
    lines.append("  ".join("-" * w for w in widths))
    for r in cols[1:]:
        lines.append("  ".join(x.ljust(w) for x, w in zip(r, widths)))
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# tree

def cmd_tree_normalize(args):
    t, named = _tree(args.input, args.configs)
    n = tr.normalize(t)
    _write(args.out, tr.format_document(n))
    return 0


def cmd_tree_compose(args):
    t, _ = _tree(args.input, args.configs)
    us = [_tree(p, args.configs)[0] for p in args.inner]
    out = tr.compose(t, us)
    if args.normalize:
        out = tr.normalize(out)
    _write(args.out, tr.format_document(out))
    return 0


def cmd_tree_omega(args):
    t, _ = _tree(args.input, args.configs)
    t = tr.normalize(t)
    ann = pa.omega_weights(t, args.mode)
    rows = ann.as_rows()
    table = _table(
        [(".".join(map(str, r["path"])), tr.format_length(r["length"]), f"{r['weight']:.12g}", r["kind"], r["position"]) for r in rows],
        ["edge", "length", "weight", "kind", "position"],
    )
    emit_report("omega", rows, True, table, args.report)
    return 0


# ---------------------------------------------------------------------------
# disks

def _pick(named, name):
    if not named:
        raise UsageError("no configurations in input")
    if name is None:
        return next(iter(named.values()))
    try:
        return named[name]
    except KeyError:
        raise UsageError(f"no configuration named {name!r}") from None


def cmd_disks_validate(args):
    named = _configs(args.input)
    results, rows, ok = [], [], True
    for name, c in named.items():
        rep = ld.validate(c)
        ok &= rep.ok
        results.append({"name": name, "ok": rep.ok, "violations": [str(v) for v in rep.violations]})
        rows.append((name, c.dim, c.arity, "ok" if rep.ok else "; ".join(str(v) for v in rep.violations)))
    emit_report("disks-validate", results, ok, _table(rows, ["config", "dim", "arity", "status"]), args.report)
    return 0 if ok else 1


def cmd_disks_compose(args):
    named = _configs(args.input)
    outer = _pick(named, args.outer)
    if len(args.inner) != outer.arity:
        raise UsageError(f"outer configuration has arity {outer.arity}, got {len(args.inner)} inner names")
    inner = [_pick(named, n) for n in args.inner]
    out = ld.gamma(outer, inner)
    _write(args.out, ld.format_configs({args.name: out}))
    return 0


def cmd_disks_render(args):
    c = _pick(_configs(args.input), args.name)
    if not ld.validate(c).ok:
        print("configuration is not valid", file=sys.stderr)
        return 1
    _write(args.out, ld.render_svg(c, size=args.size))
    return 0


# ---------------------------------------------------------------------------
# metric

def _profile(args):
    if args.descriptor:
        d = md.loads(_read(args.descriptor))
        return md.axis_profile(d), d.dim
    kind = args.profile
    if kind == "torpedo":
        p = wp.torpedo_profile(args.delta)
    elif kind == "double-torpedo":
        p = md.axis_profile(md.double_torpedo(args.delta, args.dim))
    elif kind == "round":
        p = wp.round_profile(args.lam)
    elif kind == "lens":
        p = wp.lens_profile(args.lam, _angle(args))
    elif kind == "bulb":
        p = wp.bulb_profile(args.lam, _angle(args), args.dim).profile
    else:
        raise UsageError("choose --profile or --descriptor")
    return p, args.dim


def _angle(args):
    return args.r if args.r is not None else 0.5 * math.pi * args.lam


def cmd_metric_build(args):
    kind = args.kind
    if args.tree:
        d = pa.proxy(_tree(args.tree, args.configs)[0], dim=args.dim, mode=args.mode)
    elif kind == "double-torpedo":
        d = md.double_torpedo(args.delta, args.dim)
    elif kind == "three-cap":
        d = md.three_cap(args.delta, args.dim)
    elif kind == "three-head":
        d = md.three_head(args.dim)
    elif kind == "round":
        d = md.round_with_base_head(args.dim, args.lam)
    else:
        raise UsageError("choose --kind or --tree")
    md.validate_descriptor(d)
    _write(args.out, md.dumps(d) + "\n")
    return 0


def cmd_metric_profile(args):
    p, dim = _profile(args)
    _write(args.out, wp.profile_csv(wp.WarpedMetric(dim, p), args.step))
    return 0


def cmd_metric_curvature(args):
    p, dim = _profile(args)
    rep = wp.verify_psc(wp.WarpedMetric(dim, p), args.step)
    ok = rep.min_R > 0 if dim >= 3 else rep.min_R >= -args.tolerance
    row = rep.as_dict()
    row.update(dim=dim, length=p.length, step=args.step)
    table = _table([(dim, f"{rep.min_R:.9g}", f"{rep.argmin_t:.9g}", rep.samples, "ok" if ok else "FAIL")],
                   ["dim", "min_R", "argmin_t", "samples", "status"])
    emit_report("curvature", [row], ok, table, args.report)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# action

def cmd_action_apply(args):
    t, _ = _tree(args.tree, args.configs)
    gs = [md.loads(_read(p)) for p in args.inputs]
    out = pa.theta(t, gs, dim=args.dim, mode=args.mode)
    _write(args.out, md.dumps(out) + "\n")
    return 0


def cmd_action_verify(args):
    rep = pa.verify_action(args.seed, args.cases, mode=args.mode)
    emit_report("verify-action", [rep.as_dict()], rep.ok, rep.table(), args.report)
    return 0 if rep.ok else 1


# ---------------------------------------------------------------------------
# check all

def _disk_axioms(rng, cases):
    fails = 0
    for _ in range(cases):
        dim = int(rng.integers(1, 4))
        c = ld.random_config(rng, dim, int(rng.integers(0, 4)))
        ds = [ld.random_config(rng, dim, int(rng.integers(0, 3))) for _ in range(c.arity)]
        es = [[ld.random_config(rng, dim, int(rng.integers(0, 3))) for _ in range(d.arity)] for d in ds]
        left = ld.gamma(ld.gamma(c, ds), [e for block in es for e in block])
        right = ld.gamma(c, [ld.gamma(d, block) for d, block in zip(ds, es)])
        ident = ld.identity_config(dim)
        ok = ld.configs_close(left, right, 1e-12)
        ok &= ld.configs_close(ld.gamma(c, [ident] * c.arity), c, 1e-12)
        ok &= ld.configs_close(ld.gamma(ident, [c]), c, 1e-12)
        fails += not ok
    return fails


def _tree_checks(rng, cases):
    fails = 0
    for _ in range(cases):
        t = tr.random_tree(rng, dim=2)
        n = tr.normalize(t)
        back, _ = tr.parse_document(tr.format_document(t))
        fails += not (tr.trees_close(tr.normalize(n), n) and tr.trees_close(back, t, 0.0))
    return fails


def _omega_checks(rng, cases):
    fails = 0
    for _ in range(cases):
        s = rng.random(int(rng.integers(1, 8)))
        rec = pa.omega_path(s, pa.UNSEGMENTED)
        fails += any(abs(a - b) > 1e-12 for a, b in zip(rec, pa.omega_closed_form(s)))
    return fails


def _curvature_checks():
    fails = 0
    for n in range(3, 8):
        for delta in (0.1, 1.0, 10.0):
            fails += not wp.verify_psc(wp.WarpedMetric(n, wp.torpedo_profile(delta)), 1e-3).min_R > 0
    return fails


def cmd_check_all(args):
    rng = np.random.default_rng(args.seed)
    rows = [
        ("little-disks axioms", args.cases, _disk_axioms(rng, args.cases)),
        ("tree normalize/round-trip", args.cases, _tree_checks(rng, args.cases)),
        ("omega closed form", args.cases, _omega_checks(rng, args.cases)),
        ("torpedo positivity", 15, _curvature_checks()),
    ]
    action = pa.verify_action(args.seed, args.cases)
    rows.append(("action axioms", len(action.results), len(action.failures)))
    ok = all(f == 0 for _, _, f in rows)
    results = [{"check": name, "cases": n, "failures": f} for name, n, f in rows]
    table = _table([(name, n, f, "ok" if f == 0 else "FAIL") for name, n, f in rows],
                   ["check", "cases", "failures", "status"])
    if action.failures:
        table += "\n" + action.table()
    emit_report("check-all", results, ok, table, args.report)
    return 0 if ok else 1


# ---------------------------------------------------------------------------
# argument parsing

def _seed(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("seed must be a non-negative integer")
    return value


def _positive(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _count(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="psc-operads", description="Little-disk trees acting on psc-metric descriptors.")
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(group, name, func, help_text):
        q = group.add_parser(name, help=help_text)
        q.set_defaults(func=func)
        return q

    tree = sub.add_parser("tree", help="weighted trees").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(tree, "normalize", cmd_tree_normalize, "print the normal form")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--configs")
    q.add_argument("--out")
    q = leaf(tree, "compose", cmd_tree_compose, "graft trees onto the inputs of a tree")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--inner", nargs="*", default=[])
    q.add_argument("--configs")
    q.add_argument("--normalize", action="store_true")
    q.add_argument("--out")
    q = leaf(tree, "omega", cmd_tree_omega, "edge weights of the normal form")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--configs")
    q.add_argument("--mode", choices=pa.MODES, default=pa.SEGMENTED)
    q.add_argument("--report")

    disks = sub.add_parser("disks", help="little-disk configurations").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(disks, "validate", cmd_disks_validate, "check every configuration in a file")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--report")
    q = leaf(disks, "compose", cmd_disks_compose, "operad composition of named configurations")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--outer")
    q.add_argument("--inner", nargs="*", default=[])
    q.add_argument("--name", default="composed")
    q.add_argument("--out")
    q = leaf(disks, "render", cmd_disks_render, "SVG drawing of a planar configuration")
    q.add_argument("--in", dest="input", required=True)
    q.add_argument("--name")
    q.add_argument("--size", type=int, default=512)
    q.add_argument("--out")

    metric = sub.add_parser("metric", help="descriptors and profiles").add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    def shape_args(q):
        q.add_argument("--profile", choices=["torpedo", "double-torpedo", "round", "lens", "bulb"])
        q.add_argument("--descriptor")
        q.add_argument("--delta", type=_positive, default=1.0)
        q.add_argument("--lam", type=_positive, default=1.0)
        q.add_argument("--r", type=_positive)
        q.add_argument("--dim", type=int, default=3)
        q.add_argument("--step", type=_positive, default=1e-3)

    q = leaf(metric, "build", cmd_metric_build, "write a descriptor as JSON")
    q.add_argument("--kind", choices=["double-torpedo", "three-cap", "three-head", "round"])
    q.add_argument("--tree")
    q.add_argument("--configs")
    q.add_argument("--mode", choices=pa.MODES, default=pa.SEGMENTED)
    q.add_argument("--delta", type=_positive, default=1.0)
    q.add_argument("--lam", type=_positive, default=1.0)
    q.add_argument("--dim", type=int, default=3)
    q.add_argument("--out")
    q = leaf(metric, "profile", cmd_metric_profile, "sample a profile as CSV")
    shape_args(q)
    q.add_argument("--out")
    q = leaf(metric, "curvature", cmd_metric_curvature, "report the minimum scalar curvature")
    shape_args(q)
    q.add_argument("--tolerance", type=_positive, default=1e-6)
    q.add_argument("--report")

    action = sub.add_parser("action", help="the tree action").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(action, "apply", cmd_action_apply, "glue input descriptors onto a tree's proxy")
    q.add_argument("--tree", required=True)
    q.add_argument("--configs")
    q.add_argument("--inputs", nargs="*", default=[])
    q.add_argument("--dim", type=int)
    q.add_argument("--mode", choices=pa.MODES, default=pa.SEGMENTED)
    q.add_argument("--out")
    q = leaf(action, "verify", cmd_action_verify, "randomized action axiom checks")
    q.add_argument("--seed", type=_seed, default=0)
    q.add_argument("--cases", type=_count, default=200)
    q.add_argument("--mode", choices=pa.MODES, default=pa.SEGMENTED)
    q.add_argument("--report")

    check = sub.add_parser("check", help="property harnesses").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    q = leaf(check, "all", cmd_check_all, "run every harness")
    q.add_argument("--seed", type=_seed, default=0)
    q.add_argument("--cases", type=_count, default=100)
    q.add_argument("--report")
    return p


def run(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"psc-operads: {exc}", file=sys.stderr)
        return 2
    except PscError as exc:
        print(f"psc-operads: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
