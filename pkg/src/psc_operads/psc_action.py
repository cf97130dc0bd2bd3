"""Action of weighted disk trees on psc-metric descriptors.

``proxy`` turns a weighted tree into a round descriptor: each vertex becomes a
round node whose little disks are pushed out as bulbs, with the amount of
pushing set by the edge weights from ``omega_weights``.  Leaves end in unit
hemisphere bulbs.  ``theta`` then glues one descriptor onto each leaf.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import little_disks as ld
from . import metric_descriptors as md
from . import tree_operad as tr
from .errors import InvalidParameter

HALF_PI = 0.5 * math.pi
SEGMENTED = "segmented"
UNSEGMENTED = "unsegmented"
MODES = (SEGMENTED, UNSEGMENTED)

REGULAR = "regular"
SPECIAL = "special"
UNCLASSIFIED = "unclassified"


# ---------------------------------------------------------------------------
# edge weights

def omega_path(lengths, mode=SEGMENTED):
    """Weights along one special path, listed from the input end upward."""
    if mode not in MODES:
        raise InvalidParameter(f"unknown omega mode {mode!r}")
    out = []
    prev = None
    for s in lengths:
        s = float(s)
        if prev is None or (mode == SEGMENTED and prev[0] == 1.0):
            w = s
        else:
            w = tr.star(s, prev[1])
        out.append(w)
        prev = (s, w)
    return out


def omega_closed_form(lengths):
    """``1 - prod(1 - s_m)`` for every prefix."""
    out, keep = [], 1.0
    for s in lengths:
        keep *= 1.0 - float(s)
        out.append(1.0 - keep)
    return out


@dataclass(frozen=True)
class EdgeWeight:
    length: float
    weight: float
    kind: str               # regular | special | unclassified
    position: int = 0       # 1-based position on its special segment


@dataclass
class OmegaAnnotation:
    """Weights keyed by edge path (the path of the edge's lower vertex)."""

    edges: dict = field(default_factory=dict)
    mode: str = SEGMENTED

    def weight(self, path):
        return self.edges[tuple(path)].weight

    def kind(self, path):
        return self.edges[tuple(path)].kind

    def as_rows(self):
        return [
            {"path": list(p), "length": e.length, "weight": e.weight, "kind": e.kind, "position": e.position}
            for p, e in sorted(self.edges.items())
        ]


def _small(v):
    return v.arity == 0 or ld.all_small(v.label)


def omega_weights(t, mode=SEGMENTED):
    """Annotate each internal edge with its weight and classification.

    A special path runs upward through vertices holding a disk of radius at
    least 3/4, entering each through that big disk's slot.  In segmented mode
    the recursion restarts above an edge of length exactly 1.
    """
    if mode not in MODES:
        raise InvalidParameter(f"unknown omega mode {mode!r}")
    ann = OmegaAnnotation(mode=mode)
    for path, length in sorted(tr.internal_edges(t), key=lambda e: -len(e[0])):
        lower = tr.subtree(t, path)
        upper = tr.subtree(t, path[:-1])
        if _small(lower) and _small(upper):
            ann.edges[path] = EdgeWeight(length, length, REGULAR)
            continue
        if lower.arity and ld.has_big(lower.label):
            k = ld.big_slot(lower.label)
            below = ann.edges.get(path + (k,))
            if below is None:
                # the path starts here: the big slot holds a leaf
                ann.edges[path] = EdgeWeight(length, length, SPECIAL, 1)
            elif mode == SEGMENTED and below.length == 1.0:
                ann.edges[path] = EdgeWeight(length, length, SPECIAL, 1)
            else:
                ann.edges[path] = EdgeWeight(length, tr.star(length, below.weight), SPECIAL, below.position + 1)
            continue
        if upper.arity and ld.has_big(upper.label) and ld.big_slot(upper.label) == path[-1]:
            ann.edges[path] = EdgeWeight(length, length, SPECIAL, 1)
            continue
        ann.edges[path] = EdgeWeight(length, length, UNCLASSIFIED)
    return ann


# ---------------------------------------------------------------------------
# lens families

@dataclass(frozen=True)
class LensFamilyState:
    """Parameters of the bulb pushed out of one little lens.

    The lens sits on a head of radius ``lam`` and angle ``r``; the little
    disk has radius ``radius``, so the lens angle is ``r * radius``.
    """

    lam: float
    r: float
    radius: float

    def lam_at(self, t):
        return (1.0 - t) * self.lam + t

    def r_at(self, t):
        return (1.0 - t) * self.r * self.radius + t * HALF_PI

    def eps_at(self, t):
        return self.r * self.radius


def _check_unit(t):
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise InvalidParameter(f"family parameter {t!r} outside [0, 1]")
    return t


def lens_family(c, base, ts, dim=None, site_ids=None):
    """Round node with head ``base = (lam, r)`` and one bulb per little disk.

    Disk ``i`` is pushed out to parameter ``ts[i]``; zero means no bulb.
    """
    lam, r = float(base[0]), float(base[1])
    if not lam > 0 or not 0 < r <= HALF_PI * lam * (1 + 1e-12):
        raise InvalidParameter("base head needs lam > 0 and 0 < r <= lam*pi/2")
    ts = [_check_unit(t) for t in ts]
    if len(ts) != c.arity:
        raise InvalidParameter(f"{len(ts)} parameters for {c.arity} disks")
    if not ld.validate(c).ok:
        raise InvalidParameter("invalid disk configuration")
    dim = max(c.dim, 3) if dim is None else int(dim)
    site_ids = [f"b{i}" for i in range(c.arity)] if site_ids is None else list(site_ids)
    d = md.SphereDescriptor(dim, (md.round_node(0, lam, (
        md.Site("base", "north", md.FreeHead(lam, r), base=True),
    )),))
    for i, t in enumerate(ts):
        if t == 0.0:
            continue
        state = LensFamilyState(lam, r, c.radii[i])
        d = md.push_cap(d, 0, site_ids[i], md.BulbPush(state.lam_at(t), state.r_at(t)))
    return d


# ---------------------------------------------------------------------------
# proxy and action

def _leaf_site(k):
    return f"in{k}"


def _tree_dim(t, dim):
    if dim is not None:
        return int(dim)
    for _, v in tr.vertices(t):
        return max(v.label.dim, 3)
    return 3


def proxy(t, dim=None, mode=SEGMENTED):
    """Round descriptor of a weighted tree, with free unit heads ``in<k>`` at the leaves.

    The tree is normalized first, so W-equivalent trees share a proxy.
    """
    dim = _tree_dim(t, dim)
    t = tr.normalize(t)
    if isinstance(t, tr.Leaf):
        return md.SphereDescriptor(dim, (md.round_node(0, 1.0, (
            md.Site("base", "north", md.FreeHead(1.0, HALF_PI), base=True),
            md.Site(_leaf_site(t.index), "south", md.FreeHead(1.0, HALF_PI)),
        )),))
    ann = omega_weights(t, mode)
    return _proxy_vertex(t, (), (1.0, HALF_PI), ann, dim)


def _proxy_vertex(v, path, head, ann, dim):
    ts, ids = [], []
    for i, (_, sub) in enumerate(v.slots):
        if isinstance(sub, tr.Leaf):
            ts.append(1.0)
            ids.append(_leaf_site(sub.index))
        else:
            ts.append(ann.weight(path + (i,)))
            ids.append(f"b{i}")
    d = lens_family(v.label, head, ts, dim=dim, site_ids=ids)
    for i, (_, sub) in enumerate(v.slots):
        if isinstance(sub, tr.Leaf):
            continue
        state = LensFamilyState(head[0], head[1], v.label.radii[i])
        t = ts[i]
        child_head = (state.lam_at(t), state.r_at(t))
        child = _proxy_vertex(sub, path + (i,), child_head, ann, dim)
        if t == 0.0:
            # an unpushed lens: the child sits on a native head of this node
            d = md.push_cap(d, 0, ids[i], md.HeadPush(*child_head))
        # joins keep the left operand's node ids, so this vertex stays node 0
        d = md.join_head(child_head[0], child_head[1], d, (0, ids[i]), child, child.base())
    return d


def _leaf_ref(d, k):
    hits = [(nid, s.id) for nid, s in d.sites()
            if s.id == _leaf_site(k) and isinstance(s.attachment, md.HEAD_KINDS)]
    if len(hits) != 1:
        raise InvalidParameter(f"no unique free leaf head {_leaf_site(k)!r}")
    return hits[0]


def theta(t, gs, dim=None, mode=SEGMENTED):
    """Glue ``gs[k-1]`` onto leaf ``k`` of ``proxy(t)`` along unit hemispheres."""
    gs = list(gs)
    k = tr.arity(t)
    if len(gs) != k:
        raise InvalidParameter(f"tree has {k} inputs but {len(gs)} metrics were supplied")
    if dim is None and gs:
        dim = gs[0].dim
    out = proxy(t, dim=dim, mode=mode)
    for i, g in enumerate(gs, 1):
        base = g.base()
        if base is None:
            raise InvalidParameter(f"metric {i} has no base head")
        att = g.node(base[0]).site(base[1]).attachment
        if not isinstance(att, md.FreeHead) or not (md._same(att.lam, 1.0) and md._same(att.r, HALF_PI)):
            raise InvalidParameter(f"metric {i} does not have the unit hemisphere as base head")
        out = md.join_head(1.0, HALF_PI, out, _leaf_ref(out, i), g, base)
    return out


# ---------------------------------------------------------------------------
# verification harness

def random_input(rng, dim=3, label="g"):
    """Random descriptor whose base head is the unit hemisphere."""
    u = rng.random()
    base = md.Site("base", "north", md.FreeHead(1.0, HALF_PI), base=True)
    if u < 0.4:
        return md.SphereDescriptor(dim, (md.Node(0, md.Opaque(label, float(rng.uniform(0.2, 5.0))), (base,)),))
    if u < 0.7:
        return md.round_with_base_head(dim)
    g = md.round_with_base_head(dim)
    lam = float(rng.uniform(0.3, 1.0))
    g = md.push_cap(g, 0, "south", md.BulbPush(lam, float(rng.uniform(0.1, 1.0)) * HALF_PI * lam))
    inner = md.SphereDescriptor(dim, (md.Node(0, md.Opaque(label, float(rng.uniform(0.2, 5.0))), (
        md.Site("base", "north", md.FreeHead(1.0, HALF_PI), base=True),)),))
    s = g.node(0).site("south").attachment
    return md.join_head(s.lam, s.r, g, (0, "south"), inner, inner.base())


def _random_tree(rng, dim, max_depth):
    return tr.random_tree(rng, dim=dim, max_depth=max_depth, max_arity=3)


@dataclass
class CaseResult:
    index: int
    check: str
    ok: bool
    detail: str = ""
    counterexample: dict = None


@dataclass
class ActionReport:
    seed: int
    cases: int
    results: list = field(default_factory=list)

    @property
    def failures(self):
        return [r for r in self.results if not r.ok]

    @property
    def ok(self):
        return not self.failures

    def counts(self):
        out = {}
        for r in self.results:
            c = out.setdefault(r.check, [0, 0])
            c[0 if r.ok else 1] += 1
        return out

    def as_dict(self):
        return {
            "seed": self.seed,
            "cases": self.cases,
            "checks": {k: {"passed": v[0], "failed": v[1]} for k, v in sorted(self.counts().items())},
            "failures": [
                {"index": r.index, "check": r.check, "detail": r.detail, "counterexample": r.counterexample}
                for r in self.failures
            ],
        }

    def table(self):
        lines = [f"verify_action seed={self.seed} cases={self.cases}"]
        for k, (p, f) in sorted(self.counts().items()):
            lines.append(f"  {k:<14} passed {p:>5}  failed {f:>3}")
        for r in self.failures:
            lines.append(f"  FAIL case {r.index} [{r.check}]: {r.detail}")
            lines.append("    " + json.dumps(r.counterexample, sort_keys=True))
        return "\n".join(lines)


def _tree_doc(t):
    return tr.format_document(t)


def _counterexample(trees, descriptors):
    return {
        "trees": [_tree_doc(t) for t in trees],
        "descriptors": [md.to_dict(d) for d in descriptors],
    }


def _random_perm(rng, k):
    return [int(x) for x in rng.permutation(k)]


def _check_equivariance(rng, dim, depth, mode):
    t = _random_tree(rng, dim, depth)
    k = tr.arity(t)
    sigma = _random_perm(rng, k)
    gs = [random_input(rng, dim, f"g{i + 1}") for i in range(k)]
    lhs = theta(tr.act_tree(t, sigma), gs, mode=mode)
    rhs = theta(t, [gs[sigma[i]] for i in range(k)], mode=mode)
    ok = md.canonical_equal(lhs, rhs)
    detail = "" if ok else f"sigma={sigma}"
    return ok, detail, ([t], gs)


def _check_corolla(rng, dim, mode):
    k = int(rng.integers(1, 4))
    c = ld.random_config(rng, dim, k)
    sigma = _random_perm(rng, k)
    gs = [random_input(rng, dim, f"g{i + 1}") for i in range(k)]
    lhs = theta(tr.corolla(ld.act_sigma(c, sigma)), gs, mode=mode)
    rhs = theta(tr.act_tree(tr.corolla(c), sigma), gs, mode=mode)
    ok = md.canonical_equal(lhs, rhs)
    return ok, "" if ok else f"sigma={sigma}", ([tr.corolla(c)], gs)


def _check_composition(rng, dim, depth, mode):
    t = _random_tree(rng, dim, max(1, depth - 1))
    us = [_random_tree(rng, dim, 1 if depth <= 2 else 2) for _ in range(tr.arity(t))]
    total = sum(tr.arity(u) for u in us)
    gs = [random_input(rng, dim, f"g{i + 1}") for i in range(total)]
    lhs = theta(tr.compose(t, us), gs, mode=mode)
    inner, at = [], 0
    for u in us:
        m = tr.arity(u)
        inner.append(theta(u, gs[at:at + m], mode=mode))
        at += m
    rhs = theta(t, inner, mode=mode)
    ok = md.canonical_equal(lhs, rhs)
    return ok, "", ([t] + us, gs)


def _relation_a_pair(rng, t):
    """Split an internal edge of length < 1 with an identity vertex."""
    spots = [p for p, length in tr.internal_edges(t) if length < 1.0]
    if not spots:
        return None
    path = spots[int(rng.integers(len(spots)))]
    lower = float(rng.uniform(0.0, tr.edge_length(t, path)))
    return tr.insert_identity(t, path, lower)


def _relation_c_pair(rng, t):
    """Set one internal edge to zero; return that tree and its contraction."""
    spots = [p for p, _ in tr.internal_edges(t)]
    if not spots:
        return None
    path = spots[int(rng.integers(len(spots)))]
    zeroed = tr.replace(t, path, tr.subtree(t, path), 0.0)
    return zeroed, tr.contract_edge(zeroed, path)


def _check_relations(rng, dim, depth, mode):
    t = tr.normalize(_random_tree(rng, dim, depth))
    if isinstance(t, tr.Leaf):
        t = tr.normalize(tr.corolla(ld.random_config(rng, dim, 2)))
    results = []
    pair = _relation_a_pair(rng, t)
    if pair is not None:
        ok = tr.w_equal(t, pair) and md.canonical_equal(proxy(t, mode=mode), proxy(pair, mode=mode))
        results.append(("relation_a", ok, ([t, pair], [])))
    pair = _relation_c_pair(rng, t)
    if pair is not None:
        a, b = pair
        ok = tr.w_equal(a, b) and md.canonical_equal(proxy(a, mode=mode), proxy(b, mode=mode))
        results.append(("relation_c", ok, ([a, b], [])))
    return results


def verify_action(seed=0, cases=200, dim=3, max_depth=3, mode=SEGMENTED):
    """Randomized check of the action axioms; never raises on a failing case."""
    rng = np.random.default_rng(seed)
    report = ActionReport(seed, cases)
    for index in range(cases):
        checks = [
            ("equivariance", lambda: _check_equivariance(rng, dim, max_depth, mode)),
            ("corolla", lambda: _check_corolla(rng, dim, mode)),
            ("composition", lambda: _check_composition(rng, dim, max_depth, mode)),
        ]
        for name, run in checks:
            try:
                ok, detail, (trees, ds) = run()
                cx = None if ok else _counterexample(trees, ds)
            except Exception as exc:  # report, do not abort the harness
                ok, detail, cx = False, f"{type(exc).__name__}: {exc}", None
            report.results.append(CaseResult(index, name, ok, detail, cx))
        try:
            for name, ok, (trees, ds) in _check_relations(rng, dim, max_depth, mode):
                cx = None if ok else _counterexample(trees, ds)
                report.results.append(CaseResult(index, name, ok, "", cx))
        except Exception as exc:
            report.results.append(CaseResult(index, "relations", False, f"{type(exc).__name__}: {exc}"))
    return report
