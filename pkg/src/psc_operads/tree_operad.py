"""Edge-weighted planar trees labelled by little-disk configurations.

A tree is either a :class:`Leaf` (an input, carrying its label in
``1..j``) or a :class:`Vertex` whose ``slots`` pair an edge length with a
subtree.  The bare ``Leaf(1)`` is the trivial tree.  Edges into leaves and
the outgoing root edge are external and have length 1; internal lengths lie
in [0, 1].

The W-relations are implemented as rewrites:

* ``reduce_a`` removes unary vertices labelled by the identity, joining the
  two adjacent lengths with ``star``;
* ``canonicalize_b`` picks the lexicographically least representative of
  each vertex's symmetric-group orbit;
* ``contract_c`` contracts zero-length edges by partial composition.

``normalize`` iterates (b), (a), (c) until nothing changes.
"""

import math
import re
from dataclasses import dataclass

import numpy as np

from . import little_disks as ld
from . import tolerances as tol
from .errors import ArityMismatch, InvalidInput, ParseError


@dataclass(frozen=True)
class Leaf:
    index: int


@dataclass(frozen=True)
class Vertex:
    label: ld.DiskConfig
    slots: tuple    # ((length, subtree), ...)

    @property
    def arity(self):
        return len(self.slots)


TRIVIAL = Leaf(1)


def vertex(label, slots):
    return Vertex(label, tuple((float(length), sub) for length, sub in slots))


def corolla(label):
    """Single vertex whose slot ``i`` holds input ``i + 1``."""
    return vertex(label, [(1.0, Leaf(i + 1)) for i in range(label.arity)])


def star(t1, t2):
    if t1 == 1.0 or t2 == 1.0:
        return 1.0      # exact absorbing element
    return t1 + t2 - t1 * t2


# ---------------------------------------------------------------------------
# inspection

def leaves(t):
    """Leaf labels in planar (left-to-right) order."""
    if isinstance(t, Leaf):
        return [t.index]
    out = []
    for _, sub in t.slots:
        out.extend(leaves(sub))
    return out


def arity(t):
    return len(leaves(t))


def vertex_count(t):
    if isinstance(t, Leaf):
        return 0
    return 1 + sum(vertex_count(sub) for _, sub in t.slots)


def depth(t):
    if isinstance(t, Leaf):
        return 0
    return 1 + max((depth(sub) for _, sub in t.slots), default=0)


def vertices(t, path=()):
    """Yield ``(path, vertex)`` for every vertex, root first."""
    if isinstance(t, Vertex):
        yield path, t
        for i, (_, sub) in enumerate(t.slots):
            yield from vertices(sub, path + (i,))


def internal_edges(t):
    """Yield ``(path, length)`` of every internal edge; ``path`` names its lower vertex."""
    for path, v in vertices(t):
        for i, (length, sub) in enumerate(v.slots):
            if isinstance(sub, Vertex):
                yield path + (i,), length


def subtree(t, path):
    for i in path:
        t = t.slots[i][1]
    return t


def edge_length(t, path):
    return subtree(t, path[:-1]).slots[path[-1]][0]


def replace(t, path, new, length=None):
    """Replace the subtree at ``path``; optionally also its incoming edge length."""
    if not path:
        return new
    head, rest = path[0], path[1:]
    slots = list(t.slots)
    old_len, old_sub = slots[head]
    if rest:
        slots[head] = (old_len, replace(old_sub, rest, new, length))
    else:
        slots[head] = (old_len if length is None else float(length), new)
    return Vertex(t.label, tuple(slots))


def validate_tree(t, dim=None):
    """Raise :class:`InvalidInput` unless every invariant of a weighted tree holds."""
    labels = leaves(t)
    if sorted(labels) != list(range(1, len(labels) + 1)):
        raise InvalidInput(f"leaf labels {labels!r} are not a bijection onto 1..{len(labels)}")
    for _, v in vertices(t):
        if v.label.arity != len(v.slots):
            raise InvalidInput("vertex arity differs from its label's arity")
        if dim is not None and v.label.dim != dim:
            raise InvalidInput("vertex label has the wrong dimension")
        if not ld.validate(v.label).ok:
            raise InvalidInput("vertex label is not a valid disk configuration")
        for length, sub in v.slots:
            if isinstance(sub, Leaf):
                if length != 1.0:
                    raise InvalidInput("external edges must have length 1")
            elif not 0.0 <= length <= 1.0:
                raise InvalidInput(f"internal edge length {length!r} outside [0, 1]")
    return t


# ---------------------------------------------------------------------------
# composition and the symmetric action

def relabel(t, mapping):
    if isinstance(t, Leaf):
        return Leaf(mapping(t.index))
    return Vertex(t.label, tuple((length, relabel(sub, mapping)) for length, sub in t.slots))


def _graft(t, pieces):
    if isinstance(t, Leaf):
        return pieces[t.index]
    slots = []
    for length, sub in t.slots:
        if isinstance(sub, Leaf):
            slots.append((length, pieces[sub.index]))
        else:
            slots.append((length, _graft(sub, pieces)))
    return Vertex(t.label, tuple(slots))


def compose(t, us):
    """Graft ``us[i]`` onto input ``i + 1`` of ``t`` along a new edge of length 1."""
    us = list(us)
    k = arity(t)
    if len(us) != k:
        raise ArityMismatch(f"tree has {k} inputs but {len(us)} trees were supplied")
    pieces, offset = {}, 0
    for i, u in enumerate(us, 1):
        shift = offset
        pieces[i] = relabel(u, lambda j, s=shift: j + s)
        offset += arity(u)
    return _graft(t, pieces)


def act_tree(t, sigma):
    """Right action on inputs: leaf ``k`` is renamed ``sigma[k-1] + 1``."""
    sigma = ld.check_permutation(sigma, arity(t))
    return relabel(t, lambda k: sigma[k - 1] + 1)


def act_at(t, path, sigma):
    """Relation (b) at one vertex: permute its disks and slots together."""
    v = subtree(t, path)
    new = Vertex(ld.act_sigma(v.label, sigma), tuple(ld.permute_list(v.slots, sigma)))
    return replace(t, path, new)


# ---------------------------------------------------------------------------
# relation (a)

def _reduce(t):
    if isinstance(t, Leaf):
        return t
    slots = []
    for length, sub in t.slots:
        sub = _reduce(sub)
        while isinstance(sub, Vertex) and ld.is_identity(sub.label):
            inner_length, inner = sub.slots[0]
            length = star(inner_length, length)
            sub = inner
        slots.append((length, sub))
    return Vertex(t.label, tuple(slots))


def reduce_a(t):
    t = _reduce(t)
    # a root identity vertex has an external outgoing edge, so star(s, 1) = 1
    while isinstance(t, Vertex) and ld.is_identity(t.label):
        t = t.slots[0][1]
    return t


def identity_vertices(t):
    return [path for path, v in vertices(t) if ld.is_identity(v.label)]


def reduce_vertex(t, path):
    """Remove the single identity vertex at ``path``."""
    v = subtree(t, path)
    if not (isinstance(v, Vertex) and ld.is_identity(v.label)):
        raise InvalidInput("no identity vertex at that path")
    inner_length, inner = v.slots[0]
    if not path:
        return inner
    outer_length = edge_length(t, path)
    return replace(t, path, inner, star(inner_length, outer_length))


def insert_identity(t, path, lower):
    """Inverse of relation (a): split the edge above ``path`` with an identity vertex.

    ``lower`` is the new lower length; the upper length is chosen so that
    ``star(lower, upper)`` is the old length.  For the root, the new vertex
    becomes the root.
    """
    ident = ld.identity_config(_dim_of(t))
    sub = subtree(t, path)
    if not path:
        lower = 1.0 if isinstance(sub, Leaf) else lower
        return Vertex(ident, ((lower, sub),))
    length = edge_length(t, path)
    if isinstance(sub, Leaf):
        return replace(t, path, Vertex(ident, ((1.0, sub),)), length if length < 1.0 else 1.0)
    lower = min(lower, length)
    upper = 1.0 if lower >= 1.0 else (length - lower) / (1.0 - lower)
    upper = min(max(upper, 0.0), 1.0)
    return replace(t, path, Vertex(ident, ((lower, sub),)), upper)


def _dim_of(t):
    for _, v in vertices(t):
        return v.label.dim
    raise InvalidInput("the trivial tree carries no dimension")


# ---------------------------------------------------------------------------
# relation (b)

def _sort_key(disk):
    center, radius = disk
    rounded = tuple(round(x, 12) for x in center) + (round(radius, 12),)
    return rounded + tuple(center) + (radius,)


def canonicalize_b(t):
    if isinstance(t, Leaf):
        return t
    order = sorted(range(t.arity), key=lambda i: _sort_key(t.label.disks()[i]))
    disks = t.label.disks()
    label = ld.DiskConfig(t.label.dim, tuple(disks[i][0] for i in order), tuple(disks[i][1] for i in order))
    slots = tuple((t.slots[i][0], canonicalize_b(t.slots[i][1])) for i in order)
    return Vertex(label, slots)


# ---------------------------------------------------------------------------
# relation (c)

def contract_c(t):
    if isinstance(t, Leaf):
        return t
    slots = [(length, contract_c(sub)) for length, sub in t.slots]
    fills, new_slots = [], []
    ident = ld.identity_config(t.label.dim)
    for length, sub in slots:
        if isinstance(sub, Vertex) and length == 0.0:
            fills.append(sub.label)
            new_slots.extend(sub.slots)
        else:
            fills.append(ident)
            new_slots.append((length, sub))
    if all(f is ident for f in fills):
        return Vertex(t.label, tuple(slots))
    return Vertex(ld.gamma(t.label, fills), tuple(new_slots))


def zero_edges(t):
    return [path for path, length in internal_edges(t) if length == 0.0]


def contract_edge(t, path):
    """Contract the single zero-length edge above the vertex at ``path``."""
    if not path or edge_length(t, path) != 0.0:
        raise InvalidInput("no zero-length internal edge at that path")
    parent_path, i = path[:-1], path[-1]
    parent = subtree(t, parent_path)
    child = parent.slots[i][1]
    label = ld.partial_compose(parent.label, i, child.label)
    slots = parent.slots[:i] + child.slots + parent.slots[i + 1:]
    return replace(t, parent_path, Vertex(label, slots))


# ---------------------------------------------------------------------------
# normal forms

def normalize(t, max_passes=1000):
    for _ in range(max_passes):
        nxt = contract_c(reduce_a(canonicalize_b(t)))
        if nxt == t:
            return t
        t = nxt
    raise RuntimeError("normalization did not reach a fixpoint")


def trees_close(a, b, tolerance=tol.LENGTH):
    if isinstance(a, Leaf) or isinstance(b, Leaf):
        return a == b
    if a.arity != b.arity or not ld.configs_close(a.label, b.label, tolerance):
        return False
    for (la, sa), (lb, sb) in zip(a.slots, b.slots):
        if abs(la - lb) > tolerance or not trees_close(sa, sb, tolerance):
            return False
    return True


def w_equal(a, b, tolerance=tol.LENGTH):
    return trees_close(normalize(a), normalize(b), tolerance)


def single_rewrites(t, rng=None):
    """Every one-step relation rewrite of ``t`` as ``(description, tree)`` pairs.

    Relation (b) moves use a random permutation per vertex when ``rng`` is
    given, otherwise the reversal.
    """
    out = []
    for path in identity_vertices(t):
        out.append((f"a-reduce {path}", reduce_vertex(t, path)))
    for path in zero_edges(t):
        out.append((f"c-contract {path}", contract_edge(t, path)))
    for path, v in vertices(t):
        if v.arity > 1:
            k = v.arity
            sigma = tuple(int(x) for x in rng.permutation(k)) if rng is not None else tuple(range(k - 1, -1, -1))
            out.append((f"b-permute {path} {sigma}", act_at(t, path, sigma)))
        if path and edge_length(t, path) < 1.0:
            lower = 0.5 * edge_length(t, path) if rng is None else float(rng.uniform(0.0, edge_length(t, path)))
            out.append((f"a-insert {path} {lower!r}", insert_identity(t, path, lower)))
    return out


@dataclass(frozen=True)
class Counterexample:
    tree: object
    first: str
    second: str
    gap: float

    def as_dict(self):
        return {"tree": format_document(self.tree), "first": self.first, "second": self.second, "gap": self.gap}


def confluence_fuzz(seed=0, cases=500, dim=2, tolerance=tol.LENGTH):
    """Apply two different one-step rewrites to random trees and compare normal forms.

    Returns the list of counterexamples (empty when every pair rejoins).
    """
    rng = np.random.default_rng(seed)
    found = []
    done = 0
    while done < cases:
        t = random_tree(rng, dim=dim, zero_chance=0.3, identity_chance=0.3, trivial_chance=0.0)
        moves = single_rewrites(t, rng)
        if len(moves) < 2:
            continue
        done += 1
        i, j = rng.choice(len(moves), size=2, replace=False)
        (d1, t1), (d2, t2) = moves[int(i)], moves[int(j)]
        n1, n2 = normalize(t1), normalize(t2)
        if not trees_close(n1, n2, tolerance):
            found.append(Counterexample(t, d1, d2, max_length_gap(n1, n2)))
    return found


# ---------------------------------------------------------------------------
# random trees

def random_tree(rng, dim=2, max_depth=3, max_arity=3, leaf_chance=0.45,
                zero_chance=0.15, one_chance=0.2, identity_chance=0.1,
                empty_chance=0.05, trivial_chance=0.03):
    """Random weighted tree with a random bijective leaf labelling."""
    if rng.random() < trivial_chance:
        return TRIVIAL
    counter = [0]

    def grow(level):
        if level > 0 and (level >= max_depth or rng.random() < leaf_chance):
            counter[0] += 1
            return Leaf(counter[0])
        if rng.random() < empty_chance:
            return Vertex(ld.empty_config(dim), ())
        k = int(rng.integers(1, max_arity + 1))
        label = ld.random_config(rng, dim, k, identity_chance=identity_chance)
        slots = []
        for _ in range(label.arity):
            sub = grow(level + 1)
            if isinstance(sub, Leaf):
                slots.append((1.0, sub))
            else:
                u = rng.random()
                if u < zero_chance:
                    length = 0.0
                elif u < zero_chance + one_chance:
                    length = 1.0
                else:
                    length = float(rng.random())
                slots.append((length, sub))
        return Vertex(label, tuple(slots))

    t = grow(0)
    j = counter[0]
    if j:
        perm = rng.permutation(j)
        t = relabel(t, lambda k: int(perm[k - 1]) + 1)
    return t


# ---------------------------------------------------------------------------
# text format
#
#   tree := "leaf" index
#         | "(" "vertex" "@"name { "-[" length "]->" tree } ")"

_TOKEN = re.compile(
    r"\s*(?:(?P<open>\()|(?P<close>\))|(?P<vertex>vertex\b)|(?P<leaf>leaf\b)"
    r"|@(?P<ref>[A-Za-z_][\w.\-]*)|-\[\s*(?P<len>[^\]\s]+)\s*\]->|(?P<int>\d+))"
)


def format_length(x):
    return np.format_float_positional(float(x), unique=True, trim="-")


def _tokens(text):
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise ParseError(f"unexpected input {text[pos:pos + 12]!r}", pos)
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    return out


def parse_tree(text, configs):
    """Parse a tree expression; ``@name`` refers into ``configs``."""
    toks = _tokens(text)
    pos = [0]

    def peek():
        return toks[pos[0]] if pos[0] < len(toks) else (None, None, len(text))

    def take(kind):
        tok = peek()
        if tok[0] != kind:
            raise ParseError(f"expected {kind}, found {tok[1]!r}", tok[2])
        pos[0] += 1
        return tok

    def tree():
        kind, _, at = peek()
        if kind == "leaf":
            take("leaf")
            return Leaf(int(take("int")[1]))
        take("open")
        take("vertex")
        _, name, at = take("ref")
        if name not in configs:
            raise ParseError(f"unknown configuration @{name}", at)
        label = configs[name]
        slots = []
        while peek()[0] == "len":
            _, raw, at = take("len")
            try:
                length = float(raw)
            except ValueError:
                raise ParseError(f"bad edge length {raw!r}", at) from None
            if not 0.0 <= length <= 1.0:
                raise ParseError(f"edge length {raw} outside [0, 1]", at)
            sub = tree()
            if isinstance(sub, Leaf) and length != 1.0:
                raise ParseError("edges into leaves are external and must have length 1", at)
            slots.append((length, sub))
        take("close")
        if len(slots) != label.arity:
            raise ParseError(f"@{name} has arity {label.arity} but {len(slots)} edges follow", at)
        return Vertex(label, tuple(slots))

    t = tree()
    if pos[0] != len(toks):
        raise ParseError("trailing input after tree", toks[pos[0]][2])
    try:
        validate_tree(t)
    except InvalidInput as exc:
        raise ParseError(str(exc)) from None
    return t


def format_tree(t, names=None):
    """Print ``t``; returns ``(text, names)`` with names generated for unnamed labels."""
    names = dict(names or {})
    by_config = {}
    for name, cfg in names.items():
        by_config.setdefault(cfg, name)
    counter = [0]

    def name_of(cfg):
        if cfg not in by_config:
            while True:
                counter[0] += 1
                candidate = f"k{counter[0]}"
                if candidate not in names:
                    break
            names[candidate] = cfg
            by_config[cfg] = candidate
        return by_config[cfg]

    def emit(node):
        if isinstance(node, Leaf):
            return f"leaf {node.index}"
        parts = [f"(vertex @{name_of(node.label)}"]
        for length, sub in node.slots:
            parts.append(f"-[{format_length(length)}]-> {emit(sub)}")
        return " ".join(parts) + ")"

    return emit(t), names


def used_labels(t):
    seen = []
    for _, v in vertices(t):
        if v.label not in seen:
            seen.append(v.label)
    return seen


def format_document(t, names=None):
    """Configuration blocks for every label used, followed by the tree line."""
    text, names = format_tree(t, names)
    used = set(used_labels(t))
    blocks = ld.format_configs({k: v for k, v in names.items() if v in used})
    return blocks + text + "\n"


def parse_document(text, configs=None):
    """Inverse of :func:`format_document`; extra ``configs`` may be supplied."""
    header, body = [], []
    for line in text.splitlines():
        stripped = line.strip()
        if not body and (not stripped or stripped.startswith(("config", "disk", "#"))):
            header.append(line)
        else:
            body.append(line)
    named = dict(configs or {})
    named.update(ld.parse_configs("\n".join(header)))
    expr = " ".join(body).strip()
    if not expr:
        raise ParseError("document contains no tree expression")
    return parse_tree(expr, named), named


def max_length_gap(a, b):
    """Diagnostics for failed comparisons: largest length gap between equal shapes."""
    if isinstance(a, Leaf) or isinstance(b, Leaf):
        return 0.0 if a == b else math.inf
    if a.arity != b.arity:
        return math.inf
    gap = ld.max_deviation(a.label, b.label)
    for (la, sa), (lb, sb) in zip(a.slots, b.slots):
        gap = max(gap, abs(la - lb), max_length_gap(sa, sb))
    return gap
