"""Symbolic descriptors of psc-metrics on spheres and disks.

A :class:`SphereDescriptor` is a finite set of nodes glued along seams into
a tree.  Each node has a body (a round sphere of radius ``lam`` or an opaque
placeholder with an accumulated metric scale) and a tuple of marked sites.
A site's attachment says what the metric looks like near it: a free torpedo
cap, a free head or bulb, an exposed cylindrical or lens boundary, or a
seam glued to another node.

Site ids are handles; they must be unique per node.  Locations are tags
(``"north"``/``"south"`` for the axis poles, anything else for an
off-axis point).  At most one site carries the base marker.

All operations return new descriptors.
"""

import json
import math
from dataclasses import dataclass, field, replace

from . import tolerances as tol
from . import warp_profiles as wp
from .errors import (
    AngleOutOfRange,
    InvalidDescriptor,
    InvalidParameter,
    NonPositiveRho,
    NotAHeadSite,
    NotATorpedoSite,
    NotAxisSymmetric,
    ParseError,
    SeamMismatch,
    WrongBoundaryKind,
)

SCHEMA = "psc-descriptor/1"
POLES = ("north", "south")
HALF_PI = 0.5 * math.pi


def _close(a, b, tolerance=tol.SEAM):
    return abs(a - b) <= tolerance * max(1.0, abs(a), abs(b))


def _same(a, b):
    return _close(a, b, tol.SAME_PARAMS)


# ---------------------------------------------------------------------------
# attachments and seams

@dataclass(frozen=True)
class FreeTorpedo:
    delta: float
    kind = "free_torpedo"


@dataclass(frozen=True)
class FreeHead:
    lam: float
    r: float
    kind = "free_head"


@dataclass(frozen=True)
class FreeBulb:
    lam: float
    r: float
    r_prime: float
    delta: float
    kind = "free_bulb"


@dataclass(frozen=True)
class CylBoundary:
    delta: float
    kind = "cyl_boundary"


@dataclass(frozen=True)
class LensBoundary:
    """Lens boundary keeping angle ``r`` of a radius-``lam`` round piece.

    ``neck`` is ``(head angle, r_prime, delta)`` when the cut went through
    the head of a pushed bulb, so the bulb's neck is still attached below.
    """

    lam: float
    r: float
    neck: tuple = None
    kind = "lens_boundary"


@dataclass(frozen=True)
class CylSeam:
    delta: float
    kind = "cyl"


@dataclass(frozen=True)
class LensSeam:
    lam: float
    r: float          # angle kept on this side
    neck: tuple = None
    kind = "lens"


@dataclass(frozen=True)
class Glued:
    node: int
    site: str
    seam: object
    kind = "glued"


FREE_KINDS = (FreeTorpedo, FreeHead, FreeBulb)
HEAD_KINDS = (FreeHead, FreeBulb)
BOUNDARY_KINDS = (CylBoundary, LensBoundary)


@dataclass(frozen=True)
class Site:
    id: str
    location: str
    attachment: object
    base: bool = False


@dataclass(frozen=True)
class Round:
    lam: float
    kind = "round"


@dataclass(frozen=True)
class Opaque:
    label: str
    scale: float = 1.0      # accumulated metric scale factor
    kind = "opaque"


@dataclass(frozen=True)
class Node:
    id: int
    body: object
    sites: tuple = ()

    def site(self, site_id):
        for s in self.sites:
            if s.id == site_id:
                return s
        raise KeyError(site_id)

    def with_site(self, site):
        sites = tuple(site if s.id == site.id else s for s in self.sites)
        return replace(self, sites=sites)


@dataclass(frozen=True)
class SphereDescriptor:
    dim: int
    nodes: tuple = field(default_factory=tuple)

    def node(self, node_id):
        for nd in self.nodes:
            if nd.id == node_id:
                return nd
        raise KeyError(node_id)

    def with_node(self, node):
        return replace(self, nodes=tuple(node if nd.id == node.id else nd for nd in self.nodes))

    def sites(self):
        """Yield ``(node_id, site)`` for every site."""
        for nd in self.nodes:
            for s in nd.sites:
                yield nd.id, s

    def base(self):
        for node_id, s in self.sites():
            if s.base:
                return node_id, s.id
        return None


# ---------------------------------------------------------------------------
# validation

def _check_attachment(att):
    def positive(*xs):
        return all(math.isfinite(x) and x > 0 for x in xs)

    if isinstance(att, (FreeTorpedo, CylBoundary)):
        if not positive(att.delta):
            raise InvalidDescriptor("torpedo and cylinder radii must be positive")
    elif isinstance(att, FreeHead):
        if not positive(att.lam) or not 0 < att.r <= HALF_PI * att.lam * (1 + tol.SAME_PARAMS):
            raise InvalidDescriptor("head needs lam > 0 and 0 < r <= lam*pi/2")
    elif isinstance(att, FreeBulb):
        if not positive(att.lam) or not 0 < att.r <= HALF_PI * att.lam * (1 + tol.SAME_PARAMS):
            raise InvalidDescriptor("bulb needs lam > 0 and 0 < r <= lam*pi/2")
        if not 0 < att.r_prime <= att.r * (1 + tol.SAME_PARAMS) or not 0 < att.delta <= att.r * (1 + tol.SAME_PARAMS):
            raise InvalidDescriptor("bulb needs 0 < r' <= r and 0 < delta <= r")
    elif isinstance(att, LensBoundary):
        if not positive(att.lam) or not 0 < att.r < math.pi * att.lam:
            raise InvalidDescriptor("lens boundary needs lam > 0 and 0 < r < lam*pi")
    elif isinstance(att, Glued):
        pass
    else:
        raise InvalidDescriptor(f"unknown attachment {att!r}")


def seam_gap(a, b):
    """How far two sides of a seam are from matching (0 when they match exactly)."""
    if type(a) is not type(b):
        return math.inf
    if isinstance(a, CylSeam):
        return abs(a.delta - b.delta) / max(1.0, a.delta)
    return max(
        abs(a.lam - b.lam) / max(1.0, a.lam),
        abs(a.r + b.r - math.pi * a.lam) / max(1.0, a.lam),
    )


def validate_descriptor(d):
    """Raise unless ``d`` satisfies every descriptor invariant; returns ``d``."""
    if int(d.dim) != d.dim or d.dim < 2:
        raise InvalidDescriptor("dimension must be an integer >= 2")
    if not d.nodes:
        raise InvalidDescriptor("a descriptor needs at least one node")
    ids = [nd.id for nd in d.nodes]
    if len(set(ids)) != len(ids):
        raise InvalidDescriptor("node ids are not unique")
    bases = 0
    edges = set()
    for nd in d.nodes:
        if isinstance(nd.body, Round) and not nd.body.lam > 0:
            raise InvalidDescriptor("round bodies need a positive radius")
        if isinstance(nd.body, Opaque) and not nd.body.scale > 0:
            raise InvalidDescriptor("opaque scale must be positive")
        sids = [s.id for s in nd.sites]
        if len(set(sids)) != len(sids):
            raise InvalidDescriptor(f"site ids on node {nd.id} are not unique")
        for s in nd.sites:
            _check_attachment(s.attachment)
            bases += bool(s.base)
            att = s.attachment
            if isinstance(att, Glued):
                if att.node == nd.id:
                    raise InvalidDescriptor("a node cannot be glued to itself")
                try:
                    other = d.node(att.node).site(att.site)
                except KeyError:
                    raise InvalidDescriptor(f"dangling seam at {nd.id}:{s.id}") from None
                back = other.attachment
                if not isinstance(back, Glued) or (back.node, back.site) != (nd.id, s.id):
                    raise InvalidDescriptor(f"seam at {nd.id}:{s.id} is not reciprocated")
                gap = seam_gap(att.seam, back.seam)
                if gap > tol.SEAM:
                    raise SeamMismatch(f"seam {nd.id}:{s.id} does not match its partner", gap)
                edges.add(frozenset(((nd.id, s.id), (att.node, att.site))))
    if bases > 1:
        raise InvalidDescriptor("more than one base site")
    # the gluing graph must be a tree
    node_edges = [tuple(sorted(a for a, _ in e)) for e in edges]
    if len(node_edges) != len(ids) - 1:
        raise InvalidDescriptor("the gluing graph is not a tree")
    parent = {i: i for i in ids}

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b in node_edges:
        ra, rb = find(a), find(b)
        if ra == rb:
            raise InvalidDescriptor("the gluing graph has a cycle")
        parent[ra] = rb
    return d


# ---------------------------------------------------------------------------
# constructors

def round_node(node_id, lam, sites=()):
    return Node(node_id, Round(float(lam)), tuple(sites))


def double_torpedo(delta=1.0, dim=3):
    """Two torpedo caps of radius ``delta`` glued back to back; the north cap is the base."""
    return SphereDescriptor(dim, (round_node(0, delta, (
        Site("north", "north", FreeTorpedo(float(delta)), base=True),
        Site("south", "south", FreeTorpedo(float(delta))),
    )),))


def three_cap(delta=0.25, dim=3, lam=1.0):
    """Unit round body with a base cap ``p0`` at the north pole and two small caps ``p1``, ``p2``."""
    return SphereDescriptor(dim, (round_node(0, lam, (
        Site("p0", "north", FreeTorpedo(float(lam)), base=True),
        Site("p1", "south-a", FreeTorpedo(float(delta))),
        Site("p2", "south-b", FreeTorpedo(float(delta))),
    )),))


def round_with_base_head(dim=3, lam=1.0, extra=()):
    """Round sphere whose northern hemisphere is the base head; ``extra`` sites are appended."""
    base = Site("base", "north", FreeHead(float(lam), HALF_PI * lam), base=True)
    return SphereDescriptor(dim, (round_node(0, lam, (base,) + tuple(extra)),))


def three_head(dim=3, lam=1.0, r=None):
    """Round body carrying heads ``p0`` (base), ``p1`` and ``p2``."""
    r = HALF_PI * lam if r is None else float(r)
    return SphereDescriptor(dim, (round_node(0, lam, (
        Site("p0", "north", FreeHead(float(lam), r), base=True),
        Site("p1", "south-a", FreeHead(float(lam), r)),
        Site("p2", "south-b", FreeHead(float(lam), r)),
    )),))


def opaque(label, dim=3, sites=(), scale=1.0):
    return SphereDescriptor(dim, (Node(0, Opaque(str(label), float(scale)), tuple(sites)),))


# ---------------------------------------------------------------------------
# lookup helpers

def find_site(d, ref):
    """Resolve ``ref`` (a site id, or ``(node_id, site_id)``) to ``(node_id, Site)``."""
    if isinstance(ref, tuple):
        node_id, site_id = ref
        try:
            return node_id, d.node(node_id).site(site_id)
        except KeyError:
            raise InvalidParameter(f"no site {site_id!r} on node {node_id!r}") from None
    hits = [(nid, s) for nid, s in d.sites() if s.id == ref]
    if len(hits) != 1:
        raise InvalidParameter(f"site id {ref!r} matches {len(hits)} sites")
    return hits[0]


def _put_site(d, node_id, site):
    return d.with_node(d.node(node_id).with_site(site))


def free_caps(d):
    return [(nid, s.id) for nid, s in d.sites() if isinstance(s.attachment, FreeTorpedo)]


def free_heads(d):
    return [(nid, s.id) for nid, s in d.sites() if isinstance(s.attachment, HEAD_KINDS)]


def boundary_sites(d):
    return [(nid, s) for nid, s in d.sites() if isinstance(s.attachment, BOUNDARY_KINDS)]


def boundary(d):
    sites = boundary_sites(d)
    if len(sites) != 1:
        raise InvalidDescriptor(f"a disk descriptor has exactly one boundary, found {len(sites)}")
    return sites[0]


# ---------------------------------------------------------------------------
# scaling

def _scale_attachment(att, k):
    if isinstance(att, (FreeTorpedo, CylBoundary, CylSeam)):
        return replace(att, delta=att.delta * k)
    if isinstance(att, FreeHead):
        return FreeHead(att.lam * k, att.r * k)
    if isinstance(att, FreeBulb):
        return FreeBulb(att.lam * k, att.r * k, att.r_prime * k, att.delta * k)
    if isinstance(att, (LensBoundary, LensSeam)):
        neck = None if att.neck is None else tuple(x * k for x in att.neck)
        return replace(att, lam=att.lam * k, r=att.r * k, neck=neck)
    if isinstance(att, Glued):
        return replace(att, seam=_scale_attachment(att.seam, k))
    raise InvalidDescriptor(f"unknown attachment {att!r}")


def _scale_body(body, k):
    if isinstance(body, Round):
        return Round(body.lam * k)
    return Opaque(body.label, body.scale * k * k)


def _rescale(d, k, skip=None):
    if k == 1.0:
        return d
    nodes = []
    for nd in d.nodes:
        sites = tuple(
            s if skip == (nd.id, s.id) else replace(s, attachment=_scale_attachment(s.attachment, k))
            for s in nd.sites
        )
        nodes.append(Node(nd.id, _scale_body(nd.body, k), sites))
    return replace(d, nodes=tuple(nodes))


def rescale_desc(d, c2):
    """Descriptor of the metric ``c2 * g``: every length scales by ``sqrt(c2)``."""
    if not c2 > 0 or not math.isfinite(c2):
        raise InvalidParameter("metric scale must be positive")
    return _rescale(d, math.sqrt(c2))


# ---------------------------------------------------------------------------
# caps and cylindrical joins

def uncap(g, ref):
    node_id, s = find_site(g, ref)
    if not isinstance(s.attachment, FreeTorpedo):
        raise NotATorpedoSite(f"site {s.id!r} carries {s.attachment.kind}, not a free torpedo")
    return _put_site(g, node_id, replace(s, attachment=CylBoundary(s.attachment.delta)))


def recap(d, ref):
    node_id, s = find_site(d, ref)
    if not isinstance(s.attachment, CylBoundary):
        raise WrongBoundaryKind(f"site {s.id!r} is not a cylindrical boundary")
    return _put_site(d, node_id, replace(s, attachment=FreeTorpedo(s.attachment.delta)))


def rho(d):
    """Radius of the cylindrical boundary of a disk descriptor."""
    _, s = boundary(d)
    if not isinstance(s.attachment, CylBoundary):
        raise WrongBoundaryKind("boundary is a lens, not a cylinder")
    return s.attachment.delta


def PI_L(rho0, rho1):
    return rho0


def PI_R(rho0, rho1):
    return rho1


JOIN_RULES = {"PI_L": PI_L, "PI_R": PI_R}


def _resolve_rule(f):
    if isinstance(f, str):
        try:
            return JOIN_RULES[f]
        except KeyError:
            raise InvalidParameter(f"unknown joining rule {f!r}") from None
    return f


def _merge(left, right):
    """Disjoint union; ``right``'s node ids are shifted past ``left``'s.

    If both carry a base marker, ``left``'s wins.
    """
    if left.dim != right.dim:
        raise InvalidParameter("descriptors of different dimension")
    offset = max(nd.id for nd in left.nodes) + 1 - min(nd.id for nd in right.nodes)
    drop_base = left.base() is not None
    moved = []
    for nd in right.nodes:
        sites = []
        for s in nd.sites:
            att = s.attachment
            if isinstance(att, Glued):
                att = replace(att, node=att.node + offset)
            sites.append(replace(s, attachment=att, base=s.base and not drop_base))
        moved.append(Node(nd.id + offset, nd.body, tuple(sites)))
    return SphereDescriptor(left.dim, left.nodes + tuple(moved)), offset


def _unmark(d, node_id, site_id):
    # a site that is about to be glued cannot stay the base
    s = d.node(node_id).site(site_id)
    return _put_site(d, node_id, replace(s, base=False)) if s.base else d


def _glue(d, a, b, seam_a, seam_b):
    (na, sa), (nb, sb) = a, b
    site_a = d.node(na).site(sa)
    site_b = d.node(nb).site(sb)
    d = _put_site(d, na, replace(site_a, attachment=Glued(nb, sb, seam_a), base=False))
    return _put_site(d, nb, replace(site_b, attachment=Glued(na, sa, seam_b), base=False))


def join_cyl(f, g0, g1):
    """Rescale both disks so their boundary radii equal ``f(rho0, rho1)``, then glue."""
    f = _resolve_rule(f)
    r0, r1 = rho(g0), rho(g1)
    target = float(f(r0, r1))
    if not target > 0:
        raise InvalidParameter("joining rule must return a positive radius")
    g0 = _rescale(g0, target / r0)
    g1 = _rescale(g1, target / r1)
    (n0, s0), (n1, s1) = boundary(g0), boundary(g1)
    merged, offset = _merge(_unmark(g0, n0, s0.id), _unmark(g1, n1, s1.id))
    seam = CylSeam(target)
    return _glue(merged, (n0, s0.id), (n1 + offset, s1.id), seam, seam)


def join_ij(f, g, h, i, j):
    """Uncap ``g`` at ``i`` and ``h`` at ``j`` and join the two disks."""
    return join_cyl(f, uncap(g, i), uncap(h, j))


def mu_torp(g3, f, g, h, p1="p1", p2="p2"):
    """Graft ``g`` at ``p1`` and then ``h`` at ``p2`` of the three-cap metric ``g3``.

    ``g`` and ``h`` are attached through their base caps.
    """
    for name, x in (("g", g), ("h", h)):
        if x.base() is None:
            raise InvalidParameter(f"{name} has no base cap")
    step = join_ij(f, g, g3, g.base(), p1)
    # g3's node ids were shifted inside step; find p2 again by id
    return join_ij(f, h, step, h.base(), _ref_by_id(step, p2, from_nodes=_node_ids_from(step, g)))


def _node_ids_from(joined, left):
    # nodes of the right operand follow the left operand's nodes
    return {nd.id for nd in joined.nodes[len(left.nodes):]}


def _ref_by_id(d, site_id, from_nodes=None):
    hits = [(nid, s.id) for nid, s in d.sites() if s.id == site_id and (from_nodes is None or nid in from_nodes)]
    if len(hits) != 1:
        raise InvalidParameter(f"site id {site_id!r} matches {len(hits)} sites")
    return hits[0]


@dataclass(frozen=True)
class TorpedoPush:
    delta: float


@dataclass(frozen=True)
class BulbPush:
    lam: float
    r: float


@dataclass(frozen=True)
class HeadPush:
    lam: float
    r: float


def push_cap(g, node_id, tag, kind):
    """Add a torpedo cap, a head or a canonical bulb at a new site ``tag`` of node ``node_id``."""
    nd = g.node(node_id)
    if any(s.id == tag for s in nd.sites):
        raise InvalidParameter(f"node {node_id} already has a site {tag!r}")
    if isinstance(kind, TorpedoPush):
        if not kind.delta > 0:
            raise InvalidParameter("torpedo radius must be positive")
        att = FreeTorpedo(float(kind.delta))
    elif isinstance(kind, BulbPush):
        bulb = wp.bulb_profile(kind.lam, kind.r, g.dim)
        r_star = HALF_PI * kind.lam if bulb.delta == kind.lam else float(kind.r)
        att = FreeBulb(float(kind.lam), r_star, bulb.r_prime, bulb.delta)
    elif isinstance(kind, HeadPush):
        _check_head_params(kind.lam, kind.r)
        att = FreeHead(float(kind.lam), float(kind.r))
    else:
        raise InvalidParameter(f"unknown push kind {kind!r}")
    return g.with_node(replace(nd, sites=nd.sites + (Site(tag, tag, att),)))


# ---------------------------------------------------------------------------
# heads: cut, mov, fit, join

def _head(g, ref):
    node_id, s = find_site(g, ref)
    if not isinstance(s.attachment, HEAD_KINDS):
        raise NotAHeadSite(f"site {s.id!r} carries {s.attachment.kind}, not a head or bulb")
    return node_id, s


def cut(g, ref, rho):
    """Remove the ball of radius ``rho`` about a head, clamped to the head itself."""
    if not rho > 0:
        raise NonPositiveRho("cut radius must be positive")
    node_id, s = _head(g, ref)
    att = s.attachment
    rho = min(float(rho), math.pi * att.lam - att.r)
    neck = (att.r, att.r_prime, att.delta) if isinstance(att, FreeBulb) and att.delta != att.lam else None
    if isinstance(att, FreeBulb) and neck is None and not _same(att.r, HALF_PI * att.lam):
        neck = (att.r, att.r_prime, att.delta)
    kept = math.pi * att.lam - rho
    return _put_site(g, node_id, replace(s, attachment=LensBoundary(att.lam, kept, neck), base=False))


def _check_head_params(lam, r):
    if not lam > 0:
        raise InvalidParameter("head radius must be positive")
    if not 0 < r <= HALF_PI * lam * (1 + tol.SAME_PARAMS):
        raise AngleOutOfRange(f"head angle {r!r} outside (0, {HALF_PI * lam!r}]")


def mov(g, ref, lam0, r0):
    """Move a head or bulb to the standard parameters ``(lam0, r0)``.

    The whole descriptor is first scaled so the head radius is ``lam0``.
    The site is then replaced by the canonical ``(lam0, r0)`` version and
    everything else is scaled again so the neck radii agree.  A site that
    already has the target parameters is left alone.
    """
    lam0, r0 = float(lam0), float(r0)
    _check_head_params(lam0, r0)
    node_id, s = _head(g, ref)
    att = s.attachment
    if _same(att.lam, lam0) and _same(att.r, r0):
        return g
    g = _rescale(g, lam0 / att.lam)
    s = g.node(node_id).site(s.id)
    att = s.attachment
    if _same(att.r, r0):
        new = replace(att, lam=lam0, r=r0)
        return _put_site(g, node_id, replace(s, attachment=new))
    if isinstance(att, FreeBulb):
        old_neck = att.delta
    else:
        old_neck = wp.bulb_profile(lam0, min(att.r, HALF_PI * lam0), g.dim).delta
    bulb = wp.bulb_profile(lam0, r0, g.dim)
    g = _rescale(g, bulb.delta / old_neck, skip=(node_id, s.id))
    if isinstance(att, FreeBulb):
        new = FreeBulb(lam0, r0, bulb.r_prime, bulb.delta)
    else:
        new = FreeHead(lam0, r0)
    return _put_site(g, node_id, replace(s, attachment=new))


def fit(g, ref, lam, r, rho):
    node_id, s = _head(g, ref)
    return cut(mov(g, (node_id, s.id), lam, r), (node_id, s.id), rho)


def _lens_seam(att):
    return LensSeam(att.lam, att.r, att.neck)


def join_head(lam, r, g, p, h, q):
    """Fit ``g`` at ``p`` and ``h`` at ``q`` to complementary lenses and glue them."""
    lam, r = float(lam), float(r)
    _check_head_params(lam, r)
    p_node, p_site = _head(g, p)
    q_node, q_site = _head(h, q)
    q_angle = lam * q_site.attachment.r / q_site.attachment.lam
    gg = fit(g, (p_node, p_site.id), lam, r, math.pi * lam - r)
    hh = fit(h, (q_node, q_site.id), lam, q_angle, r)
    a = gg.node(p_node).site(p_site.id).attachment
    b = hh.node(q_node).site(q_site.id).attachment
    sa, sb = _lens_seam(a), _lens_seam(b)
    gap = seam_gap(sa, sb)
    if gap > tol.SEAM:
        raise SeamMismatch("lens boundaries are not complementary", gap)
    merged, offset = _merge(_unmark(gg, p_node, p_site.id), _unmark(hh, q_node, q_site.id))
    return _glue(merged, (p_node, p_site.id), (q_node + offset, q_site.id), sa, sb)


def mu_head(g3, g, h, p1="p1", p2="p2"):
    """Graft ``g`` at head ``p1`` and then ``h`` at head ``p2`` of ``g3``."""
    for name, x in (("g", g), ("h", h)):
        if x.base() is None:
            raise InvalidParameter(f"{name} has no base head")
    _, s1 = _head(g3, p1)
    step = join_head(s1.attachment.lam, s1.attachment.r, g, g.base(), g3, p1)
    ref2 = _ref_by_id(step, p2, from_nodes=_node_ids_from(step, g))
    _, s2 = _head(step, ref2)
    return join_head(s2.attachment.lam, s2.attachment.r, h, h.base(), step, ref2)


# ---------------------------------------------------------------------------
# axis profiles

def _torpedo_end(lam, delta, capped, n):
    """Profile from a pole carrying a torpedo of radius ``delta`` to the round body."""
    if _close(delta, lam):
        return (wp.torpedo_profile(lam) if capped else None), HALF_PI * lam
    if delta > lam:
        raise NotAxisSymmetric(f"torpedo radius {delta!r} exceeds the body radius {lam!r}")
    if n < 3:
        raise NotAxisSymmetric("necks need dimension n >= 3")
    power = 0.5 * (n - 2)
    sin_bend = (delta / lam) ** (power / (power + 2.0))
    bend = math.asin(sin_bend)
    z_max = math.sqrt(max(lam * sin_bend / delta - 1.0, 0.0))
    kind = wp.NeckKind(delta, power, z_max)
    neck = wp.Profile([wp.Piece(kind, 0.0, kind.native_length, 0.0)], check=False)
    prefix = wp.torpedo_profile(delta).concat(neck) if capped else neck
    return prefix, lam * bend


def _bulb_part(lam, r, delta, n, start=0.0):
    """Head and neck of the canonical bulb, from angle ``start`` off its pole to the flat end."""
    bulb = wp.bulb_profile(lam, r, n)
    if not _close(bulb.delta, delta):
        raise NotAxisSymmetric("bulb neck radius is not the canonical one")
    pieces = bulb.profile.pieces
    if len(pieces) == 1:
        pieces = (wp.Piece(pieces[0].kind, 0.0, HALF_PI * lam, 0.0),)
    else:
        pieces = pieces[:-2]
    head = pieces[0]
    if start >= head.hi * (1 - 1e-15):
        rest = pieces[1:]
        if not rest:
            return None
        return wp.Profile(rest, check=False).shifted(-rest[0].start)
    first = wp.Piece(head.kind, start, head.hi, 0.0)
    out = [first]
    at = first.end
    for p in pieces[1:]:
        out.append(p.moved(start=at))
        at = out[-1].end
    return wp.Profile(out, check=False)


def _chain(*profiles):
    out = None
    for p in profiles:
        if p is None:
            continue
        out = p if out is None else out.concat(p)
    return out


def _pole_end(att, lam, n):
    """``(prefix, theta)``: profile from the pole inward, then round angle where the body resumes."""
    if att is None:
        return None, 0.0
    if isinstance(att, Glued):
        att = att.seam
    if isinstance(att, FreeHead):
        if _close(att.lam, lam):
            return None, 0.0
        bulb = wp.bulb_profile(att.lam, att.r, n)
        att = FreeBulb(att.lam, att.r, bulb.r_prime, bulb.delta)
    if isinstance(att, FreeBulb):
        host, theta = _torpedo_end(lam, att.delta, False, n)
        return _chain(_bulb_part(att.lam, att.r, att.delta, n), host), theta
    if isinstance(att, FreeTorpedo):
        return _torpedo_end(lam, att.delta, True, n)
    if isinstance(att, (CylBoundary, CylSeam)):
        return _torpedo_end(lam, att.delta, False, n)
    if isinstance(att, (LensBoundary, LensSeam)):
        cut_at = math.pi * att.lam - att.r
        if att.neck is None:
            if not _close(att.lam, lam):
                raise NotAxisSymmetric("lens boundary radius differs from its round body")
            return None, cut_at
        head_r, _, delta = att.neck
        host, theta = _torpedo_end(lam, delta, False, n)
        return _chain(_bulb_part(att.lam, head_r, delta, n, start=cut_at), host), theta
    raise NotAxisSymmetric(f"cannot place {att!r} on the axis")


def _node_profile(nd, n):
    if not isinstance(nd.body, Round):
        raise NotAxisSymmetric("opaque bodies have no axis profile")
    lam = nd.body.lam
    ends = {}
    for s in nd.sites:
        if s.location not in POLES:
            raise NotAxisSymmetric(f"site {s.id!r} is not at an axis pole")
        if s.location in ends:
            raise NotAxisSymmetric(f"two sites at the {s.location} pole of node {nd.id}")
        ends[s.location] = s.attachment
    north, theta_n = _pole_end(ends.get("north"), lam, n)
    south, theta_s = _pole_end(ends.get("south"), lam, n)
    lo, hi = theta_n, math.pi * lam - theta_s
    if lo > hi + tol.SEAM * max(1.0, lam):
        raise NotAxisSymmetric(f"the pole structures of node {nd.id} overlap")
    middle = None
    if hi - lo > tol.SEAM * max(1.0, lam):
        middle = wp.Profile([wp.Piece(wp.SinKind(lam), lo, hi, 0.0)], check=False)
    whole = _chain(north, middle, None if south is None else south.reversed())
    if whole is None:
        raise NotAxisSymmetric(f"node {nd.id} has an empty axis")
    return whole


def axis_profile(g):
    """Warping profile of a rotationally symmetric chain of round nodes."""
    validate_descriptor(g)
    glued = {}
    for nd in g.nodes:
        links = [s for s in nd.sites if isinstance(s.attachment, Glued)]
        if len(links) > 2:
            raise NotAxisSymmetric("the gluing graph is not a path")
        glued[nd.id] = links
    start = next(nd.id for nd in g.nodes if len(glued[nd.id]) <= 1)
    out = None
    prev, entry, current = None, None, start
    while True:
        nd = g.node(current)
        prof = _node_profile(nd, g.dim)
        exits = [s for s in glued[current] if s.attachment.node != prev]
        if entry is None:
            reverse = bool(exits) and exits[0].location == "north"
        else:
            reverse = entry == "south"
        if reverse:
            prof = prof.reversed()
        out = prof.shifted(-prof.start) if out is None else out.concat(prof)
        if not exits:
            break
        link = exits[0]
        entry = g.node(link.attachment.node).site(link.attachment.site).location
        prev, current = current, link.attachment.node
    out.check_seams()
    return out


# ---------------------------------------------------------------------------
# canonical forms

def _coarse(x):
    return float(f"{x:.7g}")


def _att_form(att):
    if isinstance(att, Glued):
        return (att.kind,)
    vals = []
    for k in ("delta", "lam", "r", "r_prime"):
        if hasattr(att, k):
            vals.append((k, float(getattr(att, k))))
    neck = getattr(att, "neck", None)
    if neck is not None:
        vals.append(("neck", tuple(float(x) for x in neck)))
    return (att.kind, tuple(vals))


def _body_form(body):
    if isinstance(body, Round):
        return ("round", float(body.lam))
    return ("opaque", body.label, float(body.scale))


def _key(form):
    if isinstance(form, float):
        return (0, _coarse(form))
    if isinstance(form, (tuple, list)):
        return (1, tuple(_key(x) for x in form))
    if isinstance(form, bool):
        return (2, int(form))
    return (3, str(form))


def _node_form(d, node_id, entry, ignore_tags):
    nd = d.node(node_id)
    sites = []
    for s in nd.sites:
        if s.id == entry:
            continue
        att = s.attachment
        if isinstance(att, Glued):
            other = d.node(att.node).site(att.site).attachment.seam
            sub = _node_form(d, att.node, att.site, ignore_tags)
            sites.append(("glued", _att_form(att.seam), _att_form(other), sub))
        else:
            label = () if ignore_tags else (s.id, s.location)
            sites.append(("free", _att_form(att), bool(s.base), label))
    sites.sort(key=_key)
    return (_body_form(nd.body), tuple(sites))


def _absorbable(d, nd):
    if not isinstance(nd.body, Round) or len(nd.sites) != 2:
        return None
    lam = nd.body.lam
    heads = [s for s in nd.sites if isinstance(s.attachment, FreeHead)]
    seams = [s for s in nd.sites if isinstance(s.attachment, Glued)]
    if len(heads) != 1 or len(seams) != 1:
        return None
    head, link = heads[0].attachment, seams[0].attachment
    seam = link.seam
    if not isinstance(seam, LensSeam) or seam.neck is not None:
        return None
    other = d.node(link.node).site(link.site).attachment.seam
    if other.neck is not None:
        return None
    if not (_close(head.lam, lam) and _close(seam.lam, lam) and _close(seam.r, head.r)):
        return None
    return heads[0], link


def _transparent(d, nd):
    # a round node cut along two complementary native lenses has nothing left
    if not isinstance(nd.body, Round) or len(nd.sites) != 2:
        return None
    lam = nd.body.lam
    links = [s.attachment for s in nd.sites]
    if not all(isinstance(x, Glued) and isinstance(x.seam, LensSeam) for x in links):
        return None
    if any(x.seam.neck is not None or not _close(x.seam.lam, lam) for x in links):
        return None
    if not _close(links[0].seam.r + links[1].seam.r, math.pi * lam):
        return None
    return links


def _splice(d, nd, links):
    a, b = links
    sa = d.node(a.node).site(a.site)
    sb = d.node(b.node).site(b.site)
    d = replace(d, nodes=tuple(x for x in d.nodes if x.id != nd.id))
    d = _put_site(d, a.node, replace(sa, attachment=Glued(b.node, b.site, sa.attachment.seam)))
    return _put_site(d, b.node, replace(sb, attachment=Glued(a.node, a.site, sb.attachment.seam)))


def absorb_caps(d):
    """Fold away round nodes that carry no geometry of their own.

    A node that is only a native head glued along a matching lens caps its
    neighbour with exactly the piece that was cut off, so the neighbour's
    site becomes a free head again.  A node cut along two complementary
    native lenses is empty, and its two neighbours are glued directly.
    """
    changed = True
    while changed and len(d.nodes) > 1:
        changed = False
        for nd in d.nodes:
            links = _transparent(d, nd)
            if links is not None:
                d = _splice(d, nd, links)
                changed = True
                break
            hit = _absorbable(d, nd)
            if hit is None:
                continue
            head, link = hit
            partner = d.node(link.node)
            site = partner.site(link.site)
            site = replace(site, attachment=FreeHead(head.attachment.lam, head.attachment.r), base=head.base)
            d = replace(d, nodes=tuple(x for x in d.nodes if x.id != nd.id))
            d = d.with_node(partner.with_site(site))
            changed = True
            break
    return d


def canonical_form(d, ignore_tags=False):
    """Nested tuple form rooted at the base site (or the least rooting if there is none).

    Redundant round caps are absorbed first (see :func:`absorb_caps`).
    """
    d = absorb_caps(d)
    base = d.base()
    if base is not None:
        return (int(d.dim), _node_form(d, base[0], None, ignore_tags))
    forms = [(int(d.dim), _node_form(d, nd.id, None, ignore_tags)) for nd in d.nodes]
    return min(forms, key=_key)


def forms_close(a, b, tolerance=tol.SEAM):
    if isinstance(a, float) and isinstance(b, float):
        return _close(a, b, tolerance)
    if isinstance(a, tuple) and isinstance(b, tuple):
        return len(a) == len(b) and all(forms_close(x, y, tolerance) for x, y in zip(a, b))
    return type(a) is type(b) and a == b


def canonical_equal(a, b, ignore_tags=False):
    a, b = absorb_caps(a), absorb_caps(b)
    if a.dim != b.dim or len(a.nodes) != len(b.nodes):
        return False
    fa = canonical_form(a, ignore_tags)
    fb = canonical_form(b, ignore_tags)
    if forms_close(fa, fb):
        return True
    if a.base() is not None:
        return False
    # without a base, near-tied rootings can sort differently; try them all
    return any(
        forms_close((int(b.dim), _node_form(b, nd.id, None, ignore_tags)), fa) for nd in b.nodes
    )


# ---------------------------------------------------------------------------
# serialization

def _att_to_dict(att):
    out = {"kind": att.kind}
    if isinstance(att, Glued):
        out.update(node=att.node, site=att.site, seam=_att_to_dict(att.seam))
        return out
    for k in ("delta", "lam", "r", "r_prime"):
        if hasattr(att, k):
            out[k] = float(getattr(att, k))
    if hasattr(att, "neck"):
        out["neck"] = None if att.neck is None else [float(x) for x in att.neck]
    return out


_ATT_TYPES = {cls.kind: cls for cls in (FreeTorpedo, FreeHead, FreeBulb, CylBoundary, LensBoundary, CylSeam, LensSeam)}


def _att_from_dict(obj):
    kind = obj.get("kind")
    if kind == "glued":
        return Glued(int(obj["node"]), str(obj["site"]), _att_from_dict(obj["seam"]))
    cls = _ATT_TYPES.get(kind)
    if cls is None:
        raise ParseError(f"unknown attachment kind {kind!r}")
    fields = {k: float(v) for k, v in obj.items() if k not in ("kind", "neck")}
    if "neck" in obj:
        fields["neck"] = None if obj["neck"] is None else tuple(float(x) for x in obj["neck"])
    return cls(**fields)


def to_dict(d):
    nodes = []
    for nd in d.nodes:
        if isinstance(nd.body, Round):
            body = {"kind": "round", "lam": float(nd.body.lam)}
        else:
            body = {"kind": "opaque", "label": nd.body.label, "scale": float(nd.body.scale)}
        sites = [
            {"id": s.id, "location": s.location, "base": bool(s.base), "attachment": _att_to_dict(s.attachment)}
            for s in nd.sites
        ]
        nodes.append({"id": nd.id, "body": body, "sites": sites})
    return {"schema": SCHEMA, "dim": int(d.dim), "nodes": nodes}


def from_dict(obj):
    if obj.get("schema") != SCHEMA:
        raise ParseError(f"unsupported descriptor schema {obj.get('schema')!r}")
    try:
        nodes = []
        for nd in obj["nodes"]:
            b = nd["body"]
            if b["kind"] == "round":
                body = Round(float(b["lam"]))
            elif b["kind"] == "opaque":
                body = Opaque(str(b["label"]), float(b["scale"]))
            else:
                raise ParseError(f"unknown body kind {b['kind']!r}")
            sites = tuple(
                Site(str(s["id"]), str(s["location"]), _att_from_dict(s["attachment"]), bool(s["base"]))
                for s in nd["sites"]
            )
            nodes.append(Node(int(nd["id"]), body, sites))
        return SphereDescriptor(int(obj["dim"]), tuple(nodes))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed descriptor: {exc}") from None


def dumps(d):
    return json.dumps(to_dict(d), sort_keys=True)


def loads(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from None
    return from_dict(obj)


def summary(d):
    """Short human-readable description."""
    lines = [f"dim {d.dim}, {len(d.nodes)} node(s)"]
    for nd in d.nodes:
        body = f"round lam={nd.body.lam:.6g}" if isinstance(nd.body, Round) else f"opaque {nd.body.label} scale={nd.body.scale:.6g}"
        lines.append(f"  node {nd.id}: {body}")
        for s in nd.sites:
            mark = " [base]" if s.base else ""
            lines.append(f"    {s.id} @{s.location}: {_att_to_dict(s.attachment)}{mark}")
    return "\n".join(lines)


def random_descriptor(rng, dim=3, max_nodes=4):
    """Random valid descriptor, used by the round-trip tests."""
    count = int(rng.integers(1, max_nodes + 1))
    d = None
    for i in range(count):
        if rng.random() < 0.7:
            body = Round(float(rng.uniform(0.2, 3.0)))
        else:
            body = Opaque(f"g{i}", float(rng.uniform(0.1, 4.0)))
        sites = []
        for k in range(int(rng.integers(1, 4))):
            u = rng.random()
            lam = float(rng.uniform(0.2, 3.0))
            if u < 0.35:
                att = FreeTorpedo(float(rng.uniform(0.05, 2.0)))
            elif u < 0.7:
                att = FreeHead(lam, float(rng.uniform(0.05, 1.0)) * HALF_PI * lam)
            else:
                r = float(rng.uniform(0.05, 1.0)) * HALF_PI * lam
                att = FreeBulb(lam, r, r * float(rng.uniform(0.1, 1.0)), r * float(rng.uniform(0.1, 1.0)))
            sites.append(Site(f"s{i}_{k}", str(rng.choice(["north", "south", "x", "y"])), att))
        piece = SphereDescriptor(dim, (Node(0, body, tuple(sites)),))
        if d is None:
            d = piece
        else:
            a = uncap(push_cap(d, d.nodes[int(rng.integers(len(d.nodes)))].id, f"j{i}", TorpedoPush(1.0)), f"j{i}")
            b = uncap(push_cap(piece, 0, f"k{i}", TorpedoPush(float(rng.uniform(0.1, 2.0)))), f"k{i}")
            d = join_cyl("PI_L", a, b)
    nid, s = next(iter(d.sites()))
    return _put_site(d, nid, replace(s, base=True))
