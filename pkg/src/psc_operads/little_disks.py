"""The little n-disks operad.

A :class:`DiskConfig` is an ordered tuple of closed round disks inside the
unit n-disk with pairwise disjoint interiors.  Touching is allowed and all
comparisons are made exactly on the stored floats.

Permutations are tuples of 0-based images: ``sigma[i]`` is where item ``i``
goes.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ArityMismatch, InvalidInput, ParseError, SizeMismatch

SMALL_RADIUS = 0.5
BIG_RADIUS = 0.75


@dataclass(frozen=True)
class DiskConfig:
    dim: int
    centers: tuple   # tuple of n-tuples of floats
    radii: tuple

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise InvalidInput("dimension must be an integer >= 1")
        if len(self.centers) != len(self.radii):
            raise InvalidInput("centers and radii differ in length")
        for c in self.centers:
            if len(c) != self.dim:
                raise InvalidInput(f"center {c!r} is not {self.dim}-dimensional")

    @classmethod
    def make(cls, dim, disks):
        """Build from an iterable of ``(center, radius)`` pairs."""
        disks = list(disks)
        return cls(
            int(dim),
            tuple(tuple(float(x) for x in c) for c, _ in disks),
            tuple(float(r) for _, r in disks),
        )

    @property
    def arity(self):
        return len(self.radii)

    def disks(self):
        return list(zip(self.centers, self.radii))

    def __len__(self):
        return self.arity


@dataclass(frozen=True)
class Violation:
    kind: str          # "containment" | "overlap" | "radius"
    disks: tuple
    amount: float

    def __str__(self):
        which = ",".join(str(i + 1) for i in self.disks)
        return f"{self.kind} violation at disk(s) {which} by {self.amount:.6g}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self):
        return not self.violations

    def __bool__(self):
        return self.ok


def _norm(v):
    return math.sqrt(math.fsum(x * x for x in v))


def _dist(a, b):
    return math.sqrt(math.fsum((x - y) ** 2 for x, y in zip(a, b)))


def validate(c):
    out = []
    for i, (p, r) in enumerate(c.disks()):
        if not 0.0 < r <= 1.0:
            out.append(Violation("radius", (i,), r))
        reach = _norm(p) + r
        if reach > 1.0:
            out.append(Violation("containment", (i,), reach - 1.0))
    for i, k in itertools.combinations(range(c.arity), 2):
        gap = _dist(c.centers[i], c.centers[k]) - (c.radii[i] + c.radii[k])
        if gap < 0.0:
            out.append(Violation("overlap", (i, k), -gap))
    return ValidationReport(tuple(out))


def identity_config(n):
    if int(n) != n or n < 1:
        raise InvalidInput("dimension must be an integer >= 1")
    return DiskConfig(int(n), ((0.0,) * int(n),), (1.0,))


def is_identity(c):
    return c.arity == 1 and c.radii[0] == 1.0 and all(x == 0.0 for x in c.centers[0])


def empty_config(n):
    return DiskConfig(int(n), (), ())


def gamma(c, ds):
    """Operad composition: disk ``i`` of ``c`` receives configuration ``ds[i]``."""
    ds = list(ds)
    if len(ds) != c.arity:
        raise ArityMismatch(f"outer arity {c.arity} but {len(ds)} inputs")
    for d in ds:
        if d.dim != c.dim:
            raise InvalidInput("dimension mismatch in composition")
    centers, radii = [], []
    for (p, r), d in zip(c.disks(), ds):
        for q, s in d.disks():
            centers.append(tuple(pi + r * qi for pi, qi in zip(p, q)))
            radii.append(r * s)
    return DiskConfig(c.dim, tuple(centers), tuple(radii))


def partial_compose(x, i, y):
    """``x o_i y``: insert ``y`` into disk ``i`` (0-based) of ``x``."""
    ident = identity_config(x.dim)
    return gamma(x, [y if k == i else ident for k in range(x.arity)])


def check_permutation(sigma, size):
    sigma = tuple(int(s) for s in sigma)
    if len(sigma) != size or sorted(sigma) != list(range(size)):
        raise SizeMismatch(f"{sigma!r} is not a permutation of {size} items")
    return sigma


def permute_list(items, sigma):
    """Item ``i`` moves to position ``sigma[i]``."""
    items = list(items)
    sigma = check_permutation(sigma, len(items))
    out = [None] * len(items)
    for i, s in enumerate(sigma):
        out[s] = items[i]
    return out


def act_sigma(c, sigma):
    """Relabel: the disk at old position ``i`` moves to position ``sigma[i]``."""
    disks = permute_list(c.disks(), sigma)
    return DiskConfig.make(c.dim, disks)


def inverse(sigma):
    out = [0] * len(sigma)
    for i, s in enumerate(sigma):
        out[s] = i
    return tuple(out)


def compose_perm(tau, sigma):
    """``tau after sigma``: item ``i`` goes to ``tau[sigma[i]]``."""
    return tuple(tau[s] for s in sigma)


def block_permutation(sigma, sizes):
    """Permutation moving whole blocks: block ``i`` (of ``sizes[i]`` items) to block slot ``sigma[i]``.

    Inner order of every block is preserved.  ``sizes`` is given in the
    current block order.
    """
    sigma = check_permutation(sigma, len(sizes))
    new_sizes = [0] * len(sizes)
    for i, s in enumerate(sigma):
        new_sizes[s] = sizes[i]
    new_starts = np.concatenate([[0], np.cumsum(new_sizes)]).astype(int)
    out = []
    for i, size in enumerate(sizes):
        base = int(new_starts[sigma[i]])
        out.extend(base + o for o in range(size))
    return tuple(out)


def block_sum(perms):
    """Direct sum of permutations acting on consecutive blocks."""
    out, offset = [], 0
    for p in perms:
        out.extend(offset + s for s in p)
        offset += len(p)
    return tuple(out)


def all_small(c):
    return all(r <= SMALL_RADIUS for r in c.radii)


def has_big(c):
    return any(r >= BIG_RADIUS for r in c.radii)


def big_slot(c):
    """Index of the disk of radius >= 3/4, if any (at most one can fit)."""
    for i, r in enumerate(c.radii):
        if r >= BIG_RADIUS:
            return i
    return None


def max_deviation(a, b):
    """Largest coordinate or radius difference between equal-shaped configs."""
    if a.dim != b.dim or a.arity != b.arity:
        return math.inf
    dev = 0.0
    for (p, r), (q, s) in zip(a.disks(), b.disks()):
        dev = max(dev, abs(r - s), *(abs(x - y) for x, y in zip(p, q)))
    return dev


def configs_close(a, b, tolerance):
    return max_deviation(a, b) <= tolerance


# ---------------------------------------------------------------------------
# random generation

def random_config(rng, dim, arity, big=None, identity_chance=0.0, attempts=200):
    """Rejection-sample a valid configuration.

    ``big`` forces (True) or forbids (False) a disk of radius >= 3/4.
    """
    if arity == 1 and identity_chance and rng.random() < identity_chance:
        return identity_config(dim)
    for _ in range(attempts):
        disks = []
        want_big = big if big is not None else (rng.random() < 0.25)
        if arity and want_big:
            r = rng.uniform(BIG_RADIUS, 0.95 if arity == 1 else 0.8)
            direction = rng.normal(size=dim)
            direction /= np.linalg.norm(direction)
            p = direction * rng.uniform(0.0, 1.0 - r)
            disks.append((tuple(float(x) for x in p), float(r)))
        while len(disks) < arity:
            if want_big:
                r = rng.uniform(0.02, 0.18)
            else:
                r = rng.uniform(0.05, 0.7 if arity == 1 else 0.45)
            p = rng.uniform(-1.0, 1.0, size=dim)
            if np.linalg.norm(p) + r > 1.0:
                continue
            disks.append((tuple(float(x) for x in p), float(r)))
        cfg = DiskConfig.make(dim, disks)
        if validate(cfg).ok:
            order = list(rng.permutation(arity)) if arity else []
            return DiskConfig.make(dim, [disks[i] for i in order])
    # fall back to a deterministic row of small disks
    r = 0.9 / max(2 * arity, 1)
    disks = [(tuple([-0.9 + (2 * i + 1) * r] + [0.0] * (dim - 1)), r) for i in range(arity)]
    return DiskConfig.make(dim, disks)


# ---------------------------------------------------------------------------
# text format
#
#   config <name> dim <n>
#   disk <x1> ... <xn> <radius>
#   ...

def format_configs(named):
    """Serialize ``{name: DiskConfig}`` (insertion order kept)."""
    lines = []
    for name, c in named.items():
        lines.append(f"config {name} dim {c.dim}")
        for p, r in c.disks():
            lines.append("disk " + " ".join(repr(float(x)) for x in (*p, r)))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_configs(text):
    """Parse the configuration text format into an ordered ``{name: DiskConfig}``."""
    named = {}
    name, dim, disks = None, None, []

    def flush():
        if name is not None:
            named[name] = DiskConfig.make(dim, disks)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "config":
            flush()
            if len(parts) != 4 or parts[2] != "dim":
                raise ParseError(f"line {lineno}: expected 'config <name> dim <n>'")
            name = parts[1]
            if name in named:
                raise ParseError(f"line {lineno}: duplicate configuration name {name!r}")
            try:
                dim = int(parts[3])
            except ValueError:
                raise ParseError(f"line {lineno}: bad dimension {parts[3]!r}") from None
            disks = []
        elif parts[0] == "disk":
            if name is None:
                raise ParseError(f"line {lineno}: disk before any config header")
            try:
                nums = [float(x) for x in parts[1:]]
            except ValueError:
                raise ParseError(f"line {lineno}: non-numeric disk entry") from None
            if len(nums) != dim + 1:
                raise ParseError(f"line {lineno}: expected {dim} coordinates and a radius")
            disks.append((tuple(nums[:-1]), nums[-1]))
        else:
            raise ParseError(f"line {lineno}: unknown directive {parts[0]!r}")
    flush()
    return named


def render_svg(c, size=512, labels=None):
    """SVG 1.1 drawing of a planar configuration inside the outlined unit disk."""
    if c.dim != 2:
        raise InvalidInput("only planar configurations can be rendered")
    half = size / 2.0
    unit = half * 0.94
    labels = labels or [str(i + 1) for i in range(c.arity)]
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<circle cx="{half:g}" cy="{half:g}" r="{unit:g}" fill="none" stroke="black" stroke-width="2"/>',
    ]
    for (p, r), label in zip(c.disks(), labels):
        x = half + unit * p[0]
        y = half - unit * p[1]
        out.append(
            f'<circle cx="{x:.3f}" cy="{y:.3f}" r="{unit * r:.3f}" fill="#dde8f5" stroke="#1f4e8c" stroke-width="1.5"/>'
        )
        font = max(10.0, min(28.0, unit * r * 0.8))
        out.append(
            f'<text x="{x:.3f}" y="{y:.3f}" font-size="{font:.1f}" text-anchor="middle" '
            f'dominant-baseline="central" font-family="sans-serif">{label}</text>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"
