"""Rotationally symmetric warped metrics ``dt^2 + eta(t)^2 ds^2_{n-1}``.

A :class:`Profile` is a chain of pieces.  Every piece owns a *native* function
(a sine arc, a constant, a line, a smooth blend, a neck, or a spline) and an
affine placement into the radial coordinate: a start offset, a length scale
``k`` and an optional orientation flip.  A piece placed with scale ``k``
evaluates to ``k * f(s)`` at native coordinate ``s = (t - start) / k``, which
is exactly the profile of the metric ``k^2 g``.  Rescaling and reversing are
therefore exact and cheap.

Scalar curvature is evaluated from the closed form

    R = -2 (n-1) eta'' / eta + (n-1)(n-2) (1 - eta'^2) / eta^2

using analytic derivatives wherever the piece kind has them.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from . import tolerances as tol
from .errors import (
    AngleOutOfRange,
    InvalidParameter,
    NonPositiveProfile,
    NonPositiveScale,
    OutOfDomain,
    SearchFailed,
    SeamMismatch,
    TipSingularity,
)

_GL64 = leggauss(64)
_GL16 = leggauss(16)

HALF_PI = 0.5 * math.pi


# ---------------------------------------------------------------------------
# the flat-ending bump used by the torpedo blend

def bump(u):
    """``exp(-u^2 / (1-u))`` on [0, 1): value 1 at 0, flat of all orders at 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = u < 1.0
    ui = u[inside]
    out[inside] = np.exp(-ui * ui / (1.0 - ui))
    return out


def bump_slope(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = u < 1.0
    ui = u[inside]
    gap = 1.0 - ui
    out[inside] = -np.exp(-ui * ui / gap) * ui * (2.0 - ui) / (gap * gap)
    return out


def bump_integral(u):
    """Integral of :func:`bump` from 0 to ``u``, by 64-point Gauss-Legendre."""
    u = np.asarray(u, dtype=float)
    nodes, weights = _GL64
    half = 0.5 * u[..., None]
    vals = bump(half * (nodes + 1.0))
    return (half * vals * weights).sum(axis=-1)


@lru_cache(maxsize=None)
def torpedo_join():
    """Return ``(t0, I)`` for the unit torpedo.

    ``t0`` is where the sine arc hands over to the blend and ``I`` is the
    integral of the bump over [0, 1].  ``t0`` solves
    ``sin t0 + cos t0 * (pi/2 - t0) * I = 1`` so the blend ends at height 1.
    """
    total = float(bump_integral(np.array(1.0)))

    def height_gap(t0):
        return math.sin(t0) + math.cos(t0) * (HALF_PI - t0) * total - 1.0

    t0 = brentq(height_gap, 0.1, 0.25 * math.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return t0, total


# ---------------------------------------------------------------------------
# piece kinds; ``values`` returns (f, f', f'') in native coordinates

class SinKind:
    name = "sin"
    analytic = True

    def __init__(self, amplitude):
        self.amplitude = float(amplitude)

    def values(self, s):
        a = self.amplitude
        x = np.asarray(s, dtype=float) / a
        sx = np.sin(x)
        return a * sx, np.cos(x), -sx / a

    def tip_radius(self):
        return self.amplitude

    def describe(self):
        return {"amplitude": self.amplitude}


class ConstKind:
    name = "const"
    analytic = True

    def __init__(self, value):
        self.value = float(value)

    def values(self, s):
        s = np.asarray(s, dtype=float)
        return np.full_like(s, self.value), np.zeros_like(s), np.zeros_like(s)

    def tip_radius(self):
        return math.inf

    def describe(self):
        return {"value": self.value}


class LineKind:
    name = "line"
    analytic = True

    def __init__(self, slope, intercept=0.0):
        self.slope = float(slope)
        self.intercept = float(intercept)

    def values(self, s):
        s = np.asarray(s, dtype=float)
        return self.intercept + self.slope * s, np.full_like(s, self.slope), np.zeros_like(s)

    def tip_radius(self):
        # a unit-slope cone point is flat space; no curvature scale
        return math.inf

    def describe(self):
        return {"slope": self.slope, "intercept": self.intercept}


class BlendKind:
    """Concave blend with derivative ``slope0 * bump((s - s0) / width)``."""

    name = "blend"
    analytic = True

    def __init__(self, s0, width, slope0, base):
        self.s0 = float(s0)
        self.width = float(width)
        self.slope0 = float(slope0)
        self.base = float(base)

    def values(self, s):
        u = (np.asarray(s, dtype=float) - self.s0) / self.width
        u = np.clip(u, 0.0, 1.0)
        f = self.base + self.slope0 * self.width * bump_integral(u)
        return f, self.slope0 * bump(u), self.slope0 * bump_slope(u) / self.width

    def tip_radius(self):
        return math.inf

    def describe(self):
        return {"s0": self.s0, "width": self.width, "slope0": self.slope0, "base": self.base}


class NeckKind:
    """Neck whose slope obeys ``1 - eta'^2 = (delta / eta)^power``.

    Native coordinate ``s`` runs from the flat end (``eta = delta``,
    ``eta' = 0``) up to ``eta = delta * (1 + z_max^2)``.  With
    ``0 < power < n - 2`` the curvature in dimension ``n`` is exactly
    ``(n-1)(n-2-power)(delta/eta)^power / eta^2 > 0``.

    The map from ``s`` to ``eta`` is implicit; writing ``eta = delta(1+z^2)``
    the arclength ``s = delta * S(z)`` has a smooth integrand, so ``z`` is
    recovered by Newton steps seeded from a tabulated ``S``.
    """

    name = "neck"
    analytic = True

    def __init__(self, delta, power, z_max, table_size=256):
        self.delta = float(delta)
        self.power = float(power)
        self.z_max = float(z_max)
        self._z = np.linspace(0.0, self.z_max, table_size + 1)
        pieces = self._integral(self._z[:-1], self._z[1:])
        self._s = np.concatenate([[0.0], np.cumsum(pieces)])
        self.native_length = self.delta * self._s[-1]

    def _slope_ratio(self, z):
        # (1 - (1+z^2)^-m) / z^2, continuous at z = 0
        z2 = np.asarray(z, dtype=float) ** 2
        safe = np.where(z2 > 0.0, z2, 1.0)
        ratio = -np.expm1(-self.power * np.log1p(safe)) / safe
        return np.where(z2 > 0.0, ratio, self.power)

    def _integrand(self, z):
        return 2.0 / np.sqrt(self._slope_ratio(z))

    def _integral(self, a, b):
        nodes, weights = _GL16
        a = np.asarray(a, dtype=float)[..., None]
        b = np.asarray(b, dtype=float)[..., None]
        half = 0.5 * (b - a)
        z = a + half * (nodes + 1.0)
        return (half * self._integrand(z) * weights).sum(axis=-1)

    def _arclength(self, z):
        idx = np.clip(np.searchsorted(self._z, z, side="right") - 1, 0, len(self._z) - 2)
        return self._s[idx] + self._integral(self._z[idx], z)

    def z_of(self, s):
        target = np.clip(np.asarray(s, dtype=float) / self.delta, 0.0, self._s[-1])
        z = np.interp(target, self._s, self._z)
        for _ in range(8):
            step = (self._arclength(z) - target) / self._integrand(z)
            z = np.clip(z - step, 0.0, self.z_max)
            if np.all(np.abs(step) <= 1e-15 * (1.0 + z)):
                break
        return z

    def values(self, s):
        z = self.z_of(s)
        z2 = z * z
        eta = self.delta * (1.0 + z2)
        log_term = self.power * np.log1p(z2)
        ratio = np.exp(-log_term)
        slope = np.sqrt(-np.expm1(-log_term))
        return eta, slope, self.power * ratio / (2.0 * eta)

    def tip_radius(self):
        return math.inf

    def describe(self):
        return {"delta": self.delta, "power": self.power, "z_max": self.z_max}


class SampledKind:
    """Cubic spline through ``(t, eta)`` samples; derivatives by 4th-order FD."""

    name = "sampled"
    analytic = False

    def __init__(self, ts, etas, fd_step=None):
        ts = np.asarray(ts, dtype=float)
        etas = np.asarray(etas, dtype=float)
        if ts.ndim != 1 or ts.shape != etas.shape or len(ts) < 4:
            raise InvalidParameter("sampled piece needs matching 1-d grids of at least 4 points")
        if np.any(np.diff(ts) <= 0):
            raise InvalidParameter("sample abscissae must be strictly increasing")
        self.ts = ts
        self.etas = etas
        self.spline = CubicSpline(ts, etas)
        self.fd_step = fd_step if fd_step is not None else 1e-4 * (ts[-1] - ts[0])

    def values(self, s):
        s = np.asarray(s, dtype=float)
        return (self.spline(s),) + fd_derivatives(self.spline, s, self.fd_step)

    def tip_radius(self):
        return math.inf

    def describe(self):
        return {"points": len(self.ts)}


def fd_derivatives(func, s, h):
    """Fourth-order central differences for the first two derivatives."""
    f_m2, f_m1, f_0, f_p1, f_p2 = (func(s + k * h) for k in (-2, -1, 0, 1, 2))
    d1 = (-f_p2 + 8.0 * f_p1 - 8.0 * f_m1 + f_m2) / (12.0 * h)
    d2 = (-f_p2 + 16.0 * f_p1 - 30.0 * f_0 + 16.0 * f_m1 - f_m2) / (12.0 * h * h)
    return d1, d2


# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Piece:
    kind: object
    lo: float          # native interval
    hi: float
    start: float       # radial coordinate of the left end
    scale: float = 1.0
    flip: bool = False

    @property
    def length(self):
        return (self.hi - self.lo) * self.scale

    @property
    def end(self):
        return self.start + self.length

    def native(self, t):
        d = (np.asarray(t, dtype=float) - self.start) / self.scale
        return self.hi - d if self.flip else self.lo + d

    def values(self, t):
        f, f1, f2 = self.kind.values(self.native(t))
        sign = -1.0 if self.flip else 1.0
        return self.scale * f, sign * f1, f2 / self.scale

    def moved(self, start=None, scale=None, flip=None):
        return Piece(
            self.kind,
            self.lo,
            self.hi,
            self.start if start is None else start,
            self.scale if scale is None else scale,
            self.flip if flip is None else flip,
        )


def _seam_gap(left_vals, right_vals):
    value_gap = abs(float(left_vals[0]) - float(right_vals[0]))
    slope_gap = abs(float(left_vals[1]) - float(right_vals[1]))
    size = max(1.0, abs(float(left_vals[0])))
    return value_gap / size, slope_gap


class Profile:
    """A contiguous chain of pieces covering ``[start, end]``."""

    def __init__(self, pieces, check=True):
        pieces = tuple(pieces)
        if not pieces:
            raise InvalidParameter("a profile needs at least one piece")
        for p in pieces:
            if not p.length > 0:
                raise InvalidParameter("profile pieces must have positive length")
        for a, b in zip(pieces, pieces[1:]):
            if abs(a.end - b.start) > 1e-12 * max(1.0, abs(a.end)):
                raise InvalidParameter(f"pieces are not contiguous at t={a.end!r}")
        self.pieces = pieces
        self._starts = np.array([p.start for p in pieces])
        if check:
            self.check_seams()
            self.check_ends()

    # -- geometry of the domain
    @property
    def start(self):
        return self.pieces[0].start

    @property
    def end(self):
        return self.pieces[-1].end

    @property
    def length(self):
        return self.end - self.start

    @property
    def breakpoints(self):
        return [p.end for p in self.pieces[:-1]]

    def start_values(self):
        p = self.pieces[0]
        return tuple(float(v) for v in p.values(p.start))

    def end_values(self):
        p = self.pieces[-1]
        return tuple(float(v) for v in p.values(p.end))

    def check_seams(self):
        for a, b in zip(self.pieces, self.pieces[1:]):
            va = a.values(a.end)
            vb = b.values(b.start)
            gap = _seam_gap(va, vb)
            if gap[0] > tol.GLUE or gap[1] > tol.GLUE:
                raise SeamMismatch(f"pieces disagree at t={a.end!r}: value gap {gap[0]:.3g}, slope gap {gap[1]:.3g}", gap)

    def check_ends(self):
        for eta, slope in (self.start_values()[:2], self.end_values()[:2]):
            if eta < -tol.GLUE:
                raise NonPositiveProfile("profile is negative at an endpoint")
            if abs(eta) <= tol.GLUE and abs(abs(slope) - 1.0) > 1e-6:
                raise InvalidParameter("a profile vanishing at an endpoint must have unit slope there")
        for p in self.pieces:
            mid = 0.5 * (p.start + p.end)
            if float(p.values(mid)[0]) <= 0.0:
                raise NonPositiveProfile(f"profile is not positive at t={mid!r}")

    # -- tips
    def left_tip(self):
        return abs(self.start_values()[0]) <= tol.GLUE * max(1.0, self.pieces[0].scale)

    def right_tip(self):
        return abs(self.end_values()[0]) <= tol.GLUE * max(1.0, self.pieces[-1].scale)

    def tip_radius(self, side):
        p = self.pieces[0] if side == "left" else self.pieces[-1]
        return p.kind.tip_radius() * p.scale

    def tip_exclusion(self, side):
        """Width of the tip neighbourhood excluded from sampling."""
        radius = self.tip_radius(side)
        if not math.isfinite(radius):
            p = self.pieces[0] if side == "left" else self.pieces[-1]
            radius = p.scale
        return tol.TIP_FRACTION * radius

    # -- evaluation
    def piece_index(self, t):
        return np.clip(np.searchsorted(self._starts, t, side="right") - 1, 0, len(self.pieces) - 1)

    def evaluate(self, t):
        """Return ``(eta, eta', eta'')`` at ``t`` (scalar or array)."""
        t_arr = np.asarray(t, dtype=float)
        slack = 1e-12 * max(1.0, abs(self.end))
        if np.any(t_arr < self.start - slack) or np.any(t_arr > self.end + slack):
            raise OutOfDomain(f"t outside [{self.start!r}, {self.end!r}]")
        flat = np.atleast_1d(t_arr)
        idx = self.piece_index(flat)
        out = np.empty((3,) + flat.shape)
        for i in np.unique(idx):
            mask = idx == i
            vals = self.pieces[i].values(flat[mask])
            for k in range(3):
                out[k][mask] = vals[k]
        if t_arr.ndim == 0:
            return tuple(float(v[0]) for v in out)
        return out[0], out[1], out[2]

    def eta(self, t):
        return self.evaluate(t)[0]

    def __call__(self, t):
        return self.eta(t)

    # -- transformations
    def scaled(self, k):
        """Profile of the metric ``k^2 g``: ``t -> k * eta(t / k)``."""
        return Profile([p.moved(start=p.start * k, scale=p.scale * k) for p in self.pieces], check=False)

    def shifted(self, d):
        return Profile([p.moved(start=p.start + d) for p in self.pieces], check=False)

    def reversed(self):
        a, b = self.start, self.end
        return Profile(
            [p.moved(start=a + b - p.end, flip=not p.flip) for p in reversed(self.pieces)],
            check=False,
        )

    def concat(self, other):
        """Append ``other`` (already oriented) after this profile, checking the seam."""
        other = other.shifted(self.end - other.start)
        gap = _seam_gap(self.end_values(), other.start_values())
        if gap[0] > tol.GLUE or gap[1] > tol.GLUE:
            raise SeamMismatch(
                f"seam mismatch: value gap {gap[0]:.3g}, slope gap {gap[1]:.3g}", gap
            )
        joined = self.pieces + tuple(
            p if i else p.moved(start=self.end) for i, p in enumerate(other.pieces)
        )
        return Profile(joined, check=False)

    def describe(self):
        return [
            {
                "kind": p.kind.name,
                "interval": [p.start, p.end],
                "scale": p.scale,
                "reversed": p.flip,
                "params": p.kind.describe(),
            }
            for p in self.pieces
        ]

    def __repr__(self):
        kinds = ",".join(p.kind.name for p in self.pieces)
        return f"Profile([{self.start:.6g}, {self.end:.6g}]; {kinds})"


@dataclass(frozen=True)
class WarpedMetric:
    dim: int
    profile: Profile

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise InvalidParameter("dimension must be an integer >= 2")


# ---------------------------------------------------------------------------
# constructors

def sine_profile(lam, length=None, phase=0.0):
    """``lam * sin((t + phase) / lam)`` on ``[0, length]`` (default the full sphere)."""
    if not lam > 0:
        raise InvalidParameter("amplitude must be positive")
    if length is None:
        length = math.pi * lam - phase
    return Profile([Piece(SinKind(lam), phase, phase + length, 0.0)])


def round_profile(lam):
    return sine_profile(lam)


def constant_profile(value, length):
    return Profile([Piece(ConstKind(value), 0.0, length, 0.0)])


def line_profile(slope, intercept, length):
    return Profile([Piece(LineKind(slope, intercept), 0.0, length, 0.0)])


def sampled_profile(ts, etas, fd_step=None):
    kind = SampledKind(ts, etas, fd_step)
    return Profile([Piece(kind, kind.ts[0], kind.ts[-1], 0.0)])


@lru_cache(maxsize=None)
def _unit_torpedo():
    t0, _ = torpedo_join()
    c0 = math.cos(t0)
    arc = Piece(SinKind(1.0), 0.0, t0, 0.0)
    blend = Piece(BlendKind(t0, HALF_PI - t0, c0, math.sin(t0)), t0, HALF_PI, t0)
    return Profile([arc, blend])


def torpedo_profile(delta):
    """Torpedo of radius ``delta`` on ``[0, delta*pi/2]``."""
    if not delta > 0 or not math.isfinite(delta):
        raise InvalidParameter("torpedo radius must be positive")
    unit = _unit_torpedo()
    return unit if delta == 1.0 else unit.scaled(float(delta))


def lens_profile(lam, r):
    """Geodesic ball of radius ``r`` in the round sphere of radius ``lam``."""
    if not lam > 0:
        raise InvalidParameter("lens radius must be positive")
    if not 0.0 < r < math.pi * lam:
        raise AngleOutOfRange(f"lens angle {r!r} outside (0, {math.pi * lam!r})")
    return Profile([Piece(SinKind(lam), 0.0, float(r), 0.0)])


@dataclass(frozen=True)
class LensPullback:
    """The lens as a metric ``speed^2 dt^2 + eta(speed t)^2 ds^2`` on (0, 1]."""

    speed: float
    profile: Profile

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t <= 0.0) or np.any(t > 1.0):
            raise OutOfDomain("pullback parameter must lie in (0, 1]")
        return self.profile.eta(self.speed * t)


def lens_pullback(lam, r):
    return LensPullback(float(r), lens_profile(lam, r))


def glue_profiles(left, right):
    """Glue ``right``, given in its own orientation, onto the end of ``left``.

    The seam is ``left``'s end and ``right``'s end; ``right`` is reversed so
    its far end meets the seam.  Values must agree and slopes must be
    opposite, within the glue tolerance.
    """
    lv = left.end_values()
    rv = right.end_values()
    value_gap = abs(lv[0] - rv[0]) / max(1.0, abs(lv[0]))
    slope_gap = abs(lv[1] + rv[1])
    if value_gap > tol.GLUE or slope_gap > tol.GLUE:
        raise SeamMismatch(
            f"cannot glue: boundary values {lv[0]!r} vs {rv[0]!r}, slopes {lv[1]!r} vs {-rv[1]!r}",
            (value_gap, slope_gap),
        )
    return left.concat(right.reversed())


# ---------------------------------------------------------------------------
# curvature

def curvature_from_derivatives(dim, eta, d1, d2):
    n = dim
    eta = np.asarray(eta, dtype=float)
    d1 = np.asarray(d1, dtype=float)
    one_minus = (1.0 - d1) * (1.0 + d1)
    return (n - 1) * (-2.0 * np.asarray(d2) / eta + (n - 2) * one_minus / (eta * eta))


def _derivatives(profile, t, derivatives, fd_step):
    if derivatives == "analytic":
        return profile.evaluate(t)
    if derivatives == "fd":
        h = 1e-3 if fd_step is None else fd_step
        eta = profile.eta(t)
        d1, d2 = fd_derivatives(_extended_eta(profile), np.asarray(t, dtype=float), h)
        return eta, d1, d2
    raise InvalidParameter("derivatives must be 'analytic' or 'fd'")


def _extended_eta(profile):
    # finite-difference stencils may poke past the ends; extend by the end pieces
    first, last = profile.pieces[0], profile.pieces[-1]

    def eta(t):
        t = np.asarray(t, dtype=float)
        out = np.empty_like(t)
        below = t < profile.start
        above = t > profile.end
        mid = ~(below | above)
        if np.any(mid):
            out[mid] = profile.evaluate(t[mid])[0]
        if np.any(below):
            out[below] = first.values(t[below])[0]
        if np.any(above):
            out[above] = last.values(t[above])[0]
        return out

    return eta


def scalar_curvature(m, t, derivatives="analytic", fd_step=None):
    """Scalar curvature of ``m`` at radial coordinate(s) ``t``."""
    p = m.profile
    t_arr = np.asarray(t, dtype=float)
    slack = 1e-12 * max(1.0, abs(p.end))
    if np.any(t_arr < p.start - slack) or np.any(t_arr > p.end + slack):
        raise OutOfDomain(f"t outside [{p.start!r}, {p.end!r}]")
    if p.left_tip() and np.any(t_arr <= p.start + p.tip_exclusion("left")):
        raise TipSingularity("t lies inside the excluded tip neighbourhood")
    if p.right_tip() and np.any(t_arr >= p.end - p.tip_exclusion("right")):
        raise TipSingularity("t lies inside the excluded tip neighbourhood")
    eta, d1, d2 = _derivatives(p, t_arr, derivatives, fd_step)
    if np.any(np.asarray(eta) <= 0.0):
        raise NonPositiveProfile("profile is not positive at the requested point")
    R = curvature_from_derivatives(m.dim, eta, d1, d2)
    return float(R) if np.ndim(R) == 0 else R


def rescale(m, c):
    """Warped metric of ``c * g``; curvature scales by ``1/c``."""
    if not c > 0 or not math.isfinite(c):
        raise NonPositiveScale(f"scale must be positive, got {c!r}")
    if c == 1.0:
        return m
    return WarpedMetric(m.dim, m.profile.scaled(math.sqrt(c)))


# ---------------------------------------------------------------------------
# sampling and verification

@dataclass(frozen=True)
class PscReport:
    min_R: float
    argmin_t: float
    samples: int
    tip_values: tuple = ()

    def as_dict(self):
        return {
            "min_R": self.min_R,
            "argmin_t": self.argmin_t,
            "samples": self.samples,
            "tip_values": list(self.tip_values),
        }


def sample_grid(profile, grid_step):
    lo = profile.start + (profile.tip_exclusion("left") if profile.left_tip() else 0.0)
    hi = profile.end - (profile.tip_exclusion("right") if profile.right_tip() else 0.0)
    count = int(math.ceil((hi - lo) / grid_step)) + 1
    return np.linspace(lo, hi, max(count, 2))


def _tip_model_values(m):
    p = m.profile
    n = m.dim
    out = []
    for side, is_tip in (("left", p.left_tip()), ("right", p.right_tip())):
        if is_tip:
            radius = p.tip_radius(side)
            out.append(0.0 if math.isinf(radius) else n * (n - 1) / radius ** 2)
    return tuple(out)


def verify_psc(m, grid_step=1e-3):
    """Sample the curvature on a grid plus both sides of every breakpoint."""
    if not grid_step > 0:
        raise InvalidParameter("grid_step must be positive")
    p = m.profile
    ts = sample_grid(p, grid_step)
    eta, d1, d2 = p.evaluate(ts)
    R = curvature_from_derivatives(m.dim, eta, d1, d2)
    values = [R]
    where = [ts]
    for a, b in zip(p.pieces, p.pieces[1:]):
        for piece, t in ((a, a.end), (b, b.start)):
            e, f1, f2 = piece.values(np.array([t]))
            values.append(curvature_from_derivatives(m.dim, e, f1, f2))
            where.append(np.array([t]))
    values = np.concatenate(values)
    where = np.concatenate(where)
    i = int(np.argmin(values))
    min_R, argmin = float(values[i]), float(where[i])
    tips = _tip_model_values(m)
    for v in tips:
        if v < min_R:
            min_R = v
    return PscReport(min_R, argmin, int(len(values)), tips)


@dataclass(frozen=True)
class FdDiscrepancy:
    first: float
    second: float


def fd_check(p, t, h):
    """Compare analytic derivatives with 2nd-order central differences."""
    if not h > 0:
        raise InvalidParameter("step must be positive")
    i = int(p.piece_index(np.array([t]))[0])
    piece = p.pieces[i]
    if t - h < piece.start or t + h > piece.end:
        raise OutOfDomain("the difference stencil must stay inside one piece")
    f_m, f_0, f_p = (float(piece.values(np.array([x]))[0][0]) for x in (t - h, t, t + h))
    _, d1, d2 = (float(v[0]) for v in piece.values(np.array([t])))
    fd1 = (f_p - f_m) / (2.0 * h)
    fd2 = (f_p - 2.0 * f_0 + f_m) / (h * h)
    return FdDiscrepancy(abs(d1 - fd1), abs(d2 - fd2))


def profile_csv(m, grid_step=1e-3):
    """Samples as CSV text with header ``t,eta,eta_p,eta_pp,R``."""
    ts = sample_grid(m.profile, grid_step)
    eta, d1, d2 = m.profile.evaluate(ts)
    R = curvature_from_derivatives(m.dim, eta, d1, d2)
    lines = ["t,eta,eta_p,eta_pp,R"]
    for row in zip(ts, eta, d1, d2, R):
        lines.append(",".join(f"{float(v):.12g}" for v in row))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# bulbs

@dataclass(frozen=True)
class Bulb:
    profile: Profile
    r_prime: float
    delta: float
    steepness: float = math.nan
    bend_angle: float = math.nan
    outer_iterations: int = 0

    def __iter__(self):
        return iter((self.profile, self.r_prime, self.delta))


def _bulb_candidate(lam, delta, power):
    # bend off the sphere where the neck law reaches slope 0 exactly at delta
    sin_bend = (delta / lam) ** (power / (power + 2.0))
    bend = math.asin(min(sin_bend, 1.0))
    height = lam * sin_bend
    z_max = math.sqrt(max(height / delta - 1.0, 0.0))
    head = Profile([Piece(SinKind(lam), 0.0, lam * (math.pi - bend), 0.0)], check=False)
    neck_kind = NeckKind(delta, power, z_max)
    neck = Profile([Piece(neck_kind, 0.0, neck_kind.native_length, 0.0, flip=True)], check=False)
    cap = torpedo_profile(delta).reversed()
    return head.concat(neck).concat(cap), bend


def _required_power(lam, r, delta):
    """Smallest neck power whose bend point stays inside the head angle."""
    ratio = math.log(delta / lam) / math.log(math.sin(r / lam))
    if ratio <= 1.0:
        return math.inf
    return 2.0 / (ratio - 1.0)


@lru_cache(maxsize=4096)
def bulb_profile(lam, r, n, max_outer=64, inner_steps=8):
    """Bulb of head radius ``lam`` and head angle ``r`` in dimension ``n``.

    The axis profile is the round head, a positive-curvature neck down to
    radius ``delta`` and a reversed torpedo cap of radius ``delta``.  The
    search starts at the largest admissible ``delta``, bisects the neck
    steepness between the least admissible value and ``n - 2``, and halves
    ``delta`` whenever no steepness passes the sampled positivity check.
    """
    lam = float(lam)
    r = float(r)
    if int(n) != n or n < 3:
        raise InvalidParameter("bulbs need dimension n >= 3")
    if not lam > 0:
        raise InvalidParameter("head radius must be positive")
    if not 0.0 < r <= HALF_PI * lam * (1.0 + tol.SAME_PARAMS):
        raise AngleOutOfRange(f"head angle {r!r} outside (0, {HALF_PI * lam!r}]")
    if r >= HALF_PI * lam * (1.0 - tol.SAME_PARAMS):
        return Bulb(round_profile(lam), HALF_PI * lam, lam, outer_iterations=0)

    delta = min(lam * math.sin(r / lam), 2.0 * r / math.pi)
    top = n - 2.0
    for outer in range(1, max_outer + 1):
        need = _required_power(lam, r, delta)
        if need < top:
            lo, hi = need, top
            for _ in range(inner_steps):
                power = 0.5 * (lo + hi)
                profile, bend = _bulb_candidate(lam, delta, power)
                step = profile.length / 4000.0
                report = verify_psc(WarpedMetric(n, profile), step)
                if report.min_R > 0.0:
                    return Bulb(profile, 0.5 * math.pi * delta, delta, power, bend, outer)
                hi = power
        delta *= 0.5
    raise SearchFailed(f"no positive neck found for lam={lam!r}, r={r!r}, n={n}")
