import math

import numpy as np
import pytest

from psc_operads import metric_descriptors as md
from psc_operads import warp_profiles as wp
from psc_operads.errors import (
    InvalidDescriptor,
    InvalidParameter,
    NonPositiveRho,
    NotAHeadSite,
    NotATorpedoSite,
    NotAxisSymmetric,
    ParseError,
    WrongBoundaryKind,
)

HALF_PI = 0.5 * math.pi


def att(d, ref):
    return md.find_site(d, ref)[1].attachment


def caps(k, delta=1.0, dim=3):
    """Round node with base cap ``b`` and ``k - 1`` further caps."""
    sites = [md.Site("b", "north", md.FreeTorpedo(delta), base=True)]
    sites += [md.Site(f"c{i}", f"x{i}", md.FreeTorpedo(0.2)) for i in range(1, k)]
    return md.SphereDescriptor(dim, (md.round_node(0, delta, sites),))


class TestValidate:
    def test_constructors_valid(self):
        for d in (md.double_torpedo(), md.three_cap(), md.three_head(), md.round_with_base_head()):
            md.validate_descriptor(d)

    def test_two_bases(self):
        d = md.three_cap()
        d = d.with_node(d.nodes[0].with_site(md.Site("p1", "south-a", md.FreeTorpedo(0.25), base=True)))
        with pytest.raises(InvalidDescriptor):
            md.validate_descriptor(d)

    def test_dangling_seam(self):
        d = md.SphereDescriptor(3, (md.round_node(0, 1.0, (
            md.Site("a", "north", md.Glued(5, "x", md.CylSeam(1.0))),)),))
        with pytest.raises(InvalidDescriptor):
            md.validate_descriptor(d)

    def test_head_angle_checked(self):
        d = md.SphereDescriptor(3, (md.round_node(0, 1.0, (md.Site("h", "north", md.FreeHead(1.0, 2.0)),)),))
        with pytest.raises(InvalidDescriptor):
            md.validate_descriptor(d)

    def test_seam_gap(self):
        assert md.seam_gap(md.LensSeam(1.0, 1.0), md.LensSeam(1.0, math.pi - 1.0)) == pytest.approx(0.0)
        assert md.seam_gap(md.CylSeam(1.0), md.LensSeam(1.0, 1.0)) == math.inf


class TestRescale:
    def test_round_and_torpedo(self):
        d = md.rescale_desc(md.double_torpedo(0.5), 4.0)
        assert d.nodes[0].body == md.Round(1.0)
        assert att(d, "north") == md.FreeTorpedo(1.0)

    def test_head(self):
        d = md.SphereDescriptor(3, (md.round_node(0, 1.0, (md.Site("h", "north", md.FreeHead(1.0, math.pi / 4)),)),))
        out = md.rescale_desc(d, 4.0)
        assert att(out, "h") == md.FreeHead(2.0, HALF_PI)

    def test_opaque_scale_accumulates(self):
        out = md.rescale_desc(md.opaque("g", scale=2.0), 3.0)
        assert out.nodes[0].body.scale == pytest.approx(6.0)

    def test_bad_scale(self):
        with pytest.raises(InvalidParameter):
            md.rescale_desc(md.double_torpedo(), 0.0)


class TestCaps:
    def test_uncap_recap(self):
        d = md.double_torpedo()
        open_ = md.uncap(d, "south")
        assert md.rho(open_) == 1.0
        assert md.recap(open_, "south") == d

    def test_uncap_needs_torpedo(self):
        with pytest.raises(NotATorpedoSite):
            md.uncap(md.three_head(), "p1")

    def test_recap_needs_cylinder(self):
        with pytest.raises(WrongBoundaryKind):
            md.recap(md.double_torpedo(), "north")

    def test_rho_needs_single_boundary(self):
        with pytest.raises(InvalidDescriptor):
            md.rho(md.double_torpedo())

    def test_find_site_ambiguous(self):
        g = md.join_ij("PI_L", md.double_torpedo(), md.double_torpedo(), "south", "south")
        with pytest.raises(InvalidParameter):
            md.find_site(g, "north")


class TestJoinCyl:
    def test_left_rule_rescales_right(self):
        g0 = md.uncap(md.double_torpedo(0.3), "south")
        g1 = md.uncap(md.double_torpedo(0.6), "south")
        out = md.join_cyl("PI_L", g0, g1)
        md.validate_descriptor(out)
        assert [nd.body.lam for nd in out.nodes] == pytest.approx([0.3, 0.3])
        right = md.join_cyl("PI_R", g0, g1)
        assert [nd.body.lam for nd in right.nodes] == pytest.approx([0.6, 0.6])

    def test_base_kept_from_left(self):
        out = md.join_ij("PI_L", caps(3), caps(2), "c1", "c1")
        assert out.base() == (0, "b")

    def test_cap_count(self):
        out = md.join_ij("PI_L", caps(4), caps(3), "c1", "b")
        assert len(md.free_caps(out)) == 5

    def test_unknown_rule(self):
        with pytest.raises(InvalidParameter):
            md.join_cyl("PI_M", md.uncap(md.double_torpedo(), "south"), md.uncap(md.double_torpedo(), "south"))

    def test_mu_torp(self):
        out = md.mu_torp(md.three_cap(), "PI_R", md.double_torpedo(), md.double_torpedo())
        md.validate_descriptor(out)
        assert len(out.nodes) == 3
        assert len(md.free_caps(out)) == 3
        assert md.find_site(out, out.base())[1].id == "p0"

    def test_axis_profile_of_cyl_join(self):
        out = md.join_ij("PI_L", md.double_torpedo(), md.double_torpedo(), "south", "north")
        prof = md.axis_profile(out)
        assert prof.length == pytest.approx(math.pi)
        assert wp.verify_psc(wp.WarpedMetric(3, prof), 1e-3).min_R > 0


class TestHeads:
    def test_cut_hemisphere(self):
        out = md.cut(md.round_with_base_head(), "base", HALF_PI)
        assert att(out, "base") == md.LensBoundary(1.0, HALF_PI)
        assert out.base() is None

    def test_cut_clamped(self):
        d = md.three_head(r=math.pi / 4)
        out = md.cut(d, "p1", 3.0)
        assert att(out, "p1").r == pytest.approx(math.pi - 3 * math.pi / 4)

    def test_cut_needs_positive_rho(self):
        with pytest.raises(NonPositiveRho):
            md.cut(md.three_head(), "p1", 0.0)

    def test_cut_needs_head(self):
        with pytest.raises(NotAHeadSite):
            md.cut(md.three_cap(), "p1", 1.0)

    def test_mov_fixed_point(self):
        d = md.three_head()
        assert md.mov(d, "p1", 1.0, HALF_PI) is d

    def test_mov_rescales(self):
        out = md.mov(md.three_head(), "p1", 2.0, math.pi)
        assert att(out, "p1") == md.FreeHead(2.0, math.pi)
        assert out.nodes[0].body.lam == pytest.approx(2.0)

    def test_push_bulb(self):
        out = md.push_cap(md.round_with_base_head(), 0, "q", md.BulbPush(0.5, 0.5))
        a = att(out, "q")
        assert isinstance(a, md.FreeBulb)
        assert 0 < a.delta <= a.r

    def test_push_duplicate_tag(self):
        with pytest.raises(InvalidParameter):
            md.push_cap(md.three_cap(), 0, "p1", md.TorpedoPush(0.1))

    def test_join_head_round(self):
        g = md.round_with_base_head()
        h = md.round_with_base_head()
        out = md.join_head(1.0, HALF_PI, g, "base", h, "base")
        md.validate_descriptor(out)
        prof = md.axis_profile(out)
        assert prof.length == pytest.approx(math.pi)
        ts = np.linspace(0.1, math.pi - 0.1, 50)
        assert np.allclose(wp.scalar_curvature(wp.WarpedMetric(3, prof), ts), 6.0)

    def test_mu_head_counts(self):
        out = md.mu_head(md.three_head(), md.three_head(), md.three_head())
        md.validate_descriptor(out)
        assert len(md.free_heads(out)) == 5


class TestAxis:
    def test_double_torpedo(self):
        prof = md.axis_profile(md.double_torpedo(1.0))
        ts = np.linspace(0.0, math.pi, 100)
        assert np.allclose(prof.eta(ts), wp.glue_profiles(wp.torpedo_profile(1.0), wp.torpedo_profile(1.0)).eta(ts))

    def test_small_torpedo_neck(self):
        d = md.SphereDescriptor(3, (md.round_node(0, 1.0, (
            md.Site("n", "north", md.FreeTorpedo(0.3)),)),))
        prof = md.axis_profile(d)
        assert wp.verify_psc(wp.WarpedMetric(3, prof), prof.length / 4000).min_R > 0

    def test_opaque(self):
        with pytest.raises(NotAxisSymmetric):
            md.axis_profile(md.opaque("g"))

    def test_off_axis_site(self):
        with pytest.raises(NotAxisSymmetric):
            md.axis_profile(md.three_cap())


class TestCanonical:
    def test_site_order_irrelevant(self):
        d = md.three_cap()
        nd = d.nodes[0]
        shuffled = d.with_node(md.Node(0, nd.body, tuple(reversed(nd.sites))))
        assert md.canonical_equal(d, shuffled)

    def test_scale_matters(self):
        assert not md.canonical_equal(md.three_cap(), md.rescale_desc(md.three_cap(), 4.0))

    def test_tags(self):
        d = md.double_torpedo()
        nd = d.nodes[0]
        renamed = d.with_node(md.Node(0, nd.body, (
            md.Site("top", "north", md.FreeTorpedo(1.0), base=True),
            md.Site("bottom", "south", md.FreeTorpedo(1.0)),
        )))
        assert not md.canonical_equal(d, renamed)
        assert md.canonical_equal(d, renamed, ignore_tags=True)

    def test_absorb_round_cap(self):
        g = md.three_head()
        cap = md.round_with_base_head(extra=(md.Site("in", "south", md.FreeHead(1.0, HALF_PI)),))
        joined = md.join_head(1.0, HALF_PI, cap, "in", g, "p0")
        assert len(joined.nodes) == 2
        assert md.canonical_equal(joined, g)

    def test_hemisphere_cap_is_kept(self):
        g = md.three_head()
        joined = md.join_head(1.0, HALF_PI, md.round_with_base_head(), "base", g, "p1")
        assert len(md.absorb_caps(joined).nodes) == 2


class TestSerialization:
    def test_roundtrip_random(self):
        rng = np.random.default_rng(5)
        for _ in range(30):
            d = md.random_descriptor(rng)
            assert md.loads(md.dumps(d)) == d

    def test_roundtrip_lens_with_neck(self):
        d = md.SphereDescriptor(3, (md.round_node(0, 1.0, (
            md.Site("x", "north", md.LensBoundary(1.0, 2.0, (0.5, 0.4, 0.3))),)),))
        assert md.loads(md.dumps(d)) == d

    @pytest.mark.parametrize("text", ["{", '{"schema": "other"}', '{"schema": "psc-descriptor/1"}'])
    def test_bad_input(self, text):
        with pytest.raises(ParseError):
            md.loads(text)

    def test_summary(self):
        text = md.summary(md.three_cap())
        assert "[base]" in text and text.startswith("dim 3, 1 node(s)")
