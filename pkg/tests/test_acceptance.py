"""The eleven quantitative acceptance checks, each at its stated tolerance."""

import math

import numpy as np

from psc_operads import little_disks as ld
from psc_operads import metric_descriptors as md
from psc_operads import psc_action as pa
from psc_operads import tree_operad as tr
from psc_operads import warp_profiles as wp


def _rel(a, b):
    return np.abs(np.asarray(a) - np.asarray(b)) / np.maximum(np.abs(np.asarray(b)), 1e-300)


def test_01_round_sphere_curvature(record):
    rng = np.random.default_rng(1)
    worst_exact, worst_fd = 0.0, 0.0
    for _ in range(100):
        n = int(rng.integers(2, 9))
        lam = float(rng.uniform(0.1, 10.0))
        m = wp.WarpedMetric(n, wp.round_profile(lam))
        ts = rng.uniform(0.1, 0.9, size=20) * math.pi * lam
        want = n * (n - 1) / lam ** 2
        exact = wp.scalar_curvature(m, ts)
        fd = wp.scalar_curvature(m, ts, derivatives="fd", fd_step=1e-3 * lam)
        worst_exact = max(worst_exact, float(np.max(_rel(exact, want))))
        worst_fd = max(worst_fd, float(np.max(_rel(fd, want))))
    ok = worst_exact <= 1e-6 and worst_fd <= 1e-4
    record(1, "round-sphere curvature n(n-1)/lam^2", ok, f"analytic {worst_exact:.2e}, fd {worst_fd:.2e}")
    assert ok


def _random_profile(rng, n):
    kind = rng.integers(4)
    if kind == 0:
        return wp.round_profile(float(rng.uniform(0.2, 5.0)))
    if kind == 1:
        return wp.torpedo_profile(float(rng.uniform(0.1, 5.0)))
    if kind == 2:
        lam = float(rng.uniform(0.2, 5.0))
        return wp.lens_profile(lam, float(rng.uniform(0.2, 0.95)) * math.pi * lam)
    lam = float(rng.uniform(0.5, 2.0))
    return wp.bulb_profile(lam, float(rng.uniform(0.3, 1.0)) * 0.5 * math.pi * lam, n).profile


def test_02_scaling_law(record):
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(3, 8))
        m = wp.WarpedMetric(n, _random_profile(rng, n))
        c = float(10 ** rng.uniform(-2, 2))
        mc = wp.rescale(m, c)
        ts = wp.sample_grid(m.profile, m.profile.length / 50)[1:-1]
        R = wp.scalar_curvature(m, ts)
        Rc = wp.scalar_curvature(mc, ts * math.sqrt(c))
        keep = np.abs(R) > 1e-8
        worst = max(worst, float(np.max(_rel(Rc[keep] * c, R[keep]))))
    ok = worst <= 1e-6
    record(2, "scaling law R(cg) = R(g)/c", ok, f"max relative error {worst:.2e}")
    assert ok


def test_03_torpedo_positivity(record):
    mins = {}
    for n in range(2, 8):
        for delta in (0.1, 1.0, 10.0):
            mins[n, delta] = wp.verify_psc(wp.WarpedMetric(n, wp.torpedo_profile(delta)), 1e-3).min_R
    ok = all(v > 0 for (n, _), v in mins.items() if n >= 3)
    ok &= all(v >= -1e-6 for (n, _), v in mins.items() if n == 2)
    worst = min(v for (n, _), v in mins.items() if n >= 3)
    record(3, "torpedo positivity", ok, f"min R over n>=3: {worst:.3e}")
    assert ok


def test_04_torpedo_rescaling_identity(record):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(20):
        c = float(10 ** rng.uniform(-1.5, 1.5))
        delta = float(10 ** rng.uniform(-1, 1))
        big = wp.torpedo_profile(c * delta)
        small = wp.torpedo_profile(delta)
        s = np.linspace(0.0, big.end, 1000)
        lhs = c * small.eta(np.minimum(s / c, small.end))
        worst = max(worst, float(np.max(np.abs(lhs - big.eta(s)))))
    ok = worst <= 1e-9
    record(4, "c*eta_delta(s/c) = eta_(c*delta)(s)", ok, f"max gap {worst:.2e}")
    assert ok


def test_05_bulb_constructor(record):
    bad = []
    round_spread = 0.0
    for n in (3, 5):
        for lam in np.linspace(0.5, 2.5, 5):
            for frac in np.linspace(0.2, 1.0, 5):
                r = frac * 0.5 * math.pi * lam
                bulb = wp.bulb_profile(float(lam), float(r), n)
                m = wp.WarpedMetric(n, bulb.profile)
                if frac == 1.0:
                    ts = wp.sample_grid(bulb.profile, 1e-3)[1:-1]
                    R = wp.scalar_curvature(m, ts)
                    want = n * (n - 1) / lam ** 2
                    spread = float(np.max(_rel(R, want)))
                    round_spread = max(round_spread, spread)
                    if spread > 1e-6 or bulb.delta != lam:
                        bad.append((n, lam, frac))
                elif not wp.verify_psc(m, bulb.profile.length / 4000).min_R > 0:
                    bad.append((n, lam, frac))
    ok = not bad
    record(5, "bulb constructor positive; round cell exact", ok, f"round cell spread {round_spread:.1e}, failures {bad}")
    assert ok


def test_06_little_disks_axioms(record):
    rng = np.random.default_rng(6)
    failures = 0
    tol = 1e-12
    for case in range(1000):
        dim = int(rng.integers(1, 4))
        c = ld.random_config(rng, dim, int(rng.integers(0, 5)))
        ds = [ld.random_config(rng, dim, int(rng.integers(0, 5))) for _ in range(c.arity)]
        which = case % 4
        if which == 0:
            es = [[ld.random_config(rng, dim, int(rng.integers(0, 3))) for _ in range(d.arity)] for d in ds]
            left = ld.gamma(ld.gamma(c, ds), [e for block in es for e in block])
            right = ld.gamma(c, [ld.gamma(d, block) for d, block in zip(ds, es)])
        elif which == 1:
            sigma = [int(x) for x in rng.permutation(c.arity)]
            sizes = [d.arity for d in ds]
            left = ld.gamma(ld.act_sigma(c, sigma), ld.permute_list(ds, sigma))
            right = ld.act_sigma(ld.gamma(c, ds), ld.block_permutation(sigma, sizes))
        elif which == 2:
            taus = [[int(x) for x in rng.permutation(d.arity)] for d in ds]
            left = ld.gamma(c, [ld.act_sigma(d, t) for d, t in zip(ds, taus)])
            right = ld.act_sigma(ld.gamma(c, ds), ld.block_sum(taus))
        else:
            ident = ld.identity_config(dim)
            left = ld.gamma(c, [ident] * c.arity)
            right = ld.gamma(ident, [c])
            failures += not ld.configs_close(left, c, tol)
        failures += not ld.configs_close(left, right, tol)
    ok = failures == 0
    record(6, "little-disks associativity/equivariance/identity", ok, f"{failures} failures in 1000 cases")
    assert ok


def test_07_w_construction(record):
    grid = np.round(np.arange(0.0, 1.0 + 1e-9, 0.05), 10)
    law_failures = 0
    for a in grid:
        law_failures += abs(tr.star(a, 0.0) - a) > 1e-12 or tr.star(a, 1.0) != 1.0
        for b in grid:
            law_failures += abs(tr.star(a, b) - tr.star(b, a)) > 1e-12
            law_failures += not 0.0 <= tr.star(a, b) <= 1.0
            for c in grid:
                law_failures += abs(tr.star(tr.star(a, b), c) - tr.star(a, tr.star(b, c))) > 1e-12
    rng = np.random.default_rng(7)
    idem_failures = 0
    rewrite_failures = 0
    for _ in range(500):
        t = tr.random_tree(rng, dim=2, zero_chance=0.3, identity_chance=0.3)
        n = tr.normalize(t)
        idem_failures += not tr.trees_close(tr.normalize(n), n, 0.0)
        for _, t2 in tr.single_rewrites(t, rng):
            rewrite_failures += not tr.w_equal(t, t2)
    counterexamples = tr.confluence_fuzz(seed=7, cases=500)
    for cx in counterexamples:
        print(cx.as_dict())
    ok = law_failures == 0 and idem_failures == 0 and rewrite_failures == 0 and not counterexamples
    record(7, "W-construction laws, idempotence, rewrites, confluence", ok,
           f"star {law_failures}, idempotence {idem_failures}, rewrites {rewrite_failures}, "
           f"confluence {len(counterexamples)}")
    assert ok


def test_08_omega(record):
    rng = np.random.default_rng(8)
    worst = 0.0
    for _ in range(1000):
        s = rng.random(int(rng.integers(1, 12)))
        rec = pa.omega_path(s, pa.UNSEGMENTED)
        worst = max(worst, max(abs(a - b) for a, b in zip(rec, pa.omega_closed_form(s))))
    reset_failures = 0
    for _ in range(200):
        before = list(rng.random(int(rng.integers(0, 6))))
        after = list(rng.random(int(rng.integers(1, 6))))
        other = list(rng.random(int(rng.integers(0, 6))))
        w = pa.omega_path(before + [1.0] + after)
        w_other = pa.omega_path(other + [1.0] + after)
        fresh = pa.omega_path(after)
        tail = w[len(before) + 1:]
        reset_failures += tail != fresh or w_other[len(other) + 1:] != fresh
    ok = worst <= 1e-12 and reset_failures == 0
    record(8, "omega recursion vs closed form; reset at length 1", ok,
           f"max gap {worst:.1e}, reset failures {reset_failures}")
    assert ok


def test_09_action_axioms(record):
    report = pa.verify_action(seed=42, cases=200)
    if not report.ok:
        print(report.table())
    counts = report.counts()
    ok = report.ok and all(k in counts for k in ("equivariance", "composition", "relation_a", "relation_c"))
    record(9, "action axioms (seed 42, 200 cases)", ok,
           ", ".join(f"{k} {v[0]}/{v[0] + v[1]}" for k, v in sorted(counts.items())))
    assert ok


def _capped(rng, prefix, dim=3):
    lam = float(rng.uniform(0.5, 2.0))
    sites = [md.Site(f"{prefix}0", "north", md.FreeTorpedo(lam), base=True)]
    for i in range(1, int(rng.integers(1, 5))):
        sites.append(md.Site(f"{prefix}{i}", f"x{i}", md.FreeTorpedo(float(rng.uniform(0.05, lam)))))
    return md.SphereDescriptor(dim, (md.round_node(0, lam, sites),))


def _headed(rng, prefix, dim=3):
    sites = [md.Site(f"{prefix}base", "north", md.FreeHead(1.0, 0.5 * math.pi), base=True)]
    for i in range(int(rng.integers(0, 3))):
        lam = float(rng.uniform(0.3, 1.0))
        sites.append(md.Site(f"{prefix}{i}", f"x{i}", md.FreeHead(lam, float(rng.uniform(0.2, 1.0)) * 0.5 * math.pi * lam)))
    return md.SphereDescriptor(dim, (md.round_node(0, float(rng.uniform(0.8, 1.5)), sites),))


def _base_is(d, kinds):
    base = d.base()
    if base is None:
        return False
    return isinstance(d.node(base[0]).site(base[1]).attachment, kinds)


def test_10_structural_products(record):
    rng = np.random.default_rng(10)
    torp_bad = head_bad = join_bad = 0
    for _ in range(200):
        g, h = _capped(rng, "g"), _capped(rng, "h")
        g3 = md.three_cap(float(rng.uniform(0.05, 0.5)))
        rule = "PI_L" if rng.random() < 0.5 else "PI_R"
        out = md.mu_torp(g3, rule, g, h)
        md.validate_descriptor(out)
        bases = sum(s.base for _, s in out.sites())
        caps = len(md.free_caps(out))
        torp_bad += not (bases == 1 and _base_is(out, md.FreeTorpedo)
                         and caps == len(md.free_caps(g)) + len(md.free_caps(h)) - 1)

        g, h = _headed(rng, "g"), _headed(rng, "h")
        lam = float(rng.uniform(0.5, 1.5))
        g3 = md.three_head(lam=lam, r=float(rng.uniform(0.3, 1.0)) * 0.5 * math.pi * lam)
        out = md.mu_head(g3, g, h)
        md.validate_descriptor(out)
        bases = sum(s.base for _, s in out.sites())
        heads = len(md.free_heads(out))
        head_bad += not (bases == 1 and _base_is(out, md.HEAD_KINDS)
                         and heads == len(md.free_heads(g)) + len(md.free_heads(h)) - 1)

        g, h = _capped(rng, "g"), _capped(rng, "h")
        gi = [s.id for _, s in g.sites()]
        hj = [s.id for _, s in h.sites()]
        i, j = gi[int(rng.integers(len(gi)))], hj[int(rng.integers(len(hj)))]
        out = md.join_ij(rule, g, h, i, j)
        md.validate_descriptor(out)
        got = sorted(s.id for _, s in out.sites() if isinstance(s.attachment, md.FreeTorpedo))
        join_bad += got != sorted([x for x in gi if x != i] + [x for x in hj if x != j])
    ok = torp_bad == 0 and head_bad == 0 and join_bad == 0
    record(10, "mu_torp/mu_head single base; join_ij free caps", ok,
           f"failures: mu_torp {torp_bad}, mu_head {head_bad}, join_ij {join_bad}")
    assert ok


def test_11_serialization(record):
    rng = np.random.default_rng(11)
    bad_trees = bad_configs = bad_desc = 0
    for _ in range(1000):
        t = tr.random_tree(rng, dim=int(rng.integers(1, 4)))
        back, _ = tr.parse_document(tr.format_document(t))
        bad_trees += back != t
        dim = int(rng.integers(1, 4))
        named = {f"c{i}": ld.random_config(rng, dim, int(rng.integers(0, 5))) for i in range(int(rng.integers(1, 4)))}
        bad_configs += ld.parse_configs(ld.format_configs(named)) != named
        d = md.random_descriptor(rng)
        bad_desc += md.loads(md.dumps(d)) != d
    ok = bad_trees == 0 and bad_configs == 0 and bad_desc == 0
    record(11, "serialization round trips", ok,
           f"failures: trees {bad_trees}, configs {bad_configs}, descriptors {bad_desc} of 1000 each")
    assert ok
