import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from dyadreg.exceptions import ConfigError, InputError
from dyadreg.graph import build_graph, diagnostics
from dyadreg.simulation import (
    DesignSpec,
    RngStream,
    gen_covariates,
    gen_errors,
    gen_graph,
    gen_model_b,
    gen_model_d,
    gen_model_s,
    simulate_dataset,
    two_group_split,
)


def unordered(graph):
    return {frozenset(e) for e in graph.edges()}


def s_rules(G):
    """Set-union oracle for the sparse design, written straight from the rules."""
    out = set()
    for g, h in itertools.combinations(range(1, G + 1), 2):
        if h - g == 1 or (g, h) == (1, G) or h == 2 * g or h == 3 * g:
            out.add(frozenset((g, h)))
    return out


def b_rules(G):
    out = set()
    ring = G - 2
    for g, h in itertools.combinations(range(1, G + 1), 2):
        if h <= ring and h - g == 1:
            out.add(frozenset((g, h)))
        if G in (100, 250, 800) and h <= ring and h - g == 2:
            out.add(frozenset((g, h)))
        if G == 800 and h <= ring and h - g in (3, 4):
            out.add(frozenset((g, h)))
    chords = [(1, G - 2)]
    if G in (100, 250, 800):
        chords += [(1, G - 3), (2, G - 2)]
    if G == 800:
        chords += [(1, G - 4), (1, G - 5), (2, G - 3), (2, G - 4)]
    out.update(frozenset(c) for c in chords)
    for g in range(1, G + 1):
        hub = G - 1 if g <= G // 2 else G
        if g != hub:
            out.add(frozenset((g, hub)))
    return out


class ConstantStream:
    """Stub whose generators always return the same uniform value."""

    def __init__(self, value):
        self.value = value

    def generator(self, purpose):
        stub = self

        class _Gen:
            def random(self, n):
                return np.full(n, stub.value)

        return _Gen()


# -- graphs --------------------------------------------------------------------


@pytest.mark.parametrize("G, N", [(50, 1225), (10, 45), (2, 1)])
def test_model_d_counts(G, N):
    assert gen_model_d(G).num_dyads == N


@pytest.mark.parametrize("G", [4, 5, 10, 25, 50, 100])
def test_model_s_matches_rule_oracle(G):
    g = gen_model_s(G)
    assert unordered(g) == s_rules(G)
    assert g.num_dyads == len(s_rules(G))


def test_model_s_degree_bounds():
    # the rule families cap every unit at 6 dyads
    for G in (25, 50, 100):
        d = diagnostics(gen_model_s(G))
        assert d.m_low == 2 and d.m_high <= 6


@pytest.mark.parametrize("G", [6, 10, 25, 50, 100, 250])
def test_model_b_matches_rule_oracle(G):
    assert unordered(gen_model_b(G)) == b_rules(G)


def test_model_b_hubs_at_25():
    g = gen_model_b(25)
    deg = np.sort(g.degrees)[::-1]
    assert deg[0] >= 12 and deg[1] >= 12
    assert deg[2] <= 3
    assert diagnostics(g).med_degree == 3


def test_model_b_band_at_100():
    g = gen_model_b(100)
    edges = unordered(g)
    assert all(frozenset((k, k + 2)) in edges for k in range(1, 97))
    assert frozenset((1, 97)) in edges and frozenset((2, 98)) in edges
    d = diagnostics(g)
    assert 0.5 * math.log(100) <= d.m_low
    assert 0.5 * 100 <= d.m_high
    # no band below the listed sizes
    assert frozenset((1, 3)) not in unordered(gen_model_b(50))


def test_model_b_800_wide_band():
    edges = unordered(gen_model_b(800))
    assert frozenset((10, 14)) in edges and frozenset((1, 795)) in edges


@pytest.mark.parametrize("model, G", [("D", 1), ("S", 3), ("B", 5)])
def test_graph_size_minimums(model, G):
    with pytest.raises(InputError):
        gen_graph(model, G)


def test_unknown_model():
    with pytest.raises(ConfigError):
        gen_graph("Q", 10)


# -- design spec ---------------------------------------------------------------


def test_design_spec_rules():
    assert DesignSpec("D", 10).covariate_spec == "iid_uniform"
    assert DesignSpec("D", 10, "unit_shock").covariate_spec == "unit_distance"
    assert DesignSpec("S", 10, "two_group", r=0.5).covariate_spec == "unit_distance"
    with pytest.raises(InputError):
        DesignSpec("B", 25, "two_group", r=0.5)
    with pytest.raises(InputError):
        DesignSpec("D", 10, "two_group")
    with pytest.raises(InputError):
        DesignSpec("D", 10, "iid", covariate_spec="unit_distance")


@pytest.mark.parametrize("G, r, cut", [(100, 0.0, 45), (100, 1.0, 0), (100, 0.5, 34), (20, 0.0, 7)])
def test_two_group_split(G, r, cut):
    s = (1 + r) / 2
    assert cut == math.floor((G - G**s) / 2)
    assert two_group_split(G, r) == cut


# -- covariates ----------------------------------------------------------------


def test_degenerate_unit_distance_is_zero():
    g = gen_model_s(10)
    x = gen_covariates(g, DesignSpec("S", 10, "unit_shock"), ConstantStream(0.3))
    assert np.all(x == 0.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**63 - 1), st.sampled_from(["iid", "unit_shock"]))
def test_covariates_in_unit_interval(seed, err):
    g = gen_model_d(12)
    x = gen_covariates(g, DesignSpec("D", 12, err), RngStream(seed, 3))
    assert np.all((0 <= x) & (x <= 1))


def test_iid_covariate_mean():
    g = build_graph([(k, k + 1) for k in range(1, 100001)], 100001)
    x = gen_covariates(g, DesignSpec("D", 10), RngStream(1, 0))
    assert abs(x.mean() - 0.5) <= 0.005


# -- errors --------------------------------------------------------------------


def test_iid_error_variance():
    g = build_graph([(k, k + 1) for k in range(1, 100001)], 100001)
    u = gen_errors(g, DesignSpec("D", 10), RngStream(2, 0))
    assert abs(u.var() - 1.0) <= 0.02
    assert np.all(np.abs(u) <= math.sqrt(3))


def test_unit_shock_covariance():
    # dyads 0 and 1 share unit 2; dyads 0 and 2 are disjoint
    g = build_graph([(1, 2), (2, 3), (3, 4)], 4)
    spec = DesignSpec("D", 4, "unit_shock")
    rng = np.random.default_rng(3)
    u = np.array([gen_errors(g, spec, rng) for _ in range(100_000)])
    c = np.cov(u.T)
    assert abs(c[0, 1] - 1.0) <= 0.02
    assert abs(c[0, 2]) <= 0.02
    assert abs(c[0, 0] - 3.0) <= 0.06


def test_two_group_r1_is_unit_shock():
    for G in (10, 25):
        g = gen_model_d(G)
        a = gen_errors(g, DesignSpec("D", G, "two_group", r=1.0), RngStream(9, 4))
        b = gen_errors(g, DesignSpec("D", G, "unit_shock"), RngStream(9, 4))
        assert np.array_equal(a, b)


def test_two_group_sign_flip():
    G = 20
    g = gen_model_d(G)
    spec = DesignSpec("D", G, "two_group", r=0.0)
    cut = two_group_split(G, 0.0)
    alpha_rng = RngStream(5, 0).generator("errors")
    alpha = math.sqrt(3) * (2 * alpha_rng.random(G) - 1)
    eps = math.sqrt(3) * (2 * alpha_rng.random(g.num_dyads) - 1)
    got = gen_errors(g, spec, RngStream(5, 0))
    for n, (a, b) in enumerate(g.edges()):
        sign = -1.0 if (a <= cut) != (b <= cut) else 1.0
        assert got[n] == pytest.approx(sign * (alpha[a - 1] + alpha[b - 1]) + eps[n], abs=1e-15)


# -- datasets ------------------------------------------------------------------


def test_dataset_shape_and_truth():
    d = simulate_dataset(DesignSpec("B", 25, "unit_shock"), RngStream(0, 0))
    assert d.x.shape == (d.graph.num_dyads, 2)
    assert np.all(d.x[:, 0] == 1.0)
    u = gen_errors(d.graph, DesignSpec("B", 25, "unit_shock"), RngStream(0, 0))
    assert_allclose(d.y, 1.0 + u)


def test_determinism_and_stream_independence():
    spec = DesignSpec("S", 25, "unit_shock")
    a = simulate_dataset(spec, RngStream(123, 7))
    b = simulate_dataset(spec, RngStream(123, 7))
    c = simulate_dataset(spec, RngStream(123, 8))
    assert np.array_equal(a.y, b.y) and np.array_equal(a.x, b.x)
    assert not np.array_equal(a.y, c.y)


def test_slope_centred_at_zero():
    from dyadreg.estimator import ols_fit

    spec = DesignSpec("D", 10, "iid")
    slopes = [ols_fit(simulate_dataset(spec, RngStream(4, r))).beta_hat[1] for r in range(2000)]
    assert abs(np.mean(slopes)) <= 4 * np.std(slopes) / math.sqrt(len(slopes))


def test_score_variance_grows_like_ng():
    def score_var(G, reps=5000):
        spec = DesignSpec("D", G, "unit_shock")
        g = gen_model_d(G)
        vals = [gen_covariates(g, spec, s) @ gen_errors(g, spec, s)
                for s in (RngStream(20, r) for r in range(reps))]
        return np.var(vals)

    ratio = score_var(40) / score_var(20)
    expected = (780 * 40) / (190 * 20)
    assert abs(ratio / expected - 1) <= 0.15


def test_unit_relabeling_preserves_distribution():
    # reversing unit labels on a ring is an automorphism up to relabeling
    G = 12
    ring = [(k, k % G + 1) for k in range(1, G + 1)]
    rev = [(G + 1 - a, G + 1 - b) for a, b in ring]
    spec = DesignSpec("D", G, "unit_shock")
    g1, g2 = build_graph(ring, G), build_graph(rev, G)
    s1 = np.array([gen_errors(g1, spec, RngStream(6, r)) for r in range(20000)])
    s2 = np.array([gen_errors(g2, spec, RngStream(7, r)) for r in range(20000)])
    assert abs(s1.var() - s2.var()) <= 0.15
    c1 = np.cov(s1.T)
    c2 = np.cov(s2.T)
    assert np.abs(c1 - c2).max() <= 0.15
