import numpy as np
import pytest
from scipy import stats

from cclt import build_model
from cclt.models.base import NotEnumerable
from cclt.moments import exact_moments

SMALL = [
    ("pattern01", {"n": 10, "p": 0.3}),
    ("evenodd11", {"n": 10, "p": 0.3}),
    ("toy", {"n": 10, "p": 0.4}),
    ("wedge-edge", {"n": 5, "p": 0.4}),
    ("triangle-wedge", {"n": 5, "p": 0.4}),
    ("general-subgraph", {"n": 5, "p": 0.5, "H": "p4"}),
    ("urn", {"n": 6, "p1": 0.2, "p2": 0.5}),
    ("darts", {"n": 6}),
    ("multi-darts", {"n": 5}),
]


@pytest.mark.parametrize("name,params", SMALL)
def test_transitions_move_y_by_at_most_one(name, params, rng):
    model = build_model(name, **params)
    configs = model.sample(rng, 2000)
    for _ in range(5):
        new = model.step(configs, rng)
        dy = model.counts(new) - model.counts(configs)
        assert set(np.unique(dy)) <= {-1, 0, 1}
        configs = new
    mv = model.moves(configs[:200])
    assert set(np.unique(mv.dy)) <= {-1, 0, 1}
    assert np.all(mv.prob.sum(1) <= 1 + 1e-12)


@pytest.mark.parametrize("name,params", [s for s in SMALL if build_model(s[0], **s[1]).has_analytic_moments])
def test_analytic_moments_match_definitional_averages(name, params):
    model = build_model(name, **params)
    try:
        configs, _ = model.enumerate_configs()
        configs = configs[:: max(1, len(configs) // 3000)]
    except NotEnumerable:
        configs = model.sample(np.random.default_rng(1), 2000)
    exact = exact_moments(model, configs, coords="x")
    analytic = model.analytic_moments(configs)
    for field in ("m0_plus", "m0_minus", "m1_plus", "m1_minus"):
        np.testing.assert_allclose(getattr(analytic, field), getattr(exact, field), atol=1e-10, err_msg=field)


@pytest.mark.parametrize("n", [4, 8, 14])
def test_pattern01_moments_exact_for_every_state_upto_14(n):
    model = build_model("pattern01", n=n, p=0.35)
    configs, _ = model.enumerate_configs()
    configs = configs[:: max(1, len(configs) // 4096)]
    exact = exact_moments(model, configs, coords="x")
    analytic = model.analytic_moments(configs)
    for field in ("m0_plus", "m0_minus", "m1_plus", "m1_minus", "m2_plus", "m2_minus"):
        np.testing.assert_allclose(getattr(analytic, field), getattr(exact, field), atol=1e-12)


def test_pattern01_m0_difference_is_minus_lambda_y():
    model = build_model("pattern01", n=12, p=0.3)
    configs, _ = model.enumerate_configs()
    prof = model.analytic_moments(configs)
    np.testing.assert_allclose(prof.m0_plus - prof.m0_minus, -prof.y / model.n, atol=1e-12)


@pytest.mark.parametrize("name", ["pattern01", "wedge-edge"])
def test_linearity_remainder_vanishes(name):
    model = build_model(name, n=10 if name == "pattern01" else 5, p=0.3)
    configs, _ = model.enumerate_configs()
    prof = exact_moments(model, configs, coords="x")
    c = model.constants
    r0p, r0m = prof.m0_plus - c.Q, prof.m0_minus - c.Q
    remainder = -prof.y - (r0p - r0m) / c.lam
    np.testing.assert_allclose(remainder, 0.0, atol=1e-10)


def test_wedge_edge_drift_contract():
    model = build_model("wedge-edge", n=6, p=0.3)
    configs, _ = model.enumerate_configs()
    configs = configs[::7]
    prof = exact_moments(model, configs, coords="x")
    x, y = model.raw_stats(configs)
    N, p, q, n = model.N, model.p, 1 - model.p, model.n
    expected = -(2 * p * x[:, 0] - 2 * (n - 2) * p * q * y) / N
    np.testing.assert_allclose(prof.m1_plus[:, 0], expected, atol=1e-10)


def test_triangle_wedge_second_moment_is_symmetric_psd():
    model = build_model("triangle-wedge", n=6, p=0.5)
    configs = model.sample(np.random.default_rng(3), 3000)
    prof = exact_moments(model, configs, coords="x")
    for m2 in (prof.m2_plus.mean(0), prof.m2_minus.mean(0)):
        np.testing.assert_allclose(m2, m2.T, atol=1e-12)
        assert np.linalg.eigvalsh(m2).min() >= -1e-12


@pytest.mark.parametrize("name,params", SMALL)
def test_one_step_preserves_the_law(name, params):
    model = build_model(name, **params)
    rng = np.random.default_rng(21)
    before = model.sample(rng, 20000)
    after = model.step(model.sample(rng, 20000), rng)
    wb, yb = model.stats(before)
    wa, ya = model.stats(after)
    assert stats.ks_2samp(wb[:, 0], wa[:, 0]).pvalue > 1e-4
    values, probs = model.y_pmf()
    observed = np.array([np.sum(np.abs(ya - v) < 1e-7) for v in values])
    keep = probs * len(ya) >= 5
    expected = probs[keep] * len(ya)
    chi2 = np.sum((observed[keep] - expected) ** 2 / expected)
    assert stats.chi2.sf(chi2, keep.sum() - 1) > 1e-4


@pytest.mark.parametrize("name,params", SMALL)
def test_statistic_uncorrelated_with_count(name, params):
    model = build_model(name, **params)
    m = 40000
    x, y = model.raw_stats(model.sample(np.random.default_rng(8), m))
    for j in range(x.shape[1]):
        if np.std(x[:, j]) > 0:
            assert abs(np.corrcoef(x[:, j], y)[0, 1]) <= 4 / np.sqrt(m)


def test_general_subgraph_variance_order():
    ratios = []
    for n in (6, 8, 10):
        model = build_model("general-subgraph", n=n, p=0.5, H="triangle")
        ratios.append(model.exact_w0_variance() / n ** (2 * 3 - 3))
    assert max(ratios) / min(ratios) < 4
    assert min(ratios) > 0


def test_evenodd11_corrected_r2_matches_definition():
    model = build_model("evenodd11", n=10, p=0.3)
    configs, _ = model.enumerate_configs()
    configs = configs[::5]
    prof = exact_moments(model, configs, coords="x")
    p, q, n = model.p, 1 - model.p, model.n
    plus, minus = model.exact_r2(configs)
    np.testing.assert_allclose(plus, n * prof.m2_plus[:, 0, 0] - 2 * n * p**2 * q**2, atol=1e-12)
    np.testing.assert_allclose(minus, n * prof.m2_minus[:, 0, 0] - 2 * n * p**2 * q**2, atol=1e-12)
