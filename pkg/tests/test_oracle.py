import json
import math
from fractions import Fraction

import numpy as np
import pytest

from cclt import build_model
from cclt.oracle import (
    enumerate_binary, enumerate_graphs, enumerate_urn, enumerate_urn_bruteforce, exact_decomposition_check,
    exact_w_law, gray_code, gray_walk_binary,
)


def test_pattern01_small_examples():
    law = enumerate_binary(4, Fraction(1, 2))
    assert law.conditional_moments(2)[0] == Fraction(4, 3)
    assert law.conditional_moments(4) == (0, 0)


def test_pattern01_conditional_variance_closed_form():
    # exhaustive value for n = 6, m = 3 is 9/25
    for n in range(4, 13):
        law = enumerate_binary(n)
        for m in range(n + 1):
            _, var = law.conditional_moments(m)
            if 2 <= m <= n - 2:
                assert var == Fraction(m * (m - 1) * (n - m) * (n - m - 1), (n - 1) ** 2 * (n - 2))
    assert enumerate_binary(6).conditional_moments(3)[1] == Fraction(9, 25)


@pytest.mark.parametrize("statistic", ["pattern01", "evenodd11"])
def test_count_marginal_is_exactly_binomial(statistic):
    p = Fraction(1, 3)
    law = enumerate_binary(9, p, statistic)
    pmf = law.count_pmf()
    if statistic == "pattern01":
        expected = [math.comb(9, m) * p**m * (1 - p) ** (9 - m) for m in range(10)]
        assert pmf == expected
    assert sum(pmf) == 1


def test_oracle_matches_model_enumeration_in_floats():
    model = build_model("pattern01", n=10, p=0.3)
    law = enumerate_binary(10, Fraction(3, 10))
    configs, weights = model.enumerate_configs()
    u = model.ones_followed(configs)
    v = model.counts(configs)
    for m in range(1, 10):
        sel = v == m
        mean = weights[sel] @ u[sel] / weights[sel].sum()
        assert float(law.conditional_moments(m)[0]) == pytest.approx(mean, abs=1e-10)


@pytest.mark.parametrize("statistic", ["pattern01", "evenodd11"])
def test_gray_code_incremental_updates_match_recomputation(statistic):
    n, steps = 14, 1 << 14
    walk = gray_walk_binary(n, statistic, steps)
    model = build_model(statistic, n=n, p=0.5)
    idx = np.random.default_rng(0).integers(0, steps, 1000)
    bits = ((gray_code(idx)[:, None] >> np.arange(n)) & 1).astype(np.uint8)
    if statistic == "pattern01":
        full = model.ones_followed(bits)
    else:
        full = model.raw_stats(bits)[0][:, 0]
    np.testing.assert_array_equal(walk[idx], full)


def test_graph_examples():
    law = enumerate_graphs(4)
    assert law.conditional(2, "U") == Fraction(4, 5)
    assert law.conditional(3, "T") == Fraction(1, 5)
    assert law.conditional(0, "U") == 0 and law.conditional(0, "T") == 0


@pytest.mark.parametrize("n", [4, 5, 6])
def test_graph_wedge_conditional_mean(n):
    law = enumerate_graphs(n)
    for m in range(law.N + 1):
        assert law.conditional(m, "U") == Fraction(2 * m * (m - 1), n + 1)


def test_graph_law_json_keyed_by_lattice_point():
    data = json.loads(enumerate_graphs(4).to_json())
    assert "0" in data["laws"] and data["laws"]["0"]["edges"] == 3


def test_urn_examples():
    law = enumerate_urn(2, 1 / 3, 1 / 3)
    by_count = {entry["count"]: entry for entry in law.values()}
    assert by_count[1]["prob"] == pytest.approx(4 / 9)
    assert by_count[2]["var"] == 0 and by_count[2]["mean"] == 0
    law = enumerate_urn(8, 0.25, 0.5)
    assert all(abs(entry["mean"]) < 1e-12 for entry in law.values())


def test_urn_closed_form_matches_bruteforce():
    closed = enumerate_urn(6, 0.2, 0.3)
    brute = enumerate_urn_bruteforce(6, 0.2, 0.3)
    for key, entry in closed.items():
        match = brute[min(brute, key=lambda y: abs(y - key))]
        assert entry["prob"] == pytest.approx(match["prob"], abs=1e-12)
        assert entry["mean"] == pytest.approx(match["mean"], abs=1e-10)
        assert entry["var"] == pytest.approx(match["var"], abs=1e-10)


def test_decomposition_triangle_is_exact():
    res = exact_decomposition_check(5, Fraction(1, 2), "triangle")
    assert res["max_abs_remainder"] == 0
    assert res["mean_remainder"] == 0


def test_decomposition_k4_and_p4():
    res = exact_decomposition_check(6, Fraction(1, 2), "k4")
    assert abs(float(res["mean_remainder"])) <= 1e-9
    for n in (5, 6):
        res = exact_decomposition_check(n, Fraction(1, 2), "p4")
        assert res["ext_wedge"] == 2 * (n - 3)
        assert res["mean_remainder"] == 0
        assert np.isfinite(res["normalised_remainder"])


def test_budget_errors():
    with pytest.raises(ValueError, match="limit"):
        enumerate_binary(23)
    with pytest.raises(ValueError, match="limit"):
        enumerate_graphs(9)
    with pytest.raises(ValueError):
        exact_decomposition_check(8)


def test_exact_w_law_is_normalised():
    law = exact_w_law(build_model("wedge-edge", n=5, p=0.3))
    assert sum(entry["prob"] for entry in law.values()) == pytest.approx(1.0, abs=1e-12)
    for entry in law.values():
        assert np.sum(entry["probs"]) == pytest.approx(1.0, abs=1e-12)
