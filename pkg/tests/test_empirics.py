import csv
import io
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import binom, norm

from cclt import build_model
from cclt.empirics import (
    CSV_COLUMNS, distance_row, exact_ratio, llt_check, rate_regression, rows_to_csv, sample_conditional,
    sliced_w1_to_std_normal, w1_to_std_normal,
)
from cclt.rng import substream


def quadrature_w1(points):
    pts = np.sort(points)
    n = len(pts)
    edges = [-40.0, *pts, 40.0]
    total = 0.0
    for i in range(len(edges) - 1):
        level = i / n
        a, b = edges[i], edges[i + 1]
        total += quad(lambda t: abs(level - norm.cdf(t)), a, b, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
    return total


def test_point_mass():
    assert w1_to_std_normal([0.0]) == pytest.approx(math.sqrt(2 / math.pi), abs=1e-15)


@pytest.mark.parametrize("points", [[-1.0, 1.0], [0.3], [-2.0, 0.1, 0.1, 1.7]])
def test_against_quadrature(points):
    assert w1_to_std_normal(points) == pytest.approx(quadrature_w1(np.array(points)), abs=1e-10)


def test_normal_quantiles_are_close():
    n = 10_000
    assert w1_to_std_normal(norm.ppf((np.arange(1, n + 1) - 0.5) / n)) < 5e-4


def test_empty_and_too_few_directions():
    with pytest.raises(ValueError):
        w1_to_std_normal([])
    with pytest.raises(ValueError):
        sliced_w1_to_std_normal(np.zeros((10, 2)), directions=8)


def test_sliced_distance_halves_when_sample_quadruples():
    # one realisation fluctuates too much; compare means over independent replicates
    reps = 12
    small = np.mean([sliced_w1_to_std_normal(substream(1, 1, j).standard_normal((10_000, 2)), 64, 1)
                     for j in range(reps)])
    large = np.mean([sliced_w1_to_std_normal(substream(1, 2, j).standard_normal((40_000, 2)), 64, 1)
                     for j in range(reps)])
    assert 0.3 <= large / small <= 0.7


def test_conditional_sampling_is_deterministic_and_conditioned():
    model = build_model("pattern01", n=20, p=0.3)
    a = sample_conditional(model, 1, 500, seed=9)
    b = sample_conditional(model, 1, 500, seed=9)
    assert np.array_equal(a.values, b.values)
    assert a.acceptance == 1.0
    c = sample_conditional(model, 1, 500, seed=10)
    assert not np.array_equal(a.values, c.values)


def test_rejection_path_reports_acceptance():
    model = build_model("evenodd11", n=12, p=0.3)
    s = sample_conditional(model, 0, 2000, seed=1)
    assert 0 < s.acceptance < 1
    assert len(s.values) == 2000


def test_rate_regression_recovers_power_law():
    pts = [(n, 3.0 * n**-0.5) for n in (16, 32, 64, 128, 256)]
    fit = rate_regression(pts)
    assert fit["slope"] == pytest.approx(-0.5, abs=1e-12)
    assert fit["residual"] < 1e-12
    with pytest.raises(ValueError):
        rate_regression(pts[:3])
    with pytest.raises(ValueError):
        rate_regression([(1, 1.0), (2, 0.0), (3, 1.0), (4, 1.0)])


def test_llt_check_on_binomial():
    model = build_model("pattern01", n=100, p=0.5)
    res = llt_check(model)
    k = np.arange(101)
    direct = np.max(np.abs(5 * binom.pmf(k, 100, 0.5) - norm.pdf((k - 50) / 5)))
    assert res["eps_Y"] == pytest.approx(direct, rel=1e-10)
    values, probs = model.y_pmf()
    assert exact_ratio(values, probs, 0.0) == pytest.approx(50 / 51, rel=1e-12)


def test_csv_rows_carry_seed_and_quote_properly():
    row = {"model": 'odd,"name"', "n": 4, "k": 0, "samples": 10, "distance": 0.5, "stderr": 0.1,
           "bound_total": "", "seed": 3}
    text = rows_to_csv([row])
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert tuple(parsed[0]) == CSV_COLUMNS
    assert parsed[0]["model"] == 'odd,"name"'
    assert parsed[0]["seed"] == "3" and parsed[0]["samples"] == "10"


def test_distance_row_for_multivariate_model_uses_slices():
    row = distance_row(build_model("triangle-wedge", n=8, p=0.5), 0, 500, seed=2)
    assert row["distance"] > 0 and row["samples"] == 500
