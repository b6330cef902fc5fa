import numpy as np
import pytest

from cclt import PairConstants, build_model
from cclt.transform import (
    assumption_check, change_of_variable_multi, change_of_variable_uni, conditional_mean_check, y_moments_from_pmf,
)


def test_multivariate_transform_reduces_to_univariate(rng):
    c = PairConstants(lam=0.02, psi=2.0, sigma_y2=12.0, a_plus=0.3, a_minus=0.7, b_plus=0.5, b_minus=-0.5)
    ym = y_moments_from_pmf(np.array([-1.0, 0.0, 1.0]), np.array([0.25, 0.5, 0.25]))
    x, y = rng.normal(size=200), rng.integers(-5, 6, size=200).astype(float)
    uni = change_of_variable_uni(x, y, c, ym)
    multi = change_of_variable_multi(x[:, None], y, c, ym)[:, 0]
    np.testing.assert_allclose(multi, uni, atol=1e-14, rtol=0)


@pytest.mark.parametrize("name,n", [("pattern01", 10), ("wedge-edge", 5)])
def test_conditional_mean_closed_forms(name, n):
    model = build_model(name, n=n, p=0.3)
    values, _ = model.y_pmf()
    for y in values[1:-1]:
        res = conditional_mean_check(model, int(round(y - model.lattice.zeta)))
        assert res["abs_error"] < 1e-10


@pytest.mark.parametrize("name,n,p", [("pattern01", 10, 0.3), ("wedge-edge", 5, 0.3), ("evenodd11", 10, 0.5)])
def test_drift_envelope_holds_per_lattice_point(name, n, p):
    rows = assumption_check(build_model(name, n=n, p=p))
    assert all(r["drift_ok"] for r in rows)


def test_evenodd11_r0_is_site_weighted_off_half():
    rows = assumption_check(build_model("evenodd11", n=8, p=0.3))
    assert not all(r["r0_ok"] for r in rows)


@pytest.mark.parametrize("name,n", [("pattern01", 128), ("evenodd11", 128), ("wedge-edge", 16)])
def test_transformed_statistic_is_standardised_and_uncorrelated(name, n):
    model = build_model(name, n=n, p=0.4 if name != "evenodd11" else 0.5)
    m = 200_000
    w, y = model.stats(model.sample(np.random.default_rng(4), m))
    assert 0.9 <= w[:, 0].var() <= 1.1
    assert abs(np.corrcoef(w[:, 0], y)[0, 1]) <= 4 / np.sqrt(m)
