import json

import numpy as np
import pytest

from cclt import BoundReport, LatticeSpec, PairConstants, PairStep, ResidualSummary, build_model, registered_models
from cclt.core import model_contract, to_json


def test_lattice_from_mean_and_points():
    lat = LatticeSpec.from_mean(3.3)
    assert lat.zeta == pytest.approx(0.7)
    assert lat.point(2) == pytest.approx(2.7)
    assert lat.contains(np.array([-0.3, 0.7, 0.5])).tolist() == [True, True, False]
    assert LatticeSpec.from_mean(50.0).zeta == 0.0


def test_lattice_rejects_bad_zeta():
    with pytest.raises(ValueError):
        LatticeSpec(1.2)


def test_pair_constants_validation():
    c = PairConstants(lam=0.01, psi=2.0, sigma_y2=25.0, a_plus=0.3, a_minus=0.7, b_plus=0.4, b_minus=-0.4)
    assert c.Q == pytest.approx(0.25)
    assert c.alpha == pytest.approx(-0.4 / 0.5)
    assert c.theta[0] == pytest.approx(1.6)
    with pytest.raises(ValueError):
        PairConstants(lam=0.01, psi=2.0, sigma_y2=25.0, a_plus=0.3, a_minus=0.6)
    with pytest.raises(ValueError):
        PairConstants(lam=0.01, psi=2.0, sigma_y2=25.0, a_plus=0.5, a_minus=0.5, b_plus=1.0, b_minus=0.0)
    with pytest.raises(ValueError):
        PairConstants(lam=1.5, psi=2.0, sigma_y2=25.0, a_plus=0.5, a_minus=0.5)


def test_scalar_shifts_broadcast_in_several_dimensions():
    c = PairConstants(lam=0.1, psi=np.eye(2), sigma_y2=1.0, a_plus=0.5, a_minus=0.5, b_plus=0.2, b_minus=-0.2, d=2)
    assert c.b_plus.shape == (2,)


@pytest.mark.parametrize("name", registered_models())
def test_every_model_declares_consistent_constants(name):
    model = build_model(name, n=8 if name != "general-subgraph" else 5)
    c = model.constants
    assert c.a_plus + c.a_minus == pytest.approx(1.0, abs=1e-12)
    assert np.allclose(c.b_plus + c.b_minus, 0.0, atol=1e-12)
    contract = model_contract(model)
    assert contract.d == model.d


def test_pair_step_rejects_large_jumps():
    with pytest.raises(ValueError):
        PairStep(np.zeros(1), 2)


def test_summary_rejects_negative_inputs():
    with pytest.raises(ValueError):
        ResidualSummary(0.0, -1.0, 0, 0, 0, 0, 0, 0, 0, 1.0, 0.1, 0.1, 0.01, 2.0, 0.25)


def test_json_is_stable_and_sorted():
    report = BoundReport("T2.3", {"b": 1.0, "a": 2.0}, 3.0)
    text = report.to_json()
    assert text == to_json(json.loads(text))
    assert list(json.loads(text)["terms"]) == ["a", "b"]
