import json
from fractions import Fraction

import pytest

from bandit_trials.errors import ConfigError
from bandit_trials.sim import Scenario, TestSpec

BASE = {"K": 2, "T": 148, "true_p": [0.3, 0.5], "policy": {"rule": "FR"},
        "test": {"kind": "z-cutoff", "cutoff": 1.645}, "replications": 100, "seed": 3}


def test_round_trip(tmp_path):
    sc = Scenario.from_dict(BASE)
    assert sc.priors == ((1, 1), (1, 1)) and sc.hypothesis == "H1" and sc.best_arm == 1
    path = tmp_path / "s.json"
    path.write_text(sc.to_json())
    assert Scenario.load(path) == sc
    assert Scenario.from_json(json.dumps(sc.to_dict())) == sc


@pytest.mark.parametrize("patch", [
    {"K": 3}, {"T": 0}, {"true_p": [0.3, 1.2]}, {"seed": -1}, {"seed": 2 ** 64},
    {"replications": 0}, {"policy": {"rule": "nope"}}, {"test": {"kind": "t-test"}},
    {"test": {"kind": "z-cutoff"}}, {"priors": [[0, 1], [1, 1]]}, {"extra": 1},
    {"test": {"kind": "fisher", "alpha": 2}}, {"test": {"kind": "fisher", "power": "all"}},
])
def test_invalid_scenarios(patch):
    with pytest.raises(ConfigError):
        Scenario.from_dict({**BASE, **patch})


def test_missing_field():
    data = dict(BASE)
    del data["true_p"]
    with pytest.raises(ConfigError):
        Scenario.from_dict(data)


def test_bad_json():
    with pytest.raises(ConfigError):
        Scenario.from_json("{not json")


def test_null_and_upper_bound():
    sc = Scenario.from_dict({**BASE, "K": 4, "T": 423, "true_p": [0.3, 0.3, 0.3, 0.5]})
    assert sc.upper_bound_exact == Fraction(423, 2)
    assert sc.null().true_p == (0.3,) * 4 and sc.null().hypothesis == "H0"
    assert Scenario.from_dict({**BASE, "T": 423, "true_p": [0.3, 0.3]}).upper_bound_exact == Fraction(1269, 10)


def test_best_arm_with_ties():
    sc = Scenario.from_dict({**BASE, "K": 3, "true_p": [0.3, 0.5, 0.5]})
    assert sc.best_arm == 2 and not sc.unique_best


def test_testspec_describe():
    assert "1.645" in TestSpec("z-cutoff", cutoff=1.645).describe()
    with pytest.raises(ConfigError):
        TestSpec.from_dict({"kind": "fisher", "cutof": 1})
