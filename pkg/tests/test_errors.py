import pickle

import pytest

from src.utils.errors import (
    CapacityError,
    ContractError,
    CornerGrowthError,
    DegenerateParameterError,
    HypothesisError,
    InsufficientDataError,
    VerificationFailure,
)


@pytest.mark.parametrize("cls", [CornerGrowthError, ContractError, CapacityError, InsufficientDataError, VerificationFailure])
def test_errors_survive_pickling(cls):
    error = cls("lpp-engine", "too big")
    restored = pickle.loads(pickle.dumps(error))
    assert type(restored) is cls
    assert (restored.module, restored.message) == ("lpp-engine", "too big")
    assert str(restored) == "[lpp-engine] too big"


@pytest.mark.parametrize("cls", [HypothesisError, DegenerateParameterError])
def test_hypothesis_errors_survive_pickling(cls):
    error = cls("experiments", "rho in (0,1)", "rho=1.5")
    restored = pickle.loads(pickle.dumps(error))
    assert type(restored) is cls
    assert restored.hypothesis == "rho in (0,1)"
    assert restored.detail == "rho=1.5"
    assert str(restored) == str(error) == "[experiments] hypothesis violated: rho in (0,1) (rho=1.5)"


def test_hypothesis_error_without_detail():
    assert str(HypothesisError("cli", "N >= 1")) == "[cli] hypothesis violated: N >= 1"
