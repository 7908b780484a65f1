import pytest

from retainkv.exceptions import ContractViolation
from retainkv.harness import compression_ratio


def test_ten_million_tokens_in_six_thousand_units():
    assert compression_ratio(10_485_760, 6000) == pytest.approx(1747.6, rel=1e-3)


def test_budget_must_be_positive():
    with pytest.raises(ContractViolation):
        compression_ratio(1024, 0)
