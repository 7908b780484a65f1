import numpy as np
import pytest

from retainkv.exceptions import ConfigError
from retainkv.numerics import Precision, active_precision, dtype, set_precision, tolerances, use_precision


def test_double_is_active_under_the_test_fixture():
    assert active_precision() is Precision.DOUBLE
    assert dtype() is np.float64
    assert tolerances().equivalence_rel == 1e-8


def test_use_precision_restores_the_previous_mode():
    with use_precision("single") as mode:
        assert mode is Precision.SINGLE
        assert dtype() is np.float32
        assert tolerances().equivalence_rel == 1e-4
    assert active_precision() is Precision.DOUBLE


def test_unknown_precision_is_a_config_error():
    with pytest.raises(ConfigError):
        set_precision("half")
