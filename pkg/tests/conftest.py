from __future__ import annotations

import numpy as np
import pytest

from hydrowatch.localization import ArrayGeometry


@pytest.fixture
def geometry() -> ArrayGeometry:
    """Canonical 50 m hydrophone line on the dam wall."""
    return ArrayGeometry({"H1": (50.0, 0.0), "H2": (0.0, 0.0), "H3": (-50.0, 0.0)},
                         speed_of_sound=1430.0)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
