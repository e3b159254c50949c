from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from hypersal.io import default_band_triple, false_color
from hypersal.saliency import spectral_saliency
from hypersal.synthetic import overexposed_scene, square_scene

settings.register_profile(
    "suite",
    max_examples=50,
    derandomize=True,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def square():
    """Canonical scene with derived layers, shared across the session."""
    scene = square_scene()
    fc = false_color(scene.cube, default_band_triple(scene.cube.bands))
    ss = spectral_saliency(scene.cube)
    return scene, fc, ss


@pytest.fixture(scope="session")
def overexposed():
    scene = overexposed_scene()
    fc = false_color(scene.cube, default_band_triple(scene.cube.bands))
    ss = spectral_saliency(scene.cube)
    return scene, fc, ss


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
