import numpy as np
import pytest

from ohara.curve import circle, ellipse, random_curve, random_field
from ohara.kernels import EnergyParams


@pytest.fixture(scope="session")
def circle128():
    return circle(128)


@pytest.fixture(scope="session")
def circle256():
    return circle(256)


@pytest.fixture(scope="session")
def ellipse128():
    return ellipse(2.0, 1.0, 128)


@pytest.fixture
def params21():
    return EnergyParams(2.0, 1.0)


@pytest.fixture
def params22():
    return EnergyParams(2.0, 2.0)


def perturbed_circle(M=256, amp=0.05, mode=3):
    """Planar circle with a radial cosine perturbation, arclength-resampled."""
    from ohara.curve import from_samples

    th = 2.0 * np.pi * np.arange(M) / M
    r = 1.0 + amp * np.cos(mode * th)
    pts = np.stack([r * np.cos(th), r * np.sin(th)], axis=1)
    return from_samples(pts)


@pytest.fixture
def bumpy256():
    return perturbed_circle(256)


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1.0e-300)
