import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from spectralreg import SingularSystem, SpectralSequence, law_from_moments, noise_from_moments


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_instance(rng, n, sigma_span=(1e-2, 1.0), dist="gaussian"):
    """A random diagonal instance: sorted sigma, positive moment laws."""
    sigma = np.sort(10 ** rng.uniform(np.log10(sigma_span[0]), np.log10(sigma_span[1]), n))[::-1]
    system = SingularSystem(SpectralSequence(sigma, "random"))
    data = law_from_moments(10 ** rng.uniform(-2, 0.5, n), dist)
    noise = noise_from_moments(10 ** rng.uniform(-4, -1, n), dist)
    return system, data, noise
