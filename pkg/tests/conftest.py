import numpy as np
import pytest

from btcsim import ModelParams, build_superoperator, full_spectrum


@pytest.fixture(scope="session")
def spectrum_cache():
    """Shared eigenvalue cache: (n_spins, omega0) -> sorted eigenvalues."""
    cache = {}

    def get(n_spins: int, omega0: float) -> np.ndarray:
        key = (n_spins, float(omega0))
        if key not in cache:
            sup = build_superoperator(ModelParams(n_spins=n_spins, omega0=omega0))
            cache[key] = full_spectrum(sup).eigenvalues
        return cache[key]

    return get
