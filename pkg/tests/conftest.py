import numpy as np
import pytest

from rpmlbie.media import medium_from_permittivity

K0 = 2 * np.pi


@pytest.fixture(scope="session")
def medium():
    """Lower medium of the flat and perturbed examples."""
    return medium_from_permittivity([4.0, 1.0, 9.0])


@pytest.fixture(scope="session")
def greens(medium):
    from rpmlbie.background import BackgroundGreens

    return BackgroundGreens(K0, medium)
