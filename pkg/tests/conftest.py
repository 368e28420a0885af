import pytest

from vibron_qed.model import reference_params, to_dimensionless


@pytest.fixture(scope="session")
def deep():
    """Reference parameter set, trap frequency 10 g."""
    return to_dimensionless(reference_params())


@pytest.fixture(scope="session")
def shallow():
    """Same set with the trap frequency lowered to 2 g."""
    return to_dimensionless(reference_params(2e8))
