import pytest

from stopping.consts import AmbiguityKind
from stopping.domain import AmbiguitySpec, DiscreteDistribution
from stopping.factory import create_web_app


@pytest.fixture
def app():
    return create_web_app()


@pytest.fixture
def client(app):
    with app.test_client() as client:
        yield client


@pytest.fixture
def mvs_spec() -> AmbiguitySpec:
    return AmbiguitySpec(kind=AmbiguityKind.MEAN_VAR_SUPPORT, mu=1.0, sigma2=0.5, support_upper=3.0)


@pytest.fixture
def two_point_spec() -> AmbiguitySpec:
    # turning point example, switch at i=15 for n=20
    return AmbiguitySpec(kind=AmbiguityKind.TWO_POINT, mu=1.0, sigma2=1.3, support_upper=5.0)


@pytest.fixture
def mad_spec() -> AmbiguitySpec:
    return AmbiguitySpec(kind=AmbiguityKind.MEAN_MAD_SUPPORT, mu=1.0, mad=0.5, support_upper=4.0)


@pytest.fixture
def witness() -> DiscreteDistribution:
    # mean 1, variance 0.5
    return DiscreteDistribution.from_atoms([(0.0, 1 / 3), (1.5, 2 / 3)])
