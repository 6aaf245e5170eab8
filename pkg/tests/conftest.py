import math

import pytest

from udncover import (
    Association,
    FadingModel,
    LosModel,
    NetworkConfig,
    PathLossModel,
    Scenario,
)


def make_scenario(
    density=1e-2,
    theta_db=0.0,
    association=Association.CLOSEST,
    sigma2=0.0,
    alpha=4.0,
    transitions=(),
    exponents=None,
    los=None,
    m=1,
):
    """Scenario builder with the defaults used all over the suite."""
    if exponents is None:
        exponents = (alpha,)
    return Scenario(
        net=NetworkConfig(
            density=density,
            theta=10.0 ** (theta_db / 10.0),
            association=association,
            sigma2=sigma2,
        ),
        path_loss=PathLossModel(exponents=tuple(exponents), transitions=tuple(transitions)),
        los=los if los is not None else LosModel.none(),
        fading=FadingModel(m=m),
    )


@pytest.fixture
def closest_nlos_unit():
    """Closest association, single slope alpha=4, density 1/pi: the scenario
    whose transform has the hand-derivable arctan closed form."""
    return make_scenario(density=1.0 / math.pi)
