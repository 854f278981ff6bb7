import numpy as np
import pytest

from photonstack.greens import solve_bases
from photonstack.stack import ConstantIndex, Layer, LayerStack, TemperatureProfile
from photonstack.thermo import solve_self_consistent
from photonstack.units import omega_from_ev

INF = float("inf")


def cavity_stack() -> LayerStack:
    """Hot and cold lossy half-spaces around a 10 um vacuum gap."""
    return LayerStack.assemble([
        Layer(INF, ConstantIndex(1.5 + 0.3j), 400.0),
        Layer(10e-6, ConstantIndex(1.0)),
        Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
    ])


def passive_cavity_stack() -> LayerStack:
    """Same reservoirs with a weakly lossy medium filling the gap."""
    return LayerStack.assemble([
        Layer(INF, ConstantIndex(1.5 + 0.3j), 400.0),
        Layer(10e-6, ConstantIndex(1.1 + 0.1j), self_consistent=True),
        Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
    ])


def slab_stack(width: float, slab_index: complex, *,
               total: float = 10e-6, self_consistent: bool = False,
               t_left: float = 400.0, t_right: float = 300.0) -> LayerStack:
    """Equal lossy walls, a vacuum host, and a centered slab of the given
    width; width 0 collapses to the bare cavity."""
    wall = ConstantIndex(2.5 + 0.5j)
    if width == 0.0:
        return LayerStack.assemble([
            Layer(INF, wall, t_left),
            Layer(total, ConstantIndex(1.0)),
            Layer(INF, wall, t_right),
        ])
    side = 0.5 * (total - width)
    return LayerStack.assemble([
        Layer(INF, wall, t_left),
        Layer(side, ConstantIndex(1.0)),
        Layer(width, ConstantIndex(slab_index),
              None, self_consistent),
        Layer(side, ConstantIndex(1.0)),
        Layer(INF, wall, t_right),
    ])


@pytest.fixture(scope="session")
def cavity():
    return cavity_stack()


@pytest.fixture(scope="session")
def cavity_omega():
    return omega_from_ev(np.linspace(0.02, 0.24, 23))


@pytest.fixture(scope="session")
def cavity_bases(cavity, cavity_omega):
    return solve_bases(cavity, cavity_omega)


@pytest.fixture(scope="session")
def cavity_profile(cavity):
    return TemperatureProfile.from_stack(cavity)


@pytest.fixture(scope="session")
def passive_cavity():
    return passive_cavity_stack()


@pytest.fixture(scope="session")
def passive_balance(passive_cavity):
    return solve_self_consistent(passive_cavity)
