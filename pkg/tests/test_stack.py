import math

import numpy as np
import pytest

from photonstack.errors import ConfigError, MissingTemperatureError
from photonstack.stack import (
    ConstantIndex,
    Layer,
    LayerSlices,
    LayerStack,
    TabulatedIndex,
    TemperatureProfile,
    build_stack,
    load_stack,
    refractive_index,
    serialize_stack,
)
from photonstack.units import omega_from_ev

from conftest import INF, cavity_stack


def test_interfaces_and_layer_lookup():
    stack = cavity_stack()
    assert stack.interfaces == (0.0, 10e-6)
    assert stack.layer_index(-1e-6) == 0
    assert stack.layer_index(5e-6) == 1
    assert stack.layer_index(15e-6) == 2
    # interface points belong to the right layer
    assert stack.layer_index(0.0) == 1
    assert stack.layer_index(10e-6) == 2
    assert stack.span == (0.0, 10e-6)
    assert stack.layer_bounds(0) == (-math.inf, 0.0)
    assert stack.layer_bounds(1) == (0.0, 10e-6)
    assert stack.layer_bounds(2) == (10e-6, math.inf)


def test_refractive_index_lookup():
    stack = cavity_stack()
    om = omega_from_ev(0.1)
    assert refractive_index(stack, -1e-6, om) == 1.5 + 0.3j
    assert refractive_index(stack, 5e-6, om) == 1.0
    assert refractive_index(stack, 0.0, om) == 1.0
    with pytest.raises(ConfigError):
        refractive_index(stack, 5e-6, -om)


def test_assemble_collects_all_problems():
    with pytest.raises(ConfigError) as err:
        LayerStack.assemble([
            Layer(5e-6, ConstantIndex(1.5), None),
            Layer(-1e-6, ConstantIndex(1.0)),
            Layer(INF, ConstantIndex(2.5 + 0.5j), -10.0),
        ])
    msg = str(err.value)
    assert "layer 0" in msg and "thickness inf" in msg
    assert "layer 1" in msg and "interior thickness" in msg
    assert "layer 2" in msg and "temperature must be positive" in msg


def test_outer_layers_must_be_lossy():
    layers = [
        Layer(INF, ConstantIndex(1.0)),
        Layer(5e-6, ConstantIndex(1.5)),
        Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
    ]
    with pytest.raises(ConfigError, match="outer layers must be lossy"):
        LayerStack.assemble(layers)
    stack = LayerStack.assemble(layers, allow_lossless_bounds=True)
    assert stack.allow_lossless_bounds


def test_gain_media_rejected():
    with pytest.raises(ConfigError, match="nonnegative"):
        LayerStack.assemble([
            Layer(INF, ConstantIndex(1.5 - 0.3j), 400.0),
            Layer(5e-6, ConstantIndex(1.0)),
            Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
        ])


def test_assignment_on_transparent_layer_rejected():
    with pytest.raises(ConfigError, match="requires a lossy medium"):
        LayerStack.assemble([
            Layer(INF, ConstantIndex(1.5 + 0.3j), 400.0),
            Layer(5e-6, ConstantIndex(1.0), 350.0),
            Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
        ])


def test_self_consistent_semi_infinite_rejected():
    with pytest.raises(ConfigError, match="self-consistent"):
        LayerStack.assemble([
            Layer(INF, ConstantIndex(1.5 + 0.3j), self_consistent=True),
            Layer(5e-6, ConstantIndex(1.0)),
            Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
        ])


def test_tabulated_index_interpolation_and_bounds():
    om = omega_from_ev(np.array([0.05, 0.10, 0.20]))
    tab = TabulatedIndex(om, np.array([1.5 + 0.1j, 1.7 + 0.3j, 1.9 + 0.5j]))
    mid = tab.at(omega_from_ev(0.15))
    assert mid == pytest.approx(1.8 + 0.4j)
    assert tab.loss_floor() == pytest.approx(((1.5 + 0.1j) ** 2).imag)
    with pytest.raises(ConfigError, match="does not cover"):
        tab.at(omega_from_ev(0.3))


def test_build_stack_from_mapping():
    config = {
        "layers": [
            {"thickness": "inf", "n": "1.5+0.3i", "temperature": 400.0},
            {"thickness": 10.0, "n": 1.0},
            {"thickness": "inf", "n": "2.5+0.5i", "temperature": 300.0},
        ]
    }
    stack = build_stack(config)
    assert stack.layers[0].n_at(1.0) == 1.5 + 0.3j
    assert stack.layers[1].thickness == pytest.approx(10e-6)
    assert stack.layers[2].temperature == 300.0


def test_build_stack_parse_errors_name_the_field():
    base = {"thickness": "inf", "n": "2.5+0.5i", "temperature": 300.0}
    with pytest.raises(ConfigError, match="layer 1: thickness"):
        build_stack({"layers": [base, {"thickness": "wide", "n": 1.0}, base]})
    with pytest.raises(ConfigError, match="layer 1: cannot parse complex index"):
        build_stack({"layers": [base, {"thickness": 5.0, "n": "one"}, base]})
    with pytest.raises(ConfigError, match="layer 1: unknown keys"):
        build_stack({"layers": [base, {"thickness": 5.0, "n": 1.0, "temp": 3}, base]})
    with pytest.raises(ConfigError, match="layer 1: temperature"):
        build_stack({"layers": [base, {"thickness": 5.0, "n": "1.0+0.1i",
                                       "temperature": "warm"}, base]})


def test_self_consistent_marker_parsed():
    config = {
        "layers": [
            {"thickness": "inf", "n": "1.5+0.3i", "temperature": 400.0},
            {"thickness": 10.0, "n": "1.1+0.1i", "temperature": "self-consistent"},
            {"thickness": "inf", "n": "2.5+0.5i", "temperature": 300.0},
        ]
    }
    stack = build_stack(config)
    assert stack.layers[1].self_consistent
    assert stack.layers[1].temperature is None


def test_serialize_round_trip():
    stack = cavity_stack()
    mapping = serialize_stack(stack, name="cavity")
    rebuilt = build_stack(mapping)
    assert rebuilt.interfaces == stack.interfaces
    for a, b in zip(rebuilt.layers, stack.layers):
        assert a == b


def test_serialize_round_trip_tabulated():
    om = omega_from_ev(np.array([0.05, 0.10, 0.20]))
    tab = TabulatedIndex(om, np.array([1.5 + 0.1j, 1.7 + 0.3j, 1.9 + 0.5j]))
    stack = LayerStack.assemble([
        Layer(INF, ConstantIndex(1.5 + 0.3j), 400.0),
        Layer(5e-6, tab, 350.0),
        Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
    ])
    rebuilt = build_stack(serialize_stack(stack))
    probe = omega_from_ev(0.12)
    assert rebuilt.layers[1].n_at(probe) == pytest.approx(tab.at(probe))


def test_load_stack_from_yaml(tmp_path):
    cfg = tmp_path / "stack.yaml"
    cfg.write_text(
        "layers:\n"
        "  - {thickness: inf, n: 1.5+0.3i, temperature: 400.0}\n"
        "  - {thickness: 10.0, n: 1.0}\n"
        "  - {thickness: inf, n: 2.5+0.5i, temperature: 300.0}\n"
    )
    stack = load_stack(cfg)
    assert stack.layers[0].n_at(1.0) == 1.5 + 0.3j
    with pytest.raises(ConfigError, match="cannot read"):
        load_stack(tmp_path / "missing.yaml")


def test_index_table_csv(tmp_path):
    table = tmp_path / "n.csv"
    table.write_text("E_eV,n_re,n_im\n0.05,1.5,0.1\n0.25,1.9,0.5\n")
    config = {
        "layers": [
            {"thickness": "inf", "n": "1.5+0.3i", "temperature": 400.0},
            {"thickness": 5.0, "n": {"table": "n.csv"}, "temperature": 350.0},
            {"thickness": "inf", "n": "2.5+0.5i", "temperature": 300.0},
        ]
    }
    stack = build_stack(config, base_dir=tmp_path)
    mid = stack.layers[1].n_at(omega_from_ev(0.15))
    assert mid == pytest.approx(1.7 + 0.3j)

    table.write_text("energy,re,im\n0.05,1.5,0.1\n")
    with pytest.raises(ConfigError, match="must start with header"):
        build_stack(config, base_dir=tmp_path)


def test_profile_from_stack_and_uniform():
    stack = cavity_stack()
    profile = TemperatureProfile.from_stack(stack)
    assert profile.entries == (400.0, None, 300.0)
    assert profile.temperature_at(stack, -1e-6) == 400.0
    assert profile.temperature_at(stack, 5e-6) is None
    assert profile.temperature_at(stack, 11e-6) == 300.0

    eq = TemperatureProfile.uniform(stack, 350.0)
    assert eq.entries == (350.0, None, 350.0)
    eq.validate(stack)


def test_profile_requires_solved_self_consistent():
    stack = LayerStack.assemble([
        Layer(INF, ConstantIndex(1.5 + 0.3j), 400.0),
        Layer(10e-6, ConstantIndex(1.1 + 0.1j), self_consistent=True),
        Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
    ])
    with pytest.raises(MissingTemperatureError):
        TemperatureProfile.from_stack(stack)


def test_source_regions_enumerate_lossy_layers():
    stack = cavity_stack()
    profile = TemperatureProfile.from_stack(stack)
    regions = profile.source_regions(stack)
    assert [r.layer for r in regions] == [0, 2]
    assert regions[0].hi == 0.0 and math.isinf(regions[0].lo)
    assert regions[1].lo == 10e-6 and math.isinf(regions[1].hi)
    assert [r.temperature for r in regions] == [400.0, 300.0]


def test_sliced_profile_lookup_and_validation():
    stack = LayerStack.assemble([
        Layer(INF, ConstantIndex(1.5 + 0.3j), 400.0),
        Layer(10e-6, ConstantIndex(1.1 + 0.1j), self_consistent=True),
        Layer(INF, ConstantIndex(2.5 + 0.5j), 300.0),
    ])
    slices = LayerSlices(
        boundaries=tuple(np.linspace(0.0, 10e-6, 5)),
        temperatures=(380.0, 360.0, 340.0, 320.0),
    )
    profile = TemperatureProfile((400.0, slices, 300.0))
    profile.validate(stack)
    assert profile.temperature_at(stack, 1e-6) == 380.0
    assert profile.temperature_at(stack, 9.9e-6) == 320.0
    regions = profile.source_regions(stack)
    assert len(regions) == 6
    assert [r.temperature for r in regions[1:5]] == [380.0, 360.0, 340.0, 320.0]

    bad = TemperatureProfile((400.0, LayerSlices((0.0, 10e-6), (350.0, 340.0)), 300.0))
    with pytest.raises(ConfigError, match="slice boundaries"):
        bad.validate(stack)
    shifted = TemperatureProfile(
        (400.0, LayerSlices((1e-6, 10e-6), (350.0,)), 300.0))
    with pytest.raises(ConfigError, match="exactly tile"):
        shifted.validate(stack)


def test_replaced_is_functional():
    stack = cavity_stack()
    base = TemperatureProfile.from_stack(stack)
    warmer = base.replaced(0, 420.0)
    assert warmer.entries[0] == 420.0
    assert base.entries[0] == 400.0
