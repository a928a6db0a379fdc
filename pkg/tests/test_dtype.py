from fractions import Fraction

import pytest

from bitmod.dtype import (
    DataType,
    GroupingConfig,
    SPECS,
    effective_grid,
    grid_absmax,
    spec_for,
)
from bitmod.errors import EmptyGrid, InvalidSpecialValueIndex

F = Fraction


def grid(*vals):
    return tuple(F(v) for v in vals)


def test_fp3_basic_values():
    assert spec_for("FP3_BASIC").basic_values == grid(-4, -2, -1, 0, 1, 2, 4)


def test_fp4_basic_values():
    spec = spec_for("FP4_BASIC")
    assert spec.basic_values == grid(
        -6, -4, -3, -2, F(-3, 2), -1, F(-1, 2), 0,
        F(1, 2), 1, F(3, 2), 2, 3, 4, 6,
    )


def test_special_value_order_er_before_ea():
    assert spec_for("FP3_BITMOD").special_values == grid(3, -3, 6, -6)
    assert spec_for("FP4_BITMOD").special_values == grid(5, -5, 8, -8)


def test_int_grids():
    assert spec_for("INT4_SYM").basic_values == tuple(F(v) for v in range(-7, 8))
    assert spec_for("INT4_ASYM").basic_values == tuple(F(v) for v in range(16))
    assert spec_for("INT8_SYM").basic_values[0] == -127
    assert spec_for("INT8_SYM").basic_values[-1] == 127


@pytest.mark.parametrize("name,bits,terms", [
    ("INT8_SYM", 8, 4),
    ("INT6_SYM", 6, 3),
    ("INT6_ASYM", 6, 4),
    ("INT4_SYM", 4, 2),
    ("INT4_ASYM", 4, 3),
    ("INT3_ASYM", 3, 2),
    ("FP4_BASIC", 4, 2),
    ("FP3_BASIC", 3, 2),
    ("FP4_BITMOD", 4, 2),
    ("FP3_BITMOD", 3, 2),
])
def test_precision_metadata(name, bits, terms):
    spec = spec_for(name)
    assert spec.bits_per_code == bits
    assert spec.terms_per_code == terms


def test_spec_for_accepts_enum_and_loose_strings():
    assert spec_for(DataType.FP3_BITMOD) is SPECS[DataType.FP3_BITMOD]
    assert spec_for("fp3-bitmod").name is DataType.FP3_BITMOD


def test_effective_grid_merges_special_value():
    spec = spec_for("FP3_BITMOD")
    ea_plus = spec.special_values.index(F(6))
    assert effective_grid(spec, ea_plus) == grid(-4, -2, -1, 0, 1, 2, 4, 6)
    assert effective_grid(spec_for("FP3_BASIC"), 0) == grid(-4, -2, -1, 0, 1, 2, 4)


def test_effective_grid_fp4_minus_5():
    spec = spec_for("FP4_BITMOD")
    idx = spec.special_values.index(F(-5))
    assert effective_grid(spec, idx) == grid(
        -6, -5, -4, -3, -2, F(-3, 2), -1, F(-1, 2), 0,
        F(1, 2), 1, F(3, 2), 2, 3, 4, 6,
    )


def test_effective_grid_always_adds_exactly_one_value():
    for name in ("FP3_BITMOD", "FP4_BITMOD"):
        spec = spec_for(name)
        for i in range(4):
            g = effective_grid(spec, i)
            assert len(g) == len(spec.basic_values) + 1
            assert list(g) == sorted(g)


def test_effective_grid_index_errors():
    with pytest.raises(InvalidSpecialValueIndex):
        effective_grid(spec_for("FP3_BITMOD"), 4)
    with pytest.raises(InvalidSpecialValueIndex):
        effective_grid(spec_for("FP3_BASIC"), 1)


def test_grid_absmax():
    assert grid_absmax(grid(-4, 0, 4)) == 4
    assert grid_absmax(effective_grid(spec_for("FP3_BITMOD"), 2)) == 6
    spec4 = spec_for("FP4_BITMOD")
    idx = spec4.special_values.index(F(-8))
    assert grid_absmax(effective_grid(spec4, idx)) == 8
    with pytest.raises(EmptyGrid):
        grid_absmax(())


def test_er_preserves_absmax_ea_extends_it():
    for name, base, ea in (("FP3_BITMOD", 4, 6), ("FP4_BITMOD", 6, 8)):
        spec = spec_for(name)
        assert grid_absmax(effective_grid(spec, 0)) == base
        assert grid_absmax(effective_grid(spec, 1)) == base
        assert grid_absmax(effective_grid(spec, 2)) == ea
        assert grid_absmax(effective_grid(spec, 3)) == ea


def test_grouping_config_padding():
    g = GroupingConfig(group_size=128, channel_size=300)
    assert g.padded_channel_size() == 384
    assert g.groups_per_channel() == 3
    exact = GroupingConfig(group_size=128, channel_size=256)
    assert exact.padded_channel_size() == 256
    with pytest.raises(ValueError):
        GroupingConfig(group_size=0)


def test_dtype_ids_are_stable():
    # These feed the packed-file header; changing them breaks old files.
    assert DataType.INT8_SYM.value == 0
    assert DataType.FP4_BITMOD.value == 8
    assert DataType.FP3_BITMOD.value == 9
