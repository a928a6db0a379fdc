import math
from fractions import Fraction

import pytest

from bitmod import archsim
from bitmod.archsim import (
    ArchConfig,
    LayerShape,
    WorkloadSpec,
    baseline_fp16_layer,
    baseline_fp16_sim,
    check_no_stall,
    parse_shape_file,
    profile_shapes,
    simulate_layer,
    simulate_workload,
    with_speedup,
    workload_weight_bytes,
)
from bitmod.dtype import GroupingConfig, spec_for
from bitmod.errors import ConfigError, ParseError
from bitmod.quant import memory_footprint_bits

G128 = GroupingConfig(group_size=128)


def test_arch_config_defaults_and_validation():
    cfg = ArchConfig()
    assert cfg.n_pes == 4 * 4 * 8 * 8
    with pytest.raises(ConfigError):
        ArchConfig(tiles_x=0)
    with pytest.raises(ConfigError):
        ArchConfig(dram_bandwidth_bytes_per_s=0)


def test_check_no_stall_all_supported_combinations():
    for name in ("INT8_SYM", "INT6_SYM", "INT4_SYM", "FP4_BASIC", "FP3_BASIC",
                 "FP4_BITMOD", "FP3_BITMOD"):
        spec = spec_for(name)
        for g in (16, 32, 64, 128, 256):
            assert check_no_stall(spec, GroupingConfig(group_size=g))


def test_check_no_stall_warns_when_violated():
    # A hypothetical 1-term dtype at G=16 would give 4 < 8 compute cycles;
    # the nearest real trigger is G=8 with a 2-term type.
    with pytest.warns(UserWarning):
        ok = check_no_stall(spec_for("FP3_BITMOD"), GroupingConfig(group_size=8))
    assert not ok


def test_simulate_layer_closed_form_cycles():
    cfg = ArchConfig()
    spec = spec_for("INT6_SYM")
    layer = LayerShape(m=256, k=4096, n=4096)
    rep = simulate_layer(layer, spec, G128, cfg)
    waves_m = math.ceil(256 / (4 * 8))
    waves_n = math.ceil(4096 / (4 * 8))
    groups = 4096 // 128
    assert rep.compute_cycles == waves_m * waves_n * groups * (128 // 4) * 3
    bits = memory_footprint_bits(spec, G128)
    assert rep.weight_bytes == pytest.approx(float(4096 * 4096 * bits / 8))
    assert rep.activation_bytes == (256 * 4096 + 256 * 4096) * 2
    assert rep.total_cycles == max(rep.compute_cycles, rep.dram_cycles)


def test_simulate_layer_k_padding_and_repeat():
    spec = spec_for("FP3_BITMOD")
    one = simulate_layer(LayerShape(m=4, k=100, n=8), spec, G128)
    # K pads to one full group of 128.
    assert one.compute_cycles == 1 * 1 * 1 * 64
    three = simulate_layer(LayerShape(m=4, k=100, n=8, repeat=3), spec, G128)
    assert three.compute_cycles == 3 * one.compute_cycles
    assert simulate_layer(LayerShape(m=4, k=100, n=8, repeat=0), spec,
                          G128).total_cycles == 0
    with pytest.raises(ConfigError):
        simulate_layer(LayerShape(m=0, k=8, n=8), spec, G128)


def test_baseline_iso_area_uses_smaller_tile():
    layer = LayerShape(m=48, k=128, n=128)
    iso = baseline_fp16_layer(layer, iso_area=True)
    same = baseline_fp16_layer(layer, iso_area=False)
    # 6x8 tile: 48 rows in 2 waves; 8x8 tile: 2 waves of 32 -> same here,
    # so pick a height where they differ.
    tall = LayerShape(m=256, k=128, n=128)
    iso, same = (baseline_fp16_layer(tall, iso_area=True),
                 baseline_fp16_layer(tall, iso_area=False))
    assert iso.compute_cycles > same.compute_cycles
    assert iso.weight_bytes == same.weight_bytes == 128 * 128 * 2


def test_compute_bound_speedup_ratios_exact():
    # With DRAM made effectively free, speedups equal the PE-count-weighted
    # throughput ratios: (8x8/6x8) * 4/terms.
    cfg = ArchConfig(dram_bandwidth_bytes_per_s=1e18)
    layer = LayerShape(m=384, k=4096, n=4096)
    base = baseline_fp16_layer(layer, cfg)
    for name, terms in (("FP3_BITMOD", 2), ("FP4_BITMOD", 2),
                        ("INT6_SYM", 3), ("INT8_SYM", 4)):
        rep = simulate_layer(layer, spec_for(name), G128, cfg)
        with_speedup(rep, base)
        expect = (64 / 48) * (4 / terms)
        assert rep.speedup_vs_baseline == pytest.approx(expect, rel=1e-12)


def test_memory_bound_speedup_tracks_footprint():
    # With compute made effectively free, speedup approaches the byte ratio.
    cfg = ArchConfig(dram_bandwidth_bytes_per_s=1.0)
    w = WorkloadSpec("t", (LayerShape(m=0, k=4096, n=4096),),
                     prefill_tokens=1, decode_tokens=0)
    spec = spec_for("FP3_BITMOD")
    rep = simulate_workload(w, spec, G128, cfg)
    base = baseline_fp16_sim(w, cfg)
    with_speedup(rep, base)
    total_bits = float(memory_footprint_bits(spec, G128))
    byte_ratio = (16 * 4096 * 4096 + 16 * (4096 + 4096) * 2 * 8) / \
                 (total_bits * 4096 * 4096 + 16 * (4096 + 4096) * 2 * 8 / 2)
    assert rep.speedup_vs_baseline == pytest.approx(byte_ratio, rel=0.05)
    assert rep.speedup_vs_baseline > 4.0


def test_workload_phases_decode_refetches_weights():
    layers = (LayerShape(m=0, k=512, n=512),)
    spec = spec_for("INT6_SYM")
    prefill_only = simulate_workload(
        WorkloadSpec("p", layers, prefill_tokens=256, decode_tokens=0),
        spec, G128)
    generative = simulate_workload(
        WorkloadSpec("g", layers, prefill_tokens=256, decode_tokens=64),
        spec, G128)
    per_fetch = workload_weight_bytes(
        WorkloadSpec("w", layers), memory_footprint_bits(spec, G128))
    assert prefill_only.weight_bytes == pytest.approx(per_fetch)
    assert generative.weight_bytes == pytest.approx(per_fetch * 65)


def test_energy_accumulates_and_scales_with_bytes():
    spec = spec_for("INT8_SYM")
    small = simulate_layer(LayerShape(m=8, k=256, n=256), spec, G128)
    big = simulate_layer(LayerShape(m=8, k=256, n=512), spec, G128)
    assert big.energy.dram_j > small.energy.dram_j
    assert big.energy.total_j == pytest.approx(
        big.energy.compute_j + big.energy.sram_j + big.energy.dram_j)


# ---------------------------------------------------------------------------
# shape files
# ---------------------------------------------------------------------------

TOY = """
# comment
name = toy
hidden = 64
ffn = 256
heads = 4
blocks = 1
"""


def test_parse_shape_file():
    v = parse_shape_file(TOY)
    assert v == {"name": "toy", "hidden": 64, "ffn": 256, "heads": 4,
                 "blocks": 1}


def test_parse_shape_file_errors_carry_line_numbers():
    with pytest.raises(ParseError) as ei:
        parse_shape_file("name = x\nbogus line\n")
    assert ei.value.line == 2
    with pytest.raises(ParseError):
        parse_shape_file("name = x\nhidden = abc\nblocks = 1\n")
    with pytest.raises(ParseError):
        parse_shape_file("hidden = 64\nblocks = 1\n")  # missing name
    with pytest.raises(ParseError):
        parse_shape_file("\n# only comments\n")


def test_profile_shapes_gemm_list():
    w = profile_shapes(TOY)
    assert w.name == "toy"
    # Q, K, V, O, FFN up, FFN down (ffn_gemms defaults to 2).
    assert len(w.layers) == 6
    assert w.layers[0] == LayerShape(m=0, k=64, n=64, repeat=1)
    assert w.layers[4] == LayerShape(m=0, k=64, n=256, repeat=1)
    assert w.layers[5] == LayerShape(m=0, k=256, n=64, repeat=1)


def test_profile_shapes_gqa_and_gated_ffn_and_vocab():
    text = ("name = m\nhidden = 64\nffn = 128\nheads = 8\nkv_heads = 2\n"
            "blocks = 3\nffn_gemms = 3\nvocab = 1000\n")
    w = profile_shapes(text)
    # K/V GEMMs shrink with grouped-query attention.
    assert w.layers[1].n == 64 * 2 // 8
    assert sum(1 for l in w.layers if l.n == 128) == 2  # up + gate
    assert w.layers[-1] == LayerShape(m=0, k=64, n=1000, repeat=1)
    assert all(l.repeat == 3 for l in w.layers[:-1])


def test_bundled_llama_shape_weight_count():
    from importlib import resources
    text = resources.files("bitmod.shapes").joinpath("llama-2-7b.shape") \
        .read_text()
    w = profile_shapes(text)
    n_weights = sum(l.k * l.n * l.repeat for l in w.layers)
    fp16_bytes = workload_weight_bytes(w, Fraction(16))
    assert fp16_bytes == n_weights * 2
    # Llama-2-7B linear layers hold ~6.6B parameters (13.2 GB in FP16).
    assert 12e9 < fp16_bytes < 15e9


def test_llama_generative_int6_speedup_band():
    from importlib import resources
    text = resources.files("bitmod.shapes").joinpath("llama-2-7b.shape") \
        .read_text()
    from dataclasses import replace
    w = replace(profile_shapes(text), prefill_tokens=256, decode_tokens=256)
    spec = spec_for("INT6_SYM")
    rep = simulate_workload(w, spec, G128)
    base = baseline_fp16_sim(w)
    with_speedup(rep, base)
    assert 1.8 <= rep.speedup_vs_baseline <= 2.7
    assert rep.weight_bytes / rep.activation_bytes >= 10.0
