"""Quantization and dequantization math.

Symmetric/asymmetric integer quantization, nonlinear grid quantization,
per-group special-value adaptation, second-level INT8 quantization of the
per-group scaling factors, and error metrics.

Rounding convention: ``Round`` in the integer quantizers is
round-half-away-from-zero, applied uniformly to codes and zero-points.
The nearest-grid tie-break picks the grid value with smaller magnitude
(the negative one when magnitudes are equal).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dtype import (
    DataTypeSpec,
    GroupingConfig,
    effective_grid,
    grid_absmax,
)
from .errors import LengthMismatch, UnsupportedDtype


def round_half_away(x):
    """Round to nearest integer, ties away from zero."""
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def check_finite(tensor: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(tensor)):
        raise ValueError("tensor contains NaN or Inf")
    return tensor


@dataclass
class QuantizedGroup:
    """Storage unit of one weight group.

    ``codes`` index the effective grid for FP types and hold signed
    (symmetric) or unsigned (asymmetric) integers for INT types.
    """

    codes: np.ndarray
    sv_index: int = 0
    scale_q: int = 0
    zero_point: int | None = None
    # Unquantized per-group scale; kept until quantize_scales runs.
    delta: float = 0.0


@dataclass
class ChannelQuantization:
    groups: list[QuantizedGroup]
    channel_scale: float
    dtype: DataTypeSpec
    valid_size: int  # channel size before zero-padding


@dataclass(frozen=True)
class ErrorReport:
    mse: float
    normalized_error: float
    max_abs_error: float


def quantize_symmetric(group, bits: int):
    """Symmetric integer quantization: returns (codes, delta)."""
    if not 2 <= bits <= 8:
        raise ValueError("bits must be in [2, 8]")
    w = np.asarray(group, dtype=np.float64)
    qmax = (1 << (bits - 1)) - 1
    absmax = float(np.max(np.abs(w))) if w.size else 0.0
    if absmax == 0.0:
        return np.zeros(w.shape, dtype=np.int64), 0.0
    delta = absmax / qmax
    codes = np.clip(round_half_away(w / delta), -qmax, qmax).astype(np.int64)
    return codes, delta


def quantize_asymmetric(group, bits: int):
    """Asymmetric integer quantization: returns (codes, delta, zero_point)."""
    if not 2 <= bits <= 8:
        raise ValueError("bits must be in [2, 8]")
    w = np.asarray(group, dtype=np.float64)
    qmax = (1 << bits) - 1
    rng = float(np.max(w) - np.min(w)) if w.size else 0.0
    if rng == 0.0:
        # Constant group: degenerate, dequantizes to 0.
        return np.zeros(w.shape, dtype=np.int64), 0.0, 0
    delta = rng / qmax
    z = int(round_half_away(-np.min(w) / delta))
    codes = np.clip(round_half_away(w / delta) + z, 0, qmax).astype(np.int64)
    return codes, delta, z


def _grid_floats(grid) -> np.ndarray:
    return np.array([float(g) for g in grid], dtype=np.float64)


def nearest_grid_index(scaled: np.ndarray, grid_f: np.ndarray) -> np.ndarray:
    """Index of the nearest grid value; ties go to the smaller magnitude."""
    n = len(grid_f)
    idx = np.searchsorted(grid_f, scaled)
    lo = np.clip(idx - 1, 0, n - 1)
    hi = np.clip(idx, 0, n - 1)
    d_lo = np.abs(scaled - grid_f[lo])
    d_hi = np.abs(grid_f[hi] - scaled)
    take_hi = d_hi < d_lo
    tie = d_hi == d_lo
    # Tie: smaller |grid value| wins; equal magnitudes fall back to the
    # negative (lower) one.
    take_hi |= tie & (np.abs(grid_f[hi]) < np.abs(grid_f[lo]))
    return np.where(take_hi, hi, lo)


def nonlinear_quantize(group, grid):
    """Quantize onto an arbitrary grid of rationals containing 0.

    Returns (codes, delta) where codes index ``grid`` and
    delta = max|w| / grid_absmax.
    """
    w = np.asarray(group, dtype=np.float64)
    grid_f = _grid_floats(grid)
    zero_code = int(np.searchsorted(grid_f, 0.0))
    if grid_f[zero_code] != 0.0:
        raise ValueError("grid must contain 0")
    absmax = float(np.max(np.abs(w))) if w.size else 0.0
    if absmax == 0.0:
        return np.full(w.shape, zero_code, dtype=np.int64), 0.0
    delta = absmax / float(grid_absmax(grid))
    codes = nearest_grid_index(w / delta, grid_f).astype(np.int64)
    return codes, delta


def adaptive_quant(group, spec: DataTypeSpec):
    """Pick the special value minimizing group MSE (lowest index on ties).

    Returns (QuantizedGroup with unquantized delta, chosen special value,
    mse).
    """
    if not spec.is_bitmod:
        raise UnsupportedDtype(f"{spec.name} has no special values to adapt")
    w = np.asarray(group, dtype=np.float64)
    best = None
    for sv_index, sv in enumerate(spec.special_values):
        grid = effective_grid(spec, sv_index)
        codes, delta = nonlinear_quantize(w, grid)
        deq = _grid_floats(grid)[codes] * delta
        mse = float(np.mean((w - deq) ** 2)) if w.size else 0.0
        if best is None or mse < best[0]:
            best = (mse, sv_index, sv, codes, delta)
    mse, sv_index, sv, codes, delta = best
    return QuantizedGroup(codes=codes, sv_index=sv_index, delta=delta), sv, mse


def quantize_scales(per_group_deltas):
    """Second-level INT8 quantization of the per-group scaling factors.

    Returns (scale_q int array in [0, 127], channel_scale).
    """
    deltas = np.asarray(per_group_deltas, dtype=np.float64)
    dmax = float(np.max(deltas)) if deltas.size else 0.0
    if dmax == 0.0:
        return np.zeros(deltas.shape, dtype=np.int64), 0.0
    # Rounded to float32 so the packed-file f32 field is lossless.
    channel_scale = float(np.float32(dmax / 127.0))
    if channel_scale == 0.0:
        # dmax below float32 subnormal range: nothing representable remains.
        return np.zeros(deltas.shape, dtype=np.int64), 0.0
    scale_q = np.clip(round_half_away(deltas / channel_scale), 0, 127)
    return scale_q.astype(np.int64), channel_scale


def quantize_channel(values, spec: DataTypeSpec,
                     grouping: GroupingConfig) -> ChannelQuantization:
    """Quantize one weight channel group by group, then its scales."""
    w = check_finite(np.asarray(values, dtype=np.float64))
    if w.ndim != 1:
        raise ValueError("channel must be 1-D")
    g = grouping.group_size
    valid = w.size
    pad = (-valid) % g
    if pad:
        w = np.concatenate([w, np.zeros(pad)])
    groups = []
    for start in range(0, w.size, g):
        chunk = w[start:start + g]
        if spec.is_fp:
            if spec.is_bitmod:
                qg, _, _ = adaptive_quant(chunk, spec)
            else:
                codes, delta = nonlinear_quantize(chunk, spec.basic_values)
                qg = QuantizedGroup(codes=codes, delta=delta)
        elif spec.asymmetric:
            codes, delta, z = quantize_asymmetric(chunk, spec.bits_per_code)
            qg = QuantizedGroup(codes=codes, delta=delta, zero_point=z)
        else:
            codes, delta = quantize_symmetric(chunk, spec.bits_per_code)
            qg = QuantizedGroup(codes=codes, delta=delta)
        groups.append(qg)
    scale_q, channel_scale = quantize_scales([qg.delta for qg in groups])
    for qg, s in zip(groups, scale_q):
        qg.scale_q = int(s)
    return ChannelQuantization(groups=groups, channel_scale=float(channel_scale),
                               dtype=spec, valid_size=valid)


def dequantize_channel(cq: ChannelQuantization) -> np.ndarray:
    """Reconstruct the channel; padded lanes are dropped."""
    spec = cq.dtype
    out = []
    for qg in cq.groups:
        delta_hat = qg.scale_q * cq.channel_scale
        if spec.is_fp:
            grid_f = _grid_floats(effective_grid(spec, qg.sv_index))
            out.append(grid_f[qg.codes] * delta_hat)
        elif spec.asymmetric:
            out.append((qg.codes - (qg.zero_point or 0)) * delta_hat)
        else:
            out.append(qg.codes * delta_hat)
    return np.concatenate(out)[: cq.valid_size]


def quantize_tensor(tensor, spec: DataTypeSpec,
                    grouping: GroupingConfig) -> list[ChannelQuantization]:
    w = check_finite(np.asarray(tensor, dtype=np.float64))
    if w.ndim != 2:
        raise ValueError("tensor must be 2-D (out_channels x channel_size)")
    return [quantize_channel(row, spec, grouping) for row in w]


def dequantize_tensor(channels: list[ChannelQuantization]) -> np.ndarray:
    return np.stack([dequantize_channel(cq) for cq in channels])


def error_report(original, dequantized) -> ErrorReport:
    w = np.asarray(original, dtype=np.float64)
    w_hat = np.asarray(dequantized, dtype=np.float64)
    if w.shape != w_hat.shape:
        raise LengthMismatch(f"{w.shape} vs {w_hat.shape}")
    err = w - w_hat
    mse = float(np.mean(err ** 2)) if w.size else 0.0
    denom = float(np.mean(w ** 2)) if w.size else 0.0
    return ErrorReport(
        mse=mse,
        normalized_error=mse / denom if denom > 0 else 0.0,
        max_abs_error=float(np.max(np.abs(err))) if w.size else 0.0,
    )


def memory_footprint_bits(spec: DataTypeSpec, grouping: GroupingConfig) -> Fraction:
    """Stored bits per weight including per-group metadata.

    BitMoD types carry an 8-bit scale plus a 2-bit special-value index per
    group; symmetric INT and basic FP types carry the 8-bit scale only.
    The asymmetric-INT software baseline is modeled with a 16-bit scale and
    an 8-bit zero-point per group.
    """
    g = grouping.group_size
    if spec.asymmetric:
        overhead = 16 + 8
    else:
        overhead = 8 + spec.sv_bits
    return Fraction(spec.bits_per_code) + Fraction(overhead, g)
