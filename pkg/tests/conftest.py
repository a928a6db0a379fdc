import numpy as np

import pe_oracle
from bitmod.dtype import effective_grid


def oracle_weight_terms(qg, spec):
    """Encode a quantized group with the reference encoders in pe_oracle."""
    if spec.is_fp:
        grid = effective_grid(spec, qg.sv_index)
        return [pe_oracle.fp_terms(grid[int(c)]) for c in qg.codes]
    return [pe_oracle.booth_terms(int(c), spec.terms_per_code)
            for c in qg.codes]


def oracle_acts(values):
    return [pe_oracle.fp16_operand(v) for v in values]


def exact_dot(qg, spec, act_values) -> float:
    """Double-precision reference: grid values times FP16 activations."""
    if spec.is_fp:
        grid = np.array([float(v) for v in effective_grid(spec, qg.sv_index)])
        w = grid[np.asarray(qg.codes)]
    else:
        w = np.asarray(qg.codes, dtype=np.float64)
    a = np.float16(np.asarray(act_values, dtype=np.float64)).astype(np.float64)
    return float(np.dot(w, a)) * qg.scale_q
