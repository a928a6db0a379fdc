"""Pure-Python kernel for the bit-serial PE inner loop.

This is the fallback backend; ``bitmod._kernels._core`` is the compiled
twin with identical, bit-exact semantics.  All arithmetic is integer:

* lane product = 11-bit activation mantissa x 1-bit weight mantissa,
* alignment right-shift to the max lane exponent with round-to-nearest-even
  (the 3 guard bits of the hardware shifter preserve exact RNE),
* 4-lane signed adder tree,
* accumulation at the larger exponent with RNE alignment of the smaller
  operand, then renormalization keeping the leading set bit of the 32-bit
  accumulator mantissa in bit window [24, 31].

Activation scale convention: an FP16 operand with biased exponent a_e and
11-bit mantissa a_m (hidden bit included) has value a_m * 2^(a_e - 25).
"""

BACKEND_NAME = "pure"

_MANT_LO = 1 << 24
_MANT_HI = 1 << 32


def rne_rshift(p: int, s: int) -> int:
    """Round p / 2**s to the nearest integer, ties to even (p >= 0)."""
    if s <= 0:
        return p << (-s)
    q = p >> s
    rem = p - (q << s)
    half = 1 << (s - 1)
    if rem > half:
        q += 1
    elif rem == half:
        q += q & 1
    return q


def rne_rshift_signed(m: int, s: int) -> int:
    if m < 0:
        return -rne_rshift(-m, s)
    return rne_rshift(m, s)


def normalize(m: int, e: int):
    """Keep the accumulator's leading set bit inside [24, 31]."""
    if m == 0:
        return 0, 0
    k = abs(m).bit_length() - 1
    if k > 31:
        m = rne_rshift_signed(m, k - 31)
        e += k - 31
        if abs(m).bit_length() - 1 > 31:  # rounding carried out
            m = rne_rshift_signed(m, 1)
            e += 1
    elif k < 24:
        m <<= 24 - k
        e -= 24 - k
    return m, e


def pe_cycle_core(m_acc, e_acc, w_sign, w_exp, w_man, bsig, a_sign, a_e, a_m):
    """One PE cycle: 4-way dot of bit-serial terms and FP16 activations.

    Lane sequences have length 4.  Returns the updated (m_acc, e_acc).
    """
    max_e = None
    prods = []
    for i in range(4):
        p = a_m[i] if w_man[i] else 0
        if p:
            lane_e = a_e[i] + w_exp[i]
            prods.append((i, p, lane_e))
            if max_e is None or lane_e > max_e:
                max_e = lane_e
    if not prods:
        return m_acc, e_acc
    tree = 0
    for i, p, lane_e in prods:
        mant = rne_rshift(p, max_e - lane_e)
        if a_sign[i] ^ w_sign[i]:
            tree -= mant
        else:
            tree += mant
    if tree == 0:
        return m_acc, e_acc
    e_t = max_e + bsig - 25
    if m_acc == 0:
        return normalize(tree, e_t)
    if e_acc >= e_t:
        return normalize(m_acc + rne_rshift_signed(tree, e_acc - e_t), e_acc)
    return normalize(rne_rshift_signed(m_acc, e_t - e_acc) + tree, e_t)


def run_group_dot(w_sign, w_exp, w_man, w_bsig, a_sign, a_e, a_m,
                  group_size, terms_per_code):
    """Full group dot product over pre-encoded term arrays.

    Term arrays are flat with layout [weight * terms_per_code + slot];
    activation arrays have one entry per weight.  Returns the accumulator
    (m_acc, e_acc) before dequantization.
    """
    s = terms_per_code
    # Plain Python ints throughout: no width limits, exact shifts.
    w_sign = [int(v) for v in w_sign]
    w_exp = [int(v) for v in w_exp]
    w_man = [int(v) for v in w_man]
    w_bsig = [int(v) for v in w_bsig]
    a_sign = [int(v) for v in a_sign]
    a_e = [int(v) for v in a_e]
    a_m = [int(v) for v in a_m]
    m_acc, e_acc = 0, 0
    for j in range(0, group_size, 4):
        lanes = (j, j + 1, j + 2, j + 3)
        asn = [a_sign[i] for i in lanes]
        aee = [a_e[i] for i in lanes]
        amm = [a_m[i] for i in lanes]
        for t in range(s):
            idx = [i * s + t for i in lanes]
            m_acc, e_acc = pe_cycle_core(
                m_acc, e_acc,
                [w_sign[k] for k in idx],
                [w_exp[k] for k in idx],
                [w_man[k] for k in idx],
                w_bsig[lanes[0] * s + t],
                asn, aee, amm,
            )
    return m_acc, e_acc


def dequant_shift_add(m_acc: int, scale_q: int) -> int:
    """8-step shift-and-add multiply by the unsigned 8-bit group scale."""
    out = 0
    for i in range(8):
        if (scale_q >> i) & 1:
            out += m_acc << i
    return out
