# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twin of bitmod._kernels.pure — bit-identical by construction.

Only the group-level dot-product loop lives here; everything fits in 64-bit
integers (accumulator mantissa is 32 bits, adder-tree output 13 bits).
"""

BACKEND_NAME = "cython"


cdef inline long long _rne_rshift(long long p, long long s) noexcept:
    cdef long long q, rem, half
    if s <= 0:
        return p << (-s)
    if s >= 63:
        return 0
    q = p >> s
    rem = p - (q << s)
    half = <long long>1 << (s - 1)
    if rem > half:
        q += 1
    elif rem == half:
        q += q & 1
    return q


cdef inline long long _rne_rshift_signed(long long m, long long s) noexcept:
    if m < 0:
        return -_rne_rshift(-m, s)
    return _rne_rshift(m, s)


cdef inline int _msb(long long v) noexcept:
    cdef int k = -1
    while v:
        v >>= 1
        k += 1
    return k


cdef void _normalize(long long* m, long long* e) noexcept:
    cdef long long mm = m[0]
    cdef long long ee = e[0]
    cdef int k
    if mm == 0:
        m[0] = 0
        e[0] = 0
        return
    k = _msb(mm if mm > 0 else -mm)
    if k > 31:
        mm = _rne_rshift_signed(mm, k - 31)
        ee += k - 31
        if _msb(mm if mm > 0 else -mm) > 31:
            mm = _rne_rshift_signed(mm, 1)
            ee += 1
    elif k < 24:
        mm <<= 24 - k
        ee -= 24 - k
    m[0] = mm
    e[0] = ee


def run_group_dot(long long[::1] w_sign, long long[::1] w_exp,
                  long long[::1] w_man, long long[::1] w_bsig,
                  long long[::1] a_sign, long long[::1] a_e,
                  long long[::1] a_m,
                  int group_size, int terms_per_code):
    """Same contract as bitmod._kernels.pure.run_group_dot."""
    cdef long long m_acc = 0, e_acc = 0
    cdef long long p, lane_e, max_e, tree, mant, e_t, bsig
    cdef int j, t, i, k, n_active
    cdef int s = terms_per_code
    cdef long long pe[4]
    cdef long long pm[4]
    cdef long long ps[4]

    for j in range(0, group_size, 4):
        for t in range(s):
            n_active = 0
            max_e = 0
            for i in range(4):
                k = (j + i) * s + t
                if w_man[k] and a_m[j + i]:
                    p = a_m[j + i]
                    lane_e = a_e[j + i] + w_exp[k]
                    pm[n_active] = p
                    pe[n_active] = lane_e
                    ps[n_active] = a_sign[j + i] ^ w_sign[k]
                    if n_active == 0 or lane_e > max_e:
                        max_e = lane_e
                    n_active += 1
            if n_active == 0:
                continue
            tree = 0
            for i in range(n_active):
                mant = _rne_rshift(pm[i], max_e - pe[i])
                if ps[i]:
                    tree -= mant
                else:
                    tree += mant
            if tree == 0:
                continue
            bsig = w_bsig[j * s + t]
            e_t = max_e + bsig - 25
            if m_acc == 0:
                m_acc = tree
                e_acc = e_t
            elif e_acc >= e_t:
                m_acc = m_acc + _rne_rshift_signed(tree, e_acc - e_t)
            else:
                m_acc = _rne_rshift_signed(m_acc, e_t - e_acc) + tree
                e_acc = e_t
            _normalize(&m_acc, &e_acc)
    return m_acc, e_acc
