import random

import pytest
from hypothesis import given, strategies as st

from tlcomp.bitcore import (BitString, CapacityExceeded, FieldElement, Seed, XorShift64, gamma_decode,
                            gamma_encode, gf2_matvec, gf_inv, gf_mul, identity_rows, line_point_instance,
                            mix_seed, pack_code, unpack_code)

bitstrings = st.text(alphabet="01", max_size=40).map(BitString)


def test_bitstring_rejects_other_symbols():
    with pytest.raises(ValueError):
        BitString("0120")


@given(st.integers(0, 2 ** 40), st.integers(0, 8))
def test_int_round_trip(v, pad):
    n = v.bit_length() + pad
    assert BitString.from_int(v, n).to_int() == v
    assert len(BitString.from_int(v, n)) == n


@pytest.mark.parametrize("v,code", [(1, "1"), (2, "010"), (3, "011"), (4, "00100"), (9, "0001001")])
def test_gamma_values(v, code):
    assert gamma_encode(v) == code


@given(st.integers(1, 10 ** 9), bitstrings)
def test_gamma_prefix_free(v, tail):
    got, rest = gamma_decode(gamma_encode(v) + tail)
    assert (got, rest) == (v, tail)


def test_gamma_rejects_zero_and_truncation():
    with pytest.raises(ValueError):
        gamma_encode(0)
    with pytest.raises(ValueError):
        gamma_decode("0001")


def test_pack_layout():
    c = pack_code(1, 1, "0", 8)
    # gamma(1) gamma(2) payload marker padding
    assert c.bits == "1" + "010" + "0" + "1" + "00"
    assert c.m == 8


def test_pack_overflow():
    with pytest.raises(CapacityExceeded):
        pack_code(1, 1, "0" * 8, 8)


def test_pack_round_trip_random():
    rng = random.Random(7)
    for _ in range(500):
        e, k = rng.randint(1, 20), rng.randint(0, 60)
        p = BitString("".join(rng.choice("01") for _ in range(rng.randint(0, 50))))
        m = len(gamma_encode(e)) + len(gamma_encode(k + 1)) + len(p) + 1 + rng.randint(0, 30)
        c = pack_code(e, k, p, m)
        assert len(c.bits) == m
        assert unpack_code(c) == (e, k, p)


def test_matvec():
    assert gf2_matvec(["1100"], "1010") == "1"
    x = BitString("101101")
    assert gf2_matvec(identity_rows(6), x) == x
    assert gf2_matvec(["1011", "0110", "1111"], "0000") == "000"


@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
def test_gf256_field_laws(a, b, c):
    assert gf_mul(a, b, 8) == gf_mul(b, a, 8)
    assert gf_mul(a, gf_mul(b, c, 8), 8) == gf_mul(gf_mul(a, b, 8), c, 8)
    assert gf_mul(a, b ^ c, 8) == gf_mul(a, b, 8) ^ gf_mul(a, c, 8)


def test_gf256_known_inverse_pair():
    # 0x53 * 0xCA = 1 modulo x^8 + x^4 + x^3 + x + 1
    assert gf_mul(0x53, 0xCA, 8) == 1
    assert gf_inv(0x53, 8) == 0xCA
    for a in range(1, 16):
        assert gf_mul(a, gf_inv(a, 4), 4) == 1


def _slow_mul(a, b, w, mod):
    r = 0
    for i in range(w):
        if b >> i & 1:
            r ^= a << i
    for i in range(2 * w - 2, w - 1, -1):
        if r >> i & 1:
            r ^= mod << (i - w)
    return r


@pytest.mark.parametrize("seed", range(20))
def test_line_point_incidence(seed):
    (a, b), (u, v) = line_point_instance(8, seed)
    assert v.value == _slow_mul(a.value, u.value, 8, 0b100011011) ^ b.value


def test_line_point_degenerate_lines():
    z = FieldElement(4, 0)
    assert (z * z + z).value == 0
    one = FieldElement(4, 1)
    for x in range(16):
        assert (one * FieldElement(4, x) + z).value == x


def test_xorshift_frozen_and_seed_budget():
    assert XorShift64(0).getrandbits(64) == 8916199331640804048
    assert mix_seed(1, 2, "a") == 18117141652156930670
    assert XorShift64(Seed(5, 8)).getrandbits(64) == XorShift64(5).getrandbits(64)
    with pytest.raises(ValueError):
        Seed(256, 8)


def test_randrange_uniform_enough():
    rng = XorShift64(3)
    counts = [0] * 6
    for _ in range(6000):
        counts[rng.randrange(6)] += 1
    assert min(counts) > 850
