"""Fixed-point codec and exponent bookkeeping on encrypted values."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from enckf import encoding, phe
from enckf.coins import CoinStream
from enckf.errors import EncodeOverflowError, ExponentBudgetExceeded


def test_encode_zero(keys_256):
    pk, _ = keys_256
    for f in (0, 1, 40):
        assert encoding.encode(0.0, f, pk).mantissa == 0


def test_encode_negative_hand_case(keys_256):
    pk, _ = keys_256
    e = encoding.encode(-1.5, 1, pk)
    assert e.mantissa == pk.n - 3
    assert e.exponent == 1
    assert encoding.decode(e, pk) == -1.5


def test_roundtrip_error_bound(keys_256):
    pk, _ = keys_256
    rng = np.random.default_rng(7)
    xs = rng.uniform(-1e3, 1e3, size=10_000)
    worst = max(abs(encoding.decode(encoding.encode(x, 40, pk), pk) - x) for x in xs)
    assert worst <= 2.0 ** -41


def test_encode_overflow(toy_keys):
    pk, _ = toy_keys
    with pytest.raises(EncodeOverflowError):
        encoding.encode(1e9, 40, pk)


def test_enc_add_identity(keys_256, enc_coins):
    pk, sk = keys_256
    z = encoding.encrypt_value(pk, 0.0, 40, enc_coins)
    x = encoding.encrypt_value(pk, 2.75, 40, enc_coins)
    assert encoding.decrypt_value(sk, encoding.enc_add(pk, z, x)) == 2.75


def test_enc_add_aligns_exponents(keys_256, enc_coins):
    pk, sk = keys_256
    a = encoding.encrypt_value(pk, 1.25, 2, enc_coins)
    b = encoding.encrypt_value(pk, 0.5, 5, enc_coins)
    out = encoding.enc_add(pk, a, b)
    assert out.exponent == 5
    assert encoding.decrypt_value(sk, out) == 1.75


def test_enc_add_random_sum(keys_512, enc_coins):
    pk, sk = keys_512
    rng = np.random.default_rng(3)
    xs = rng.uniform(-50, 50, size=100)
    acc = encoding.encrypt_value(pk, xs[0], 40, enc_coins)
    for x in xs[1:]:
        acc = encoding.enc_add(pk, acc, encoding.encrypt_value(pk, x, 40, enc_coins))
    assert abs(encoding.decrypt_value(sk, acc) - xs.sum()) <= 2.0 ** -39 * len(xs)


def test_enc_sub(keys_256, enc_coins):
    pk, sk = keys_256
    a = encoding.encrypt_value(pk, 1.0, 40, enc_coins)
    b = encoding.encrypt_value(pk, 4.5, 40, enc_coins)
    assert encoding.decrypt_value(sk, encoding.enc_sub(pk, a, b)) == -3.5


def test_enc_cmul_identity(keys_256, enc_coins):
    pk, sk = keys_256
    c = encoding.encrypt_value(pk, -7.25, 40, enc_coins)
    one = encoding.encode(1.0, 0, pk)
    out = encoding.enc_cmul(pk, one, c)
    assert out.exponent == c.exponent
    assert encoding.decrypt_value(sk, out) == -7.25


def test_enc_cmul_product(keys_256, enc_coins):
    pk, sk = keys_256
    c = encoding.encrypt_value(pk, 3.5, 40, enc_coins)
    two = encoding.encode(2.0, 0, pk)
    assert encoding.decrypt_value(sk, encoding.enc_cmul(pk, two, c)) == 7.0


def test_enc_cmul_exponent_sum_and_budget(keys_256, enc_coins):
    pk, sk = keys_256
    c = encoding.encrypt_value(pk, 1.5, 40, enc_coins)
    k = encoding.encode(0.5, 40, pk)
    out = encoding.enc_cmul(pk, k, c)
    assert out.exponent == 80
    assert abs(encoding.decrypt_value(sk, out) - 0.75) <= 2.0 ** -40
    # chained multiplies blow the (bits - 64) budget
    budget = encoding.exponent_budget(pk)
    with pytest.raises(ExponentBudgetExceeded):
        acc = c
        for _ in range(budget // 40 + 2):
            acc = encoding.enc_cmul(pk, k, acc)


def test_exponent_monotonicity(keys_256, enc_coins):
    pk, _ = keys_256
    a = encoding.encrypt_value(pk, 1.0, 13, enc_coins)
    b = encoding.encrypt_value(pk, 1.0, 29, enc_coins)
    assert encoding.enc_add(pk, a, b).exponent == 29
    assert encoding.enc_cmul(pk, encoding.encode(2.0, 5, pk), a).exponent == 18


@given(x=st.floats(-1e6, 1e6, allow_nan=False), f=st.integers(0, 48))
@settings(max_examples=300, deadline=None)
def test_roundtrip_property(keys_256, x, f):
    pk, _ = keys_256
    got = encoding.decode(encoding.encode(x, f, pk), pk)
    assert abs(got - x) <= 2.0 ** -(f + 1)


def test_encrypted_roundtrip_property(keys_256, enc_coins):
    pk, sk = keys_256
    rng = np.random.default_rng(11)
    for x in rng.uniform(-1e4, 1e4, size=50):
        c = encoding.encrypt_value(pk, x, 40, enc_coins)
        assert abs(encoding.decrypt_value(sk, c) - x) <= 2.0 ** -41


def test_ciphertext_wire_roundtrip(keys_256, enc_coins):
    pk, sk = keys_256
    c = encoding.encrypt_value(pk, -12.625, 37, enc_coins)
    c2 = encoding.Ciphertext.from_bytes(c.to_bytes())
    assert c2.exponent == 37
    assert c2.to_bytes() == c.to_bytes()
    assert encoding.decrypt_value(sk, c2) == encoding.decrypt_value(sk, c)
