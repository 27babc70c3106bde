"""Fixed-point codec between signed reals and Paillier plaintexts.

A real x is stored as a mantissa/exponent pair with value
signed(mantissa) / 2**exponent.  Negative numbers use the upper half of Z_n
(mantissa > n/2 decodes as mantissa - n), so homomorphic sums and scalar
products act on signed values as long as magnitudes stay below n/2.

Every ciphertext carries its exponent in the clear.  Additions align the two
exponents by scaling the lower-exponent operand with cmul(2**delta); scalar
multiplications add exponents.  Exponents may only grow, and a hard budget
(modulus bits minus a 64-bit guard) turns would-be silent modular wraparound
into ExponentBudgetExceeded.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import phe
from .coins import CoinStream
from .errors import EncodeOverflowError, ExponentBudgetExceeded, KeyMismatchError
from .phe import PrivateKey, PublicKey, RawCiphertext

DEFAULT_FRAC_BITS = 40
GUARD_BITS = 64


def exponent_budget(pk: PublicKey) -> int:
    """Largest exponent a ciphertext under pk may carry."""
    return pk.bit_length - GUARD_BITS


@dataclass(frozen=True)
class Encoded:
    """Plaintext fixed-point number: value = signed(mantissa) / 2**exponent."""

    mantissa: int
    exponent: int

    def signed(self, pk: PublicKey) -> int:
        return self.mantissa if self.mantissa <= pk.n // 2 else self.mantissa - pk.n


@dataclass(frozen=True)
class Ciphertext:
    """Encrypted fixed-point number: a raw ciphertext plus its exponent."""

    raw: RawCiphertext
    exponent: int

    @property
    def public_key(self) -> PublicKey:
        return self.raw.public_key

    def to_bytes(self) -> bytes:
        return self.raw.to_bytes() + _varint(self.exponent)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "Ciphertext":
        # raw record is self-delimiting: header + two length-prefixed limbs
        off = 6
        for _ in range(2):
            ln = int.from_bytes(blob[off:off + 4], "big")
            off += 4 + ln
        raw = RawCiphertext.from_bytes(blob[:off])
        exponent, used = _read_varint(blob, off)
        if off + used != len(blob):
            raise ValueError("trailing bytes after ciphertext record")
        return cls(raw, exponent)


def encode(x: float, frac_bits: int, pk: PublicKey) -> Encoded:
    """Round x to frac_bits fractional bits; error at most 2**-(frac_bits+1)."""
    scaled = round(float(x) * (1 << frac_bits))
    if 2 * abs(scaled) >= pk.n:
        raise EncodeOverflowError(
            f"|{x}| * 2^{frac_bits} exceeds half the plaintext modulus")
    return Encoded(scaled % pk.n, frac_bits)


def decode(e: Encoded, pk: PublicKey) -> float:
    return e.signed(pk) / (1 << e.exponent)


def encrypt_value(pk: PublicKey, x: float, frac_bits: int, coins: CoinStream) -> Ciphertext:
    enc = encode(x, frac_bits, pk)
    return Ciphertext(phe.encrypt(pk, enc.mantissa, coins), enc.exponent)


def decrypt_value(sk: PrivateKey, c: Ciphertext) -> float:
    m = phe.decrypt(sk, c.raw)
    return decode(Encoded(m, c.exponent), sk.public_key)


def _check_budget(pk: PublicKey, exponent: int):
    if exponent > exponent_budget(pk):
        raise ExponentBudgetExceeded(
            f"exponent {exponent} over budget {exponent_budget(pk)} "
            f"for a {pk.bit_length}-bit key")


def _align(pk: PublicKey, c: Ciphertext, target: int) -> RawCiphertext:
    if c.exponent == target:
        return c.raw
    return phe.cmul(pk, 1 << (target - c.exponent), c.raw)


def align(pk: PublicKey, c: Ciphertext, target: int) -> Ciphertext:
    """Raise c's exponent to target by scaling the hidden mantissa by 2**delta."""
    if target < c.exponent:
        raise ExponentBudgetExceeded(f"cannot lower exponent {c.exponent} to {target}")
    _check_budget(pk, target)
    return Ciphertext(_align(pk, c, target), target)


def enc_add(pk: PublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Homomorphic sum; result exponent is max(e_a, e_b)."""
    if a.public_key.n != pk.n or b.public_key.n != pk.n:
        raise KeyMismatchError("operands under a different public key")
    target = max(a.exponent, b.exponent)
    _check_budget(pk, target)
    return Ciphertext(phe.add(pk, _align(pk, a, target), _align(pk, b, target)), target)


def enc_sub(pk: PublicKey, a: Ciphertext, b: Ciphertext) -> Ciphertext:
    """Homomorphic difference; result exponent is max(e_a, e_b)."""
    if a.public_key.n != pk.n or b.public_key.n != pk.n:
        raise KeyMismatchError("operands under a different public key")
    target = max(a.exponent, b.exponent)
    _check_budget(pk, target)
    return Ciphertext(phe.sub(pk, _align(pk, a, target), _align(pk, b, target)), target)


def enc_cmul(pk: PublicKey, k: Encoded, c: Ciphertext) -> Ciphertext:
    """Multiply by a plaintext fixed-point scalar; exponents add."""
    exponent = k.exponent + c.exponent
    _check_budget(pk, exponent)
    return Ciphertext(phe.cmul(pk, k.mantissa, c.raw), exponent)


def _varint(x: int) -> bytes:
    out = bytearray()
    while True:
        byte = x & 0x7F
        x >>= 7
        out.append(byte | (0x80 if x else 0))
        if not x:
            return bytes(out)


def _read_varint(blob: bytes, off: int):
    x = 0
    shift = 0
    used = 0
    while True:
        byte = blob[off + used]
        used += 1
        x |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return x, used
        shift += 7
