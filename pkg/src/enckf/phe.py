"""Paillier additively homomorphic cryptosystem.

Simplified variant with generator g = n + 1, so encryption is
c = (1 + m*n) * r^n mod n^2 and never needs a full modular exponentiation of
the message.  Supports ciphertext addition/subtraction and multiplication by a
plaintext scalar:

    decrypt(add(enc(a), enc(b))) == (a + b) mod n
    decrypt(cmul(k, enc(b)))     == (k * b) mod n

Keys and ciphertexts are immutable values, safe to share between threads.
Key sizes: 2048 bits is the production profile, 512 bits the test profile,
and tiny moduli (n >= 15) are accepted for exhaustive desk checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .coins import CoinStream
from .errors import (
    CiphertextError,
    KeygenError,
    KeyMismatchError,
    PlaintextRangeError,
)

try:
    from gmpy2 import invert as _g_invert, powmod as _g_powmod

    def _powmod(base, exp, mod):
        return int(_g_powmod(base, exp, mod))

    def _invmod(a, mod):
        return int(_g_invert(a, mod))

except ImportError:  # pragma: no cover - gmpy2 is a declared dependency

    def _powmod(base, exp, mod):
        return pow(base, exp, mod)

    def _invmod(a, mod):
        return pow(a, -1, mod)


DEFAULT_KEY_BITS = 2048
TEST_KEY_BITS = 512
MILLER_RABIN_ROUNDS = 40

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


@dataclass(frozen=True)
class PublicKey:
    """Paillier public key: modulus n with implicit generator g = n + 1."""

    n: int
    nsquare: int = field(init=False, repr=False)

    def __post_init__(self):
        if self.n < 15:
            raise KeygenError(f"modulus {self.n} below the minimum two-prime product 15")
        object.__setattr__(self, "nsquare", self.n * self.n)

    @property
    def g(self) -> int:
        return self.n + 1

    @property
    def bit_length(self) -> int:
        return self.n.bit_length()

    def to_bytes(self) -> bytes:
        return _pack(b"K", [self.n])

    @classmethod
    def from_bytes(cls, blob: bytes) -> "PublicKey":
        (n,) = _unpack(blob, b"K", 1)
        return cls(n)


@dataclass(frozen=True)
class PrivateKey:
    """Paillier private key (p, q) with precomputed lambda and mu."""

    p: int
    q: int
    public_key: PublicKey = field(init=False, repr=False)
    lam: int = field(init=False, repr=False)
    mu: int = field(init=False, repr=False)

    def __post_init__(self):
        if self.p == self.q:
            raise KeygenError("primes must be distinct")
        pk = PublicKey(self.p * self.q)
        lam = math.lcm(self.p - 1, self.q - 1)
        # mu = (L(g^lam mod n^2))^-1 mod n with L(u) = (u - 1) / n
        u = _powmod(pk.g, lam, pk.nsquare)
        mu = _invmod((u - 1) // pk.n, pk.n)
        object.__setattr__(self, "public_key", pk)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)

    def to_bytes(self) -> bytes:
        return _pack(b"S", [self.p, self.q])

    @classmethod
    def from_bytes(cls, blob: bytes) -> "PrivateKey":
        p, q = _unpack(blob, b"S", 2)
        return cls(p, q)


@dataclass(frozen=True)
class RawCiphertext:
    """A Paillier ciphertext: an integer in [1, n^2) coprime with n^2."""

    value: int
    public_key: PublicKey

    def to_bytes(self) -> bytes:
        return _pack(b"C", [self.public_key.n, self.value])

    @classmethod
    def from_bytes(cls, blob: bytes) -> "RawCiphertext":
        n, value = _unpack(blob, b"C", 2)
        return cls(value, PublicKey(n))


# ---------------------------------------------------------------------------
# primality / key generation

def _is_probable_prime(n: int, coins: CoinStream, rounds: int = MILLER_RABIN_ROUNDS) -> bool:
    if n < 2:
        return False
    for sp in _SMALL_PRIMES:
        if n == sp:
            return True
        if n % sp == 0:
            return False
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for _ in range(rounds):
        a = coins.randrange(2, n - 1)
        x = _powmod(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = (x * x) % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _random_prime(bits: int, coins: CoinStream) -> int:
    if bits < 2:
        raise KeygenError(f"cannot draw a {bits}-bit prime")
    for _ in range(40000):
        cand = coins.getrandbits(bits) | (1 << (bits - 1)) | 1
        if _is_probable_prime(cand, coins):
            return cand
    raise KeygenError(f"no {bits}-bit prime found")


def keygen(bit_length: int = DEFAULT_KEY_BITS, coins: CoinStream | None = None):
    """Generate a (PublicKey, PrivateKey) pair with an n of `bit_length` bits.

    Deterministic given `coins`.  Requires bit_length >= 8 (two distinct
    4-bit primes are the smallest pair this sampler can find).
    """
    if coins is None:
        coins = CoinStream("default-keygen", "keygen")
    if bit_length < 8:
        raise KeygenError(f"bit_length {bit_length} too small (need >= 8)")
    half = bit_length // 2
    for _ in range(2000):
        p = _random_prime(bit_length - half, coins)
        q = _random_prime(half, coins)
        if p == q:
            continue
        n = p * q
        if n.bit_length() != bit_length:
            continue
        # the simplified decryption needs gcd(n, phi) = 1
        if math.gcd(n, (p - 1) * (q - 1)) != 1:
            continue
        return PublicKey(n), PrivateKey(p, q)
    raise KeygenError(f"could not find two distinct {half}-bit primes")


def keypair_from_primes(p: int, q: int):
    """Build a key pair from explicit primes (desk-test helper, e.g. p=5, q=7)."""
    sk = PrivateKey(p, q)
    return sk.public_key, sk


# ---------------------------------------------------------------------------
# core operations

def _draw_unit(pk: PublicKey, coins: CoinStream) -> int:
    # unit mod n: for proper keys any r in [1, n) works w.h.p.; tiny toy
    # moduli (n = 35) actually hit the gcd check, so test and retry.
    while True:
        r = coins.randrange(1, pk.n)
        if math.gcd(r, pk.n) == 1:
            return r


def encrypt(pk: PublicKey, m: int, coins: CoinStream) -> RawCiphertext:
    """Probabilistic encryption of an integer m in [0, n)."""
    if not 0 <= m < pk.n:
        raise PlaintextRangeError(f"plaintext {m} outside [0, {pk.n})")
    r = _draw_unit(pk, coins)
    c = ((1 + m * pk.n) % pk.nsquare) * _powmod(r, pk.n, pk.nsquare) % pk.nsquare
    return RawCiphertext(c, pk)


def decrypt(sk: PrivateKey, c: RawCiphertext) -> int:
    """Decrypt to the plaintext integer in [0, n)."""
    pk = sk.public_key
    _check_ciphertext(pk, c)
    u = _powmod(c.value, sk.lam, pk.nsquare)
    return ((u - 1) // pk.n) * sk.mu % pk.n


def _check_ciphertext(pk: PublicKey, c: RawCiphertext):
    if c.public_key.n != pk.n:
        raise KeyMismatchError("ciphertext under a different public key")
    if not 1 <= c.value < pk.nsquare or math.gcd(c.value, pk.nsquare) != 1:
        raise CiphertextError(f"malformed ciphertext {c.value}")


def add(pk: PublicKey, c1: RawCiphertext, c2: RawCiphertext) -> RawCiphertext:
    """Homomorphic addition: decrypts to (m1 + m2) mod n."""
    _check_ciphertext(pk, c1)
    _check_ciphertext(pk, c2)
    return RawCiphertext(c1.value * c2.value % pk.nsquare, pk)


def sub(pk: PublicKey, c1: RawCiphertext, c2: RawCiphertext) -> RawCiphertext:
    """Homomorphic subtraction: decrypts to (m1 - m2) mod n."""
    _check_ciphertext(pk, c1)
    _check_ciphertext(pk, c2)
    return RawCiphertext(c1.value * _invmod(c2.value, pk.nsquare) % pk.nsquare, pk)


def cmul(pk: PublicKey, k: int, c: RawCiphertext) -> RawCiphertext:
    """Plaintext-scalar multiplication: decrypts to (k * m) mod n."""
    _check_ciphertext(pk, c)
    k = k % pk.n
    if k > pk.n // 2:
        # wrapped negative scalar: exponentiate by the small complement instead
        return RawCiphertext(
            _powmod(_invmod(c.value, pk.nsquare), pk.n - k, pk.nsquare), pk)
    return RawCiphertext(_powmod(c.value, k, pk.nsquare), pk)


def re_randomize(pk: PublicKey, c: RawCiphertext, coins: CoinStream) -> RawCiphertext:
    """Fresh randomness, same plaintext."""
    _check_ciphertext(pk, c)
    r = _draw_unit(pk, coins)
    return RawCiphertext(c.value * _powmod(r, pk.n, pk.nsquare) % pk.nsquare, pk)


# ---------------------------------------------------------------------------
# wire format: magic, version byte, type byte, big-endian length-prefixed limbs

_MAGIC = b"EKF1"
_VERSION = 1


def _pack(kind: bytes, ints) -> bytes:
    out = [_MAGIC, bytes([_VERSION]), kind]
    for x in ints:
        limb = x.to_bytes((x.bit_length() + 7) // 8 or 1, "big")
        out.append(len(limb).to_bytes(4, "big"))
        out.append(limb)
    return b"".join(out)


def _unpack(blob: bytes, kind: bytes, count: int):
    if blob[:4] != _MAGIC:
        raise CiphertextError("bad magic tag")
    if blob[4] != _VERSION:
        raise CiphertextError(f"unsupported version {blob[4]}")
    if blob[5:6] != kind:
        raise CiphertextError(f"expected record type {kind!r}, got {blob[5:6]!r}")
    ints = []
    off = 6
    for _ in range(count):
        ln = int.from_bytes(blob[off:off + 4], "big")
        off += 4
        ints.append(int.from_bytes(blob[off:off + ln], "big"))
        off += ln
    if off != len(blob):
        raise CiphertextError("trailing bytes in serialized record")
    return ints
