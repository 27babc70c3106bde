"""Dense linear algebra plus plaintext-matrix x encrypted-vector maps.

Plaintext matrices are plain numpy float64 arrays.  Problem sizes here stay
around n <= 20, so everything is dense and numpy's LAPACK bindings do the
heavy lifting; this module pins down tolerances and maps failures onto the
package's error types.

EncVector is a vector of exponent-tagged Paillier ciphertexts under one
public key.  Operations keep the entry exponents uniform.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import encoding, phe
from .coins import CoinStream
from .encoding import Ciphertext, Encoded
from .errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    NumericalError,
    SingularMatrixError,
)
from .phe import PrivateKey, PublicKey

MAX_CONDITION = 1e12
PENROSE_TOL = 1e-9


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionMismatchError(f"expected a matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix has non-finite entries")
    return M


def default_rtol(M: np.ndarray) -> float:
    return np.finfo(float).eps * max(M.shape)


def pinv(M, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse; singular values below rtol*sigma_max drop."""
    M = _as_matrix(M)
    if (M.size and M.shape[0] == M.shape[1]
            and np.count_nonzero(M - np.diag(np.diagonal(M))) == 0):
        # diagonal fast path (the stacked measurement covariance is block
        # diagonal and often plain diagonal): reciprocal of nonzero entries
        d = np.diagonal(M).copy()
        cutoff = (rtol if rtol is not None else default_rtol(M)) * np.max(np.abs(d), initial=0.0)
        out = np.zeros_like(d)
        keep = np.abs(d) > cutoff
        out[keep] = 1.0 / d[keep]
        return np.diag(out)
    try:
        return np.linalg.pinv(M, rcond=rtol if rtol is not None else default_rtol(M))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc


def rank(M, rtol: float | None = None) -> int:
    M = _as_matrix(M)
    try:
        return int(np.linalg.matrix_rank(M, tol=None if rtol is None else
                                         rtol * np.linalg.norm(M, 2)))
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from exc


def inv(M) -> np.ndarray:
    M = _as_matrix(M)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"inverse of non-square {M.shape}")
    if np.linalg.cond(M) > MAX_CONDITION:
        raise SingularMatrixError(
            f"condition number above {MAX_CONDITION:.0e}; treat as singular")
    return np.linalg.inv(M)


def cholesky(S) -> np.ndarray:
    """Lower-triangular L with L L^T = S; S must be symmetric positive-definite."""
    S = _as_matrix(S)
    if S.shape[0] != S.shape[1] or not np.allclose(S, S.T, atol=PENROSE_TOL):
        raise NotPositiveDefiniteError("matrix is not symmetric")
    try:
        return np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc


def is_spd(S, atol: float = 1e-9) -> bool:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        return False
    if not np.allclose(S, S.T, atol=atol):
        return False
    try:
        np.linalg.cholesky(S)
        return True
    except np.linalg.LinAlgError:
        return False


# ---------------------------------------------------------------------------
# encrypted vectors

@dataclass(frozen=True)
class EncVector:
    """Vector of ciphertexts under one key, kept at a uniform exponent."""

    items: tuple[Ciphertext, ...]
    public_key: PublicKey

    def __post_init__(self):
        for c in self.items:
            if c.public_key.n != self.public_key.n:
                raise DimensionMismatchError("mixed public keys in EncVector")

    def __len__(self) -> int:
        return len(self.items)

    @property
    def exponent(self) -> int:
        return max((c.exponent for c in self.items), default=0)


def encrypt_vector(pk: PublicKey, x, frac_bits: int, coins: CoinStream) -> EncVector:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return EncVector(tuple(encoding.encrypt_value(pk, float(v), frac_bits, coins)
                           for v in x), pk)


def decrypt_vector(sk: PrivateKey, v: EncVector) -> np.ndarray:
    return np.array([encoding.decrypt_value(sk, c) for c in v.items])


def _uniform(pk: PublicKey, items) -> EncVector:
    items = list(items)
    target = max(c.exponent for c in items)
    return EncVector(tuple(encoding.align(pk, c, target) for c in items), pk)


def mat_enc_mul(pk: PublicKey, A, v: EncVector, frac_bits: int) -> EncVector:
    """Plaintext matrix times encrypted vector: decrypts to A @ decrypt(v).

    Matrix entries are quantized to frac_bits fractional bits, so the result
    exponent is v.exponent + frac_bits for every row.
    """
    A = _as_matrix(A)
    if A.shape[1] != len(v):
        raise DimensionMismatchError(f"{A.shape} @ length-{len(v)} vector")
    v = _uniform(pk, v.items)
    rows = []
    for i in range(A.shape[0]):
        acc = None
        for j in range(A.shape[1]):
            term = encoding.enc_cmul(pk, encoding.encode(A[i, j], frac_bits, pk), v.items[j])
            acc = term if acc is None else encoding.enc_add(pk, acc, term)
        rows.append(acc)
    return EncVector(tuple(rows), pk)


def enc_vec_add(pk: PublicKey, a: EncVector, b: EncVector) -> EncVector:
    if len(a) != len(b):
        raise DimensionMismatchError(f"lengths {len(a)} vs {len(b)}")
    return _uniform(pk, (encoding.enc_add(pk, x, y) for x, y in zip(a.items, b.items)))


def enc_vec_sub(pk: PublicKey, a: EncVector, b: EncVector) -> EncVector:
    if len(a) != len(b):
        raise DimensionMismatchError(f"lengths {len(a)} vs {len(b)}")
    return _uniform(pk, (encoding.enc_sub(pk, x, y) for x, y in zip(a.items, b.items)))
