"""Kalman filter steps in plaintext and over encrypted estimates.

The estimate vector may be a plain numpy array or an EncVector; covariances
are always plaintext (the protocols deliberately reveal them).  The same
information-form update equations drive both paths:

    time update            x-  = F x,        P- = F P F^T + Q
    parallel measurement   P   = ((P-)^-1 + H^T R^+ H)^-1
                           K   = P H^T R^+
                           x   = x- + K (y - H x-)
    group measurement      P-g = (P_prev^-1 + sum_i H_i^T R_i^-1 H_i)^-1
                           x-g = x_prev + sum_i K_i (y_i - H_i x_prev)
    diffusion              P-a = (sum_j (P-_gj)^-1)^-1
                           x-a = P-a sum_j (P-_gj)^-1 x-_gj

Covariances are symmetrized after every update and checked to stay positive
semidefinite; the gain uses the posterior covariance (equivalent to the
classical covariance-form gain, which the test suite verifies).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import matlib
from .coins import CoinStream
from .encoding import DEFAULT_FRAC_BITS
from .errors import (
    DimensionMismatchError,
    IncompleteRoundError,
    NotPositiveDefiniteError,
    NumericalError,
)
from .matlib import EncVector

PSD_EIG_FLOOR = -1e-9


@dataclass(frozen=True)
class Sensor:
    """Measurement map H (p x n) and noise covariance R (p x p) of one sensor."""

    H: np.ndarray
    R: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "H", np.atleast_2d(np.asarray(self.H, dtype=float)))
        object.__setattr__(self, "R", np.atleast_2d(np.asarray(self.R, dtype=float)))
        if self.R.shape != (self.H.shape[0], self.H.shape[0]):
            raise DimensionMismatchError(
                f"R shape {self.R.shape} incompatible with H shape {self.H.shape}")

    @property
    def p(self) -> int:
        return self.H.shape[0]


@dataclass(frozen=True)
class SystemModel:
    """LTI plant x_{k+1} = F x_k + n_k with sensors y_{i,k} = H_i x_k + v_{i,k}."""

    F: np.ndarray
    Q: np.ndarray
    sensors: tuple[Sensor, ...]

    def __post_init__(self):
        object.__setattr__(self, "F", np.atleast_2d(np.asarray(self.F, dtype=float)))
        object.__setattr__(self, "Q", np.atleast_2d(np.asarray(self.Q, dtype=float)))
        object.__setattr__(self, "sensors", tuple(self.sensors))
        n = self.F.shape[0]
        if self.F.shape != (n, n):
            raise DimensionMismatchError(f"F must be square, got {self.F.shape}")
        if self.Q.shape != (n, n):
            raise DimensionMismatchError(f"Q shape {self.Q.shape} != ({n}, {n})")
        if not self.sensors:
            raise DimensionMismatchError("model needs at least one sensor")
        for i, s in enumerate(self.sensors):
            if s.H.shape[1] != n:
                raise DimensionMismatchError(
                    f"sensor {i}: H has {s.H.shape[1]} columns, state size is {n}")
        ps = {s.p for s in self.sensors}
        if len(ps) != 1:
            raise DimensionMismatchError(f"sensors disagree on measurement size: {ps}")

    @property
    def n(self) -> int:
        return self.F.shape[0]

    @property
    def p(self) -> int:
        return self.sensors[0].p

    @property
    def num_sensors(self) -> int:
        return len(self.sensors)


@dataclass(frozen=True)
class KalmanBelief:
    """Estimate vector (plaintext or encrypted) with its plaintext covariance."""

    x: np.ndarray | EncVector
    P: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "P", np.atleast_2d(np.asarray(self.P, dtype=float)))
        if not isinstance(self.x, EncVector):
            object.__setattr__(self, "x", np.atleast_1d(np.asarray(self.x, dtype=float)))
        if len(self.x) != self.P.shape[0] or self.P.shape[0] != self.P.shape[1]:
            raise DimensionMismatchError(
                f"estimate length {len(self.x)} vs covariance shape {self.P.shape}")

    @property
    def encrypted(self) -> bool:
        return isinstance(self.x, EncVector)


@dataclass(frozen=True)
class StackedMeasurement:
    """All sensors' measurements stacked in index order."""

    y: np.ndarray | EncVector
    H: np.ndarray
    R: np.ndarray
    p: int

    @property
    def num_sensors(self) -> int:
        return self.H.shape[0] // self.p


def symmetrize(P: np.ndarray) -> np.ndarray:
    return (P + P.T) / 2.0


def _checked_cov(P: np.ndarray, what: str) -> np.ndarray:
    P = symmetrize(P)
    if np.linalg.eigvalsh(P).min() < PSD_EIG_FLOOR:
        raise NumericalError(f"{what} lost positive semidefiniteness")
    return P


def time_update(model: SystemModel, belief: KalmanBelief,
                frac_bits: int = DEFAULT_FRAC_BITS) -> KalmanBelief:
    """Predict one step ahead: x- = F x, P- = F P F^T + Q."""
    if isinstance(belief.x, EncVector):
        x = matlib.mat_enc_mul(belief.x.public_key, model.F, belief.x, frac_bits)
    else:
        x = model.F @ belief.x
    P = _checked_cov(model.F @ belief.P @ model.F.T + model.Q, "predicted covariance")
    return KalmanBelief(x, P)


def stack(model: SystemModel, measurements) -> StackedMeasurement:
    """Stack per-sensor measurements into the (pI)-sized parallel form."""
    if len(measurements) != model.num_sensors:
        raise IncompleteRoundError(
            f"expected {model.num_sensors} sensor measurements, got {len(measurements)}")
    p, n, I = model.p, model.n, model.num_sensors
    H = np.vstack([s.H for s in model.sensors])
    R = np.zeros((p * I, p * I))
    for i, s in enumerate(model.sensors):
        R[i * p:(i + 1) * p, i * p:(i + 1) * p] = s.R
    encrypted = any(isinstance(m, EncVector) for m in measurements)
    if encrypted:
        items = []
        pk = None
        for i, m in enumerate(measurements):
            if not isinstance(m, EncVector):
                raise IncompleteRoundError(f"sensor {i}: plaintext in an encrypted stack")
            if len(m) != p:
                raise DimensionMismatchError(f"sensor {i}: measurement size {len(m)} != {p}")
            items.extend(m.items)
            pk = m.public_key
        y = EncVector(tuple(items), pk)
    else:
        for i, m in enumerate(measurements):
            if m is None:
                raise IncompleteRoundError(f"sensor {i}: measurement missing")
            if len(np.atleast_1d(m)) != p:
                raise DimensionMismatchError(f"sensor {i}: measurement size != {p}")
        y = np.concatenate([np.atleast_1d(np.asarray(m, dtype=float)) for m in measurements])
    return StackedMeasurement(y, H, R, p)


def measurement_update_parallel(belief: KalmanBelief, stacked: StackedMeasurement,
                                frac_bits: int = DEFAULT_FRAC_BITS):
    """Fuse all measurements at once.

    Returns (posterior belief, per-sensor gains [K_1, ..., K_I]); the gains
    are what a query coalition can recompute from public H, R and the
    revealed posterior covariance.
    """
    R_pinv = matlib.pinv(stacked.R)
    P = matlib.inv(matlib.inv(belief.P) + stacked.H.T @ R_pinv @ stacked.H)
    P = _checked_cov(P, "posterior covariance")
    K = P @ stacked.H.T @ R_pinv
    p = stacked.p
    gains = [K[:, i * p:(i + 1) * p] for i in range(stacked.num_sensors)]
    if isinstance(belief.x, EncVector):
        pk = belief.x.public_key
        predicted = matlib.mat_enc_mul(pk, stacked.H, belief.x, frac_bits)
        innovation = matlib.enc_vec_sub(pk, stacked.y, predicted)
        x = matlib.enc_vec_add(pk, belief.x,
                               matlib.mat_enc_mul(pk, K, innovation, frac_bits))
    else:
        x = belief.x + K @ (stacked.y - stacked.H @ belief.x)
    return KalmanBelief(x, P), gains


def group_measurement_update(model: SystemModel, member_indices,
                             prev_global: KalmanBelief, measurements):
    """Within-group plaintext fusion from the last broadcast global estimate.

    Returns (group prior belief, per-member gains).
    """
    members = list(member_indices)
    if not members:
        raise IncompleteRoundError("a sensor group cannot be empty")
    if prev_global.encrypted:
        raise DimensionMismatchError("group update runs on the plaintext broadcast")
    if len(measurements) != len(members):
        raise IncompleteRoundError(
            f"group expected {len(members)} measurements, got {len(measurements)}")
    info = matlib.inv(prev_global.P)
    for i in members:
        s = model.sensors[i]
        info = info + s.H.T @ matlib.pinv(s.R) @ s.H
    P = _checked_cov(matlib.inv(info), "group prior covariance")
    x = prev_global.x.copy()
    gains = []
    for i, y in zip(members, measurements):
        s = model.sensors[i]
        K = P @ s.H.T @ matlib.pinv(s.R)
        gains.append(K)
        x = x + K @ (np.atleast_1d(np.asarray(y, dtype=float)) - s.H @ prev_global.x)
    return KalmanBelief(x, P), gains


def diffusion_update(priors, frac_bits: int = DEFAULT_FRAC_BITS) -> KalmanBelief:
    """Inverse-covariance-weighted average of group priors."""
    priors = list(priors)
    if not priors:
        raise IncompleteRoundError("diffusion needs at least one group prior")
    weights = [matlib.inv(b.P) for b in priors]
    P = _checked_cov(matlib.inv(sum(weights)), "fused covariance")
    if priors[0].encrypted:
        pk = priors[0].x.public_key
        acc = None
        for w, b in zip(weights, priors):
            term = matlib.mat_enc_mul(pk, w, b.x, frac_bits)
            acc = term if acc is None else matlib.enc_vec_add(pk, acc, term)
        x = matlib.mat_enc_mul(pk, P, acc, frac_bits)
    else:
        acc = sum(w @ b.x for w, b in zip(weights, priors))
        x = P @ acc
    return KalmanBelief(x, P)


def simulate_plant(model: SystemModel, x0, steps: int, coins: CoinStream):
    """Roll the plant forward and sample per-sensor measurement streams.

    Returns (states, streams): states[k] is the true x_{k+1}, streams[i][k]
    the measurement y_{i,k+1}, for k = 0..steps-1.  Deterministic under the
    coin stream's seed.
    """
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    rng = coins.numpy_rng()
    n, p = model.n, model.p

    def noise_factor(S, what):
        if np.count_nonzero(S) == 0:
            return np.zeros_like(S)
        try:
            return matlib.cholesky(S)
        except NotPositiveDefiniteError:
            raise NotPositiveDefiniteError(f"{what} must be SPD (or exactly zero)")

    Lq = noise_factor(model.Q, "Q")
    Lrs = [noise_factor(s.R, f"sensor {i} R") for i, s in enumerate(model.sensors)]
    states = np.zeros((steps, n))
    streams = [np.zeros((steps, p)) for _ in model.sensors]
    x = x0
    for k in range(steps):
        x = model.F @ x + Lq @ rng.standard_normal(n)
        states[k] = x
        for i, s in enumerate(model.sensors):
            streams[i][k] = s.H @ x + Lrs[i] @ rng.standard_normal(p)
    return states, streams


def reference_protocol1_filter(model: SystemModel, x0, P0, streams, steps: int):
    """Plaintext filter matching Protocol 1's update order (time, then fuse)."""
    belief = KalmanBelief(x0, P0)
    estimates = np.zeros((steps, model.n))
    covariances = []
    for k in range(steps):
        belief = time_update(model, belief)
        stacked = stack(model, [streams[i][k] for i in range(model.num_sensors)])
        belief, _ = measurement_update_parallel(belief, stacked)
        estimates[k] = belief.x
        covariances.append(belief.P)
    return estimates, covariances


def reference_protocol2_filter(model: SystemModel, groups, x0, P0, streams, steps: int):
    """Plaintext diffusion filter matching Protocol 2's update order."""
    belief = KalmanBelief(x0, P0)
    estimates = np.zeros((steps, model.n))
    covariances = []
    for k in range(steps):
        priors = []
        for members in groups:
            prior, _ = group_measurement_update(
                model, members, belief, [streams[i][k] for i in members])
            priors.append(prior)
        fused = diffusion_update(priors)
        belief = time_update(model, fused)
        estimates[k] = belief.x
        covariances.append(belief.P)
    return estimates, covariances
