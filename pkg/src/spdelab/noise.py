"""Reproducible space-time white noise lattice and exact single-mode samplers.

Increments live on a dyadic grid of 2**levels steps.  Every (path, mode) pair
owns a dedicated Philox substream: the key packs (master_seed, path_id) and
the high counter word packs the mode, so streams are separated by 2**192
counter blocks and never overlap.  A value at step k is the k-th draw of its
substream, which makes every increment reproducible from
(master_seed, path_id, mode, step) regardless of query order, worker count,
or how many modes and levels any particular run consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import ModeVector, SpectralOperator, convolution_variance, decay_factor

__all__ = [
    "NoiseLattice",
    "OUState",
    "ou_exact_step",
    "ou_transition_sample",
    "ou_joint_with_weight",
    "ou_joint_modes_batch",
    "ou_cross_covariance",
]

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class NoiseLattice:
    """Dyadic lattice of Brownian increments, N(0, scale**2 * fine_dt) each.

    ``scale`` rescales every increment; 0 gives the deterministic lattice
    used by closed-form diagnostics.
    """

    master_seed: int
    horizon: float
    levels: int
    n_modes: int
    scale: float = 1.0

    def __post_init__(self):
        if not 0 <= self.master_seed <= _MASK64:
            raise ValueError("master_seed must fit in 64 bits")
        if self.horizon <= 0.0 or not math.isfinite(self.horizon):
            raise ValueError("horizon must be positive and finite")
        if not 0 <= self.levels <= 30:
            raise ValueError("levels must lie in [0, 30]")
        if self.n_modes < 1:
            raise ValueError("n_modes must be at least 1")
        if self.scale < 0.0 or not math.isfinite(self.scale):
            raise ValueError("scale must be nonnegative and finite")

    @property
    def fine_steps(self) -> int:
        return 1 << self.levels

    @property
    def fine_dt(self) -> float:
        return self.horizon / self.fine_steps

    def _substream(self, path_id: int, mode: int) -> np.random.Generator:
        if not 0 <= path_id <= _MASK64:
            raise ValueError("path_id must fit in 64 bits")
        bits = np.random.Philox(key=[self.master_seed, path_id], counter=[0, 0, 0, mode])
        return np.random.Generator(bits)

    def mode_increments(self, path_id: int, mode: int, count: int | None = None) -> np.ndarray:
        """First ``count`` fine increments of one (path, mode) substream."""
        if not 0 <= mode < self.n_modes:
            raise ValueError("mode index out of range")
        if count is None:
            count = self.fine_steps
        if not 0 <= count <= self.fine_steps:
            raise ValueError("count out of range")
        sd = self.scale * math.sqrt(self.fine_dt)
        return sd * self._substream(path_id, mode).standard_normal(count)

    def increment(self, path_id: int, mode: int, step: int) -> float:
        if not 0 <= step < self.fine_steps:
            raise ValueError("step index out of range")
        return float(self.mode_increments(path_id, mode, step + 1)[-1])

    def fine_increments(self, path_id: int, n_modes: int | None = None) -> np.ndarray:
        """Full fine array, shape (fine_steps, n_modes)."""
        if n_modes is None:
            n_modes = self.n_modes
        if not 1 <= n_modes <= self.n_modes:
            raise ValueError("n_modes out of range")
        out = np.empty((self.fine_steps, n_modes))
        for m in range(n_modes):
            out[:, m] = self.mode_increments(path_id, m)
        return out

    def coarse_increments(self, path_id: int, level: int, n_modes: int | None = None) -> np.ndarray:
        """Increments at a coarser dyadic level, shape (2**level, n_modes)."""
        fine = self.fine_increments(path_id, n_modes)
        return left_fold_blocks(fine, 1 << (self.levels - self._check_level(level)))

    def coarse_increment(self, path_id: int, mode: int, level: int, j: int) -> float:
        """One coarse increment: the exact left-fold sum of its fine children."""
        block = 1 << (self.levels - self._check_level(level))
        if not 0 <= j < (1 << level):
            raise ValueError("coarse step index out of range")
        row = self.mode_increments(path_id, mode, (j + 1) * block)
        acc = row[j * block]
        for m in range(1, block):
            acc = acc + row[j * block + m]
        return float(acc)

    def _check_level(self, level: int) -> int:
        if not 0 <= level <= self.levels:
            raise ValueError("level must lie in [0, levels]")
        return level


def left_fold_blocks(arr: np.ndarray, block: int) -> np.ndarray:
    """Sum consecutive blocks along axis 0 by a sequential left fold.

    The fold order is fixed so block sums match the scalar oracle bit for bit
    and are independent of how many paths or modes share the array.
    """
    steps = arr.shape[0]
    if steps % block:
        raise ValueError("block must divide the number of steps")
    shaped = arr.reshape(steps // block, block, *arr.shape[1:])
    out = shaped[:, 0].copy()
    for m in range(1, block):
        out += shaped[:, m]
    return out


@dataclass(frozen=True)
class OUState:
    modes: ModeVector
    t: float


def _mode_eigenvalues(op: SpectralOperator, n: int) -> np.ndarray:
    if n > op.n_max:
        raise ValueError("state has more modes than the operator stores")
    return op.eigenvalues[:n]


def ou_exact_step(op: SpectralOperator, state: OUState, delta: float, rng: np.random.Generator) -> OUState:
    """Advance the driftless mild solution by delta with its exact transition.

    Mode i moves to exp(-lam_i*delta)*z_i plus a centred Gaussian with the
    exact accumulated variance; no step-size error at any delta.
    """
    if delta < 0.0:
        raise ValueError("delta must be nonnegative")
    lam = _mode_eigenvalues(op, len(state.modes))
    mean = decay_factor(lam, delta) * state.modes.coeffs
    sd = np.sqrt(convolution_variance(lam, delta))
    return OUState(ModeVector(mean + sd * rng.standard_normal(lam.size)), state.t + delta)


def ou_transition_sample(
    op: SpectralOperator, x: np.ndarray, t: float, rng: np.random.Generator, size: int
) -> np.ndarray:
    """Batch of exact time-t transition samples from x, shape (size, n)."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    lam = _mode_eigenvalues(op, x.shape[-1])
    mean = decay_factor(lam, t) * x
    sd = np.sqrt(convolution_variance(lam, t))
    return mean + sd * rng.standard_normal((size, lam.size))


def ou_cross_covariance(lam, t):
    """Covariance of the transition fluctuation with the gradient weight.

    Per mode, Cov(F_i, I_i) = t*exp(-lam*t), where F_i drives the transition
    and I_i is the time integral of exp(-lam*s) against the same Brownian
    motion.  This is exactly what makes the gradient-weight estimator
    unbiased for linear functionals.
    """
    return np.asarray(t, dtype=float) * np.exp(-np.asarray(lam, dtype=float) * t)


def _joint_conditional_sd(lam: np.ndarray, t: float, var: np.ndarray, cov: np.ndarray) -> np.ndarray:
    u = lam * t
    direct = var - cov * cov / var
    # the difference cancels to O(u^2) as u -> 0; switch to its series there
    series = t * u * u / 3.0 * (1.0 - u)
    resid = np.where(u < 1e-4, series, direct)
    return np.sqrt(np.maximum(resid, 0.0))


def ou_joint_modes_batch(
    op: SpectralOperator, x: np.ndarray, t: float, rng: np.random.Generator, size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Joint draws of transition states and per-mode gradient weights.

    Returns (states, weights), both (size, n).  Per mode the pair
    (fluctuation, weight) is bivariate normal with equal variances
    convolution_variance(lam, t) and covariance t*exp(-lam*t); weights for a
    direction eta are obtained by contracting the weight array with eta.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    lam = _mode_eigenvalues(op, x.shape[-1])
    var = convolution_variance(lam, t)
    cov = ou_cross_covariance(lam, t)
    sd = np.sqrt(var)
    resid_sd = _joint_conditional_sd(lam, t, var, cov)
    z1 = rng.standard_normal((size, lam.size))
    z2 = rng.standard_normal((size, lam.size))
    states = decay_factor(lam, t) * x + sd * z1
    weights = (cov / sd) * z1 + resid_sd * z2
    return states, weights


def ou_joint_with_weight(
    op: SpectralOperator, x: ModeVector, t: float, eta: ModeVector, rng: np.random.Generator
) -> tuple[ModeVector, float]:
    """One joint draw (Z_t, integral of <exp(s*A) eta, dW_s> over [0, t])."""
    if len(eta) != len(x):
        raise ValueError("direction and state must have the same mode count")
    states, weights = ou_joint_modes_batch(op, x.coeffs, t, rng, 1)
    return ModeVector(states[0]), float(weights[0] @ eta.coeffs)
