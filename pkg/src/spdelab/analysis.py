"""Strong-error estimation against a fine reference, and rate extraction.

The error functional is the time integral over [0, T] of the expected
squared H-distance between a fine reference path and a coarse approximation
of the same path.  It is evaluated as a left Riemann sum on the reference
grid; between its own grid points the coarse scheme is read through the
sub-step closed form (exponential interpolation with frozen drift and the
exact partial noise), and that convention is stamped into every report.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .noise import NoiseLattice
from .scheme import SchemeConfig, Trajectory, _coupled_grids, _fine_block
from .drift import drift_array

__all__ = [
    "RateParams",
    "HypothesisViolation",
    "rate_exponent",
    "theoretical_nu",
    "fit_rate",
    "ErrorAccumulator",
    "integrated_square_error",
    "strong_error",
    "ReportRow",
    "ConvergenceReport",
    "temporal_study",
    "spatial_study",
    "increment_statistic",
    "OFFGRID_RULE",
]

OFFGRID_RULE = "substep exponential interpolation consistent with the grid recursion"

CSV_HEADER = "resolution,delta,n_modes,m_paths,err2_mean,err2_stderr"


@dataclass(frozen=True)
class RateParams:
    """Exponents entering the theoretical strong rate: noise regularity
    alpha, drift mode-weight beta, drift Holder exponent epsilon."""

    alpha: float
    beta: float
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.beta <= 0.0:
            raise ValueError("beta must be positive")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")


class HypothesisViolation(ValueError):
    """A standing hypothesis of the convergence theorem fails."""

    def __init__(self, hypothesis: str, message: str):
        super().__init__(message)
        self.hypothesis = hypothesis


def rate_exponent(p: RateParams) -> float:
    """The raw rate exponent (epsilon + min(2*beta, alpha*epsilon**2))/2
    + alpha - 1, with no admissibility gating."""
    return (p.epsilon + min(2.0 * p.beta, p.alpha * p.epsilon**2)) / 2.0 + p.alpha - 1.0


def theoretical_nu(p: RateParams) -> float:
    """Gated rate exponent; raises HypothesisViolation unless 0 < nu < 1/2
    and the drift-weight constraint 2*beta/(2-epsilon) >= 1-alpha holds."""
    constraint = 2.0 * p.beta / (2.0 - p.epsilon)
    if constraint < 1.0 - p.alpha:
        raise HypothesisViolation(
            "drift_weight_constraint",
            f"2*beta/(2-epsilon) = {constraint:.6g} < 1-alpha = {1.0 - p.alpha:.6g}",
        )
    nu = rate_exponent(p)
    if nu <= 0.0:
        raise HypothesisViolation("nu_nonpositive", f"rate exponent nu = {nu:.6g} <= 0")
    if nu >= 0.5:
        raise HypothesisViolation("nu_too_large", f"rate exponent nu = {nu:.6g} >= 1/2")
    return nu


def fit_rate(h: np.ndarray, err2: np.ndarray) -> tuple[float, float, float]:
    """Least squares on (log h, log err2) -> (slope, intercept, r_squared)."""
    h = np.asarray(h, dtype=float)
    err2 = np.asarray(err2, dtype=float)
    if h.shape != err2.shape or h.ndim != 1 or h.size < 2:
        raise ValueError("need two matching 1-d arrays of at least 2 points")
    if np.any(h <= 0.0) or np.any(err2 <= 0.0) or not np.all(np.isfinite(h) & np.isfinite(err2)):
        raise ValueError("rate fitting needs positive finite inputs")
    x = np.log(h)
    y = np.log(err2)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r2


@dataclass
class ErrorAccumulator:
    """Per-path squared errors keyed by path id.

    Keeping the raw keyed values makes merging exactly order independent:
    statistics are always reduced over ascending path ids, so any partition
    of paths into chunks or workers yields bit-identical results.
    """

    values: dict[int, float] = field(default_factory=dict)

    def add(self, path_id: int, value: float) -> None:
        if path_id in self.values:
            raise ValueError(f"duplicate path id {path_id}")
        self.values[path_id] = float(value)

    def merge(self, other: "ErrorAccumulator") -> None:
        for pid, value in other.values.items():
            self.add(pid, value)

    @property
    def count(self) -> int:
        return len(self.values)

    def _ordered(self) -> np.ndarray:
        return np.array([self.values[k] for k in sorted(self.values)])

    def mean(self) -> float:
        if not self.values:
            raise ValueError("empty accumulator")
        return float(np.mean(self._ordered()))

    def stderr(self) -> float:
        if self.count < 2:
            return 0.0
        vals = self._ordered()
        return float(np.std(vals, ddof=1) / math.sqrt(self.count))


def _err2_batch(
    ref_cfg: SchemeConfig,
    ref_grid: np.ndarray,
    approx_cfg: SchemeConfig,
    approx_grid: np.ndarray,
    lattice: NoiseLattice,
    fine: np.ndarray | None,
    n_limit: int | None = None,
) -> np.ndarray:
    """Per-path integrated squared error for a (steps+1, C, n) grid batch."""
    if approx_cfg.level > ref_cfg.level:
        raise ValueError("reference must be at least as fine in time")
    if approx_cfg.n_dim > ref_cfg.n_dim:
        raise ValueError("reference must carry at least as many modes")
    n_ref = ref_cfg.n_dim if n_limit is None else n_limit
    if not 0 < n_ref <= ref_cfg.n_dim:
        raise ValueError("mode limit out of range")
    n_ap = min(approx_cfg.n_dim, n_ref)

    ratio = 1 << (ref_cfg.level - approx_cfg.level)
    fine_per_ref = 1 << (lattice.levels - ref_cfg.level)
    fine_per_ap = 1 << (lattice.levels - approx_cfg.level)
    if ratio > 1 and fine is None:
        raise ValueError("sub-step comparison needs the fine increments")

    lam = approx_cfg.operator.eigenvalues[: approx_cfg.n_dim]
    delta_ref = ref_cfg.delta
    tau = delta_ref * np.arange(ratio)
    exp_frac = np.exp(-np.outer(tau, lam))
    n_paths = approx_grid.shape[1]
    err2 = np.zeros(n_paths)

    for k in range(approx_cfg.steps):
        y = approx_grid[k]
        if ratio == 1:
            values = y[None]
        else:
            blk = fine[k * fine_per_ap : (k + 1) * fine_per_ap, :, : approx_cfg.n_dim]
            prefix = np.cumsum(blk, axis=0)
            partial = np.empty((ratio, n_paths, approx_cfg.n_dim))
            partial[0] = 0.0
            partial[1:] = prefix[fine_per_ref * np.arange(1, ratio) - 1]
            b = drift_array(approx_cfg.drift, lam, k * approx_cfg.delta, y)
            values = exp_frac[:, None, :] * (y[None] + b[None] * tau[:, None, None] + partial)
        ref_slice = ref_grid[k * ratio : (k + 1) * ratio]
        diff = ref_slice[:, :, :n_ap] - values[:, :, :n_ap]
        err2 += np.einsum("rpn,rpn->p", diff, diff)
        if n_ref > n_ap:
            tail = ref_slice[:, :, n_ap:n_ref]
            err2 += np.einsum("rpn,rpn->p", tail, tail)
    return err2 * delta_ref


def integrated_square_error(
    ref: Trajectory, approx: Trajectory, lattice: NoiseLattice, n_limit: int | None = None
) -> float:
    """Integral over [0, T] of the squared H-distance along one path."""
    if ref.path_id != approx.path_id:
        raise ValueError("trajectories must describe the same path")
    if ref.config.horizon != approx.config.horizon or ref.config.horizon != lattice.horizon:
        raise ValueError("trajectories and lattice must share the horizon")
    if ref.config.level > lattice.levels:
        raise ValueError("reference is finer than the lattice")
    fine = None
    if ref.config.level > approx.config.level:
        fine = _fine_block(lattice, [approx.path_id], approx.config.n_dim)
    value = _err2_batch(
        ref.config,
        ref.grid[:, None, :],
        approx.config,
        approx.grid[:, None, :],
        lattice,
        fine,
        n_limit,
    )
    return float(value[0])


def strong_error(
    ref: Trajectory, approx: Trajectory, lattice: NoiseLattice, accumulator: ErrorAccumulator
) -> tuple[float, float]:
    """Fold one path's integrated squared error into the running statistics."""
    accumulator.add(ref.path_id, integrated_square_error(ref, approx, lattice))
    return accumulator.mean(), accumulator.stderr()


@dataclass(frozen=True)
class ReportRow:
    resolution: int
    delta: float
    n_modes: int
    m_paths: int
    err2_mean: float
    err2_stderr: float


@dataclass
class ConvergenceReport:
    study: str
    rows: list[ReportRow]
    slope: float
    intercept: float
    r_squared: float
    nu_theory: float
    pass_flags: dict[str, bool]
    offgrid_rule: str = OFFGRID_RULE

    @property
    def passed(self) -> bool:
        return all(self.pass_flags.values())

    def csv_text(self) -> str:
        lines = [CSV_HEADER]
        for row in self.rows:
            lines.append(
                f"{row.resolution},{row.delta!r},{row.n_modes},{row.m_paths},"
                f"{row.err2_mean!r},{row.err2_stderr!r}"
            )
        return "\n".join(lines) + "\n"

    def summary_dict(self) -> dict:
        return {
            "study": self.study,
            "slope": self.slope,
            "intercept": self.intercept,
            "r2": self.r_squared,
            "nu_theory": self.nu_theory,
            "pass": self.passed,
            "pass_flags": dict(self.pass_flags),
            "offgrid_rule": self.offgrid_rule,
        }


def _chunked(m_paths: int, chunk_size: int) -> list[list[int]]:
    ids = list(range(m_paths))
    return [ids[i : i + chunk_size] for i in range(0, m_paths, chunk_size)]


def _run_chunks(worker, payloads, workers: int):
    if workers <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        # map preserves payload order, so assembly is schedule independent
        return list(pool.map(worker, payloads))


def _temporal_chunk(payload):
    operator, spec, initial, lattice, levels, ref_level, n_dim, path_ids = payload
    ref_cfg = SchemeConfig(operator, spec, initial, lattice.horizon, ref_level, n_dim)
    configs = [SchemeConfig(operator, spec, initial, lattice.horizon, lev, n_dim) for lev in levels]
    fine = _fine_block(lattice, path_ids, n_dim)
    grids = _coupled_grids([ref_cfg] + configs, lattice, fine)
    ref_grid = grids[0]
    return {
        cfg.level: _err2_batch(ref_cfg, ref_grid, cfg, grid, lattice, fine)
        for cfg, grid in zip(configs, grids[1:])
    }


def _decreasing_beyond_noise(means: np.ndarray, stderrs: np.ndarray) -> bool:
    gaps = means[:-1] - means[1:]
    noise = 2.0 * np.sqrt(stderrs[:-1] ** 2 + stderrs[1:] ** 2)
    return bool(np.all(gaps > noise))


def temporal_study(
    operator,
    drift_spec,
    initial,
    lattice: NoiseLattice,
    levels,
    ref_level: int,
    n_dim: int,
    m_paths: int,
    rate: RateParams,
    workers: int = 1,
    chunk_size: int = 25,
    slope_margin: float = 0.05,
    r2_min: float = 0.9,
) -> ConvergenceReport:
    """Self-convergence in the step size at fixed mode count.

    Every ladder level is coupled to the ref_level reference through the
    shared lattice, so the spatial truncation error cancels exactly and the
    fitted slope isolates the temporal rate.
    """
    levels = sorted(levels)
    if not levels or levels[-1] >= ref_level:
        raise ValueError("ladder levels must be coarser than the reference")
    nu = theoretical_nu(rate)
    payloads = [
        (operator, drift_spec, initial, lattice, levels, ref_level, n_dim, ids)
        for ids in _chunked(m_paths, chunk_size)
    ]
    results = _run_chunks(_temporal_chunk, payloads, workers)
    err2 = {lev: np.concatenate([r[lev] for r in results]) for lev in levels}

    rows = []
    for lev in levels:
        vals = err2[lev]
        rows.append(
            ReportRow(
                resolution=lev,
                delta=lattice.horizon / (1 << lev),
                n_modes=n_dim,
                m_paths=m_paths,
                err2_mean=float(np.mean(vals)),
                err2_stderr=float(np.std(vals, ddof=1) / math.sqrt(m_paths)) if m_paths > 1 else 0.0,
            )
        )
    means = np.array([r.err2_mean for r in rows])
    stderrs = np.array([r.err2_stderr for r in rows])
    deltas = np.array([r.delta for r in rows])
    slope, intercept, r2 = fit_rate(deltas, means)
    flags = {
        "err2_strictly_decreasing": _decreasing_beyond_noise(means, stderrs),
        "slope_at_least_nu_minus_margin": slope >= nu - slope_margin,
        "r2_at_least_min": r2 >= r2_min,
    }
    return ConvergenceReport("temporal", rows, slope, intercept, r2, nu, flags)


def _spatial_chunk(payload):
    operator, spec, initial, lattice, mode_ladder, ref_modes, level, path_ids = payload
    ref_cfg = SchemeConfig(operator, spec, initial, lattice.horizon, level, ref_modes)
    configs = [SchemeConfig(operator, spec, initial, lattice.horizon, level, n) for n in mode_ladder]
    fine = _fine_block(lattice, path_ids, ref_modes)
    grids = _coupled_grids([ref_cfg] + configs, lattice, fine)
    ref_grid = grids[0]
    return {
        cfg.n_dim: _err2_batch(ref_cfg, ref_grid, cfg, grid, lattice, fine)
        for cfg, grid in zip(configs, grids[1:])
    }


def spatial_study(
    operator,
    drift_spec,
    initial,
    lattice: NoiseLattice,
    mode_ladder,
    ref_modes: int,
    level: int,
    m_paths: int,
    rate: RateParams,
    workers: int = 1,
    chunk_size: int = 25,
    slope_margin: float = 0.05,
) -> ConvergenceReport:
    """Galerkin truncation error at fixed step size, fitted against the
    largest retained eigenvalue."""
    mode_ladder = sorted(mode_ladder)
    if not mode_ladder or mode_ladder[-1] >= ref_modes:
        raise ValueError("mode ladder must stay below the reference mode count")
    nu = theoretical_nu(rate)
    payloads = [
        (operator, drift_spec, initial, lattice, mode_ladder, ref_modes, level, ids)
        for ids in _chunked(m_paths, chunk_size)
    ]
    results = _run_chunks(_spatial_chunk, payloads, workers)
    err2 = {n: np.concatenate([r[n] for r in results]) for n in mode_ladder}

    rows = []
    for n in mode_ladder:
        vals = err2[n]
        rows.append(
            ReportRow(
                resolution=n,
                delta=lattice.horizon / (1 << level),
                n_modes=n,
                m_paths=m_paths,
                err2_mean=float(np.mean(vals)),
                err2_stderr=float(np.std(vals, ddof=1) / math.sqrt(m_paths)) if m_paths > 1 else 0.0,
            )
        )
    means = np.array([r.err2_mean for r in rows])
    top_eigs = np.array([operator.eigenvalues[n - 1] for n in mode_ladder])
    slope, intercept, r2 = fit_rate(top_eigs, means)
    flags = {
        "err2_strictly_decreasing": bool(np.all(np.diff(means) < 0.0)),
        "slope_at_most_neg_nu_plus_margin": slope <= -(nu - slope_margin),
    }
    return ConvergenceReport("spatial", rows, slope, intercept, r2, nu, flags)


def _increment_chunk(payload):
    operator, spec, initial, lattice, levels, n_dim, fractions, path_ids = payload
    fine = _fine_block(lattice, path_ids, n_dim)
    out = {}
    lam = operator.eigenvalues[:n_dim]
    for lev in levels:
        cfg = SchemeConfig(operator, spec, initial, lattice.horizon, lev, n_dim)
        grid = _coupled_grids([cfg], lattice, fine)[0]
        fine_per_step = 1 << (lattice.levels - lev)
        offsets = [int(round(phi * fine_per_step)) for phi in fractions]
        taus = np.array([j * lattice.fine_dt for j in offsets])
        exp_frac = np.exp(-np.outer(taus, lam))
        per_path = np.empty((len(path_ids), len(fractions), cfg.steps))
        for k in range(cfg.steps):
            y = grid[k]
            blk = fine[k * fine_per_step : (k + 1) * fine_per_step]
            prefix = np.cumsum(blk, axis=0)
            partial = np.stack([prefix[j - 1] for j in offsets])
            b = drift_array(spec, lam, k * cfg.delta, y)
            values = exp_frac[:, None, :] * (y[None] + b[None] * taus[:, None, None] + partial)
            diff = values - y[None]
            per_path[:, :, k] = np.einsum("fpn,fpn->fp", diff, diff).T
        out[lev] = per_path
    return out


def increment_statistic(
    operator,
    drift_spec,
    initial,
    lattice: NoiseLattice,
    levels,
    n_dim: int,
    m_paths: int,
    sample_fractions=(0.5,),
    workers: int = 1,
    chunk_size: int = 25,
    alpha: float | None = None,
    alpha_margin: float = 0.1,
) -> ConvergenceReport:
    """Worst off-grid mean-square displacement from the last grid point.

    For each level the statistic S(delta) is the maximum over the sampled
    off-grid times of E||Y_t - Y_(grid point below t)||^2; its decay order
    in delta is the regularity the scheme inherits from the noise.
    """
    levels = sorted(levels)
    if not levels or levels[-1] >= lattice.levels:
        raise ValueError("levels must be strictly coarser than the lattice")
    for phi in sample_fractions:
        if not 0.0 < phi < 1.0:
            raise ValueError("sample fractions must lie strictly inside (0, 1)")
        finest_block = 1 << (lattice.levels - max(levels))
        j = phi * finest_block
        if abs(j - round(j)) > 1e-9 or not 1 <= round(j) <= finest_block - 1:
            raise ValueError("sample fractions must hit off-grid lattice times at every level")
    payloads = [
        (operator, drift_spec, initial, lattice, levels, n_dim, tuple(sample_fractions), ids)
        for ids in _chunked(m_paths, chunk_size)
    ]
    results = _run_chunks(_increment_chunk, payloads, workers)

    rows = []
    for lev in levels:
        per_path = np.concatenate([r[lev] for r in results], axis=0)
        means = per_path.mean(axis=0)
        flat = int(np.argmax(means))
        worst = per_path.reshape(m_paths, -1)[:, flat]
        stderr = float(np.std(worst, ddof=1) / math.sqrt(m_paths)) if m_paths > 1 else 0.0
        rows.append(
            ReportRow(
                resolution=lev,
                delta=lattice.horizon / (1 << lev),
                n_modes=n_dim,
                m_paths=m_paths,
                err2_mean=float(means.reshape(-1)[flat]),
                err2_stderr=stderr,
            )
        )
    deltas = np.array([r.delta for r in rows])
    stats = np.array([r.err2_mean for r in rows])
    slope, intercept, r2 = fit_rate(deltas, stats)
    flags = {"finite": bool(np.all(np.isfinite(stats)))}
    if alpha is not None:
        flags["slope_at_least_alpha_minus_margin"] = slope >= alpha - alpha_margin
    return ConvergenceReport("increment", rows, slope, intercept, r2, float("nan"), flags)
