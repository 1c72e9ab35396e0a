"""Monte Carlo probes of the backward-equation machinery behind the rate proof.

The driftless mild solution is an Ornstein-Uhlenbeck process whose transition
is sampled exactly, so its Markov semigroup, the gradient representation with
an integral weight, the per-mode gradient decay, and a depth-limited Picard
evaluation of the resolvent-type integral equation can all be checked by
plain Monte Carlo with no discretization error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import ModeVector, SpectralOperator, decay_factor
from .drift import HolderDriftSpec, drift_array, drift_bound
from .noise import ou_transition_sample, ou_joint_modes_batch

__all__ = [
    "TestFunction",
    "coordinate_function",
    "bounded_smooth_function",
    "drift_test_function",
    "ou_semigroup_estimate",
    "bismut_gradient",
    "finite_difference_gradient",
    "GradientDecayRow",
    "GradientDecayReport",
    "gradient_decay_check",
    "PicardConfig",
    "picard_u_lambda",
    "picard_norm_bound",
    "SummabilityReport",
    "gradient_summability_probe",
    "kolmogorov_suite",
]

DECAY_CSV_HEADER = "i,estimate,stderr,bound_ratio"


@dataclass(frozen=True)
class TestFunction:
    """Vector-valued test observable on the mode space.

    Kinds: ``coordinate`` reads one mode and sends it along a fixed output
    direction (unbounded, so excluded from bound-dependent checks, bound is
    None); ``bounded_smooth`` is tanh of a linear form times a unit output
    direction; ``drift_function`` evaluates a rough drift frozen at one time.
    """

    kind: str
    index: int = 1
    weights: tuple = ()
    out_direction: tuple = ()
    drift: HolderDriftSpec | None = None
    time: float = 0.0
    bound: float | None = None

    __test__ = False  # keep pytest from collecting this as a test case

    def __post_init__(self):
        if self.kind not in ("coordinate", "bounded_smooth", "drift_function"):
            raise ValueError(f"unknown test function kind {self.kind!r}")
        if self.kind == "coordinate":
            if self.bound is not None:
                raise ValueError("coordinate observables are unbounded")
            if self.index < 1 or not self.out_direction:
                raise ValueError("coordinate observable needs an index and a direction")
        if self.kind == "bounded_smooth":
            if not self.weights or not self.out_direction:
                raise ValueError("bounded_smooth needs weights and a direction")
        if self.kind == "drift_function" and self.drift is None:
            raise ValueError("drift_function needs a drift description")
        if self.kind != "coordinate":
            if self.bound is None or not math.isfinite(self.bound) or self.bound <= 0.0:
                raise ValueError("bounded observables need a finite positive bound")

    def evaluate(self, states: np.ndarray, lam: np.ndarray) -> np.ndarray:
        """Apply to a batch of states with trailing mode axis; same shape out."""
        n = states.shape[-1]
        if self.kind == "drift_function":
            return drift_array(self.drift, lam, self.time, states)
        u = np.asarray(self.out_direction, dtype=float)
        if u.shape != (n,):
            raise ValueError("output direction does not match the mode count")
        if self.kind == "coordinate":
            if self.index > n:
                raise ValueError("coordinate index beyond the mode count")
            return states[..., self.index - 1, None] * u
        w = np.asarray(self.weights, dtype=float)
        if w.shape != (n,):
            raise ValueError("weights do not match the mode count")
        return np.tanh(states @ w)[..., None] * u


def _unit(direction) -> tuple:
    u = np.asarray(direction, dtype=float)
    size = float(np.linalg.norm(u))
    if size == 0.0:
        raise ValueError("output direction must be nonzero")
    return tuple(u / size)


def coordinate_function(index: int, out_direction) -> TestFunction:
    return TestFunction(kind="coordinate", index=index, out_direction=_unit(out_direction))


def bounded_smooth_function(weights, out_direction) -> TestFunction:
    # |tanh| < 1 and the direction is normalized, so the sup norm is 1
    return TestFunction(
        kind="bounded_smooth",
        weights=tuple(float(w) for w in weights),
        out_direction=_unit(out_direction),
        bound=1.0,
    )


def drift_test_function(spec: HolderDriftSpec, op: SpectralOperator, n_dim: int, time: float) -> TestFunction:
    return TestFunction(
        kind="drift_function",
        drift=spec,
        time=time,
        bound=drift_bound(spec, _truncated(op, n_dim)),
    )


def _truncated(op: SpectralOperator, n: int) -> SpectralOperator:
    if not 1 <= n <= op.n_max:
        raise ValueError("mode count beyond the operator capacity")
    if n == op.n_max:
        return op
    if op.spectrum_kind == "power_law":
        return SpectralOperator(op.eigenvalues[:n], spectrum_kind="power_law", power=op.power)
    return SpectralOperator(op.eigenvalues[:n])


def _mean_stderr(samples: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = samples.shape[0]
    return samples.mean(axis=0), samples.std(axis=0, ddof=1) / math.sqrt(m)


def ou_semigroup_estimate(
    op: SpectralOperator, f: TestFunction, t: float, x: ModeVector, m_samples: int, seed: int = 0
) -> tuple[ModeVector, np.ndarray]:
    """Plain Monte Carlo for the driftless semigroup applied to f at x."""
    if t <= 0.0:
        raise ValueError("t must be positive")
    if m_samples < 2:
        raise ValueError("need at least two samples")
    rng = np.random.default_rng(seed)
    lam = op.eigenvalues[: len(x)]
    states = ou_transition_sample(op, x.coeffs, t, rng, m_samples)
    mean, se = _mean_stderr(f.evaluate(states, lam))
    return ModeVector(mean), se


def bismut_gradient(
    op: SpectralOperator,
    f: TestFunction,
    t: float,
    x: ModeVector,
    eta: ModeVector,
    m_samples: int,
    seed: int = 0,
) -> tuple[ModeVector, np.ndarray]:
    """Directional semigroup gradient via the integral-weight representation.

    Each draw contributes f(Z_t) * I/t where I is the stochastic integral of
    the semigroup-flowed direction against the driving noise; no finite
    difference step enters, so the estimator is exactly unbiased.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    if m_samples < 2:
        raise ValueError("need at least two samples")
    if len(eta) != len(x):
        raise ValueError("direction and state must have the same mode count")
    rng = np.random.default_rng(seed)
    lam = op.eigenvalues[: len(x)]
    states, weights = ou_joint_modes_batch(op, x.coeffs, t, rng, m_samples)
    pulls = (weights @ eta.coeffs) / t
    mean, se = _mean_stderr(f.evaluate(states, lam) * pulls[:, None])
    return ModeVector(mean), se


def finite_difference_gradient(
    op: SpectralOperator,
    f: TestFunction,
    t: float,
    x: ModeVector,
    eta: ModeVector,
    m_samples: int,
    h: float = 1e-3,
    seed: int = 0,
) -> tuple[ModeVector, np.ndarray]:
    """Central finite difference of the semigroup with common random numbers.

    The transition from x + c*eta shares its fluctuation with the one from x,
    so the two endpoints use literally the same draws and the difference
    quotient stays finite-variance as h shrinks.
    """
    if t <= 0.0:
        raise ValueError("t must be positive")
    if h <= 0.0:
        raise ValueError("step must be positive")
    if len(eta) != len(x):
        raise ValueError("direction and state must have the same mode count")
    rng = np.random.default_rng(seed)
    lam = op.eigenvalues[: len(x)]
    states = ou_transition_sample(op, x.coeffs, t, rng, m_samples)
    shift = decay_factor(lam, t) * (h * eta.coeffs)
    quotients = (f.evaluate(states + shift, lam) - f.evaluate(states - shift, lam)) / (2.0 * h)
    mean, se = _mean_stderr(quotients)
    return ModeVector(mean), se


@dataclass(frozen=True)
class GradientDecayRow:
    mode: int
    estimate: float
    stderr: float
    bound_ratio: float


@dataclass
class GradientDecayReport:
    t: float
    sup_bound: float
    rows: list[GradientDecayRow]
    max_ratio: float
    bounded: bool

    def csv_text(self) -> str:
        lines = [DECAY_CSV_HEADER]
        for row in self.rows:
            lines.append(f"{row.mode},{row.estimate!r},{row.stderr!r},{row.bound_ratio!r}")
        return "\n".join(lines) + "\n"

    def summary_dict(self) -> dict:
        return {
            "t": self.t,
            "sup_bound": self.sup_bound,
            "max_ratio": self.max_ratio,
            "bounded": self.bounded,
            "rows": [
                {
                    "mode": r.mode,
                    "estimate": r.estimate,
                    "stderr": r.stderr,
                    "bound_ratio": r.bound_ratio,
                }
                for r in self.rows
            ],
        }


def gradient_decay_check(
    op: SpectralOperator,
    f: TestFunction,
    t: float,
    x: ModeVector,
    modes,
    m_samples: int,
    seed: int = 0,
    ratio_cap: float = 1.0,
) -> GradientDecayReport:
    """Per-mode gradient size against sup_bound*sqrt(1-e^(-2*lam*t))/(sqrt(lam)*t).

    The same seed is reused for every mode, so the per-mode estimates share
    their draws and the decay trend is not blurred by independent noise.
    """
    if f.bound is None:
        raise ValueError("gradient decay check needs an observable with a declared bound")
    rows = []
    bounded = True
    for i in modes:
        if not 1 <= i <= len(x):
            raise ValueError("mode index beyond the state dimension")
        direction = np.zeros(len(x))
        direction[i - 1] = 1.0
        est, se = bismut_gradient(op, f, t, x, ModeVector(direction), m_samples, seed=seed)
        size = est.norm()
        se_size = float(np.linalg.norm(se))
        lam_i = float(op.eigenvalues[i - 1])
        theory = f.bound * math.sqrt(-math.expm1(-2.0 * lam_i * t)) / (math.sqrt(lam_i) * t)
        ratio = size / theory
        rows.append(GradientDecayRow(mode=int(i), estimate=size, stderr=se_size, bound_ratio=ratio))
        if size > ratio_cap * theory + 3.0 * se_size:
            bounded = False
    max_ratio = max(row.bound_ratio for row in rows)
    return GradientDecayReport(t=t, sup_bound=f.bound, rows=rows, max_ratio=max_ratio, bounded=bounded)


@dataclass(frozen=True)
class PicardConfig:
    """Shape of the depth-limited Picard evaluation.

    Cost grows like (time_nodes*inner_samples)**depth, which is why depth is
    capped at 2 and the dimension at 4; sample_budget is the hard stop on
    total transition draws.
    """

    lam: float
    depth: int = 1
    dims: int = 3
    time_nodes: int = 8
    outer_samples: int = 512
    inner_samples: int = 128
    fd_step: float = 1e-3
    horizon: float = 1.0
    sample_budget: int = 5_000_000

    def __post_init__(self):
        if self.lam <= 0.0:
            raise ValueError("lam must be positive")
        if not 1 <= self.depth <= 2:
            raise ValueError("depth must be 1 or 2")
        if not 1 <= self.dims <= 4:
            raise ValueError("dims must lie in 1..4")
        if self.time_nodes < 1:
            raise ValueError("need at least one time node")
        if self.outer_samples < 2 or self.inner_samples < 2:
            raise ValueError("need at least two samples per level")
        if self.fd_step <= 0.0:
            raise ValueError("difference step must be positive")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        if self.sample_budget < 1:
            raise ValueError("budget must be positive")


class _BudgetExhausted(RuntimeError):
    pass


def _draw_transitions(op, z, dt, rng, m, cfg, budget) -> np.ndarray:
    if budget["used"] + m > cfg.sample_budget:
        raise _BudgetExhausted
    budget["used"] += m
    return ou_transition_sample(op, z, dt, rng, m)


def _picard_level(cfg, op_d, lam_d, spec, k, t, z, rng, budget) -> np.ndarray:
    """Value of the k-th Picard iterate at (t, z); zero at k = 0 or t past T."""
    if k == 0 or t >= cfg.horizon:
        return np.zeros(cfg.dims)
    ds = (cfg.horizon - t) / cfg.time_nodes
    m = cfg.outer_samples if k == cfg.depth else cfg.inner_samples
    acc = np.zeros(cfg.dims)
    for j in range(cfg.time_nodes):
        s = t + (j + 0.5) * ds
        states = _draw_transitions(op_d, z, s - t, rng, m, cfg, budget)
        integrand = drift_array(spec, lam_d, s, states)
        if k >= 2:
            # directional derivative of the previous iterate along the drift,
            # one forward difference per outer sample
            rows = []
            for r in range(m):
                moved = states[r] + cfg.fd_step * integrand[r]
                up = _picard_level(cfg, op_d, lam_d, spec, k - 1, s, moved, rng, budget)
                u0 = _picard_level(cfg, op_d, lam_d, spec, k - 1, s, states[r], rng, budget)
                rows.append((up - u0) / cfg.fd_step)
            integrand = integrand + np.stack(rows)
        acc += math.exp(-cfg.lam * (s - t)) * integrand.mean(axis=0) * ds
    return acc


def picard_u_lambda(
    cfg: PicardConfig,
    op: SpectralOperator,
    spec: HolderDriftSpec,
    t: float,
    x: ModeVector,
    seed: int = 0,
) -> tuple[ModeVector, dict]:
    """Depth-limited Picard iterate of the integral equation at one point.

    Midpoint rule in time, exact transitions underneath, nested Monte Carlo
    for the derivative term at depth 2.  At depth 1 the per-coordinate
    standard error is exact (nodes are independent) and lands in the
    diagnostics; budget exhaustion returns the partial node sum with
    completed False.
    """
    if len(x) != cfg.dims:
        raise ValueError("state dimension must match the configuration")
    if not 0.0 <= t <= cfg.horizon:
        raise ValueError("t must lie in [0, horizon]")
    op_d = _truncated(op, cfg.dims)
    lam_d = op_d.eigenvalues
    if t >= cfg.horizon:
        return ModeVector(np.zeros(cfg.dims)), {
            "completed": True,
            "samples_used": 0,
            "nodes_done": 0,
            "nodes_total": cfg.time_nodes,
            "depth": cfg.depth,
        }
    rng = np.random.default_rng(seed)
    budget = {"used": 0}
    ds = (cfg.horizon - t) / cfg.time_nodes
    acc = np.zeros(cfg.dims)
    var_acc = np.zeros(cfg.dims)
    nodes_done = 0
    completed = True
    for j in range(cfg.time_nodes):
        s = t + (j + 0.5) * ds
        try:
            states = _draw_transitions(op_d, x.coeffs, s - t, rng, cfg.outer_samples, cfg, budget)
            integrand = drift_array(spec, lam_d, s, states)
            if cfg.depth >= 2:
                rows = []
                for r in range(cfg.outer_samples):
                    moved = states[r] + cfg.fd_step * integrand[r]
                    up = _picard_level(cfg, op_d, lam_d, spec, 1, s, moved, rng, budget)
                    u0 = _picard_level(cfg, op_d, lam_d, spec, 1, s, states[r], rng, budget)
                    rows.append((up - u0) / cfg.fd_step)
                integrand = integrand + np.stack(rows)
        except _BudgetExhausted:
            completed = False
            break
        weight = math.exp(-cfg.lam * (s - t)) * ds
        acc += weight * integrand.mean(axis=0)
        var_acc += weight**2 * integrand.var(axis=0, ddof=1) / cfg.outer_samples
        nodes_done += 1
    diagnostics = {
        "completed": completed,
        "samples_used": budget["used"],
        "nodes_done": nodes_done,
        "nodes_total": cfg.time_nodes,
        "depth": cfg.depth,
    }
    if cfg.depth == 1:
        diagnostics["stderr"] = np.sqrt(var_acc)
    return ModeVector(acc), diagnostics


def picard_norm_bound(sup_b: float, lam: float, t: float, horizon: float) -> float:
    """First-iterate norm bound sup_b*(1-e^(-lam*(T-t)))/lam."""
    if lam <= 0.0:
        raise ValueError("lam must be positive")
    if t > horizon:
        raise ValueError("t beyond the horizon")
    return sup_b * (-math.expm1(-lam * (horizon - t))) / lam


@dataclass
class SummabilityReport:
    theta: float
    terms: np.ndarray
    partial_sums: np.ndarray
    growth_ratio: float
    bounded: bool

    def summary_dict(self) -> dict:
        return {
            "theta": self.theta,
            "partial_sums": [float(v) for v in self.partial_sums],
            "growth_ratio": self.growth_ratio,
            "bounded": self.bounded,
        }


def gradient_summability_probe(
    op: SpectralOperator,
    spec: HolderDriftSpec,
    lam_picard: float,
    t: float,
    x: ModeVector,
    theta: float,
    horizon: float = 1.0,
    time_nodes: int = 8,
    m_samples: int = 4096,
    seed: int = 0,
    growth_cap: float = 1.5,
) -> SummabilityReport:
    """Weighted square sum of per-mode gradients of the first Picard iterate.

    Estimates grad_i of u at (t, x) for every retained mode in one pass (the
    joint sampler hands out all mode weights at once), then reports whether
    the partial sums of lam_i**theta * ||grad_i||**2 flatten out: the last
    half of the modes may add at most growth_cap times the first half's sum.
    """
    if theta < 0.0:
        raise ValueError("theta must be nonnegative")
    if not 0.0 <= t < horizon:
        raise ValueError("t must lie in [0, horizon)")
    rng = np.random.default_rng(seed)
    n = len(x)
    lam = op.eigenvalues[:n]
    op_n = _truncated(op, n)
    ds = (horizon - t) / time_nodes
    grad = np.zeros((n, n))
    for j in range(time_nodes):
        s = t + (j + 0.5) * ds
        tau = s - t
        states, weights = ou_joint_modes_batch(op_n, x.coeffs, tau, rng, m_samples)
        values = drift_array(spec, lam, s, states)
        node_grad = (weights.T @ values) / (m_samples * tau)
        grad += math.exp(-lam_picard * tau) * ds * node_grad
    terms = lam**theta * np.einsum("ij,ij->i", grad, grad)
    partial_sums = np.cumsum(terms)
    half = max(1, n // 2)
    growth_ratio = float(partial_sums[-1] / partial_sums[half - 1])
    return SummabilityReport(
        theta=theta,
        terms=terms,
        partial_sums=partial_sums,
        growth_ratio=growth_ratio,
        bounded=bool(growth_ratio <= growth_cap),
    )


def kolmogorov_suite(
    op: SpectralOperator,
    spec: HolderDriftSpec,
    t: float = 0.5,
    dims: int = 4,
    m_samples: int = 20_000,
    decay_modes=(1, 4, 16),
    picard_dims: int = 3,
    lam_sweep=(1.0, 10.0, 100.0),
    horizon: float = 1.0,
    theta: float = 0.45,
    seed: int = 2024,
) -> dict:
    """Bundle of checks used by the command-line front end.

    Covers the closed-form agreements of the semigroup and gradient
    estimators, the finite-difference cross-check, per-mode gradient decay,
    the Picard terminal condition, the first-iterate norm bound with its
    large-lam smallness trend, and the weighted gradient summability probe.
    """
    checks = []

    def record(name: str, passed: bool, detail: str):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    x = ModeVector(1.0 / np.arange(1, dims + 1))
    lam1 = float(op.eigenvalues[0])

    f_lin = coordinate_function(1, np.eye(dims)[0])
    est, se = ou_semigroup_estimate(op, f_lin, t, x, m_samples, seed=seed)
    expected = math.exp(-lam1 * t) * x.coeffs[0]
    gap = abs(est.coeffs[0] - expected)
    record(
        "semigroup_linear_closed_form",
        gap <= 3.0 * se[0] + 1e-12,
        f"|{est.coeffs[0]:.6g} - {expected:.6g}| vs 3*stderr = {3.0 * se[0]:.3g}",
    )

    eta = ModeVector(np.linspace(1.0, 0.25, dims))
    best, bse = bismut_gradient(op, f_lin, t, x, eta, m_samples, seed=seed)
    expected_grad = math.exp(-lam1 * t) * eta.coeffs[0]
    gap = abs(best.coeffs[0] - expected_grad)
    record(
        "bismut_linear_closed_form",
        gap <= 3.0 * bse[0] + 1e-12,
        f"|{best.coeffs[0]:.6g} - {expected_grad:.6g}| vs 3*stderr = {3.0 * bse[0]:.3g}",
    )

    f_smooth = bounded_smooth_function(np.linspace(1.0, 0.125, dims), np.eye(dims)[0])
    bis, bis_se = bismut_gradient(op, f_smooth, t, x, eta, m_samples, seed=seed)
    fd, _fd_se = finite_difference_gradient(op, f_smooth, t, x, eta, m_samples, seed=seed)
    rel = [
        abs(bis.coeffs[i] - fd.coeffs[i]) / abs(bis.coeffs[i])
        for i in range(dims)
        if abs(bis.coeffs[i]) > 10.0 * bis_se[i]
    ]
    worst = max(rel) if rel else 0.0
    record(
        "bismut_matches_finite_difference",
        bool(rel) and worst < 0.05,
        f"max relative gap {worst:.4f} over {len(rel)} significant coordinates",
    )

    n_decay = max(decay_modes)
    f_drift = drift_test_function(spec, op, n_decay, time=0.25)
    x_decay = ModeVector(1.0 / np.arange(1, n_decay + 1))
    decay = gradient_decay_check(op, f_drift, t, x_decay, decay_modes, m_samples, seed=seed)
    record(
        "gradient_decay_bounded",
        decay.bounded,
        f"max bound ratio {decay.max_ratio:.4f} over modes {tuple(decay_modes)}",
    )

    base = PicardConfig(lam=lam_sweep[0], dims=picard_dims, horizon=horizon)
    x_pic = ModeVector(1.0 / np.arange(1, picard_dims + 1))
    terminal, _ = picard_u_lambda(base, op, spec, horizon, x_pic, seed=seed)
    record("picard_terminal_zero", terminal.norm() == 0.0, "value at t = horizon")

    sup_b = drift_bound(spec, _truncated(op, picard_dims))
    norms, bounds, slacks = [], [], []
    within = True
    for lam_value in lam_sweep:
        cfg = PicardConfig(lam=lam_value, dims=picard_dims, horizon=horizon)
        value, diag = picard_u_lambda(cfg, op, spec, 0.0, x_pic, seed=seed)
        se_norm = float(np.linalg.norm(diag["stderr"]))
        bound = picard_norm_bound(sup_b, lam_value, 0.0, horizon)
        norms.append(value.norm())
        bounds.append(bound)
        slacks.append(se_norm)
        if value.norm() > bound + 3.0 * se_norm:
            within = False
    monotone = all(
        norms[i + 1] <= norms[i] + 3.0 * (slacks[i] + slacks[i + 1]) for i in range(len(norms) - 1)
    )
    record(
        "picard_norm_bound",
        within,
        "norms " + ", ".join(f"{v:.4g} <= {b:.4g}" for v, b in zip(norms, bounds)),
    )
    record(
        "picard_smallness_trend",
        monotone,
        "norms along the sweep: " + ", ".join(f"{v:.4g}" for v in norms),
    )

    n_sum = max(decay_modes)
    summ = gradient_summability_probe(
        op, spec, lam_sweep[0], 0.0, ModeVector(1.0 / np.arange(1, n_sum + 1)), theta,
        horizon=horizon, seed=seed,
    )
    record(
        "summability_non_exploding",
        summ.bounded,
        f"partial sum growth ratio {summ.growth_ratio:.4f} at theta = {theta}",
    )

    return {
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
        "decay": decay.summary_dict(),
        "picard": {
            "lam_sweep": [float(v) for v in lam_sweep],
            "norms": norms,
            "bounds": bounds,
            "stderrs": slacks,
        },
        "summability": summ.summary_dict(),
        "decay_csv": decay.csv_text(),
    }
