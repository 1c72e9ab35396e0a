"""Command line front end: JSON study configs in, CSV and JSON reports out.

Every invocation loads one config document, checks the standing hypotheses
of the rate theorem against it, runs the requested study, and writes
`report.csv`, `summary.json`, and `plot.gp` (plain plotting commands) into
the output directory.  Exit codes: 0 all pass flags true, 1 a study gate
failed, 2 invalid config, 3 hypothesis violated, 4 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import (
    SpectralOperator,
    check_trace_condition,
    make_heat_operator,
    make_power_law_operator,
)
from .drift import (
    HolderDriftSpec,
    drift_spec_from_dict,
    drift_spec_to_dict,
    verify_mode_holder,
    verify_time_holder,
)
from .noise import NoiseLattice
from .scheme import (
    InitialData,
    SchemeConfig,
    SimulationError,
    initial_domain_check,
    simulate_path,
    write_trajectory_csv,
)
from .analysis import (
    ConvergenceReport,
    HypothesisViolation,
    RateParams,
    increment_statistic,
    rate_exponent,
    spatial_study,
    temporal_study,
    theoretical_nu,
)
from .kolmogorov import kolmogorov_suite

__all__ = [
    "ConfigError",
    "StudyConfig",
    "load_config",
    "parse_config",
    "hypothesis_rows",
    "enforce_hypotheses",
    "main",
]

EXIT_OK = 0
EXIT_ACCEPTANCE = 1
EXIT_CONFIG = 2
EXIT_HYPOTHESIS = 3
EXIT_RUNTIME = 4

_STUDY_KINDS = ("temporal", "spatial", "increment", "kolmogorov", "validate")

_COMMAND_KINDS = {
    "temporal-study": "temporal",
    "spatial-study": "spatial",
    "increment-study": "increment",
    "kolmogorov-check": "kolmogorov",
    "validate-drift": "validate",
}


class ConfigError(ValueError):
    """Structurally invalid configuration document."""


@dataclass
class StudyConfig:
    operator: SpectralOperator
    drift: HolderDriftSpec
    rate: RateParams
    initial: InitialData
    master_seed: int
    levels: int
    n_modes: int
    horizon: float
    study: dict
    output_dir: str

    def to_dict(self) -> dict:
        op: dict = {"kind": "heat", "n_max": self.operator.n_max}
        if self.operator.spectrum_kind == "power_law" and self.operator.power != 2.0:
            op = {"kind": "power_law", "n_max": self.operator.n_max, "power": self.operator.power}
        elif self.operator.spectrum_kind == "explicit":
            op = {"kind": "explicit", "eigenvalues": [float(v) for v in self.operator.eigenvalues]}
        initial: dict = {"profile": self.initial.profile}
        if self.initial.profile == "power_decay":
            initial["q"] = self.initial.q
        else:
            initial["coeffs"] = list(self.initial.coeffs)
        return {
            "operator": op,
            "drift": drift_spec_to_dict(self.drift),
            "rate_params": {
                "alpha": self.rate.alpha,
                "beta": self.rate.beta,
                "epsilon": self.rate.epsilon,
            },
            "initial": initial,
            "noise": {
                "seed": self.master_seed,
                "levels": self.levels,
                "n_modes": self.n_modes,
                "horizon": self.horizon,
            },
            "study": dict(self.study),
            "output": {"directory": self.output_dir},
        }

    def lattice(self, scale: float = 1.0) -> NoiseLattice:
        return NoiseLattice(self.master_seed, self.horizon, self.levels, self.n_modes, scale)


def _section(doc: dict, name: str) -> dict:
    if name not in doc:
        raise ConfigError(f"missing section {name!r}")
    value = doc[name]
    if not isinstance(value, dict):
        raise ConfigError(f"section {name!r} must be an object")
    return value


_MISSING = object()


def _get(section: dict, name: str, where: str, default=_MISSING):
    if name in section:
        return section[name]
    if default is _MISSING:
        raise ConfigError(f"missing field {name!r} in section {where!r}")
    return default


def _int_field(section, name, where, minimum, maximum=None, default=_MISSING) -> int:
    value = _get(section, name, where, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{where}.{name} must be an integer")
    if value < minimum or (maximum is not None and value > maximum):
        raise ConfigError(f"{where}.{name} out of range")
    return value


def _ladder_field(section, where) -> list[int]:
    ladder = _get(section, "ladder", where)
    if not isinstance(ladder, list) or not ladder:
        raise ConfigError(f"{where}.ladder must be a non-empty list")
    if not all(isinstance(v, int) and not isinstance(v, bool) and v >= 0 for v in ladder):
        raise ConfigError(f"{where}.ladder entries must be nonnegative integers")
    if len(set(ladder)) != len(ladder):
        raise ConfigError(f"{where}.ladder entries must be distinct")
    return sorted(ladder)


def _build_operator(section: dict) -> SpectralOperator:
    kind = _get(section, "kind", "operator")
    if kind == "heat":
        return make_heat_operator(_int_field(section, "n_max", "operator", 1))
    if kind == "power_law":
        power = _get(section, "power", "operator")
        return make_power_law_operator(_int_field(section, "n_max", "operator", 1), float(power))
    if kind == "explicit":
        eigenvalues = _get(section, "eigenvalues", "operator")
        if not isinstance(eigenvalues, list) or not eigenvalues:
            raise ConfigError("operator.eigenvalues must be a non-empty list")
        return SpectralOperator(np.asarray(eigenvalues, dtype=float))
    raise ConfigError(f"unknown operator kind {kind!r}")


def _normalize_study(section: dict, cfg_levels: int, cfg_modes: int, op: SpectralOperator, rate: RateParams) -> dict:
    kind = _get(section, "kind", "study")
    if kind not in _STUDY_KINDS:
        raise ConfigError(f"unknown study kind {kind!r}")
    out: dict = {"kind": kind}
    if "M" in section and "m_paths" not in section and "m_samples" not in section:
        section = dict(section)
        section["m_samples" if kind == "kolmogorov" else "m_paths"] = section.pop("M")

    if kind == "temporal":
        ladder = _ladder_field(section, "study")
        ref = _int_field(section, "reference_level", "study", 0, cfg_levels)
        if ladder[-1] >= ref:
            raise ConfigError("study.ladder must stay strictly below the reference level")
        n_modes = _int_field(section, "n_modes", "study", 1, min(cfg_modes, op.n_max), default=min(cfg_modes, op.n_max))
        out.update(
            ladder=ladder,
            reference_level=ref,
            n_modes=n_modes,
            m_paths=_int_field(section, "m_paths", "study", 2),
        )
    elif kind == "spatial":
        ladder = _ladder_field(section, "study")
        ref = _int_field(section, "reference_modes", "study", 1, min(cfg_modes, op.n_max))
        if ladder[0] < 1 or ladder[-1] >= ref:
            raise ConfigError("study.ladder must be mode counts strictly below reference_modes")
        out.update(
            ladder=ladder,
            reference_modes=ref,
            level=_int_field(section, "level", "study", 0, cfg_levels),
            m_paths=_int_field(section, "m_paths", "study", 2),
        )
    elif kind == "increment":
        ladder = _ladder_field(section, "study")
        if ladder[-1] >= cfg_levels:
            raise ConfigError("study.ladder must stay strictly below the lattice levels")
        fractions = _get(section, "sample_fractions", "study", default=[0.5])
        if not isinstance(fractions, list) or not fractions:
            raise ConfigError("study.sample_fractions must be a non-empty list")
        fractions = [float(v) for v in fractions]
        if not all(0.0 < v < 1.0 for v in fractions):
            raise ConfigError("study.sample_fractions must lie strictly inside (0, 1)")
        out.update(
            ladder=ladder,
            n_modes=_int_field(section, "n_modes", "study", 1, min(cfg_modes, op.n_max), default=min(cfg_modes, op.n_max)),
            m_paths=_int_field(section, "m_paths", "study", 2),
            sample_fractions=fractions,
        )
    elif kind == "kolmogorov":
        dims = _int_field(section, "dims", "study", 1, min(4, op.n_max), default=min(4, op.n_max))
        decay_modes = section.get("decay_modes", [1, 4, 16])
        if not isinstance(decay_modes, list) or not decay_modes:
            raise ConfigError("study.decay_modes must be a non-empty list")
        if not all(isinstance(v, int) and 1 <= v <= op.n_max for v in decay_modes):
            raise ConfigError("study.decay_modes entries must be modes of the operator")
        lam_sweep = [float(v) for v in section.get("lam_sweep", [1.0, 10.0, 100.0])]
        if not lam_sweep or any(v <= 0.0 for v in lam_sweep) or sorted(lam_sweep) != lam_sweep:
            raise ConfigError("study.lam_sweep must be positive and ascending")
        t = float(section.get("t", 0.5))
        if t <= 0.0:
            raise ConfigError("study.t must be positive")
        theta = float(section.get("theta", rate.alpha))
        if theta < 0.0:
            raise ConfigError("study.theta must be nonnegative")
        out.update(
            m_samples=_int_field(section, "m_samples", "study", 2, default=20_000),
            dims=dims,
            t=t,
            decay_modes=sorted(decay_modes),
            picard_dims=_int_field(section, "picard_dims", "study", 1, min(4, op.n_max), default=min(3, op.n_max)),
            lam_sweep=lam_sweep,
            theta=theta,
        )
    else:
        out.update(trials=_int_field(section, "trials", "study", 1, default=10_000))
    return out


def parse_config(doc: dict) -> StudyConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config document must be a JSON object")
    known = {"operator", "drift", "rate_params", "initial", "noise", "study", "output"}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    try:
        op = _build_operator(_section(doc, "operator"))
        drift = drift_spec_from_dict(_section(doc, "drift"))
        rate_section = _section(doc, "rate_params")
        rate = RateParams(
            alpha=float(_get(rate_section, "alpha", "rate_params")),
            beta=float(_get(rate_section, "beta", "rate_params")),
            epsilon=float(_get(rate_section, "epsilon", "rate_params")),
        )
        initial_section = _section(doc, "initial")
        profile = _get(initial_section, "profile", "initial")
        if profile == "power_decay":
            initial = InitialData("power_decay", q=float(_get(initial_section, "q", "initial")))
        else:
            initial = InitialData(
                str(profile), coeffs=tuple(_get(initial_section, "coeffs", "initial", default=()))
            )
        noise = _section(doc, "noise")
        seed = _int_field(noise, "seed", "noise", 0)
        levels = noise.get("levels", noise.get("L"))
        if not isinstance(levels, int) or not 0 <= levels <= 30:
            raise ConfigError("noise.levels must be an integer in [0, 30]")
        n_modes = _int_field(noise, "n_modes", "noise", 1, op.n_max)
        horizon = float(noise.get("horizon", 1.0))
        if horizon <= 0.0:
            raise ConfigError("noise.horizon must be positive")
        study = _normalize_study(_section(doc, "study"), levels, n_modes, op, rate)
        output = doc.get("output", {"directory": "out"})
        if isinstance(output, str):
            output = {"directory": output}
        out_dir = str(_get(output, "directory", "output"))
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if drift.beta != rate.beta or drift.epsilon != rate.epsilon:
        raise ConfigError("rate_params must repeat the drift's beta and epsilon")
    return StudyConfig(
        operator=op,
        drift=drift,
        rate=rate,
        initial=initial,
        master_seed=seed,
        levels=levels,
        n_modes=n_modes,
        horizon=horizon,
        study=study,
        output_dir=out_dir,
    )


def load_config(path, seed=None, paths=None, out=None) -> StudyConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    cfg = parse_config(doc)
    if seed is not None:
        if not 0 <= seed <= (1 << 64) - 1:
            raise ConfigError("seed override must fit in 64 bits")
        cfg.master_seed = seed
    if paths is not None:
        if paths < 1:
            raise ConfigError("path override must be positive")
        if paths < 2 and any(k in cfg.study for k in ("m_paths", "m_samples")):
            raise ConfigError("this study needs at least 2 paths")
        for key in ("m_paths", "m_samples", "trials"):
            if key in cfg.study:
                cfg.study[key] = paths
    if out is not None:
        cfg.output_dir = str(out)
    return cfg


def hypothesis_rows(cfg: StudyConfig) -> list[dict]:
    """One row per standing hypothesis: name, computed value, verdict."""
    rows = []
    trace = check_trace_condition(cfg.operator, cfg.rate.alpha)
    rows.append(
        {
            "name": "noise_trace_summable",
            "value": f"exponent {trace.exponent:.6g}, partial sum {trace.partial_sum:.6g}, "
            f"tail bound {trace.tail_bound:.6g}",
            "holds": trace.converges,
        }
    )
    constraint = 2.0 * cfg.rate.beta / (2.0 - cfg.rate.epsilon)
    target = 1.0 - cfg.rate.alpha
    rows.append(
        {
            "name": "drift_weight_constraint",
            "value": f"2*beta/(2-epsilon) = {constraint:.6g} vs 1-alpha = {target:.6g}",
            "holds": constraint >= target,
        }
    )
    nu = rate_exponent(cfg.rate)
    rows.append({"name": "rate_exponent_positive", "value": f"nu = {nu:.6g}", "holds": nu > 0.0})
    rows.append({"name": "rate_exponent_below_half", "value": f"nu = {nu:.6g}", "holds": nu < 0.5})
    in_domain, why = initial_domain_check(cfg.initial, cfg.operator)
    rows.append({"name": "initial_state_in_domain", "value": why, "holds": in_domain})
    return rows


def enforce_hypotheses(cfg: StudyConfig) -> float:
    """Gate a study run; returns nu or raises the named violation."""
    trace = check_trace_condition(cfg.operator, cfg.rate.alpha)
    if trace.converges is not True:
        state = "diverges" if trace.converges is False else "cannot be certified"
        raise HypothesisViolation(
            "noise_trace_summable",
            f"mode sum of lam**-(1-alpha) {state} (exponent {trace.exponent:.6g})",
        )
    nu = theoretical_nu(cfg.rate)
    in_domain, why = initial_domain_check(cfg.initial, cfg.operator)
    if in_domain is not True:
        raise HypothesisViolation("initial_state_in_domain", why)
    return nu


def _sanitize(value):
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_sanitize(float(v)) for v in value]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else None
    if isinstance(value, (np.integer, np.bool_)):
        return value.item()
    return value


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(_sanitize(payload), indent=2, sort_keys=True) + "\n")


def _convergence_plot(report: ConvergenceReport, xcol: int, xlabel: str) -> str:
    return "\n".join(
        [
            "# plotting commands for a gnuplot-compatible tool",
            "set datafile separator ','",
            "set logscale xy",
            f"set xlabel '{xlabel}'",
            "set ylabel 'mean integrated squared error'",
            "set key left top",
            f"slope = {report.slope!r}",
            f"intercept = {report.intercept!r}",
            f"plot 'report.csv' skip 1 using {xcol}:5:6 with yerrorlines title 'measured', \\",
            "     exp(intercept) * x**slope with lines title sprintf('fit, slope %.3f', slope)",
            "",
        ]
    )


def _emit_convergence(cfg: StudyConfig, report: ConvergenceReport, xcol: int, xlabel: str) -> int:
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_text(report.csv_text())
    summary = report.summary_dict()
    summary["rows"] = [
        {
            "resolution": r.resolution,
            "delta": r.delta,
            "n_modes": r.n_modes,
            "m_paths": r.m_paths,
            "err2_mean": r.err2_mean,
            "err2_stderr": r.err2_stderr,
        }
        for r in report.rows
    ]
    summary["config"] = cfg.to_dict()
    summary["hypotheses"] = hypothesis_rows(cfg)
    _write_json(outdir / "summary.json", summary)
    (outdir / "plot.gp").write_text(_convergence_plot(report, xcol, xlabel))
    for row in report.rows:
        print(
            f"resolution {row.resolution:>4}  delta {row.delta:.6g}  "
            f"err2 {row.err2_mean:.6g} +- {row.err2_stderr:.3g}"
        )
    verdict = "pass" if report.passed else "FAIL"
    print(
        f"{report.study} study: slope {report.slope:.4f}  r2 {report.r_squared:.4f}  "
        f"nu {report.nu_theory:.5g}  -> {verdict}"
    )
    for name, ok in report.pass_flags.items():
        print(f"  [{'ok' if ok else 'FAIL'}] {name}")
    print(f"wrote {outdir / 'report.csv'}, {outdir / 'summary.json'}, {outdir / 'plot.gp'}")
    return EXIT_OK if report.passed else EXIT_ACCEPTANCE


def _cmd_temporal(cfg: StudyConfig, workers: int) -> int:
    st = cfg.study
    report = temporal_study(
        cfg.operator,
        cfg.drift,
        cfg.initial,
        cfg.lattice(),
        st["ladder"],
        st["reference_level"],
        st["n_modes"],
        st["m_paths"],
        cfg.rate,
        workers=workers,
    )
    return _emit_convergence(cfg, report, xcol=2, xlabel="step size")


def _cmd_spatial(cfg: StudyConfig, workers: int) -> int:
    st = cfg.study
    report = spatial_study(
        cfg.operator,
        cfg.drift,
        cfg.initial,
        cfg.lattice(),
        st["ladder"],
        st["reference_modes"],
        st["level"],
        st["m_paths"],
        cfg.rate,
        workers=workers,
    )
    return _emit_convergence(cfg, report, xcol=3, xlabel="retained modes")


def _cmd_increment(cfg: StudyConfig, workers: int) -> int:
    st = cfg.study
    report = increment_statistic(
        cfg.operator,
        cfg.drift,
        cfg.initial,
        cfg.lattice(),
        st["ladder"],
        st["n_modes"],
        st["m_paths"],
        sample_fractions=st["sample_fractions"],
        workers=workers,
        alpha=cfg.rate.alpha,
    )
    return _emit_convergence(cfg, report, xcol=2, xlabel="step size")


def _cmd_kolmogorov(cfg: StudyConfig) -> int:
    st = cfg.study
    suite = kolmogorov_suite(
        cfg.operator,
        cfg.drift,
        t=st["t"],
        dims=st["dims"],
        m_samples=st["m_samples"],
        decay_modes=st["decay_modes"],
        picard_dims=st["picard_dims"],
        lam_sweep=st["lam_sweep"],
        horizon=cfg.horizon,
        theta=st["theta"],
        seed=cfg.master_seed,
    )
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "report.csv").write_text(suite["decay_csv"])
    summary = {k: v for k, v in suite.items() if k != "decay_csv"}
    summary["config"] = cfg.to_dict()
    summary["hypotheses"] = hypothesis_rows(cfg)
    _write_json(outdir / "summary.json", summary)
    (outdir / "plot.gp").write_text(
        "\n".join(
            [
                "# plotting commands for a gnuplot-compatible tool",
                "set datafile separator ','",
                "set logscale y",
                "set xlabel 'mode index'",
                "set ylabel 'gradient estimate'",
                "plot 'report.csv' skip 1 using 1:2:3 with yerrorlines title 'estimated gradient size', \\",
                "     'report.csv' skip 1 using 1:($2/$4) with lines title 'decay bound'",
                "",
            ]
        )
    )
    for check in suite["checks"]:
        print(f"  [{'ok' if check['passed'] else 'FAIL'}] {check['name']}: {check['detail']}")
    print(f"wrote {outdir / 'report.csv'}, {outdir / 'summary.json'}, {outdir / 'plot.gp'}")
    return EXIT_OK if suite["passed"] else EXIT_ACCEPTANCE


def _cmd_validate(cfg: StudyConfig) -> int:
    trials = cfg.study["trials"]
    reports = [
        verify_mode_holder(cfg.drift, cfg.operator, trials=trials, rng_seed=cfg.master_seed),
        verify_time_holder(cfg.drift, cfg.operator, trials=trials, rng_seed=cfg.master_seed),
    ]
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    lines = ["name,passed,trials,max_ratio,constant"]
    for rep in reports:
        lines.append(f"{rep.name},{rep.passed},{rep.trials},{rep.max_ratio!r},{rep.constant!r}")
    (outdir / "report.csv").write_text("\n".join(lines) + "\n")
    _write_json(
        outdir / "summary.json",
        {
            "pass": all(r.passed for r in reports),
            "validators": [r.to_dict() for r in reports],
            "config": cfg.to_dict(),
            "hypotheses": hypothesis_rows(cfg),
        },
    )
    (outdir / "plot.gp").write_text("# nothing to plot for validator reports\n")
    for rep in reports:
        print(f"  [{'ok' if rep.passed else 'FAIL'}] {rep.name}: max ratio {rep.max_ratio:.6f}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_ACCEPTANCE


def _cmd_simulate(cfg: StudyConfig, n_paths: int) -> int:
    outdir = Path(cfg.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    scheme = SchemeConfig(
        cfg.operator, cfg.drift, cfg.initial, cfg.horizon, cfg.levels, cfg.n_modes
    )
    lattice = cfg.lattice()
    files = []
    for pid in range(n_paths):
        traj = simulate_path(scheme, lattice, pid)
        target = outdir / f"trajectory_{pid}.csv"
        write_trajectory_csv(traj, target)
        files.append(target.name)
    _write_json(
        outdir / "summary.json",
        {
            "paths": n_paths,
            "level": cfg.levels,
            "n_modes": cfg.n_modes,
            "files": files,
            "config": cfg.to_dict(),
            "hypotheses": hypothesis_rows(cfg),
        },
    )
    (outdir / "plot.gp").write_text(
        "\n".join(
            [
                "# plotting commands for a gnuplot-compatible tool",
                "set datafile separator ','",
                "set xlabel 't'",
                "set ylabel 'first mode'",
                "plot 'trajectory_0.csv' skip 1 using 1:2 with lines title 'mode 1'",
                "",
            ]
        )
    )
    print(f"wrote {n_paths} trajectories to {outdir}")
    return EXIT_OK


def _cmd_hypotheses(cfg: StudyConfig) -> int:
    rows = hypothesis_rows(cfg)
    width = max(len(r["name"]) for r in rows)
    all_hold = True
    for row in rows:
        if row["holds"] is True:
            verdict = "holds"
        elif row["holds"] is False:
            verdict = "fails"
        else:
            verdict = "undetermined"
        if row["holds"] is not True:
            all_hold = False
        print(f"{row['name']:<{width}}  {verdict:<12}  {row['value']}")
    return EXIT_OK if all_hold else EXIT_HYPOTHESIS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spdelab",
        description="Convergence and regularity studies for a spectral "
        "exponential-integrator scheme with rough bounded drifts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "simulate": "simulate paths at the lattice resolution and dump them as CSV",
        "temporal-study": "self-convergence in the step size",
        "spatial-study": "self-convergence in the mode count",
        "increment-study": "off-grid increment regularity",
        "kolmogorov-check": "semigroup, gradient, and Picard probes",
        "validate-drift": "stress the drift regularity certificates",
        "hypotheses": "print the standing-hypothesis table",
    }
    for name, help_text in commands.items():
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--config", required=True, help="path to the JSON study config")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed")
        sp.add_argument("--paths", type=int, default=None, help="override the Monte Carlo size")
        sp.add_argument("--out", default=None, help="override the output directory")
        sp.add_argument(
            "--workers", type=int, default=None, help="path-chunk workers (default: cpu count)"
        )
        sp.add_argument(
            "--deterministic",
            action="store_true",
            help="run everything in-process; results match any worker count bit for bit",
        )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        # simulate reads --paths as a path count, not a study-size override
        size_override = None if args.command == "simulate" else args.paths
        cfg = load_config(args.config, seed=args.seed, paths=size_override, out=args.out)
        wanted = _COMMAND_KINDS.get(args.command)
        if wanted is not None and cfg.study["kind"] != wanted:
            raise ConfigError(
                f"config describes a {cfg.study['kind']!r} study, not {wanted!r}"
            )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    workers = 1 if args.deterministic else (args.workers or os.cpu_count() or 1)
    try:
        if args.command == "hypotheses":
            return _cmd_hypotheses(cfg)
        if args.command == "simulate":
            enforce_hypotheses(cfg)
            return _cmd_simulate(cfg, args.paths or 1)
        enforce_hypotheses(cfg)
        if args.command == "temporal-study":
            return _cmd_temporal(cfg, workers)
        if args.command == "spatial-study":
            return _cmd_spatial(cfg, workers)
        if args.command == "increment-study":
            return _cmd_increment(cfg, workers)
        if args.command == "kolmogorov-check":
            return _cmd_kolmogorov(cfg)
        return _cmd_validate(cfg)
    except HypothesisViolation as exc:
        print(f"hypothesis violated [{exc.hypothesis}]: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    except (SimulationError, MemoryError, OSError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # a study must never die without a coded exit
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
