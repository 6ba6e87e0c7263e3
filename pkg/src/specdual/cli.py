"""Batch front-end: estimate / verify / divergence / correlogram subcommands.

Configs are strict JSON (unknown keys are fatal); outputs are JSON plus a
plot-ready CSV of the spectrum.  All numeric output is rounded to 12
significant digits so identical inputs produce byte-identical files.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import divergence as dv
from .dualsolver import ProblemSpec, SolverOptions, solve
from .errors import ConfigError, DataError, SpecDualError, NegativeClampWarning
from .estimation import (
    TimeSeries,
    check_positive,
    correlogram,
    demean,
    sample_covariances,
    sigma_hat,
)
from .filterbank import PriorModel, StateSpaceFilter, bank_of_delays, pole_filter, prior_factor
from .divergence import is_dist
from .freqgrid import DEFAULT_GRID_POINTS, FrequencyGrid, MatrixFunction, SpectralDensity, scalar_density
from .interpret import (
    cepstral_factor,
    dual_constant_check,
    feasible_probes,
    pem_criterion,
)

FORMAT_VERSION = 1
SPREAD_TOL_FACTOR = 1e-6
PEM_IDENTITY_TOL = 1e-6
ANALYTIC_CONST_TOL = 1e-6


def _round12(x: float) -> float:
    return float(f"{float(x):.12g}")


def _round_nested(obj):
    if isinstance(obj, float):
        return _round12(obj)
    if isinstance(obj, (list, tuple)):
        return [_round_nested(v) for v in obj]
    if isinstance(obj, dict):
        return {k: _round_nested(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return _round_nested(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return _round12(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _dump_json(path: Path, payload: dict):
    path.write_text(json.dumps(_round_nested(payload), sort_keys=True, indent=1) + "\n")


def _complex_matrix_list(samples: np.ndarray):
    """(nf, p, q) complex -> nested [re, im] pairs, row-major."""
    out = []
    for M in samples:
        out.append([[ [_round12(v.real), _round12(v.imag)] for v in row] for row in M])
    return out


def _density_to_json(density) -> dict:
    return {
        "format_version": FORMAT_VERSION,
        "grid_points": density.grid.nf,
        "channels": density.samples.shape[1],
        "samples": _complex_matrix_list(density.samples),
    }


def _density_from_json(payload: dict, require_pd: bool = True) -> SpectralDensity:
    try:
        grid = FrequencyGrid(int(payload["grid_points"]))
        raw = np.asarray(payload["samples"], dtype=float)
        samples = raw[..., 0] + 1j * raw[..., 1]
    except (KeyError, ValueError, IndexError) as exc:
        raise ConfigError(f"malformed spectrum JSON: {exc}") from exc
    return SpectralDensity(grid, samples, require_pd=require_pd)


def _spectrum_csv(density) -> str:
    p = density.samples.shape[1]
    q = density.samples.shape[2]
    cols = ["theta"]
    for i in range(p):
        for j in range(q):
            cols += [f"re_{i}{j}", f"im_{i}{j}"]
    lines = [",".join(cols)]
    for theta, M in zip(density.grid.thetas, density.samples):
        row = [f"{theta:.12g}"]
        for i in range(p):
            for j in range(q):
                row += [f"{M[i, j].real:.12g}", f"{M[i, j].imag:.12g}"]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _phi_hash(density) -> str:
    return hashlib.sha256(_spectrum_csv(density).encode()).hexdigest()


# ---------------------------------------------------------------- config


def _reject_unknown(obj: dict, allowed, where: str):
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")


def _parse_filter(obj) -> StateSpaceFilter:
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError("filter spec must be an object with a 'type' key")
    kind = obj["type"]
    if kind == "delays":
        _reject_unknown(obj, {"type", "n"}, "filter")
        return bank_of_delays(int(obj["n"]))
    if kind == "poles":
        _reject_unknown(obj, {"type", "poles", "m"}, "filter")
        poles = [complex(re, im) for re, im in obj["poles"]]
        return pole_filter(poles, m=int(obj.get("m", 1)))
    if kind == "state_space":
        _reject_unknown(obj, {"type", "A", "B"}, "filter")
        return StateSpaceFilter(np.asarray(obj["A"], float), np.asarray(obj["B"], float))
    raise ConfigError(f"unknown filter type {kind!r}")


def _parse_prior(obj, m: int) -> PriorModel:
    if obj is None:
        return PriorModel.identity(m)
    if not isinstance(obj, dict) or "type" not in obj:
        raise ConfigError("prior spec must be an object with a 'type' key")
    kind = obj["type"]
    if kind == "identity":
        _reject_unknown(obj, {"type"}, "prior")
        return PriorModel.identity(m)
    if kind == "shaping_filter":
        _reject_unknown(obj, {"type", "A", "B", "C", "D"}, "prior")
        return PriorModel.shaping(obj["A"], obj["B"], obj["C"], obj["D"])
    raise ConfigError(f"unknown prior type {kind!r}")


@dataclass(eq=False)
class RunConfig:
    """Validated CLI configuration; `raw` keeps the original JSON for the echo."""

    raw: dict
    filter: StateSpaceFilter
    prior: PriorModel
    family: str
    nu: int
    window: str
    max_lag: int | None
    grid_points: int
    options: SolverOptions
    seed: int
    output: str | None
    sigma_override: np.ndarray | None = None

    @classmethod
    def parse(cls, raw: dict) -> "RunConfig":
        allowed = {
            "filter",
            "prior",
            "family",
            "nu",
            "window",
            "grid_points",
            "solver",
            "seed",
            "output",
            "sigma_override",
        }
        _reject_unknown(raw, allowed, "config")
        for key in ("filter", "family", "nu"):
            if key not in raw:
                raise ConfigError(f"config is missing required key {key!r}")
        flt = _parse_filter(raw["filter"])
        prior = _parse_prior(raw.get("prior"), flt.m)
        family = raw["family"]
        if family not in ("alpha", "beta", "tau"):
            raise ConfigError(f"family must be alpha/beta/tau, got {family!r}")
        window_obj = raw.get("window") or {}
        _reject_unknown(window_obj, {"kind", "max_lag"}, "window")
        window = window_obj.get("kind", "bartlett")
        if window not in ("bartlett", "rectangular"):
            raise ConfigError(f"window kind must be bartlett or rectangular, got {window!r}")
        max_lag = window_obj.get("max_lag")
        solver_obj = raw.get("solver") or {}
        _reject_unknown(
            solver_obj,
            {"grad_tol", "moment_tol", "max_iters", "armijo_c", "backtrack_ratio"},
            "solver",
        )
        try:
            options = SolverOptions(**solver_obj)
        except SpecDualError as exc:
            raise ConfigError(str(exc)) from exc
        sigma_override = raw.get("sigma_override")
        if sigma_override is not None:
            sigma_override = np.asarray(sigma_override, dtype=float)
        return cls(
            raw=raw,
            filter=flt,
            prior=prior,
            family=family,
            nu=int(raw["nu"]),
            window=window,
            max_lag=None if max_lag is None else int(max_lag),
            grid_points=int(raw.get("grid_points", DEFAULT_GRID_POINTS)),
            options=options,
            seed=int(raw.get("seed", 42)),
            output=raw.get("output"),
            sigma_override=sigma_override,
        )


def _load_config(path: str) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return RunConfig.parse(raw)


def _load_csv(path: str) -> TimeSeries:
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read data file {path}: {exc}") from exc
    rows = []
    start = 0
    if lines:
        try:
            [float(v) for v in lines[0].split(",")]
        except ValueError:
            start = 1  # header row
    width = None
    for idx, line in enumerate(lines[start:], start=start + 1):
        if not line.strip():
            continue
        try:
            row = [float(v) for v in line.split(",")]
        except ValueError as exc:
            raise DataError(f"malformed CSV row at line {idx}: {exc}") from exc
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataError(f"malformed CSV row at line {idx}: expected {width} columns")
        rows.append(row)
    if not rows:
        raise DataError("data file holds no numeric rows")
    return TimeSeries(np.asarray(rows))


# ---------------------------------------------------------------- pipeline


def _build_problem(cfg: RunConfig, data: TimeSeries, grid_points: int | None):
    nf = grid_points or cfg.grid_points
    grid = FrequencyGrid(nf)
    y = demean(data)
    M = cfg.max_lag if cfg.max_lag is not None else int(np.sqrt(y.N))
    lags = sample_covariances(y, M)
    omega = correlogram(lags, cfg.window, grid)
    positivity = check_positive(omega)
    sig = sigma_hat(cfg.filter, omega)
    if cfg.sigma_override is not None:
        sig = type(sig)(cfg.sigma_override, dict(sig.provenance))
    spec = ProblemSpec(
        family=cfg.family,
        nu=cfg.nu,
        filter=cfg.filter,
        prior=cfg.prior,
        sigma=sig,
        grid=grid,
        options=cfg.options,
    )
    return spec, omega, positivity


def cmd_estimate(args) -> int:
    cfg = _load_config(args.config)
    data = _load_csv(args.data)
    outdir = Path(args.output or cfg.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NegativeClampWarning)
        spec, omega, positivity = _build_problem(cfg, data, args.grid_points)
        sol = solve(spec)
    elapsed = time.perf_counter() - start
    (outdir / "spectrum.csv").write_text(_spectrum_csv(sol.phi_star))
    _dump_json(
        outdir / "spectrum.json",
        {
            "format_version": FORMAT_VERSION,
            "family": spec.family,
            "nu": spec.nu,
            "grid_points": spec.grid.nf,
            "channels": sol.phi_star.samples.shape[1],
            "samples": _complex_matrix_list(sol.phi_star.samples),
            "omega": _complex_matrix_list(omega.samples),
            "theta_hat": sol.theta_hat.theta.tolist(),
            "diagnostics": {
                "dual_value": sol.dual_value,
                "moment_residual": sol.moment_residual,
                "grad_norm": sol.grad_norm,
                "iterations": sol.iterations,
                "converged": sol.converged,
            },
        },
    )
    report = {
        "format_version": FORMAT_VERSION,
        "config": cfg.raw,
        "sigma_hat": spec.sigma.sigma.tolist(),
        "theta_hat": sol.theta_hat.theta.tolist(),
        "dual_value": sol.dual_value,
        "moment_residual": sol.moment_residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
        "correlogram_min_eig": positivity["min_eig"],
        "phi_hash": _phi_hash(sol.phi_star),
        "warnings": sorted(str(w.message) for w in caught),
    }
    _dump_json(outdir / "report.json", {"report": report, "timing_seconds": elapsed})
    return 0 if sol.converged else 2


def cmd_verify(args) -> int:
    cfg = _load_config(args.config)
    data = _load_csv(args.data)
    outdir = Path(args.output or cfg.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    seed = args.seed if args.seed is not None else cfg.seed
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NegativeClampWarning)
        spec, omega, _ = _build_problem(cfg, data, args.grid_points)
        probes = feasible_probes(spec, 5, seed=seed)
        report = dual_constant_check(spec, omega, probes)
        sol = solve(spec)
        dual_value_at_zero = report.probes[0][1]
        spread_tol = SPREAD_TOL_FACTOR * (1.0 + abs(dual_value_at_zero))
        passed = report.constant_spread <= spread_tol
        if report.analytic_mismatch is not None:
            passed = passed and report.analytic_mismatch <= ANALYTIC_CONST_TOL
        pem_section = None
        if spec.filter.m == 1 and spec.nu == 1:
            L = cepstral_factor(sol.phi_star)
            lam = scalar_density(
                spec.grid, omega.samples[:, 0, 0].real / np.abs(L.samples) ** 2
            )
            white = scalar_density(spec.grid, np.ones(spec.grid.nf))
            direct = is_dist(omega, sol.phi_star)
            factored = is_dist(lam, white)
            identity_residual = abs(direct - factored)
            v_hat = pem_criterion(sol.theta_hat, spec, omega)
            rng = np.random.default_rng(seed)
            local_min = 0
            for _ in range(10):
                raw = rng.standard_normal(sol.theta_hat.theta.shape)
                pert = 0.5 * (raw + raw.T)
                pert *= 1e-2 / np.linalg.norm(pert)
                cand = sol.theta_hat.theta + pert
                from .dualsolver import feasible as _feasible

                if not _feasible(cand, spec).feasible:
                    continue
                if pem_criterion(cand, spec, omega) >= v_hat - 1e-12:
                    local_min += 1
            pem_section = {
                "is_identity_residual": identity_residual,
                "pem_value": v_hat,
                "local_min_confirmed": local_min,
                "perturbations": 10,
            }
            passed = passed and identity_residual <= PEM_IDENTITY_TOL
    payload = {
        "format_version": FORMAT_VERSION,
        "family": report.family,
        "nu": report.nu,
        "seed": seed,
        "probe_count": len(report.probes),
        "dual_values": [r[1] for r in report.probes],
        "weighted_objectives": [r[2] for r in report.probes],
        "differences": [r[3] for r in report.probes],
        "constant_spread": report.constant_spread,
        "spread_tolerance": spread_tol,
        "analytic_constant": report.analytic_constant,
        "analytic_mismatch": report.analytic_mismatch,
        "pem": pem_section,
        "phi_hash": _phi_hash(sol.phi_star),
        "solver": {
            "converged": sol.converged,
            "iterations": sol.iterations,
            "moment_residual": sol.moment_residual,
        },
        "warnings": sorted(str(w.message) for w in caught),
        "passed": bool(passed),
    }
    _dump_json(outdir / "verify.json", payload)
    return 0 if passed else 2


def cmd_divergence(args) -> int:
    a = _density_from_json(json.loads(Path(args.spectrum_a).read_text()))
    b = _density_from_json(json.loads(Path(args.spectrum_b).read_text()))
    if a.grid != b.grid or a.samples.shape != b.samples.shape:
        raise DataError("spectra have mismatched grids or channel counts")
    weight = None
    weight_factor = None
    if args.weight:
        weight = _density_from_json(json.loads(Path(args.weight).read_text()))
        if weight.grid != a.grid:
            raise DataError("weight spectrum has a mismatched grid")
    family = args.family
    if family == "tau":
        # scalar factor of the reference density stands in for W_Psi
        if b.samples.shape[1] != 1:
            raise DataError("tau divergence via the CLI is scalar only")
        L = cepstral_factor(b)
        weight_factor = MatrixFunction(b.grid, L.samples.reshape(-1, 1, 1))
    if family in ("b1_weighted", "kl1_weighted"):
        if weight is None:
            raise DataError(f"family {family} needs --weight")
        if weight.samples.shape[1] != 1:
            raise DataError("weighted type-1 families via the CLI are scalar only")
        L = cepstral_factor(weight)
        weight_factor = MatrixFunction(weight.grid, L.samples.reshape(-1, 1, 1))
    spec = dv.DivergenceSpec(
        family=family,
        parameter=args.parameter,
        weight=weight,
        weight_factor=weight_factor,
    )
    value = dv.evaluate_divergence(spec, a, b)
    print(f"{value:.12g}")
    return 0


def cmd_correlogram(args) -> int:
    data = _load_csv(args.data)
    if args.config:
        cfg = _load_config(args.config)
        window, max_lag, nf = cfg.window, cfg.max_lag, cfg.grid_points
    else:
        window, max_lag, nf = "bartlett", None, DEFAULT_GRID_POINTS
    if args.grid_points:
        nf = args.grid_points
    grid = FrequencyGrid(nf)
    y = demean(data)
    M = max_lag if max_lag is not None else int(np.sqrt(y.N))
    omega = correlogram(sample_covariances(y, M), window, grid)
    outdir = Path(args.output or ".")
    outdir.mkdir(parents=True, exist_ok=True)
    payload = _density_to_json(omega)
    payload["window"] = window
    payload["max_lag"] = M
    _dump_json(outdir / "correlogram.json", payload)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specdual",
        description="moment-constrained spectral estimation via dual problems",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    est = sub.add_parser("estimate", help="estimate a spectrum from a CSV record")
    est.add_argument("data")
    est.add_argument("--config", required=True)
    est.add_argument("--output", default=None)
    est.add_argument("--grid-points", type=int, default=None, dest="grid_points")
    est.add_argument("--seed", type=int, default=None)
    est.set_defaults(func=cmd_estimate)

    ver = sub.add_parser("verify", help="certify the dual interpretation numerically")
    ver.add_argument("data")
    ver.add_argument("--config", required=True)
    ver.add_argument("--output", default=None)
    ver.add_argument("--grid-points", type=int, default=None, dest="grid_points")
    ver.add_argument("--seed", type=int, default=None)
    ver.set_defaults(func=cmd_verify)

    div = sub.add_parser("divergence", help="divergence between two stored spectra")
    div.add_argument("spectrum_a")
    div.add_argument("spectrum_b")
    div.add_argument("--family", required=True, choices=dv.FAMILIES)
    div.add_argument("--parameter", type=float, default=None)
    div.add_argument("--weight", default=None)
    div.set_defaults(func=cmd_divergence)

    cor = sub.add_parser("correlogram", help="dump the windowed correlogram")
    cor.add_argument("data")
    cor.add_argument("--config", default=None)
    cor.add_argument("--output", default=None)
    cor.add_argument("--grid-points", type=int, default=None, dest="grid_points")
    cor.set_defaults(func=cmd_correlogram)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SpecDualError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
