"""Command-line front end: ``sphere-energy <subcommand> [options]``.

Exit codes: 0 success, 1 usage error, 2 domain error (bad input or a report
failing its schema), 3 numerical failure (including sign violations found by
``verify-diffop``). Reports go to stdout as JSON unless ``--out`` is given.
"""
from __future__ import annotations

import argparse
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import jsonschema
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.analysis import diffop, spectral, witness
from src.config.settings import settings
from src.features.kernels import parse_kernel
from src.features.measures import (
    BUILTIN_NAMES,
    discrete_energy,
    potential_report,
    spectral_energy,
    support_pd_check,
)
from src.pipeline.minimize_reduce import MinimizeReducePipeline
from src.pipeline.moments import design_defect, discrete_minimizer_reduce_report
from src.pipeline.optimizer import OptimizerParams, local_min_probe, minimize_energy
from src.utils import metrics as metrics_lib
from src.utils.data_loader import load_config
from src.utils.errors import DomainError, NumericalError
from src.utils.logger import get_logger

logger = get_logger(__name__)

EXIT_OK, EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERICAL = 0, 1, 2, 3


class ExperimentSpec(BaseModel):
    """Everything a run depends on; two runs with equal specs produce equal reports."""

    model_config = ConfigDict(frozen=True, extra="ignore")

    subcommand: str
    kernel: Optional[str] = None
    d: Optional[int] = Field(default=None, ge=2)
    nmax: int = Field(default=settings.default_nmax, ge=0)
    config: Optional[str] = None
    out: Optional[Path] = None
    seed: int = 0
    starts: int = Field(default=settings.n_starts, ge=1)
    atoms: Optional[int] = Field(default=None, ge=1)
    tol: Optional[float] = Field(default=None, gt=0)
    weights: bool = False
    trace: Optional[Path] = None
    no_meta: bool = False
    scan: Optional[Tuple[float, float, float]] = None
    p: Optional[float] = None
    eps: Optional[float] = Field(default=None, gt=0)
    k: int = Field(default=1, ge=0)
    p_grid: Optional[List[float]] = None
    t_grid: Optional[List[float]] = None
    h: Optional[float] = Field(default=None, gt=0)
    grid: int = Field(default=settings.probe_grid_size, ge=1)
    csv: Optional[Path] = None
    jobs: int = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _common(p: argparse.ArgumentParser, *names: str):
    if "kernel" in names:
        p.add_argument("--kernel", required=True, help="pframe:P, poly:c0,c1,.., causal:TAU, acute, arcsin, table:PATH")
    if "d" in names:
        p.add_argument("--d", type=int, required=True, help="ambient dimension; the sphere is S^{d-1}")
    if "nmax" in names:
        p.add_argument("--nmax", type=int, default=settings.default_nmax)
    if "tol" in names:
        p.add_argument("--tol", type=float)
    p.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-meta", dest="no_meta", action="store_true", help="omit the timestamped meta block")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sphere-energy", description="Energy minimization of measures on spheres")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("expand", help="Gegenbauer coefficients of a kernel")
    _common(p, "kernel", "d", "nmax", "tol")

    p = sub.add_parser("classify", help="positive definiteness from coefficient signs")
    _common(p, "kernel", "d", "nmax", "tol")

    p = sub.add_parser("energy", help="energy of a configuration")
    _common(p, "kernel", "nmax")
    p.add_argument("--config", required=True)

    p = sub.add_parser("potential", help="potential on the support and on a probe grid")
    _common(p, "kernel")
    p.add_argument("--config", required=True)
    p.add_argument("--grid", type=int, default=settings.probe_grid_size)

    p = sub.add_parser("minimize", help="multi-start energy minimization")
    _common(p, "kernel", "d")
    p.add_argument("--atoms", type=int, required=True)
    p.add_argument("--starts", type=int, default=settings.n_starts)
    p.add_argument("--weights", action="store_true", help="also optimize the weights")
    p.add_argument("--trace", type=Path, help="directory for per-iteration CSV traces")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("reduce", help="reduce a configuration to a discrete minimizer within the support bound")
    _common(p, "kernel", "nmax", "tol")
    p.add_argument("--config", help="start from this configuration instead of running the optimizer")
    p.add_argument("--d", type=int)
    p.add_argument("--atoms", type=int)
    p.add_argument("--starts", type=int, default=settings.n_starts)
    p.add_argument("--weights", action="store_true")

    p = sub.add_parser("witness", help="finite point set refuting positive definiteness of |t|^p")
    _common(p)
    p.add_argument("--p", type=float)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--eps", type=float)
    p.add_argument("--scan", type=float, nargs=3, metavar=("P_MIN", "P_MAX", "STEP"))

    p = sub.add_parser("verify-diffop", help="sign scan of the iterated Laplace-Beltrami operator")
    _common(p, "d", "tol")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--p-grid", dest="p_grid", type=float, nargs="+", required=True)
    p.add_argument("--t-grid", dest="t_grid", type=float, nargs="+", default=[0.1 * i for i in range(1, 11)])
    p.add_argument("--h", type=float)
    p.add_argument("--csv", type=Path, help="write the verdict matrix here")

    p = sub.add_parser("designs", help="design defects of a configuration, or the builtin list")
    _common(p, "nmax")
    p.add_argument("--config")
    return parser


def _meta(spec: ExperimentSpec, argv: Sequence[str]) -> Dict[str, Any]:
    return {
        "version": settings.version,
        "subcommand": spec.subcommand,
        "argv": list(argv),
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }


def _expand(spec: ExperimentSpec) -> Dict[str, Any]:
    kernel = parse_kernel(spec.kernel)
    exp = spectral.expand_kernel(kernel, spec.d, spec.nmax, tol=spec.tol)
    report = spectral.expansion_to_dict(exp)
    report["classification"] = spectral.classify_pd(exp).to_dict()
    report["regime"] = spectral.minimizer_regime(exp)
    return report


def _classify(spec: ExperimentSpec) -> Dict[str, Any]:
    kernel = parse_kernel(spec.kernel)
    exp = spectral.expand_kernel(kernel, spec.d, spec.nmax, tol=spec.tol)
    cls = spectral.classify_pd(exp)
    report = {"kernel": kernel.literal, "d": spec.d, "n_max": spec.nmax}
    report.update(cls.to_dict())
    report["negative_coefficients"] = {str(n): float(exp.coeffs[n]) for n in cls.n_minus}
    report["regime"] = spectral.minimizer_regime(exp)
    report["support_bound"] = spectral.support_bound(exp)
    return report


def _energy(spec: ExperimentSpec) -> Dict[str, Any]:
    kernel = parse_kernel(spec.kernel)
    config = load_config(spec.config, spec.d)
    exp = spectral.expand_kernel(kernel, config.d, spec.nmax)
    return {
        "kernel": kernel.literal,
        "d": config.d,
        "n_atoms": config.n_atoms,
        "energy": discrete_energy(config, kernel),
        "spectral_energy": spectral_energy(config, exp),
        "sigma_energy": spectral.sigma_energy(kernel, config.d),
    }


def _potential(spec: ExperimentSpec) -> Dict[str, Any]:
    kernel = parse_kernel(spec.kernel)
    config = load_config(spec.config, spec.d)
    report = potential_report(config, kernel, spec.grid, spec.seed).to_dict()
    report.update({"kernel": kernel.literal, "d": config.d, "support_min_eigenvalue": support_pd_check(config, kernel)})
    return report


def _optimizer_params(spec: ExperimentSpec) -> OptimizerParams:
    return OptimizerParams(
        n_atoms=spec.atoms,
        n_starts=spec.starts,
        optimize_weights=spec.weights,
        seed=spec.seed,
        trace=spec.trace is not None,
        n_jobs=spec.jobs,
    )


def _minimize(spec: ExperimentSpec) -> Dict[str, Any]:
    kernel = parse_kernel(spec.kernel)
    report = minimize_energy(kernel, spec.d, _optimizer_params(spec))
    probe = local_min_probe(report.best_config, kernel, seed=spec.seed)
    if spec.trace is not None:
        for start, frame in report.traces.items():
            metrics_lib.save_table(frame, spec.trace / f"start{start}.csv")
    out = {"kernel": kernel.literal, "d": spec.d}
    out.update(report.to_dict())
    out["local_min_probe"] = probe.to_dict()
    return out


def _reduce(spec: ExperimentSpec) -> Dict[str, Any]:
    kernel = parse_kernel(spec.kernel)
    if spec.config is None:
        if spec.d is None or spec.atoms is None:
            raise DomainError("reduce without --config needs --d and --atoms to run the optimizer first")
        pipeline = MinimizeReducePipeline(kernel, spec.d, _optimizer_params(spec), n_max=spec.nmax, tol=spec.tol)
        config, summary = pipeline.run()
        report = pipeline.reduction_report.to_dict()
        report.update({"kernel": kernel.literal, "d": spec.d, "config": config.to_dict(), "energy": summary["energy"]})
        return report
    config = load_config(spec.config, spec.d)
    exp = spectral.expand_kernel(kernel, config.d, spec.nmax)
    reduced, reduction = discrete_minimizer_reduce_report(config, exp, spec.tol, seed=spec.seed)
    report = reduction.to_dict()
    report.update(
        {"kernel": kernel.literal, "d": config.d, "config": reduced.to_dict(), "energy": discrete_energy(reduced, kernel)}
    )
    return report


def _witness(spec: ExperimentSpec) -> Dict[str, Any]:
    if spec.p is None:
        raise DomainError("witness needs --p (or --scan)")
    return witness.non_pd_witness(spec.p, spec.d or 3, eps=spec.eps).to_dict()


def _verify_diffop(spec: ExperimentSpec) -> Dict[str, Any]:
    report = diffop.dk_sign_scan(spec.k, spec.d, spec.p_grid, spec.t_grid, tol=spec.tol, h=spec.h)
    if spec.csv is not None:
        metrics_lib.save_table(report.to_frame(), spec.csv, index=True)
    out = report.to_dict()
    out["passed"] = report.passed
    return out


def _designs(spec: ExperimentSpec) -> Dict[str, Any]:
    if spec.config is None:
        return {"builtins": list(BUILTIN_NAMES)}
    config = load_config(spec.config, spec.d)
    degrees = list(range(1, spec.nmax + 1))
    return {
        "d": config.d,
        "n_atoms": config.n_atoms,
        "design_defect": {str(n): v for n, v in design_defect(config, degrees).items()},
    }


_HANDLERS = {
    "expand": _expand,
    "classify": _classify,
    "energy": _energy,
    "potential": _potential,
    "minimize": _minimize,
    "reduce": _reduce,
    "witness": _witness,
    "verify-diffop": _verify_diffop,
    "designs": _designs,
}


def _emit(spec: ExperimentSpec, report: Dict[str, Any], argv: Sequence[str]):
    if not spec.no_meta:
        report["meta"] = _meta(spec, argv)
    payload = metrics_lib.to_serializable(report)
    if settings.validate_output:
        metrics_lib.validate_report(spec.subcommand, payload)
    metrics_lib.dump_report(payload, spec.out)


def _emit_scan(spec: ExperimentSpec):
    frame = witness.witness_scan(*spec.scan, spec.d or 3)
    if spec.out is not None:
        metrics_lib.save_table(frame, spec.out)
    else:
        frame.to_csv(sys.stdout, index=False, float_format="%.17g")


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        spec = ExperimentSpec(**vars(args))
        if spec.subcommand == "witness" and spec.scan is not None:
            _emit_scan(spec)
            return EXIT_OK
        report = _HANDLERS[spec.subcommand](spec)
        _emit(spec, report, argv)
        if spec.subcommand == "verify-diffop" and not report["passed"]:
            sys.stderr.write(f"sign violations: {report['violations']}\n")
            return EXIT_NUMERICAL
    except (DomainError, ValidationError, jsonschema.ValidationError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DOMAIN
    except NumericalError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERICAL
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
