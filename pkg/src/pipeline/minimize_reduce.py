"""MinimizeReducePipeline: multi-start minimization followed by support reduction.

Usage:
    pipeline = MinimizeReducePipeline(kernel, d, params)
    config, report = pipeline.run()
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from src.analysis.spectral import GegenbauerExpansion, classify_pd, expand_kernel, support_bound
from src.config.settings import settings
from src.features.kernels import Kernel
from src.features.measures import PotentialReport, SphericalConfig, discrete_energy, potential_report
from src.pipeline.moments import ReductionReport, discrete_minimizer_reduce_report
from src.pipeline.optimizer import OptimizerParams, OptimizerReport, minimize_energy
from src.utils import metrics as metrics_lib
from src.utils.errors import NumericalError
from src.utils.logger import get_logger

logger = get_logger(__name__)


class MinimizeReducePipeline:
    """Minimize, reduce to a discrete minimizer within the support bound, then check the potential."""

    def __init__(
        self,
        kernel: Kernel,
        d: int,
        params: OptimizerParams,
        n_max: Optional[int] = None,
        tol: Optional[float] = None,
        out_dir: Optional[Path] = None,
    ):
        self.kernel = kernel
        self.d = d
        self.params = params
        self.n_max = settings.default_nmax if n_max is None else n_max
        self.tol = settings.moment_tol if tol is None else tol
        self.out_dir = Path(out_dir) if out_dir is not None else None
        self.expansion: Optional[GegenbauerExpansion] = None
        self.optimizer_report: Optional[OptimizerReport] = None
        self.reduction_report: Optional[ReductionReport] = None
        self.potential: Optional[PotentialReport] = None
        self.config: Optional[SphericalConfig] = None

    def expand(self) -> GegenbauerExpansion:
        self.expansion = expand_kernel(self.kernel, self.d, self.n_max)
        cls = classify_pd(self.expansion)
        logger.info("N_+ = %s, N_- = %s, support bound %d", cls.n_plus, cls.n_minus, support_bound(self.expansion))
        return self.expansion

    def minimize(self) -> OptimizerReport:
        self.optimizer_report = minimize_energy(self.kernel, self.d, self.params)
        self.config = self.optimizer_report.best_config
        return self.optimizer_report

    def reduce(self) -> ReductionReport:
        self.config, self.reduction_report = discrete_minimizer_reduce_report(
            self.config, self.expansion, self.tol, seed=self.params.seed
        )
        report = self.reduction_report
        if report.final_support > report.support_bound:
            raise NumericalError(f"reduced support {report.final_support} exceeds the bound {report.support_bound}")
        if report.energy_after > report.energy_before + 10.0 * self.tol:
            raise NumericalError(
                f"reduction raised the energy from {report.energy_before!r} to {report.energy_after!r}"
            )
        return report

    def diagnose(self) -> PotentialReport:
        self.potential = potential_report(self.config, self.kernel, seed=self.params.seed)
        return self.potential

    def summary(self) -> Dict[str, Any]:
        return {
            "kernel": self.kernel.literal,
            "d": self.d,
            "energy": discrete_energy(self.config, self.kernel),
            "config": self.config.to_dict(),
            "optimizer": self.optimizer_report.to_dict(),
            "reduction": self.reduction_report.to_dict(),
            "potential": self.potential.to_dict(),
        }

    def save_outputs(self):
        if self.out_dir is None:
            return
        metrics_lib.dump_report(self.summary(), self.out_dir / "minimize_reduce.json")
        for start, trace in self.optimizer_report.traces.items():
            metrics_lib.save_table(trace, self.out_dir / f"trace_start{start}.csv")

    def run(self) -> Tuple[SphericalConfig, Dict[str, Any]]:
        self.expand()
        self.minimize()
        self.reduce()
        self.diagnose()
        self.save_outputs()
        return self.config, self.summary()


def pipeline_minimize_reduce(
    kernel: Kernel, d: int, params: OptimizerParams, n_max: Optional[int] = None, tol: Optional[float] = None
) -> Tuple[SphericalConfig, Dict[str, Any]]:
    return MinimizeReducePipeline(kernel, d, params, n_max=n_max, tol=tol).run()
