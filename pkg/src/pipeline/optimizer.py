"""
Multi-start first-order minimization of discrete energies on S^{d-1}.

Positions move along the negative tangential potential gradient and are
retracted by normalization; weights (optionally) take projected gradient steps
on the probability simplex. Both steps use an Armijo backtracking line search,
so accepted steps never increase the energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field

from src.config.settings import settings
from src.features.kernels import Kernel
from src.features.measures import (
    SphericalConfig,
    atom_potentials,
    discrete_energy,
    merge_atoms,
    pair_energy,
    potential,
    random_points,
)
from src.utils.errors import DomainError, NumericalError
from src.utils.logger import get_logger
from src.utils.seed import make_rng

logger = get_logger(__name__)

_MIN_STEP = 1e-16
_KINK_BAND = 1e-8


class OptimizerParams(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    n_atoms: int = Field(ge=1)
    n_starts: int = Field(default=settings.n_starts, ge=1)
    max_iters: int = Field(default=settings.max_iters, ge=1)
    initial_step: float = Field(default=settings.initial_step, gt=0)
    max_step: float = Field(default=settings.max_step, gt=0)
    backtrack: float = Field(default=settings.backtrack, gt=0, lt=1)
    armijo: float = Field(default=settings.armijo, gt=0, lt=1)
    grad_tol: float = Field(default=settings.grad_tol, gt=0)
    merge_radius: float = Field(default=settings.merge_radius, ge=0)
    optimize_weights: bool = False
    polish: bool = True
    trace: bool = False
    seed: int = 0
    n_jobs: int = 1


@dataclass
class StartResult:
    start: int
    energy: float
    config: SphericalConfig
    iterations: int
    grad_norm: float
    merged_atoms: int
    trace: Optional[pd.DataFrame] = None


@dataclass
class OptimizerReport:
    best_energy: float
    best_config: SphericalConfig
    start_energies: List[Optional[float]]
    iterations: List[int]
    grad_norms: List[Optional[float]]
    merged_atom_count: int
    best_start: int
    failed_starts: List[int] = field(default_factory=list)
    traces: Dict[int, pd.DataFrame] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "best_energy": self.best_energy,
            "best_config": self.best_config.to_dict(),
            "best_start": self.best_start,
            "start_energies": list(self.start_energies),
            "iterations": list(self.iterations),
            "grad_norms": list(self.grad_norms),
            "merged_atom_count": self.merged_atom_count,
            "failed_starts": list(self.failed_starts),
        }


def _potential_gradient(points: np.ndarray, weights: np.ndarray, kernel: Kernel) -> np.ndarray:
    """Tangential gradient of F_mu at each atom: 2 sum_j w_j f'(<x_i, x_j>) x_j, projected."""
    fp = np.asarray(kernel.derivative(np.clip(points @ points.T, -1.0, 1.0)), dtype=float)
    np.fill_diagonal(fp, 0.0)
    raw = 2.0 * (fp * weights[None, :]) @ points
    return raw - np.sum(raw * points, axis=1, keepdims=True) * points


def energy_gradient(config: SphericalConfig, kernel: Kernel) -> Tuple[np.ndarray, np.ndarray]:
    """(position gradients, weight gradients) of the discrete energy."""
    pg = _potential_gradient(config.points, config.weights, kernel)
    return config.weights[:, None] * pg, 2.0 * atom_potentials(config, kernel)


def project_simplex(v) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1} (sort-based)."""
    v = np.asarray(v, dtype=float)
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    cond = u - css / ind > 0
    rho = ind[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(v - theta, 0.0)


def _normalize(points: np.ndarray) -> np.ndarray:
    return points / np.linalg.norm(points, axis=1, keepdims=True)


def _kinked(points: np.ndarray, kernel: Kernel) -> bool:
    if not kernel.kink_at_zero or points.shape[0] < 2:
        return False
    g = np.abs(points @ points.T)
    np.fill_diagonal(g, 1.0)
    return bool(np.any(g < _KINK_BAND))


def _descend(
    kernel: Kernel, points: np.ndarray, weights: np.ndarray, params: OptimizerParams
) -> Tuple[np.ndarray, np.ndarray, int, float, List[Tuple[int, float, float, float]]]:
    energy = pair_energy(points, weights, kernel)
    step = wstep = params.initial_step
    rows: List[Tuple[int, float, float, float]] = []
    grad_norm = math.inf
    iteration = 0
    for iteration in range(1, params.max_iters + 1):
        pg = _potential_gradient(points, weights, kernel)
        mapping = np.zeros(0)
        if params.optimize_weights:
            wgrad = 2.0 * np.asarray(kernel(np.clip(points @ points.T, -1.0, 1.0)), dtype=float) @ weights
            mapping = weights - project_simplex(weights - wgrad)
        grad_norm = math.sqrt(float(np.sum((weights[:, None] * pg) ** 2) + mapping @ mapping))
        if not (math.isfinite(energy) and math.isfinite(grad_norm)):
            raise NumericalError(f"non-finite energy or gradient at iteration {iteration}")
        if grad_norm <= params.grad_tol:
            break

        moved = False
        decrease = float(np.sum(weights * np.sum(pg * pg, axis=1)))
        t = min(2.0 * step, params.max_step)
        if _kinked(points, kernel):
            t /= 10.0
        while decrease > 0 and t >= _MIN_STEP:
            candidate = _normalize(points - t * pg)
            e_new = pair_energy(candidate, weights, kernel)
            if e_new <= energy - params.armijo * t * decrease:
                points, energy, step, moved = candidate, e_new, t, True
                break
            t *= params.backtrack

        if params.optimize_weights:
            wgrad = 2.0 * np.asarray(kernel(np.clip(points @ points.T, -1.0, 1.0)), dtype=float) @ weights
            s = min(2.0 * wstep, params.max_step)
            while s >= _MIN_STEP:
                candidate_w = project_simplex(weights - s * wgrad)
                slope = float(wgrad @ (candidate_w - weights))
                if slope >= 0:
                    break
                e_new = pair_energy(points, candidate_w, kernel)
                if e_new <= energy + params.armijo * slope:
                    weights, energy, wstep, moved = candidate_w, e_new, s, True
                    break
                s *= params.backtrack

        if params.trace:
            rows.append((iteration, energy, grad_norm, step))
        if not moved:
            logger.debug("line search made no progress at iteration %d (grad %.3e)", iteration, grad_norm)
            break
    return points, weights, iteration, grad_norm, rows


def merge_clusters(config: SphericalConfig, radius: float, kernel: Optional[Kernel] = None) -> SphericalConfig:
    """Merge atoms within geodesic distance ``radius`` into their weighted mean direction.

    Atoms whose merged weight is at most ``settings.weight_floor`` times the
    largest weight are dropped and the rest renormalized.
    """
    if radius < 0:
        raise DomainError(f"merge radius must be >= 0, got {radius}")
    if radius == 0:
        return config
    chord = 2.0 * math.sin(min(radius, math.pi) / 2.0)
    points, weights = merge_atoms(config.points, config.weights, chord)
    keep = weights > settings.weight_floor * weights.max()
    points, weights = points[keep], weights[keep]
    if points.shape[0] == config.n_atoms:
        return config
    merged = SphericalConfig.from_points(points, weights)
    if kernel is not None:
        logger.debug(
            "merged %d -> %d atoms, energy change %.3e",
            config.n_atoms,
            merged.n_atoms,
            discrete_energy(merged, kernel) - discrete_energy(config, kernel),
        )
    return merged


def _run_start(kernel: Kernel, d: int, params: OptimizerParams, start: int) -> Optional[StartResult]:
    rng = make_rng(params.seed, start)
    points = random_points(params.n_atoms, d, rng)
    weights = np.full(params.n_atoms, 1.0 / params.n_atoms)
    trace_rows: List[Tuple[int, float, float, float]] = []
    try:
        points, weights, iters, grad_norm, rows = _descend(kernel, points, weights, params)
        trace_rows.extend(rows)
        config = merge_clusters(SphericalConfig.from_points(points, weights), params.merge_radius, kernel)
        if params.polish:
            points, weights, more, grad_norm, rows = _descend(kernel, config.points.copy(), config.weights.copy(), params)
            iters += more
            trace_rows.extend((iters - more + r[0], r[1], r[2], r[3]) for r in rows)
            config = merge_clusters(SphericalConfig.from_points(points, weights), params.merge_radius, kernel)
    except (NumericalError, FloatingPointError) as exc:
        logger.warning("start %d abandoned: %s", start, exc)
        return None
    energy = discrete_energy(config, kernel)
    if not math.isfinite(energy):
        logger.warning("start %d abandoned: energy %r", start, energy)
        return None
    logger.info("start %d: energy %.15g, %d atoms, %d iterations", start, energy, config.n_atoms, iters)
    trace = pd.DataFrame(trace_rows, columns=["iter", "energy", "grad_norm", "step"]) if params.trace else None
    return StartResult(start, energy, config, iters, grad_norm, params.n_atoms - config.n_atoms, trace)


def minimize_energy(kernel: Kernel, d: int, params: OptimizerParams) -> OptimizerReport:
    """Run ``params.n_starts`` seeded descents and keep the lowest energy."""
    if d < 2:
        raise DomainError(f"dimension d must be >= 2, got {d}")
    logger.info("minimizing %s on S^%d: %d atoms, %d starts", kernel.literal, d - 1, params.n_atoms, params.n_starts)
    results = Parallel(n_jobs=params.n_jobs)(
        delayed(_run_start)(kernel, d, params, start) for start in range(params.n_starts)
    )
    ok = [r for r in results if r is not None]
    if not ok:
        raise NumericalError(f"all {params.n_starts} optimizer starts failed for {kernel.literal}")
    best = min(ok, key=lambda r: (r.energy, r.start))
    by_start = {r.start: r for r in ok}
    return OptimizerReport(
        best_energy=best.energy,
        best_config=best.config,
        start_energies=[by_start[i].energy if i in by_start else None for i in range(params.n_starts)],
        iterations=[by_start[i].iterations if i in by_start else 0 for i in range(params.n_starts)],
        grad_norms=[by_start[i].grad_norm if i in by_start else None for i in range(params.n_starts)],
        merged_atom_count=best.merged_atoms,
        best_start=best.start,
        failed_starts=[i for i in range(params.n_starts) if i not in by_start],
        traces={r.start: r.trace for r in ok if r.trace is not None},
    )


def mixture_energy(config: SphericalConfig, probe: SphericalConfig, kernel: Kernel, tau: float) -> float:
    """I((1 - tau) xi + tau mu) from the bilinear expansion."""
    cross = float(probe.weights @ potential(config, kernel, probe.points))
    return (
        (1.0 - tau) ** 2 * discrete_energy(config, kernel)
        + 2.0 * tau * (1.0 - tau) * cross
        + tau ** 2 * discrete_energy(probe, kernel)
    )


@dataclass
class ProbeReport:
    """``passed`` means no probe lowered the energy; it does not certify local minimality."""

    passed: bool
    margin: float
    n_probes: int
    violation: Optional[Dict[str, object]] = None

    def to_dict(self) -> Dict[str, object]:
        return {"passed": self.passed, "margin": self.margin, "n_probes": self.n_probes, "violation": self.violation}


def _probes(d: int, n_probes: int, seed: int) -> List[SphericalConfig]:
    rng = make_rng(seed, 7)
    probes = []
    n_dirac = (n_probes + 1) // 2
    for point in random_points(n_dirac, d, rng):
        probes.append(SphericalConfig.from_points(point[None, :]))
    for _ in range(n_probes - n_dirac):
        size = int(rng.integers(2, 5))
        probes.append(SphericalConfig.from_points(random_points(size, d, rng), rng.dirichlet(np.ones(size))))
    return probes


def local_min_probe(
    config: SphericalConfig,
    kernel: Kernel,
    n_probes: Optional[int] = None,
    tau_grid: Optional[Sequence[float]] = None,
    seed: int = 0,
    tol: Optional[float] = None,
) -> ProbeReport:
    """Look for a probe measure mu and tau with I((1 - tau) xi + tau mu) < I(xi) - tol."""
    n_probes = settings.n_probes if n_probes is None else n_probes
    tau_grid = tuple(settings.tau_grid if tau_grid is None else tau_grid)
    tol = settings.probe_tol if tol is None else tol
    if n_probes < 1:
        raise DomainError(f"n_probes must be >= 1, got {n_probes}")
    if any(not 0 < tau < 1 for tau in tau_grid):
        raise DomainError(f"tau values must lie in (0, 1), got {tau_grid}")
    base = discrete_energy(config, kernel)
    margin = math.inf
    for k, probe in enumerate(_probes(config.d, n_probes, seed)):
        cross = float(probe.weights @ potential(config, kernel, probe.points))
        own = discrete_energy(probe, kernel)
        margin = min(margin, cross - base)
        for tau in tau_grid:
            # mixture energy minus I(xi), expanded to avoid cancellation
            change = 2.0 * tau * (cross - base) + tau * tau * (base - 2.0 * cross + own)
            if change < -tol:
                violation = {"probe": k, "tau": tau, "energy_change": change, "probe_config": probe.to_dict()}
                logger.info("local minimality refuted by probe %d at tau=%g (change %.3e)", k, tau, change)
                return ProbeReport(passed=False, margin=margin, n_probes=k + 1, violation=violation)
    return ProbeReport(passed=True, margin=margin, n_probes=n_probes)
