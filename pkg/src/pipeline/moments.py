"""
Moment systems over atomic measures and support reduction.

``caratheodory_reduce`` walks along null vectors of the moment matrix until the
remaining atoms have linearly independent moment columns, which leaves at most
as many atoms as constraints. ``discrete_minimizer_reduce`` does the same with
the moments of the positive-coefficient degrees pinned and picks, at each step,
the boundary point that does not decrease the convex part G of the energy.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from src.analysis.spectral import GegenbauerExpansion, classify_pd, support_bound, zonal_table
from src.config.settings import settings
from src.features.harmonics import harmonic_basis
from src.features.measures import SphericalConfig, degree_energies, gram, spectral_energy
from src.utils.errors import DomainError, NumericalError
from src.utils.logger import get_logger

logger = get_logger(__name__)

Constraint = Callable[[np.ndarray], np.ndarray]

# relative to the largest weight
_NEGLIGIBLE = 1e-15


def _one(points: np.ndarray) -> np.ndarray:
    return np.ones(np.atleast_2d(points).shape[0])


@dataclass(frozen=True, eq=False)
class MomentSystem:
    """Constraints g_i on S^{d-1} (vectorized over rows of points) with targets c_i."""

    d: int
    constraints: Tuple[Constraint, ...]
    targets: np.ndarray
    labels: Tuple[str, ...] = ()

    def __post_init__(self):
        if self.d < 2:
            raise DomainError(f"dimension d must be >= 2, got {self.d}")
        c = np.array(self.targets, dtype=float).reshape(-1)
        if len(self.constraints) == 0 or len(self.constraints) != c.size:
            raise DomainError(f"{len(self.constraints)} constraints but {c.size} targets")
        if c[0] != 1.0:
            raise DomainError("the first target must be the total mass 1")
        probe = np.eye(self.d)
        if not np.allclose(self.constraints[0](probe), 1.0):
            raise DomainError("the first constraint must be the constant function 1")
        c.setflags(write=False)
        object.__setattr__(self, "constraints", tuple(self.constraints))
        object.__setattr__(self, "targets", c)

    @property
    def size(self) -> int:
        return len(self.constraints)

    @classmethod
    def mass_only(cls, d: int) -> "MomentSystem":
        return cls(d=d, constraints=(_one,), targets=np.ones(1), labels=("mass",))


def moment_matrix(config: SphericalConfig, system: MomentSystem) -> np.ndarray:
    """Matrix [g_i(x_j)], constraints by atoms."""
    if config.d != system.d:
        raise DomainError(f"configuration has d={config.d}, moment system d={system.d}")
    return np.vstack([np.asarray(g(config.points), dtype=float).reshape(-1) for g in system.constraints])


def harmonic_system(config: SphericalConfig, degrees: Sequence[int], seed: int = 0) -> MomentSystem:
    """Pin the current moments of the configuration for all harmonics of the given degrees."""
    constraints: List[Constraint] = [_one]
    labels = ["mass"]
    for n in sorted(set(int(n) for n in degrees) - {0}):
        basis = harmonic_basis(n, config.d, seed)
        constraints.extend(basis.functions)
        labels.extend(f"Y_{n},{j}" for j in range(basis.dim))
    rows = np.vstack([g(config.points) for g in constraints])
    targets = rows @ config.weights
    targets[0] = 1.0
    return MomentSystem(d=config.d, constraints=tuple(constraints), targets=targets, labels=tuple(labels))


def _independent(matrix: np.ndarray, tol: float) -> bool:
    rows, cols = matrix.shape
    if cols > rows:
        return False
    s = scipy.linalg.svdvals(matrix)
    return bool(s[-1] > tol * s[0])


def verify_extreme(config: SphericalConfig, system: MomentSystem, tol: Optional[float] = None) -> bool:
    """True iff the supported atoms have linearly independent moment columns."""
    tol = settings.rank_tol if tol is None else tol
    matrix = moment_matrix(config, system)[:, config.weights > tol]
    return _independent(matrix, tol)


def design_defect(config: SphericalConfig, degrees: Sequence[int]) -> Dict[int, float]:
    """Norm of the degree-n harmonic moment vector, via the addition formula."""
    degrees = [int(n) for n in degrees]
    values = degree_energies(config, degrees)
    return {n: math.sqrt(max(float(v), 0.0)) for n, v in zip(degrees, values)}


@dataclass
class ReductionReport:
    steps: int = 0
    dropped_atoms: int = 0
    final_support: int = 0
    moment_residual: float = 0.0
    energy_before: Optional[float] = None
    energy_after: Optional[float] = None
    g_before: Optional[float] = None
    g_after: Optional[float] = None
    g_trace: List[float] = field(default_factory=list)
    support_bound: Optional[int] = None
    design_defect: Dict[int, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "steps": self.steps,
            "dropped_atoms": self.dropped_atoms,
            "final_support": self.final_support,
            "moment_residual": self.moment_residual,
            "energy_before": self.energy_before,
            "energy_after": self.energy_after,
            "g_before": self.g_before,
            "g_after": self.g_after,
            "g_trace": list(self.g_trace),
            "support_bound": self.support_bound,
            "design_defect": {str(n): v for n, v in self.design_defect.items()},
        }


def _null_vector(matrix: np.ndarray) -> np.ndarray:
    """Right singular vector of the smallest singular value, largest entry positive."""
    _, _, vt = scipy.linalg.svd(matrix, full_matrices=True)
    eta = vt[-1]
    k = int(np.argmax(np.abs(eta)))
    return eta if eta[k] > 0 else -eta


def _check_targets(matrix: np.ndarray, weights: np.ndarray, system: MomentSystem, tol: float) -> float:
    residual = float(np.max(np.abs(matrix @ weights - system.targets)))
    if residual > tol:
        raise DomainError(f"configuration violates the moment targets by {residual:.3e} (tol {tol:.1e})")
    return residual


class _Walk:
    """Shared state of a null-space walk over the atoms of one configuration."""

    def __init__(self, config: SphericalConfig, system: MomentSystem):
        self.system = system
        self.points = config.points.copy()
        self.weights = config.weights.copy()
        self.matrix = moment_matrix(config, system)
        self.index = np.arange(self.points.shape[0])
        self.steps = 0
        self._prune()

    def _prune(self):
        keep = self.weights > _NEGLIGIBLE * self.weights.max()
        self.points = self.points[keep]
        self.weights = self.weights[keep]
        self.matrix = self.matrix[:, keep]
        self.index = self.index[keep]

    def done(self) -> bool:
        return _independent(self.matrix, settings.rank_tol)

    def direction(self) -> np.ndarray:
        return _null_vector(self.matrix)

    def boundary_steps(self, eta: np.ndarray) -> Tuple[float, int, float, int]:
        """Largest s with w - s eta >= 0 and with w + s eta >= 0, plus the atoms they zero."""
        pos, neg = eta > 0, eta < 0
        down = np.where(pos, self.weights / np.where(pos, eta, 1.0), np.inf)
        up = np.where(neg, self.weights / np.where(neg, -eta, 1.0), np.inf)
        i_down, i_up = int(np.argmin(down)), int(np.argmin(up))
        return float(down[i_down]), i_down, float(up[i_up]), i_up

    def move(self, eta: np.ndarray, step: float, zeroed: int):
        if not (math.isfinite(step) and step > 0):
            raise NumericalError(
                f"reduction stalled after {self.steps} steps: step {step:.3e} with "
                f"{self.weights.size} atoms against {self.system.size} constraints"
            )
        self.weights = self.weights + step * eta
        self.weights[zeroed] = 0.0
        self.weights = np.clip(self.weights, 0.0, None)
        self.steps += 1
        self._prune()

    def result(self, original: SphericalConfig) -> SphericalConfig:
        if self.steps == 0 and self.index.size == original.n_atoms:
            return original
        return SphericalConfig.from_points(self.points, self.weights)


def caratheodory_reduce_report(
    config: SphericalConfig, system: MomentSystem, tol: Optional[float] = None
) -> Tuple[SphericalConfig, ReductionReport]:
    tol = settings.moment_tol if tol is None else tol
    _check_targets(moment_matrix(config, system), config.weights, system, tol)
    walk = _Walk(config, system)
    while not walk.done():
        eta = walk.direction()
        s_down, i_down, _, _ = walk.boundary_steps(eta)
        walk.move(-eta, s_down, i_down)
    out = walk.result(config)
    report = ReductionReport(
        steps=walk.steps,
        dropped_atoms=config.n_atoms - out.n_atoms,
        final_support=out.n_atoms,
        moment_residual=float(np.max(np.abs(moment_matrix(out, system) @ out.weights - system.targets))),
    )
    logger.info("caratheodory reduction: %d -> %d atoms in %d steps", config.n_atoms, out.n_atoms, walk.steps)
    return out, report


def caratheodory_reduce(config: SphericalConfig, system: MomentSystem, tol: Optional[float] = None) -> SphericalConfig:
    """Reduce to at most ``system.size`` atoms with the same moments."""
    return caratheodory_reduce_report(config, system, tol)[0]


def _convex_part(exp: GegenbauerExpansion, negative: Sequence[int], g: np.ndarray) -> np.ndarray:
    """Q = sum over n in N_- of (-fhat_n) P_n(Gram); G(w) = w^T Q w."""
    q = np.zeros_like(g)
    if not negative:
        return q
    table = zonal_table(max(negative), exp.d, g)
    for n in negative:
        q += -exp.coeffs[n] * table[n]
    return q


def discrete_minimizer_reduce_report(
    config: SphericalConfig, exp: GegenbauerExpansion, tol: Optional[float] = None, seed: int = 0
) -> Tuple[SphericalConfig, ReductionReport]:
    """Support reduction that never increases the truncated-kernel energy."""
    tol = settings.moment_tol if tol is None else tol
    if exp.d != config.d:
        raise DomainError(f"expansion is for d={exp.d}, configuration has d={config.d}")
    cls = classify_pd(exp)
    positive = sorted(set(cls.n_plus) | {0})
    negative = [n for n in cls.n_minus if n >= 1]
    system = harmonic_system(config, positive, seed)

    _check_targets(moment_matrix(config, system), config.weights, system, tol)
    walk = _Walk(config, system)
    q = _convex_part(exp, negative, gram(config))

    def current_q() -> np.ndarray:
        return q[np.ix_(walk.index, walk.index)]

    def g_value() -> float:
        return float(walk.weights @ current_q() @ walk.weights)

    energy_before = spectral_energy(config, exp)
    trace = [g_value()]
    logger.info("minimizer reduction start: %d atoms, bound %d, G=%.12g", config.n_atoms, system.size, trace[0])
    while not walk.done():
        eta = walk.direction()
        sub = current_q()
        g0 = trace[-1]
        lin, quad = float(eta @ sub @ walk.weights), float(eta @ sub @ eta)
        s_down, i_down, s_up, i_up = walk.boundary_steps(eta)
        g_down = g0 - 2.0 * s_down * lin + s_down * s_down * quad if math.isfinite(s_down) else -math.inf
        g_up = g0 + 2.0 * s_up * lin + s_up * s_up * quad if math.isfinite(s_up) else -math.inf
        if g_up > g_down:
            walk.move(eta, s_up, i_up)
        else:
            walk.move(-eta, s_down, i_down)
        trace.append(g_value())
        logger.info("reduction step %d: %d atoms, G=%.12g", walk.steps, walk.index.size, trace[-1])

    out = walk.result(config)
    report = ReductionReport(
        steps=walk.steps,
        dropped_atoms=config.n_atoms - out.n_atoms,
        final_support=out.n_atoms,
        moment_residual=float(np.max(np.abs(moment_matrix(out, system) @ out.weights - system.targets))),
        energy_before=energy_before,
        energy_after=spectral_energy(out, exp),
        g_before=trace[0],
        g_after=trace[-1],
        g_trace=trace,
        support_bound=support_bound(exp),
        design_defect=design_defect(out, [n for n in positive if n > 0]),
    )
    return out, report


def discrete_minimizer_reduce(
    config: SphericalConfig, exp: GegenbauerExpansion, tol: Optional[float] = None, seed: int = 0
) -> SphericalConfig:
    return discrete_minimizer_reduce_report(config, exp, tol, seed)[0]
