"""
Atomic probability measures on the unit sphere S^{d-1}.

A ``SphericalConfig`` is a finite list of unit vectors with nonnegative weights
summing to one. Energies include the diagonal (self-interaction) terms, so the
energy of the configuration equals the energy integral of the measure.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import norm, qmc

from src.analysis.spectral import GegenbauerExpansion, zonal_table
from src.config.settings import settings
from src.features.kernels import Kernel
from src.utils.errors import DomainError
from src.utils.logger import get_logger
from src.utils.seed import make_rng

logger = get_logger(__name__)

_NORM_TOL = 1e-12
_MASS_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class SphericalConfig:
    """Atoms ``points`` (N x d) with ``weights`` (N,)."""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.array(self.points, dtype=float, ndmin=2)
        w = np.array(self.weights, dtype=float).reshape(-1)
        if pts.shape[0] < 1:
            raise DomainError("a configuration needs at least one atom")
        if pts.shape[1] < 2:
            raise DomainError(f"dimension d must be >= 2, got {pts.shape[1]}")
        if w.shape[0] != pts.shape[0]:
            raise DomainError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if not (np.all(np.isfinite(pts)) and np.all(np.isfinite(w))):
            raise DomainError("points and weights must be finite")
        norms = np.linalg.norm(pts, axis=1)
        bad = np.flatnonzero(np.abs(norms - 1.0) > _NORM_TOL)
        if bad.size:
            raise DomainError(f"atom {int(bad[0])} has norm {norms[bad[0]]!r}, expected 1")
        if np.any(w < 0):
            raise DomainError(f"weight of atom {int(np.flatnonzero(w < 0)[0])} is negative")
        if abs(math.fsum(w) - 1.0) > _MASS_TOL:
            raise DomainError(f"weights sum to {math.fsum(w)!r}, expected 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_points(cls, points, weights=None) -> "SphericalConfig":
        """Normalize points and weights, then build the configuration."""
        pts = np.array(points, dtype=float, ndmin=2)
        norms = np.linalg.norm(pts, axis=1, keepdims=True)
        if np.any(norms == 0):
            raise DomainError("cannot normalize a zero vector")
        pts = pts / norms
        if weights is None:
            w = np.full(pts.shape[0], 1.0 / pts.shape[0])
        else:
            w = np.asarray(weights, dtype=float).reshape(-1)
            if np.any(w < 0):
                raise DomainError("weights must be nonnegative")
            total = w.sum()
            if not total > 0:
                raise DomainError("weights must have positive total mass")
            w = w / total
        return cls(pts, w)

    @property
    def d(self) -> int:
        return int(self.points.shape[1])

    @property
    def n_atoms(self) -> int:
        return int(self.points.shape[0])

    def to_dict(self) -> Dict[str, object]:
        return {"d": self.d, "points": self.points.tolist(), "weights": self.weights.tolist()}

    def rotated(self, rotation: np.ndarray) -> "SphericalConfig":
        return SphericalConfig.from_points(self.points @ np.asarray(rotation).T, self.weights)


def gram(config: SphericalConfig) -> np.ndarray:
    return np.clip(config.points @ config.points.T, -1.0, 1.0)


def _check_unit(x, d: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape[-1] != d:
        raise DomainError(f"point has dimension {arr.shape[-1]}, configuration has {d}")
    norms = np.linalg.norm(arr, axis=-1)
    if np.any(np.abs(norms - 1.0) > _NORM_TOL):
        raise DomainError("potential is only defined at unit vectors")
    return arr


def _weighted_rows(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # fixed summation order per row keeps results identical run to run
    return np.sum(values * weights[None, :], axis=1)


def pair_energy(points: np.ndarray, weights: np.ndarray, kernel: Kernel) -> float:
    """Energy of raw atom arrays; no validation."""
    g = np.clip(points @ points.T, -1.0, 1.0)
    rows = _weighted_rows(np.asarray(kernel(g), dtype=float), weights)
    return math.fsum(weights * rows)


def discrete_energy(config: SphericalConfig, kernel: Kernel) -> float:
    """Sum over all pairs (diagonal included) of w_i w_j f(<x_i, x_j>)."""
    return pair_energy(config.points, config.weights, kernel)


def potential(config: SphericalConfig, kernel: Kernel, x):
    """F_mu(x) = sum_j w_j f(<x, x_j>) for a unit vector (or rows of unit vectors)."""
    arr = _check_unit(x, config.d)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    t = np.clip(arr @ config.points.T, -1.0, 1.0)
    values = _weighted_rows(np.asarray(kernel(t), dtype=float), config.weights)
    return float(values[0]) if single else values


def atom_potentials(config: SphericalConfig, kernel: Kernel) -> np.ndarray:
    return _weighted_rows(np.asarray(kernel(gram(config)), dtype=float), config.weights)


def spectral_energy(config: SphericalConfig, exp: GegenbauerExpansion) -> float:
    """Energy of the truncated kernel sum_n fhat_n P_n."""
    if exp.d != config.d:
        raise DomainError(f"expansion is for d={exp.d}, configuration has d={config.d}")
    table = zonal_table(exp.n_max, exp.d, gram(config))
    terms = [exp.coeffs[n] * config.weights @ table[n] @ config.weights for n in range(exp.n_max + 1)]
    return math.fsum(terms)


def degree_energies(config: SphericalConfig, degrees: Sequence[int]) -> np.ndarray:
    """w^T P_n(Gram) w for each n; the squared norm of the degree-n harmonic moments."""
    degrees = list(degrees)
    if not degrees:
        return np.zeros(0)
    table = zonal_table(max(degrees), config.d, gram(config))
    return np.array([config.weights @ table[n] @ config.weights for n in degrees])


def sphere_grid(n: int, d: int, seed: int = 0) -> np.ndarray:
    """Deterministic spiral/low-discrepancy points followed by seeded random points."""
    if n < 1:
        raise DomainError(f"grid size must be >= 1, got {n}")
    n_random = n // 2
    n_spiral = n - n_random
    parts = [_spiral(n_spiral, d)]
    if n_random:
        parts.append(random_points(n_random, d, make_rng(seed, 0)))
    return np.vstack(parts)


def _spiral(n: int, d: int) -> np.ndarray:
    if d == 2:
        theta = (np.arange(n) + 0.5) * 2.0 * np.pi / n
        return np.column_stack([np.cos(theta), np.sin(theta)])
    if d == 3:
        # Fibonacci sphere
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        r = np.sqrt(np.clip(1.0 - z * z, 0.0, None))
        phi = np.pi * (3.0 - np.sqrt(5.0)) * i
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    u = qmc.Halton(d=d, scramble=False).random(n + 1)[1:]
    g = norm.ppf(np.clip(u, 1e-12, 1.0 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_points(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, d))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


@dataclass(frozen=True)
class PotentialReport:
    support_min: float
    support_max: float
    grid_min: float
    constancy_gap: float
    grid_argmin: Tuple[float, ...]
    energy: float
    grid_size: int

    def is_equilibrium(self, tol: float) -> bool:
        return self.constancy_gap <= tol and self.grid_min >= self.support_min - tol

    def to_dict(self) -> Dict[str, object]:
        return {
            "support_min": self.support_min,
            "support_max": self.support_max,
            "grid_min": self.grid_min,
            "constancy_gap": self.constancy_gap,
            "grid_argmin": list(self.grid_argmin),
            "energy": self.energy,
            "grid_size": self.grid_size,
        }


def potential_report(
    config: SphericalConfig, kernel: Kernel, grid_size: Optional[int] = None, seed: int = 0
) -> PotentialReport:
    """Extremes of F_mu over the atoms (positive weight only) and over a probe grid."""
    grid_size = settings.probe_grid_size if grid_size is None else grid_size
    on_atoms = atom_potentials(config, kernel)[config.weights > 0]
    grid = sphere_grid(grid_size, config.d, seed)
    values = potential(config, kernel, grid)
    k = int(np.argmin(values))
    support_min, support_max = float(on_atoms.min()), float(on_atoms.max())
    return PotentialReport(
        support_min=support_min,
        support_max=support_max,
        grid_min=float(values[k]),
        constancy_gap=support_max - support_min,
        grid_argmin=tuple(float(v) for v in grid[k]),
        energy=math.fsum(config.weights * atom_potentials(config, kernel)),
        grid_size=grid_size,
    )


def merge_atoms(points: np.ndarray, weights: np.ndarray, chord_radius: float) -> Tuple[np.ndarray, np.ndarray]:
    """Greedy agglomeration by index order.

    Each unassigned atom collects every unassigned atom within Euclidean
    distance ``chord_radius``; the cluster becomes the weight-weighted mean,
    renormalized to the sphere. Clusters of zero total weight keep the seed.
    """
    points = np.asarray(points, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if chord_radius <= 0 or points.shape[0] == 1:
        return points.copy(), weights.copy()
    free = np.ones(points.shape[0], dtype=bool)
    new_points: List[np.ndarray] = []
    new_weights: List[float] = []
    for i in range(points.shape[0]):
        if not free[i]:
            continue
        dist = np.linalg.norm(points - points[i], axis=1)
        members = np.flatnonzero(free & (dist <= chord_radius))
        free[members] = False
        mass = math.fsum(weights[members])
        centre = weights[members] @ points[members] if mass > 0 else points[i]
        length = np.linalg.norm(centre)
        new_points.append(centre / length if length > 0 else points[i])
        new_weights.append(mass)
    return np.array(new_points), np.array(new_weights)


def symmetrize(config: SphericalConfig, z, tol: Optional[float] = None) -> SphericalConfig:
    """Fold all mass into the open hemisphere {x : <z, x> > 0}."""
    tol = settings.equator_tol if tol is None else tol
    z = _check_unit(z, config.d)
    side = config.points @ z
    on_equator = np.flatnonzero(np.abs(side) <= tol)
    if on_equator.size:
        raise DomainError(f"atom {int(on_equator[0])} lies on the hyperplane orthogonal to z")
    flipped = np.where(side[:, None] < 0, -config.points, config.points)
    points, weights = merge_atoms(flipped, config.weights, settings.merge_tol)
    return SphericalConfig.from_points(points, weights)


def antipodal_closure(config: SphericalConfig, radius: Optional[float] = None) -> SphericalConfig:
    """The centrally symmetric measure (mu + mu(-.)) / 2 with coincident atoms merged."""
    radius = settings.merge_tol if radius is None else radius
    points = np.vstack([config.points, -config.points])
    weights = np.concatenate([config.weights, config.weights]) / 2.0
    points, weights = merge_atoms(points, weights, radius)
    return SphericalConfig.from_points(points, weights)


def support_pd_check(config: SphericalConfig, kernel: Kernel) -> float:
    """Smallest eigenvalue of [f(<x_i, x_j>)] over the positive-weight atoms."""
    support = config.points[config.weights > 0]
    matrix = np.asarray(kernel(np.clip(support @ support.T, -1.0, 1.0)), dtype=float)
    return float(np.linalg.eigvalsh(0.5 * (matrix + matrix.T))[0])


BUILTIN_NAMES = ("onb", "simplex", "cross-polytope", "ngon:k", "icosahedron", "cube")


def builtin_config(name: str, d: int) -> SphericalConfig:
    """Equal-weight reference configurations."""
    key = name.strip().lower()
    if key == "onb":
        return SphericalConfig.from_points(np.eye(d))
    if key == "cross-polytope":
        return SphericalConfig.from_points(np.vstack([np.eye(d), -np.eye(d)]))
    if key == "simplex":
        return SphericalConfig.from_points(_simplex(d))
    if key.startswith("ngon:"):
        if d != 2:
            raise DomainError(f"ngon lives on S^1 (d=2), got d={d}")
        try:
            k = int(key.split(":", 1)[1])
        except ValueError as exc:
            raise DomainError(f"bad polygon size in {name!r}") from exc
        if k < 1:
            raise DomainError(f"polygon needs at least one vertex, got {k}")
        theta = 2.0 * np.pi * np.arange(k) / k
        return SphericalConfig.from_points(np.column_stack([np.cos(theta), np.sin(theta)]))
    if key == "icosahedron":
        _require_d3(name, d)
        return SphericalConfig.from_points(_icosahedron())
    if key == "cube":
        _require_d3(name, d)
        return SphericalConfig.from_points(np.array(list(product((-1.0, 1.0), repeat=3))))
    raise DomainError(f"unknown builtin configuration {name!r}; expected one of {', '.join(BUILTIN_NAMES)}")


def _require_d3(name: str, d: int):
    if d != 3:
        raise DomainError(f"{name} is defined for d=3, got d={d}")


def _simplex(d: int) -> np.ndarray:
    # rows of the Helmert basis of the sum-zero hyperplane in R^{d+1}
    basis = np.zeros((d + 1, d))
    for k in range(1, d + 1):
        basis[:k, k - 1] = 1.0
        basis[k, k - 1] = -float(k)
        basis[:, k - 1] /= math.sqrt(k * (k + 1))
    return basis


def _icosahedron() -> np.ndarray:
    # cyclic shifts of (0, +-1, +-phi)
    phi = (1.0 + math.sqrt(5.0)) / 2.0
    vertices = []
    for a, b in product((-1.0, 1.0), repeat=2):
        base = np.array([0.0, a, b * phi])
        vertices.extend(np.roll(base, shift) for shift in range(3))
    return np.array(vertices)
