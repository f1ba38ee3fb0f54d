"""
Bases of the degree-n spherical harmonics H_n^d, evaluated at points of S^{d-1}.

d = 2 uses the Fourier pair, d = 3 the real spherical harmonics; both are
orthonormal for the normalized surface measure. For d >= 4 the basis is a set
of zonal functions P_n(<z_r, .>) centred at seeded random nodes, picked to be
linearly independent. Those span H_n^d but are not orthonormal.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np
import scipy.linalg
from scipy.special import sph_harm_y

from src.analysis.spectral import harmonic_dim, zonal_table
from src.config.settings import settings
from src.features.measures import random_points
from src.utils.errors import DomainError, NumericalError
from src.utils.logger import get_logger
from src.utils.seed import make_rng

logger = get_logger(__name__)


@dataclass(frozen=True, eq=False)
class HarmonicBasis:
    d: int
    n: int
    kind: str
    nodes: Optional[np.ndarray] = None

    @property
    def dim(self) -> int:
        return harmonic_dim(self.n, self.d)

    def __len__(self) -> int:
        return self.dim

    def evaluate(self, points) -> np.ndarray:
        """Matrix of basis values, one row per point and one column per function."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.d:
            raise DomainError(f"points have dimension {pts.shape[1]}, basis is for d={self.d}")
        if self.n == 0:
            return np.ones((pts.shape[0], 1))
        if self.kind == "fourier":
            return _fourier(self.n, pts)
        if self.kind == "spherical":
            return _real_spherical(self.n, pts)
        t = np.clip(pts @ self.nodes.T, -1.0, 1.0)
        return zonal_table(self.n, self.d, t)[self.n]

    @property
    def functions(self) -> List[Callable[[np.ndarray], np.ndarray]]:
        return [_column(self, j) for j in range(self.dim)]


def _column(basis: HarmonicBasis, j: int) -> Callable[[np.ndarray], np.ndarray]:
    def g(points):
        return basis.evaluate(points)[:, j]

    return g


def _fourier(n: int, pts: np.ndarray) -> np.ndarray:
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    return math.sqrt(2.0) * np.column_stack([np.cos(n * theta), np.sin(n * theta)])


def _real_spherical(n: int, pts: np.ndarray) -> np.ndarray:
    polar = np.arccos(np.clip(pts[:, 2], -1.0, 1.0))
    azimuth = np.arctan2(pts[:, 1], pts[:, 0])
    # scipy normalizes to surface area 4 pi
    scale = math.sqrt(4.0 * math.pi)
    cols = [scale * np.real(sph_harm_y(n, 0, polar, azimuth))]
    for m in range(1, n + 1):
        y = scale * math.sqrt(2.0) * sph_harm_y(n, m, polar, azimuth)
        cols.append(np.real(y))
        cols.append(np.imag(y))
    return np.column_stack(cols)


def harmonic_basis(n: int, d: int, seed: int = 0) -> HarmonicBasis:
    """A basis of H_n^d; seeded for d >= 4."""
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    if d < 2:
        raise DomainError(f"dimension d must be >= 2, got {d}")
    if n == 0:
        return HarmonicBasis(d=d, n=0, kind="constant")
    if d == 2:
        return HarmonicBasis(d=d, n=n, kind="fourier")
    if d == 3:
        return HarmonicBasis(d=d, n=n, kind="spherical")
    return _zonal_frame(n, d, seed)


def _zonal_frame(n: int, d: int, seed: int) -> HarmonicBasis:
    dim = harmonic_dim(n, d)
    for attempt in range(settings.basis_retries + 1):
        rng = make_rng(seed, n, d, attempt)
        nodes = random_points(2 * dim, d, rng)
        samples = random_points(3 * dim + 10, d, rng)
        frame = zonal_table(n, d, np.clip(samples @ nodes.T, -1.0, 1.0))[n]
        _, r, piv = scipy.linalg.qr(frame, mode="economic", pivoting=True)
        diag = np.abs(np.diag(r))
        if diag[dim - 1] > settings.rank_tol * diag[0]:
            return HarmonicBasis(d=d, n=n, kind="zonal-frame", nodes=nodes[np.sort(piv[:dim])])
        logger.warning("zonal frame for H_%d^%d rank deficient on attempt %d; resampling", n, d, attempt)
    raise NumericalError(f"could not find {dim} independent zonal functions for n={n}, d={d}")

