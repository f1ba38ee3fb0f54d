"""
Laplace-Beltrami checks for g(x) = <x, y>^p on S^{d-1}.

With t = <x, y>, Delta t^q = q(q - 1) t^(q-2) - q(q + d - 2) t^q. The iterated
operator D^(k) = Delta * prod_{j<k} (Delta + s_j), s_j = (p - 2j)(p - 2j + d - 2),
peels off one power at a time and leaves

    D^(k) t^p = prod_{j=0}^{2k} (p - j) * t^(p-2k-2) * ((p - 2k - 1) - (p + d - 2k - 2) t^2).

Closed forms are compared with tangent-stencil finite differences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.linalg

from src.config.settings import settings
from src.utils.errors import DomainError
from src.utils.logger import get_logger

logger = get_logger(__name__)

_UNIT_TOL = 1e-12
_H_RANGE = (1e-4, 1e-2)

PowerSeries = Dict[float, float]


def _check_t(t: float) -> float:
    if not 0 < t <= 1.0:
        raise DomainError(f"t must lie in (0, 1], got {t!r}")
    return float(t)


def _check_d(d: int):
    if d < 2:
        raise DomainError(f"dimension d must be >= 2, got {d}")


def lb_closed_form(p: float, d: int, t: float) -> float:
    """Delta_x <x, y>^p at <x, y> = t."""
    _check_d(d)
    t = _check_t(t)
    return p * (p - 1.0) * t ** (p - 2.0) - p * (p + d - 2.0) * t ** p


def lb_zonal_reduction(p: float, d: int, t: float) -> float:
    """(1 - t^2) g'' - (d - 1) t g' for g = t^p."""
    _check_d(d)
    t = _check_t(t)
    g1 = p * t ** (p - 1.0)
    g2 = p * (p - 1.0) * t ** (p - 2.0)
    return (1.0 - t * t) * g2 - (d - 1.0) * t * g1


def dk_shift(j: int, p: float, d: int) -> float:
    """s_j, chosen so that (Delta + s_j) t^(p-2j) is a single power."""
    return (p - 2.0 * j) * (p - 2.0 * j + d - 2.0)


def dk_closed_form(k: int, p: float, d: int, t: float) -> float:
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    _check_d(d)
    t = _check_t(t)
    prod = math.prod(p - j for j in range(2 * k + 1))
    return prod * t ** (p - 2 * k - 2) * ((p - 2 * k - 1) - (p + d - 2 * k - 2) * t * t)


def _dk_scale(k: int, p: float, d: int, t: float) -> float:
    """Sum of the magnitudes of the two closed-form terms; residuals are relative to it."""
    prod = abs(math.prod(p - j for j in range(2 * k + 1)))
    return prod * t ** (p - 2 * k - 2) * (abs(p - 2 * k - 1) + abs(p + d - 2 * k - 2) * t * t)


def _laplace_series(series: PowerSeries, d: int, shift: float = 0.0) -> PowerSeries:
    """(Delta + shift) applied termwise to sum_q c_q t^q."""
    out: PowerSeries = {}
    for q, c in series.items():
        if c == 0:
            continue
        lower = q * (q - 1.0)
        if lower:
            out[q - 2.0] = out.get(q - 2.0, 0.0) + c * lower
        same = shift - q * (q + d - 2.0)
        if same:
            out[q] = out.get(q, 0.0) + c * same
    return out


def _eval_series(series: PowerSeries, t):
    return sum(c * np.asarray(t, dtype=float) ** q for q, c in series.items())


def _inner_factors(k: int, p: float, d: int) -> PowerSeries:
    series: PowerSeries = {float(p): 1.0}
    for j in range(k):
        series = _laplace_series(series, d, dk_shift(j, p, d))
    return series


def _check_pair(y, x) -> Tuple[np.ndarray, np.ndarray]:
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError("x and y must be vectors of the same dimension")
    if abs(np.linalg.norm(x) - 1.0) > _UNIT_TOL or abs(np.linalg.norm(y) - 1.0) > _UNIT_TOL:
        raise DomainError("x and y must be unit vectors")
    return y, x


def _check_h(h: float):
    if not _H_RANGE[0] <= h <= _H_RANGE[1]:
        raise DomainError(f"step h must lie in [{_H_RANGE[0]}, {_H_RANGE[1]}], got {h!r}")


def tangent_laplacian(func: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> float:
    """Sum over an orthonormal tangent basis of the central second difference along great circles."""
    basis = scipy.linalg.null_space(x[None, :])
    centre = float(func(x[None, :])[0])
    steps = np.vstack(
        [math.cos(h) * x[None, :] + math.sin(h) * basis.T, math.cos(h) * x[None, :] - math.sin(h) * basis.T]
    )
    values = np.asarray(func(steps), dtype=float)
    return float(np.sum(values) - 2.0 * basis.shape[1] * centre) / (h * h)


def lb_finite_difference(p: float, d: int, y, x, h: Optional[float] = None) -> float:
    """Delta_x <x, y>^p by the tangent stencil at x."""
    h = settings.fd_step if h is None else h
    _check_h(h)
    y, x = _check_pair(y, x)
    if x.size != d:
        raise DomainError(f"vectors have dimension {x.size}, expected d={d}")
    t = float(x @ y)
    if t <= h:
        raise DomainError(f"<x, y> = {t!r} must exceed h = {h!r}")
    return tangent_laplacian(lambda pts: np.clip(pts @ y, 0.0, None) ** p, x, h)


def dk_finite_difference(
    k: int, p: float, d: int, y, x, h: Optional[float] = None, method: str = "semi"
) -> float:
    """D^(k) <x, y>^p at x.

    ``analytic`` composes every factor on the power family t^q. ``semi`` does
    the inner factors that way and the outer Delta by the stencil. ``nested``
    uses stencils throughout and is limited to k <= 1.
    """
    if k < 0:
        raise DomainError(f"k must be >= 0, got {k}")
    h = settings.fd_step if h is None else h
    _check_h(h)
    y, x = _check_pair(y, x)
    if x.size != d:
        raise DomainError(f"vectors have dimension {x.size}, expected d={d}")
    t = float(x @ y)
    if method == "analytic":
        _check_t(t)
        return float(_eval_series(_laplace_series(_inner_factors(k, p, d), d), t))
    if method == "semi":
        if t <= h:
            raise DomainError(f"<x, y> = {t!r} must exceed h = {h!r}")
        inner = _inner_factors(k, p, d)
        return tangent_laplacian(lambda pts: _eval_series(inner, np.clip(pts @ y, 0.0, None)), x, h)
    if method == "nested":
        if k > 1:
            raise DomainError(f"nested stencils are only provided for k <= 1, got k={k}")
        if t <= (k + 1) * h:
            raise DomainError(f"<x, y> = {t!r} must exceed (k + 1) h = {(k + 1) * h!r}")

        def g(pts):
            return np.clip(pts @ y, 0.0, None) ** p

        if k == 0:
            return tangent_laplacian(g, x, h)
        shift = dk_shift(0, p, d)

        def inner(pts):
            return np.array([tangent_laplacian(g, row, h) + shift * float(g(row[None, :])[0]) for row in pts])

        return tangent_laplacian(inner, x, h)
    raise DomainError(f"unknown method {method!r}; expected analytic, semi or nested")


def expected_sign(k: int, p: float) -> Optional[str]:
    """Sign D^(k) t^p must have on (0, 1], where one is claimed."""
    if 2 * k < p <= 2 * k + 1:
        return "negative"
    if 2 * k - 1 < p < 2 * k:
        return "positive"
    return None


def _verdict(value: float, tol: float) -> str:
    if value < -tol:
        return "negative"
    if value > tol:
        return "positive"
    return "indeterminate"


def _point_at(t: float, d: int) -> Tuple[np.ndarray, np.ndarray]:
    y = np.zeros(d)
    y[0] = 1.0
    x = np.zeros(d)
    x[0], x[1] = t, math.sqrt(max(0.0, 1.0 - t * t))
    return y, x


@dataclass
class SignScanReport:
    k: int
    d: int
    p_values: List[float]
    t_values: List[float]
    closed: np.ndarray
    fd: np.ndarray
    verdicts: List[List[str]]
    expected: List[Optional[str]]
    violations: List[Tuple[float, float]] = field(default_factory=list)
    max_relative_residual: float = 0.0

    @property
    def indeterminate(self) -> int:
        return sum(row.count("indeterminate") for row in self.verdicts)

    @property
    def passed(self) -> bool:
        return not self.violations and self.indeterminate == 0

    def to_dict(self) -> Dict[str, object]:
        return {
            "k": self.k,
            "d": self.d,
            "p_values": list(self.p_values),
            "t_values": list(self.t_values),
            "closed_form": self.closed.tolist(),
            "finite_difference": [[None if math.isnan(v) else v for v in row] for row in self.fd.tolist()],
            "verdicts": self.verdicts,
            "expected": self.expected,
            "violations": [list(cell) for cell in self.violations],
            "indeterminate": self.indeterminate,
            "max_relative_residual": self.max_relative_residual,
        }

    def to_frame(self) -> pd.DataFrame:
        """Verdict matrix, one row per p and one column per t."""
        frame = pd.DataFrame(self.verdicts, index=self.p_values, columns=self.t_values)
        frame.index.name = "p"
        return frame


def dk_sign_scan(
    k: int,
    d: int,
    p_grid: Sequence[float],
    t_grid: Sequence[float],
    tol: Optional[float] = None,
    h: Optional[float] = None,
) -> SignScanReport:
    """Closed-form signs of D^(k) t^p over a grid, with stencil cross-checks."""
    tol = settings.sign_tol if tol is None else tol
    h = settings.fd_step if h is None else h
    p_values = [float(p) for p in p_grid]
    t_values = [_check_t(t) for t in t_grid]
    closed = np.zeros((len(p_values), len(t_values)))
    fd = np.full_like(closed, np.nan)
    verdicts: List[List[str]] = []
    violations: List[Tuple[float, float]] = []
    expected = [expected_sign(k, p) for p in p_values]
    worst = 0.0
    for a, p in enumerate(p_values):
        row = []
        for b, t in enumerate(t_values):
            closed[a, b] = dk_closed_form(k, p, d, t)
            verdict = _verdict(closed[a, b], tol)
            row.append(verdict)
            if expected[a] is not None and verdict != expected[a]:
                violations.append((p, t))
            if t >= 10.0 * h:
                y, x = _point_at(t, d)
                fd[a, b] = dk_finite_difference(k, p, d, y, x, h, method="semi")
                scale = _dk_scale(k, p, d, t)
                if scale > 0:
                    worst = max(worst, abs(fd[a, b] - closed[a, b]) / scale)
        verdicts.append(row)
    if violations:
        logger.warning("sign scan k=%d d=%d: %d cells contradict the expected sign", k, d, len(violations))
    logger.info("sign scan k=%d d=%d: %d cells, max residual %.3e", k, d, closed.size, worst)
    return SignScanReport(
        k=k,
        d=d,
        p_values=p_values,
        t_values=t_values,
        closed=closed,
        fd=fd,
        verdicts=verdicts,
        expected=expected,
        violations=violations,
        max_relative_residual=worst,
    )
