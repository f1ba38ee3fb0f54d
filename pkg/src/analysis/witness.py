"""
Finite point sets on which the Gram matrix of |t|^p fails to be positive definite.

For p not an even integer put k = ceil(p / 2). The points x_j sit on a great
circle through z at angles (j - k) eps, j = 0..2k, plus one point y orthogonal
to z. The vector v_j = (-1)^j / ((2k - j)! j!) annihilates the monomials j^m for
m < 2k, which makes the first block v^T A v of order eps^(4k). The cross term
with y is of order eps^p, so a suitable combination gives a negative form.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.config.settings import settings
from src.features.measures import SphericalConfig
from src.utils.errors import DomainError, NumericalError
from src.utils.logger import get_logger

logger = get_logger(__name__)

_EVEN_TOL = 1e-9
_ORTHO_TOL = 1e-12
_SERIES_TAIL = 200


def _check_k(k: int):
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if k > settings.max_witness_k:
        raise NumericalError(f"(2k)! overflows double precision for k={k} (limit {settings.max_witness_k})")


def vandermonde_kernel_vector(k: int) -> np.ndarray:
    """v_j = (-1)^j / ((2k - j)! j!) for j = 0..2k, from exact factorials."""
    _check_k(k)
    return np.array([float(f) for f in _exact_vector(k)])


def _exact_vector(k: int) -> List[Fraction]:
    return [Fraction((-1) ** j, math.factorial(2 * k - j) * math.factorial(j)) for j in range(2 * k + 1)]


def bp_coefficient(k: int, p: float) -> float:
    """b_p = 2 sum_{j<k} (-1)^j (k - j)^p / ((2k - j)! j!)."""
    _check_k(k)
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    terms = [2.0 * (-1) ** j * (k - j) ** p / (math.factorial(2 * k - j) * math.factorial(j)) for j in range(k)]
    return math.fsum(terms)


def bp_scale(k: int, p: float) -> float:
    """Sum of the absolute values of the terms of b_p; roots are judged relative to it."""
    _check_k(k)
    return math.fsum(2.0 * (k - j) ** p / (math.factorial(2 * k - j) * math.factorial(j)) for j in range(k))


def witness_k(p: float) -> int:
    """The k with 2k - 2 < p <= 2k - 1 or 2k - 1 < p < 2k."""
    return max(1, math.ceil(p / 2.0))


def is_even_integer(p: float) -> bool:
    return abs(p / 2.0 - round(p / 2.0)) * 2.0 <= _EVEN_TOL


def build_witness_points(z, y, k: int, eps: float) -> np.ndarray:
    """Rows x_0..x_{2k} on the great circle through z and y, then y itself."""
    z = np.asarray(z, dtype=float)
    y = np.asarray(y, dtype=float)
    if z.shape != y.shape or z.ndim != 1:
        raise DomainError("z and y must be vectors of the same dimension")
    if abs(np.linalg.norm(z) - 1.0) > _ORTHO_TOL or abs(np.linalg.norm(y) - 1.0) > _ORTHO_TOL:
        raise DomainError("z and y must be unit vectors")
    if abs(float(z @ y)) >= _ORTHO_TOL:
        raise DomainError(f"z and y must be orthogonal, <z, y> = {float(z @ y)!r}")
    if k < 1:
        raise DomainError(f"k must be >= 1, got {k}")
    if not 0 < eps < math.pi / (4 * k):
        raise DomainError(f"eps must lie in (0, pi/(4k)) = (0, {math.pi / (4 * k)!r}), got {eps!r}")
    angles = (np.arange(2 * k + 1) - k) * eps
    arc = np.cos(angles)[:, None] * z[None, :] + np.sin(angles)[:, None] * y[None, :]
    return np.vstack([arc, y[None, :]])


def _power_series_coeffs(p: float, count: int) -> np.ndarray:
    """Taylor coefficients in s = x^2 of cos(x)^p (power of a series with unit constant term)."""
    a = np.array([(-1) ** n / math.factorial(2 * n) for n in range(count)])
    b = np.zeros(count)
    b[0] = 1.0
    for n in range(1, count):
        ks = np.arange(1, n + 1)
        b[n] = np.sum(((p + 1.0) * ks - n) * a[1 : n + 1] * b[n - ks]) / n
    return b


def _even_moments(k: int, count: int) -> List[Fraction]:
    """M_{2n} = sum_{i,j} v_i v_j (i - j)^{2n}, exact."""
    c = [(-1) ** j * math.comb(2 * k, j) for j in range(2 * k + 1)]
    # autocorrelation of the binomial row by lag
    lags: Dict[int, int] = {}
    for i, ci in enumerate(c):
        for j, cj in enumerate(c):
            lags[i - j] = lags.get(i - j, 0) + ci * cj
    scale = math.factorial(2 * k) ** 2
    return [Fraction(sum(w * lag ** (2 * n) for lag, w in lags.items()), scale) for n in range(count)]


def first_block_value(k: int, p: float, eps: float) -> float:
    """sum_{i,j} v_i v_j cos^p((i - j) eps) through its Taylor series in eps.

    Moments below degree 4k vanish exactly, so the sum starts at eps^(4k) and
    keeps full relative precision where direct summation has lost it.
    """
    _check_k(k)
    if not 0 < eps < math.pi / (4 * k):
        raise DomainError(f"eps must lie in (0, pi/(4k)), got {eps!r}")
    count = 2 * k + _SERIES_TAIL
    gamma = _power_series_coeffs(p, count)
    moments = _even_moments(k, count)
    terms = []
    for n in range(2 * k, count):
        term = gamma[n] * float(moments[n] * Fraction(eps) ** (2 * n))
        terms.append(term)
        if len(terms) > 4 and abs(term) <= 1e-18 * abs(math.fsum(terms)):
            break
    return math.fsum(terms)


def first_block_direct(k: int, p: float, eps: float) -> float:
    """The same quantity summed directly in double precision."""
    v = vandermonde_kernel_vector(k)
    idx = np.arange(2 * k + 1)
    block = np.abs(np.cos((idx[:, None] - idx[None, :]) * eps)) ** p
    return float(v @ block @ v)


def cross_term(k: int, p: float, eps: float) -> float:
    v = vandermonde_kernel_vector(k)
    return math.fsum(v * np.abs(np.sin((np.arange(2 * k + 1) - k) * eps)) ** p)


@dataclass
class WitnessReport:
    """``quadratic_form_value`` is the authoritative series value; ``direct_value`` is
    the plain double-precision u^T A u, trustworthy only up to ``direct_rounding_bound``.
    """

    k: int
    p: float
    d: int
    eps: float
    points: np.ndarray
    u: np.ndarray
    alpha: float
    beta: float
    quadratic_form_value: float
    first_block: float
    cross: float
    direct_value: float
    direct_rounding_bound: float
    hadamard_bound: int
    value_source: str = "series"
    eps_trace: List[Tuple[float, float]] = field(default_factory=list)

    @property
    def direct_within_bound(self) -> bool:
        return abs(self.direct_value - self.quadratic_form_value) <= self.direct_rounding_bound + 1e-12

    def to_dict(self) -> Dict[str, object]:
        return {
            "k": self.k,
            "p": self.p,
            "d": self.d,
            "eps": self.eps,
            "points": self.points.tolist(),
            "u": self.u.tolist(),
            "alpha": self.alpha,
            "beta": self.beta,
            "quadratic_form_value": self.quadratic_form_value,
            "first_block": self.first_block,
            "cross_term": self.cross,
            "direct_value": self.direct_value,
            "direct_rounding_bound": self.direct_rounding_bound,
            "direct_within_bound": self.direct_within_bound,
            "value_source": self.value_source,
            "hadamard_bound": self.hadamard_bound,
            "eps_trace": [list(step) for step in self.eps_trace],
        }


def _default_pair(d: int) -> Tuple[np.ndarray, np.ndarray]:
    eye = np.eye(d)
    return eye[0], eye[1]


def non_pd_witness(
    p: float,
    d: int,
    eps: Optional[float] = None,
    z=None,
    y=None,
    margin: Optional[float] = None,
) -> WitnessReport:
    """Points and a vector u with u^T [|<x_i, x_j>|^p] u < 0."""
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    if is_even_integer(p):
        raise DomainError(f"p is an even integer (p={p!r}); |t|^p is positive definite")
    if d < 2:
        raise DomainError(f"dimension d must be >= 2, got {d}")
    margin = settings.witness_margin if margin is None else margin
    k = witness_k(p)
    _check_k(k)
    if z is None or y is None:
        z, y = _default_pair(d)
    z, y = np.asarray(z, dtype=float), np.asarray(y, dtype=float)
    if z.shape != (d,) or y.shape != (d,):
        raise DomainError(f"z and y must have dimension d={d}")
    eps = settings.witness_eps_factor / k if eps is None else eps

    trace: List[Tuple[float, float]] = []
    for _ in range(settings.witness_halvings + 1):
        points = build_witness_points(z, y, k, eps)
        a = first_block_value(k, p, eps)
        c = cross_term(k, p, eps)
        value = a / (c * c) - 1.0 if c != 0 else math.inf
        trace.append((eps, value))
        logger.debug("witness p=%g k=%d eps=%.3e value=%.6g", p, k, eps, value)
        if value < -margin:
            break
        eps /= 2.0
    else:
        raise NumericalError(
            f"no negative form for p={p!r} after {settings.witness_halvings} halvings; trace={trace}"
        )

    alpha, beta = 1.0 / abs(c), -math.copysign(1.0, c)
    v = vandermonde_kernel_vector(k)
    u = np.concatenate([alpha * v, [beta]])
    gram = np.abs(np.clip(points @ points.T, -1.0, 1.0)) ** p
    direct = float(u @ gram @ u)
    n = u.size
    bound = 16.0 * n * (1.0 + p) * np.finfo(float).eps * float(np.sum(np.abs(u))) ** 2
    logger.info("witness p=%g on S^%d: k=%d eps=%.3e value=%.12g", p, d - 1, k, eps, value)
    return WitnessReport(
        k=k,
        p=float(p),
        d=d,
        eps=eps,
        points=points,
        u=u,
        alpha=alpha,
        beta=beta,
        quadratic_form_value=value,
        first_block=a,
        cross=c,
        direct_value=direct,
        direct_rounding_bound=bound,
        hadamard_bound=hadamard_power_bound(p),
        eps_trace=trace,
    )


def hadamard_power_bound(p: float) -> int:
    """Fewest points a non-PD witness for |t|^p can have: ceil(2 + p/2)."""
    if not p > 0:
        raise DomainError(f"p must be positive, got {p}")
    return math.ceil(2.0 + p / 2.0)


def witness_size_ok(p: float) -> bool:
    """Whether the construction's 2k + 2 points meet the lower bound."""
    return 2 * witness_k(p) + 2 >= hadamard_power_bound(p)


def witness_scan(p_min: float, p_max: float, step: float, d: int) -> pd.DataFrame:
    """Witness outcome over a grid of p."""
    if not step > 0 or p_max < p_min or not p_min > 0:
        raise DomainError(f"bad scan range p_min={p_min}, p_max={p_max}, step={step}")
    count = int(math.floor((p_max - p_min) / step + 1e-9)) + 1
    rows = []
    for i in range(count):
        p = round(p_min + i * step, 12)
        if is_even_integer(p):
            rows.append({"p": p, "k": witness_k(p), "eps_final": math.nan, "form_value": math.nan, "status": "even"})
            continue
        try:
            report = non_pd_witness(p, d)
            rows.append(
                {"p": p, "k": report.k, "eps_final": report.eps, "form_value": report.quadratic_form_value, "status": "ok"}
            )
        except NumericalError as exc:
            logger.warning("witness scan failed at p=%g: %s", p, exc)
            rows.append({"p": p, "k": witness_k(p), "eps_final": math.nan, "form_value": math.nan, "status": "failed"})
    return pd.DataFrame(rows, columns=["p", "k", "eps_final", "form_value", "status"])


def orthogonal_support_pairs(config: SphericalConfig, p: float, tol: float = 1e-9) -> List[Dict[str, object]]:
    """Support atoms z, y with |<z, y>| < tol, each with the witness built at that pair.

    If a neighbourhood of z were contained in the support, the witness points
    would lie in it and contradict positive definiteness there.
    """
    support = config.points[config.weights > 0]
    index = np.flatnonzero(config.weights > 0)
    pairs = []
    for a in range(support.shape[0]):
        for b in range(a + 1, support.shape[0]):
            inner = float(support[a] @ support[b])
            if abs(inner) >= tol:
                continue
            z = support[a]
            y = support[b] - inner * z
            y = y / np.linalg.norm(y)
            report = non_pd_witness(p, config.d, z=z, y=y)
            pairs.append(
                {"i": int(index[a]), "j": int(index[b]), "inner": inner, "form_value": report.quadratic_form_value}
            )
    return pairs
