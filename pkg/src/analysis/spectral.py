"""
Gegenbauer machinery on [-1, 1].

Kernels on the sphere S^{d-1} are expanded as f ~ sum_n fhat_n P_n(t) where
P_n = ((n + lam) / lam) C_n^lam with lam = (d - 2) / 2, so that P_n(1) equals
the dimension of the degree-n harmonics. For d = 2 the factor degenerates and
the Chebyshev convention P_0 = 1, P_n = 2 T_n is used instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.special import beta, roots_jacobi

from src.config.settings import settings
from src.features.kernels import Kernel, PolynomialT
from src.utils.errors import DomainError, NumericalError
from src.utils.logger import get_logger

logger = get_logger(__name__)

_T_SLACK = 1e-12


def lam_of(d: int) -> float:
    if d < 2:
        raise DomainError(f"dimension d must be >= 2, got {d}")
    return (d - 2) / 2.0


def _check_t(t) -> np.ndarray:
    arr = np.asarray(t, dtype=float)
    if np.any(np.abs(arr) > 1.0 + _T_SLACK) or np.any(~np.isfinite(arr)):
        raise DomainError("argument t must lie in [-1, 1]")
    return np.clip(arr, -1.0, 1.0)


def gegenbauer_table(n_max: int, lam: float, t) -> np.ndarray:
    """Rows C_0^lam(t) .. C_{n_max}^lam(t); Chebyshev T_n when lam == 0."""
    if n_max < 0:
        raise DomainError(f"degree must be >= 0, got {n_max}")
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    t = _check_t(t)
    out = np.empty((n_max + 1,) + t.shape)
    out[0] = 1.0
    if n_max == 0:
        return out
    if lam == 0:
        out[1] = t
        for n in range(1, n_max):
            out[n + 1] = 2.0 * t * out[n] - out[n - 1]
        return out
    out[1] = 2.0 * lam * t
    for n in range(1, n_max):
        out[n + 1] = (2.0 * t * (n + lam) * out[n] - (n + 2.0 * lam - 1.0) * out[n - 1]) / (n + 1)
    return out


def gegenbauer_eval(n: int, lam: float, t):
    """C_n^lam(t) by the three-term recurrence (T_n(t) for lam = 0)."""
    value = gegenbauer_table(n, lam, t)[n]
    return float(value) if np.ndim(value) == 0 else value


def zonal_table(n_max: int, d: int, t) -> np.ndarray:
    """Normalized zonal functions P_0 .. P_{n_max} with P_n(1) = a_n^d."""
    lam = lam_of(d)
    table = gegenbauer_table(n_max, lam, t)
    n = np.arange(n_max + 1, dtype=float).reshape((-1,) + (1,) * (table.ndim - 1))
    if lam == 0:
        scale = np.where(n == 0, 1.0, 2.0)
    else:
        scale = (n + lam) / lam
    return table * scale


def harmonic_dim(n: int, d: int) -> int:
    """a_n^d = dim H_n^d, exact integer; NumericalError beyond 2**53."""
    if n < 0:
        raise DomainError(f"degree must be >= 0, got {n}")
    if d < 2:
        raise DomainError(f"dimension d must be >= 2, got {d}")
    if n == 0:
        return 1
    value = math.comb(n + d - 1, d - 1) - math.comb(n + d - 3, d - 1)
    if value > 2 ** 53:
        raise NumericalError(f"harmonic dimension a_{n}^{d} overflows double precision")
    return value


def gauss_gegenbauer_rule(m: int, lam: float) -> Tuple[np.ndarray, np.ndarray]:
    """Gauss rule for the weight (1 - t^2)^(lam - 1/2) on [-1, 1]."""
    if m < 1:
        raise DomainError(f"number of nodes must be >= 1, got {m}")
    if lam < 0:
        raise DomainError(f"lambda must be >= 0, got {lam}")
    nodes, weights = _jacobi(m, lam - 0.5, lam - 0.5)
    return nodes.copy(), weights.copy()


@lru_cache(maxsize=128)
def _jacobi(m: int, alpha: float, beta: float) -> Tuple[np.ndarray, np.ndarray]:
    nodes, weights = roots_jacobi(m, alpha, beta)
    return np.asarray(nodes, dtype=float), np.asarray(weights, dtype=float)


@lru_cache(maxsize=128)
def composite_rule(
    lam: float, singularities: Tuple[Tuple[float, float], ...], m: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Quadrature for f(t) (1 - t^2)^(lam - 1/2) dt, split where f is not smooth.

    ``singularities`` holds pairs (t0, e) meaning f ~ |t - t0|^e near t0. Each
    piece between consecutive split points gets a Gauss-Jacobi rule whose
    exponents absorb the weight's endpoint factor at -1 or 1 and the kernel's
    power at the piece ends. The returned weights are exact for f of that form
    times a polynomial; they are not meant for integrating smooth functions.
    """
    a = lam - 0.5
    powers: Dict[float, float] = {}
    for t0, e in singularities:
        powers[float(t0)] = max(powers.get(float(t0), 0.0), float(e))
    cuts = sorted(t0 for t0 in powers if -1.0 < t0 < 1.0)
    if not cuts and not any(powers.values()):
        return _jacobi(m, a, a)
    edges = [-1.0] + cuts + [1.0]
    nodes: List[np.ndarray] = []
    weights: List[np.ndarray] = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        half = 0.5 * (hi - lo)
        e_hi, e_lo = powers.get(hi, 0.0), powers.get(lo, 0.0)
        right = (a if hi == 1.0 else 0.0) + e_hi
        left = (a if lo == -1.0 else 0.0) + e_lo
        s, w = _jacobi(m, right, left)
        t = lo + half * (s + 1.0)
        w = w * half ** (1.0 + right + left)
        if hi != 1.0:
            w = w * (1.0 - t) ** a
        if lo != -1.0:
            w = w * (1.0 + t) ** a
        if e_hi:
            w = w / (hi - t) ** e_hi
        if e_lo:
            w = w / (t - lo) ** e_lo
        nodes.append(t)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def nu_mass(lam: float) -> float:
    """Integral of (1 - t^2)^(lam - 1/2) over [-1, 1]."""
    return float(beta(0.5, lam + 0.5))


def _marginal_mean(values: np.ndarray, weights: np.ndarray, lam: float) -> np.ndarray:
    return values @ weights / nu_mass(lam)


@dataclass(frozen=True)
class GegenbauerExpansion:
    """Coefficients fhat_0..fhat_N of a kernel on S^{d-1}."""

    d: int
    coeffs: np.ndarray
    tol: float = 1e-9
    truncation_error_bound: float = 0.0
    kernel: str = ""
    lam: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "lam", lam_of(self.d))
        c = np.array(self.coeffs, dtype=float).reshape(-1)
        if c.size == 0:
            raise DomainError("expansion needs at least one coefficient")
        if not np.all(np.isfinite(c)):
            raise NumericalError("expansion coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_max(self) -> int:
        return self.coeffs.size - 1

    @property
    def normalization(self) -> str:
        return "chebyshev-d2" if self.d == 2 else "gegenbauer"

    def evaluate(self, t):
        return expansion_eval(self, t)


def expand_kernel(
    kernel: Kernel,
    d: int,
    n_max: Optional[int] = None,
    m_quad: Optional[int] = None,
    tol: Optional[float] = None,
) -> GegenbauerExpansion:
    """Expand ``kernel`` on S^{d-1} up to degree ``n_max``.

    fhat_n = E[f(t) P_n(t)] / a_n^d, the expectation taken under the marginal
    of sigma on [-1, 1]. The error bound combines the residual on a check grid,
    the change under doubled quadrature and the kernel's interpolation error.
    """
    n_max = settings.default_nmax if n_max is None else n_max
    if n_max < 0:
        raise DomainError(f"n_max must be >= 0, got {n_max}")
    tol = settings.coeff_tol if tol is None else tol
    m = m_quad or max(settings.min_quad_nodes, 2 * n_max + 16)
    if m < n_max + 1:
        raise DomainError(f"m_quad={m} cannot integrate degree {2 * n_max} exactly")
    lam_of(d)

    coeffs = _coefficients(kernel, d, n_max, m)
    doubled = _coefficients(kernel, d, n_max, 2 * m)
    dims = np.array([harmonic_dim(n, d) for n in range(n_max + 1)], dtype=float)
    quad_change = float(np.sum(np.abs(doubled - coeffs) * dims))

    grid = np.cos(np.linspace(0.0, np.pi, 513))
    residual = float(np.max(np.abs(kernel(grid) - coeffs @ zonal_table(n_max, d, grid))))
    bound = residual + quad_change + kernel.interpolation_error
    if isinstance(kernel, PolynomialT) and kernel.degree <= n_max:
        bound = quad_change + residual
    logger.debug("expanded %s on S^%d: n_max=%d m=%d bound=%.3e", kernel.literal, d - 1, n_max, m, bound)
    return GegenbauerExpansion(d=d, coeffs=coeffs, tol=tol, truncation_error_bound=bound, kernel=kernel.literal)


def _coefficients(kernel: Kernel, d: int, n_max: int, m: int) -> np.ndarray:
    nodes, weights = composite_rule(lam_of(d), tuple(kernel.singularities), m)
    values = np.asarray(kernel(nodes), dtype=float)
    if not np.all(np.isfinite(values)):
        raise NumericalError(f"kernel {kernel.literal} is not finite at a quadrature node")
    basis = zonal_table(n_max, d, nodes)
    dims = np.array([harmonic_dim(n, d) for n in range(n_max + 1)], dtype=float)
    return _marginal_mean(basis * values, weights, lam_of(d)) / dims


def expansion_eval(exp: GegenbauerExpansion, t):
    """Partial sum sum_n fhat_n P_n(t)."""
    t = _check_t(t)
    value = np.tensordot(exp.coeffs, zonal_table(exp.n_max, exp.d, t), axes=(0, 0))
    return float(value) if np.ndim(value) == 0 else value


@dataclass(frozen=True)
class PDClassification:
    n_plus: Tuple[int, ...]
    n_minus: Tuple[int, ...]
    pd_up_to_constant: bool
    tol: float

    def to_dict(self) -> Dict[str, object]:
        return {
            "n_plus": list(self.n_plus),
            "n_minus": list(self.n_minus),
            "pd_up_to_constant": self.pd_up_to_constant,
            "tol": self.tol,
        }


def _effective_tol(exp: GegenbauerExpansion, tol: Optional[float]) -> float:
    tol = exp.tol if tol is None else tol
    if not tol > 0:
        raise DomainError(f"tol must be positive, got {tol}")
    scale = float(np.max(np.abs(exp.coeffs)))
    return tol * scale if scale > 0 else tol


def classify_pd(exp: GegenbauerExpansion, tol: Optional[float] = None) -> PDClassification:
    """Split degrees by coefficient sign; the constant term does not count."""
    eff = _effective_tol(exp, tol)
    plus = tuple(int(n) for n in np.flatnonzero(exp.coeffs > eff))
    minus = tuple(int(n) for n in np.flatnonzero(exp.coeffs < -eff))
    return PDClassification(
        n_plus=plus,
        n_minus=minus,
        pd_up_to_constant=not any(n >= 1 for n in minus),
        tol=eff,
    )


def minimizer_regime(exp: GegenbauerExpansion, tol: Optional[float] = None) -> str:
    """Name the special minimizer the coefficient signs force, if any."""
    eff = _effective_tol(exp, tol)
    c = np.where(np.abs(exp.coeffs) > eff, exp.coeffs, 0.0)[1:]
    n = np.arange(1, exp.n_max + 1)
    if c.size and np.all(c <= 0) and np.any(c < 0):
        return "dirac"
    # every centrally symmetric measure is then a minimizer, antipodal pairs included
    even, odd = c[n % 2 == 0], c[n % 2 == 1]
    if c.size and np.all(even == 0) and np.all(odd >= 0) and np.any(odd > 0):
        return "centrally-symmetric"
    signed = np.where(n % 2 == 1, c, -c)
    if c.size and np.all(signed >= 0) and np.any(c != 0):
        return "antipodal"
    if np.all(c >= 0):
        return "uniform"
    return "undetermined"


def sigma_energy(kernel: Kernel, d: int, m_quad: Optional[int] = None, rtol: Optional[float] = None) -> float:
    """I_f(sigma) as a weighted integral over [-1, 1].

    Nodes are doubled until two successive rules agree to ``rtol``.
    """
    lam = lam_of(d)
    rtol = settings.sigma_rtol if rtol is None else rtol
    m = m_quad or settings.min_quad_nodes
    breaks = tuple(kernel.singularities)
    mass = nu_mass(lam)

    def integrate(nodes_count: int) -> float:
        nodes, weights = composite_rule(lam, breaks, nodes_count)
        return math.fsum(np.asarray(kernel(nodes), dtype=float) * weights) / mass

    previous = integrate(m)
    while True:
        m *= 2
        current = integrate(m)
        change = abs(current - previous)
        if change <= rtol * max(1.0, abs(current)):
            return current
        if 2 * m > settings.max_quad_nodes:
            raise NumericalError(
                f"sigma energy of {kernel.literal} on S^{d - 1} not converged: "
                f"last change {change:.3e} at {m} nodes"
            )
        previous = current


def support_bound(exp: GegenbauerExpansion, tol: Optional[float] = None) -> int:
    """Sum of a_n^d over n in N_+ and n = 0."""
    cls = classify_pd(exp, tol)
    degrees = sorted(set(cls.n_plus) | {0})
    return int(sum(harmonic_dim(n, exp.d) for n in degrees))


def expansion_to_dict(exp: GegenbauerExpansion, tol: Optional[float] = None) -> Dict[str, object]:
    cls = classify_pd(exp, tol)
    return {
        "kernel": exp.kernel,
        "d": exp.d,
        "lambda": exp.lam,
        "coeffs": exp.coeffs.tolist(),
        "tol": cls.tol,
        "normalization": exp.normalization,
        "truncation_error_bound": exp.truncation_error_bound,
    }
