"""
Interaction kernels f: [-1, 1] -> R.

A kernel is a potential evaluated at inner products of unit vectors. Each
variant knows its derivative (for gradient descent), the interior points where
it is not smooth (so quadrature can be split there) and its string literal.
"""
from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Tuple

import numpy as np
from scipy.interpolate import PchipInterpolator, make_interp_spline

from src.utils.errors import DomainError

_DERIV_CLIP = 1.0 - 1e-12


def _clip(t) -> np.ndarray:
    return np.clip(np.asarray(t, dtype=float), -1.0, 1.0)


class Kernel(ABC):
    """Base class for all kernels."""

    @abstractmethod
    def __call__(self, t) -> np.ndarray:
        ...

    @abstractmethod
    def derivative(self, t) -> np.ndarray:
        ...

    @property
    @abstractmethod
    def literal(self) -> str:
        ...

    @property
    def singularities(self) -> Tuple[Tuple[float, float], ...]:
        """Points of non-smoothness with the power |t - t0|^e the kernel behaves like there."""
        return ()

    @property
    def kink_at_zero(self) -> bool:
        return False

    @property
    def interpolation_error(self) -> float:
        return 0.0

    def is_even(self, tol: float = 1e-12) -> bool:
        t = np.linspace(0.0, 1.0, 257)
        return bool(np.max(np.abs(self(t) - self(-t))) <= tol)

    def __str__(self) -> str:
        return self.literal


@dataclass(frozen=True)
class PFrame(Kernel):
    """f(t) = |t|^p."""

    p: float

    def __post_init__(self):
        if not self.p > 0:
            raise DomainError(f"PFrame requires p > 0, got {self.p}")

    def __call__(self, t):
        return np.abs(_clip(t)) ** self.p

    def derivative(self, t):
        t = _clip(t)
        a = np.abs(t)
        safe = np.where(a > 0, a, 1.0)
        return np.where(a > 0, self.p * np.sign(t) * safe ** (self.p - 1.0), 0.0)

    @property
    def even_integer(self) -> bool:
        return abs(self.p / 2 - round(self.p / 2)) < 1e-12

    @property
    def singularities(self):
        return () if self.even_integer else ((0.0, float(self.p)),)

    @property
    def kink_at_zero(self):
        return self.p <= 1

    @property
    def literal(self):
        return f"pframe:{self.p!r}"


@dataclass(frozen=True, eq=False)
class PolynomialT(Kernel):
    """Polynomial in t, coefficients low to high."""

    coeffs: Tuple[float, ...]

    def __post_init__(self):
        if len(self.coeffs) == 0:
            raise DomainError("PolynomialT needs at least one coefficient")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def degree(self) -> int:
        nz = np.nonzero(self.coeffs)[0]
        return int(nz[-1]) if nz.size else 0

    def __call__(self, t):
        return np.polynomial.polynomial.polyval(_clip(t), self.coeffs)

    def derivative(self, t):
        return np.polynomial.polynomial.polyval(_clip(t), np.polynomial.polynomial.polyder(self.coeffs))

    def is_even(self, tol: float = 1e-12) -> bool:
        return all(abs(c) <= tol for c in self.coeffs[1::2])

    @property
    def literal(self):
        return "poly:" + ",".join(repr(c) for c in self.coeffs)


@dataclass(frozen=True)
class Causal(Kernel):
    """f(t) = max(0, 2 tau^2 (1 + t)(2 - tau^2 (1 - t)))."""

    tau: float

    def __post_init__(self):
        if not self.tau > 0:
            raise DomainError(f"Causal requires tau > 0, got {self.tau}")

    def _raw(self, t):
        s = self.tau ** 2
        return 2.0 * s * (1.0 + t) * (2.0 - s * (1.0 - t))

    def __call__(self, t):
        return np.maximum(0.0, self._raw(_clip(t)))

    def derivative(self, t):
        t = _clip(t)
        s = self.tau ** 2
        return np.where(self._raw(t) > 0, 4.0 * s * (1.0 + s * t), 0.0)

    @property
    def singularities(self):
        t0 = 1.0 - 2.0 / self.tau ** 2
        return ((t0, 0.0),) if -1.0 < t0 < 1.0 else ()

    @property
    def literal(self):
        return f"causal:{self.tau!r}"


@dataclass(frozen=True)
class AcuteAngle(Kernel):
    """f(t) = arccos|t|, the acute angle between the lines through x and y."""

    def __call__(self, t):
        return np.arccos(np.abs(_clip(t)))

    def derivative(self, t):
        t = np.clip(_clip(t), -_DERIV_CLIP, _DERIV_CLIP)
        return np.where(t != 0, -np.sign(t) / np.sqrt(1.0 - t * t), 0.0)

    @property
    def singularities(self):
        # arccos|t| ~ sqrt(2(1 - |t|)) at both ends
        return ((-1.0, 0.5), (0.0, 0.0), (1.0, 0.5))

    @property
    def kink_at_zero(self):
        return True

    @property
    def literal(self):
        return "acute"


@dataclass(frozen=True)
class ArcsinAbs(Kernel):
    """f(t) = arcsin|t|; minimizing it maximizes the acute angle kernel."""

    def __call__(self, t):
        return np.arcsin(np.abs(_clip(t)))

    def derivative(self, t):
        t = np.clip(_clip(t), -_DERIV_CLIP, _DERIV_CLIP)
        return np.where(t != 0, np.sign(t) / np.sqrt(1.0 - t * t), 0.0)

    @property
    def singularities(self):
        return ((0.0, 0.0),)

    @property
    def kink_at_zero(self):
        return True

    @property
    def literal(self):
        return "arcsin"


@dataclass(frozen=True, eq=False)
class Tabulated(Kernel):
    """Kernel sampled on an increasing grid in [-1, 1].

    Order 1 interpolates linearly, orders 2 and 3 use the monotone PCHIP
    cubic. Arguments outside the sampled range are clamped to its ends.
    """

    t_samples: np.ndarray
    values: np.ndarray
    order: int = 3
    source: str = ""
    _interp: object = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        t = np.asarray(self.t_samples, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != v.shape or t.size < 2:
            raise DomainError("Tabulated kernel needs matching 1-D samples (at least two)")
        if np.any(np.diff(t) <= 0):
            raise DomainError("Tabulated abscissae must be strictly increasing")
        if t[0] < -1.0 or t[-1] > 1.0:
            raise DomainError("Tabulated abscissae must lie in [-1, 1]")
        if not np.all(np.isfinite(v)):
            raise DomainError("Tabulated values must be finite")
        if self.order not in (1, 2, 3):
            raise DomainError(f"interpolation order must be 1, 2 or 3, got {self.order}")
        if self.order == 1 or t.size < 3:
            interp = make_interp_spline(t, v, k=1)
        else:
            interp = PchipInterpolator(t, v, extrapolate=False)
        object.__setattr__(self, "t_samples", t)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "_interp", interp)

    def _inside(self, t):
        return np.clip(_clip(t), self.t_samples[0], self.t_samples[-1])

    def __call__(self, t):
        return np.asarray(self._interp(self._inside(t)), dtype=float)

    def derivative(self, t):
        return np.asarray(self._interp.derivative()(self._inside(t)), dtype=float)

    @property
    def singularities(self):
        inner = self.t_samples[(self.t_samples > -1.0) & (self.t_samples < 1.0)]
        return tuple((float(x), 0.0) for x in inner)

    @property
    def interpolation_error(self) -> float:
        # gap between the chosen interpolant and the chord at every midpoint
        if self.order == 1 or self.t_samples.size < 3:
            mids = 0.5 * (self.t_samples[1:] + self.t_samples[:-1])
            cubic = PchipInterpolator(self.t_samples, self.values)(mids)
            return float(np.max(np.abs(cubic - self(mids))))
        mids = 0.5 * (self.t_samples[1:] + self.t_samples[:-1])
        chord = 0.5 * (self.values[1:] + self.values[:-1])
        return float(np.max(np.abs(self(mids) - chord)))

    @property
    def literal(self):
        return f"table:{self.source}" if self.source else "table:<inline>"


def parse_kernel(literal: str) -> Kernel:
    """Parse ``pframe:3``, ``poly:1,0,-2``, ``causal:1.5``, ``acute``, ``arcsin`` or ``table:path.csv``."""
    text = literal.strip()
    name, _, arg = text.partition(":")
    name = name.lower()
    try:
        if name == "pframe":
            return PFrame(float(arg))
        if name == "poly":
            return PolynomialT(tuple(float(c) for c in arg.split(",") if c.strip()))
        if name == "causal":
            return Causal(float(arg))
    except ValueError as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"cannot parse kernel literal {literal!r}: {exc}") from exc
    if name == "acute" and not arg:
        return AcuteAngle()
    if name == "arcsin" and not arg:
        return ArcsinAbs()
    if name == "table" and arg:
        from src.utils.data_loader import load_table_kernel

        path, _, order = arg.partition("@")
        return load_table_kernel(Path(path), order=int(order) if order else 3)
    raise DomainError(f"unknown kernel literal {literal!r}")


def constant_kernel(value: float = 1.0) -> PolynomialT:
    return PolynomialT((float(value),))
