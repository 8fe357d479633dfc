"""Periodic Fourier representation on [0, 2*pi).

A field is stored by its Fourier coefficients ``c_k`` for wavenumbers
``k = -N, ..., N`` so that ``f(x) = sum_k c_k exp(i k x)``.  With this
convention ``||f||_{L^2}^2 = 2*pi * sum_k |c_k|^2``; every norm and
functional in the package carries the same factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
import scipy.fft as sfft

TWO_PI = 2.0 * math.pi
MAX_SOBOLEV_INDEX = 4.0
MAX_GRID_SIZE = 1 << 22


class GridSizeError(ValueError):
    """Requested physical grid exceeds the configured maximum."""


def wavenumbers(num_modes: int) -> np.ndarray:
    return np.arange(-num_modes, num_modes + 1)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Band-limited periodic complex field.

    Parameters
    ----------
    coeffs : array_like
        Complex coefficients in ``k = -N..N`` order (length ``2N + 1``).
    """

    coeffs: np.ndarray

    domain_length: ClassVar[float] = TWO_PI

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size % 2 != 1 or c.size < 3:
            raise ValueError(f"coeffs must be 1-D with odd length 2N+1 >= 3, got shape {c.shape}")
        if not np.all(np.isfinite(c)):
            raise ValueError("SpectralField coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def num_modes(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def k(self) -> np.ndarray:
        return wavenumbers(self.num_modes)

    @classmethod
    def zeros(cls, num_modes: int) -> "SpectralField":
        return cls(np.zeros(2 * num_modes + 1, dtype=np.complex128))

    @classmethod
    def from_modes(cls, num_modes: int, modes: dict[int, complex]) -> "SpectralField":
        c = np.zeros(2 * num_modes + 1, dtype=np.complex128)
        for k, value in modes.items():
            if abs(k) > num_modes:
                raise ValueError(f"wavenumber {k} outside -{num_modes}..{num_modes}")
            c[k + num_modes] += value
        return cls(c)

    @classmethod
    def from_physical(cls, values: np.ndarray, num_modes: int) -> "SpectralField":
        return cls(to_spectral(values, num_modes))

    def mode(self, k: int) -> complex:
        return complex(self.coeffs[k + self.num_modes])

    def __add__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        _check_same_grid(self, other)
        return SpectralField(self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return SpectralField(self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(-self.coeffs)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SpectralField):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(np.array_equal(self.coeffs, other.coeffs))

    __hash__ = None  # type: ignore[assignment]

    def phase(self, theta: float) -> "SpectralField":
        """Multiply by the constant phase ``exp(i*theta)``."""
        return SpectralField(self.coeffs * np.exp(1j * theta))

    def translate(self, x0: float) -> "SpectralField":
        """Return ``f(x - x0)``."""
        return SpectralField(self.coeffs * np.exp(-1j * self.k * x0))

    def derivative(self, order: int = 1) -> "SpectralField":
        return SpectralField(self.coeffs * (1j * self.k) ** order)

    def resample(self, num_modes: int) -> "SpectralField":
        """Zero-pad or truncate to ``num_modes``."""
        return SpectralField(resize_coeffs(self.coeffs, num_modes))


def _check_same_grid(a: SpectralField, b: SpectralField) -> None:
    if a.num_modes != b.num_modes:
        raise ValueError(f"mode count mismatch: {a.num_modes} vs {b.num_modes}")


def resize_coeffs(coeffs: np.ndarray, num_modes: int) -> np.ndarray:
    n_old = (coeffs.size - 1) // 2
    out = np.zeros(2 * num_modes + 1, dtype=np.complex128)
    n = min(n_old, num_modes)
    out[num_modes - n : num_modes + n + 1] = coeffs[n_old - n : n_old + n + 1]
    return out


@dataclass(frozen=True)
class Cutoff:
    """Sharp Fourier cutoff: keep ``|k| <= K``.  ``K=None`` means no cutoff."""

    K: int | None = None

    def __post_init__(self):
        if self.K is not None:
            if isinstance(self.K, bool) or int(self.K) != self.K or self.K < 0:
                raise ValueError(f"cutoff K must be a nonnegative integer or None, got {self.K!r}")
            object.__setattr__(self, "K", int(self.K))

    @classmethod
    def from_eps(cls, eps: float) -> "Cutoff":
        if not eps > 0:
            raise ValueError("eps must be positive")
        return cls(math.ceil(1.0 / eps))

    @property
    def is_identity(self) -> bool:
        return self.K is None

    def check(self, num_modes: int) -> None:
        if self.K is not None and self.K > num_modes:
            raise ValueError(f"cutoff K={self.K} exceeds field num_modes N={num_modes}")

    def mask(self, num_modes: int) -> np.ndarray:
        """Boolean mask of retained modes in ``k = -N..N`` order."""
        if self.K is None:
            return np.ones(2 * num_modes + 1, dtype=bool)
        return np.abs(wavenumbers(num_modes)) <= self.K


INFINITE_CUTOFF = Cutoff(None)


def _check_index(s: float) -> float:
    s = float(s)
    if not 0.0 <= s <= MAX_SOBOLEV_INDEX:
        raise ValueError(f"Sobolev index must lie in [0, {MAX_SOBOLEV_INDEX}], got {s}")
    return s


def grid_size(num_modes: int, oversample: int = 1) -> int:
    if oversample < 1:
        raise ValueError("oversample must be >= 1")
    m = sfft.next_fast_len(oversample * (2 * num_modes + 1))
    if m > MAX_GRID_SIZE:
        raise GridSizeError(f"grid size {m} exceeds maximum {MAX_GRID_SIZE}")
    return m


def grid_points(m: int) -> np.ndarray:
    return TWO_PI * np.arange(m) / m


def coeffs_to_grid(coeffs: np.ndarray, m: int) -> np.ndarray:
    n = (coeffs.size - 1) // 2
    buf = np.zeros(m, dtype=np.complex128)
    buf[: n + 1] = coeffs[n:]
    if n:
        buf[-n:] = coeffs[:n]
    return sfft.ifft(buf, norm="forward")


def to_spectral(values: np.ndarray, num_modes: int) -> np.ndarray:
    """Coefficients ``k = -N..N`` of equispaced samples on [0, 2*pi)."""
    m = values.shape[-1]
    if m < 2 * num_modes + 1:
        raise ValueError(f"{m} samples cannot resolve {num_modes} modes")
    buf = sfft.fft(values, norm="forward")
    n = num_modes
    out = np.empty(2 * n + 1, dtype=np.complex128)
    out[n:] = buf[: n + 1]
    if n:
        out[:n] = buf[-n:]
    return out


def to_physical(f: SpectralField, oversample: int = 1) -> np.ndarray:
    """Sample ``f`` on ``M >= oversample*(2N+1)`` equispaced points.

    ``M`` is rounded up to a fast FFT length; ``grid_points(M)`` gives the
    abscissae.
    """
    return coeffs_to_grid(f.coeffs, grid_size(f.num_modes, oversample))


def project(f: SpectralField, c: Cutoff) -> SpectralField:
    c.check(f.num_modes)
    if c.is_identity:
        return f
    return SpectralField(np.where(c.mask(f.num_modes), f.coeffs, 0.0))


def sobolev_weights(num_modes: int, s: float) -> np.ndarray:
    k = np.abs(wavenumbers(num_modes)).astype(float)
    return 1.0 + k ** (2.0 * s)


def hs_norm(f: SpectralField, s: float) -> float:
    """``sqrt(2*pi * sum_k (1 + |k|^{2s}) |c_k|^2)``; ``s = 0`` is the plain L^2 norm."""
    s = _check_index(s)
    if s == 0.0:
        return math.sqrt(TWO_PI * float(np.sum(np.abs(f.coeffs) ** 2)))
    w = sobolev_weights(f.num_modes, s)
    return math.sqrt(TWO_PI * float(np.sum(w * np.abs(f.coeffs) ** 2)))


def l2_norm(f: SpectralField) -> float:
    return hs_norm(f, 0.0)


def inner(f: SpectralField, g: SpectralField) -> complex:
    """Plancherel inner product ``int f * conj(g) dx``."""
    _check_same_grid(f, g)
    return complex(TWO_PI * np.vdot(g.coeffs, f.coeffs))


def mollifier_gain_probe(f: SpectralField, s: float, c: Cutoff) -> float:
    """``||J f||_{H^s} / (K^s ||f||_{L^2})``; never exceeds sqrt(2) for ``K >= 1``."""
    s = _check_index(s)
    if c.K is None:
        raise ValueError("gain probe needs a finite cutoff")
    if c.K < 1:
        raise ValueError("gain probe needs K >= 1")
    norm0 = l2_norm(f)
    if norm0 == 0.0:
        raise ValueError("gain probe undefined for the zero field")
    return hs_norm(project(f, c), s) / (c.K**s * norm0)


INTERPOLATION_CONSTANT = math.sqrt(2.0)


def interpolation_check(f: SpectralField, m: float, l: float) -> bool:
    """Check ``||f||_{H^m} <= sqrt(2) ||f||_{H^l}^{m/l} ||f||_{L^2}^{1-m/l}``."""
    m, l = _check_index(m), _check_index(l)
    if m > l:
        raise ValueError(f"need m <= l, got m={m}, l={l}")
    norm0 = l2_norm(f)
    if norm0 == 0.0:
        raise ValueError("interpolation check undefined for the zero field")
    if l == 0.0:
        return True
    theta = m / l
    rhs = INTERPOLATION_CONSTANT * hs_norm(f, l) ** theta * norm0 ** (1.0 - theta)
    # relative slack covers round-off in the two independent sums
    return hs_norm(f, m) <= rhs * (1.0 + 1e-12)


def semigroup_phases(num_modes: int, t: float, c: Cutoff) -> np.ndarray:
    """Diagonal symbol ``exp(-i k^2 t)`` inside the cutoff, 1 outside."""
    k = wavenumbers(num_modes).astype(float)
    ph = np.exp(-1j * k * k * t)
    if c.K is not None:
        ph[np.abs(k) > c.K] = 1.0
    return ph


def free_semigroup(f: SpectralField, t: float, c: Cutoff = INFINITE_CUTOFF) -> SpectralField:
    """Free Schrodinger flow ``exp(i J d_xx t)`` applied to ``f``."""
    return SpectralField(f.coeffs * semigroup_phases(f.num_modes, t, c))


def random_field(
    rng: np.random.Generator,
    num_modes: int,
    band: int | None = None,
    decay: float = 0.0,
    scale: float = 1.0,
) -> SpectralField:
    """Random band-limited field with coefficients ~ scale * (1+|k|)^-decay."""
    band = num_modes if band is None else band
    k = wavenumbers(num_modes)
    c = rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)
    c *= scale * (1.0 + np.abs(k)) ** (-decay)
    c[np.abs(k) > band] = 0.0
    return SpectralField(c)
