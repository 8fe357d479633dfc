"""Conserved functionals and the small-data threshold machinery.

All integrals are over one period with the ``2*pi`` Plancherel factor of
``spectral``.  Quadratic functionals use Plancherel sums; integrands with
fractional powers of ``|u|`` use the trapezoid rule on an oversampled grid,
which is spectrally accurate for smooth periodic integrands.

The Hamiltonian potential ``conj(u)^{s+1} D_x u^{s+1} / (s+1)^2`` is
evaluated through the chain-rule identity

    conj(u)^{s+1} D_x u^{s+1} = -i (s+1) |u|^{2s} conj(u) u_x,

whose real part integrates to ``(s+1) * int |u|^{2s} Im(conj(u) u_x)``
(the imaginary part is an exact derivative).  No complex fractional power
is ever formed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields

import numpy as np

from .model import abs_power
from .spectral import (
    INFINITE_CUTOFF,
    TWO_PI,
    Cutoff,
    SpectralField,
    coeffs_to_grid,
    grid_size,
    hs_norm,
    project,
)

DEFAULT_OVERSAMPLE = 2


@dataclass(frozen=True)
class InvariantRecord:
    t: float
    mass: float
    momentum: float
    hamiltonian: float
    hamiltonian_eps: float
    energy_eps: float
    h1_norm: float
    h2_norm: float

    def __post_init__(self):
        for f in fields(self):
            if not math.isfinite(getattr(self, f.name)):
                raise ValueError(f"InvariantRecord.{f.name} is not finite")

    def as_row(self) -> tuple[float, ...]:
        return tuple(getattr(self, f.name) for f in fields(self))


CSV_COLUMNS = ("t", "mass", "momentum", "hamiltonian", "hamiltonian_eps", "energy_eps", "h1", "h2")


def _grid(f: SpectralField, oversample: int) -> tuple[np.ndarray, np.ndarray, int]:
    m = grid_size(f.num_modes, oversample)
    u = coeffs_to_grid(f.coeffs, m)
    ux = coeffs_to_grid(1j * f.k * f.coeffs, m)
    return u, ux, m


def mass(f: SpectralField) -> float:
    return TWO_PI * float(np.sum(np.abs(f.coeffs) ** 2))


def momentum(f: SpectralField) -> float:
    """``int -1/2 conj(u) D_x u dx = -pi * sum_k k |c_k|^2``."""
    return -0.5 * TWO_PI * float(np.sum(f.k * np.abs(f.coeffs) ** 2))


def mass_quadrature(f: SpectralField, oversample: int = DEFAULT_OVERSAMPLE) -> float:
    u, _, m = _grid(f, oversample)
    return TWO_PI / m * float(np.sum(u.real**2 + u.imag**2))


def momentum_quadrature(f: SpectralField, oversample: int = DEFAULT_OVERSAMPLE) -> float:
    u, ux, m = _grid(f, oversample)
    return -0.5 * TWO_PI / m * float(np.sum((np.conj(u) * ux).imag))


def _potential(v: SpectralField, sigma: float, oversample: int) -> float:
    u, ux, m = _grid(v, oversample)
    density = abs_power(u.real**2 + u.imag**2, sigma) * (np.conj(u) * ux).imag
    return TWO_PI / m * float(np.sum(density)) / (sigma + 1.0)


def hamiltonian(
    f: SpectralField,
    sigma: float,
    c: Cutoff = INFINITE_CUTOFF,
    oversample: int = DEFAULT_OVERSAMPLE,
) -> float:
    """``||f_x||^2 + (sigma+1)^-1 int |v|^{2 sigma} Im(conj(v) v_x)`` with ``v = J f``."""
    kinetic = TWO_PI * float(np.sum((f.k * np.abs(f.coeffs)) ** 2))
    return kinetic + _potential(project(f, c), sigma, oversample)


def energy_constant(sigma: float) -> float:
    return 1.0 / (2.0 * (sigma + 1.0) ** 2)


def energy(
    f: SpectralField,
    sigma: float,
    c: Cutoff = INFINITE_CUTOFF,
    oversample: int = DEFAULT_OVERSAMPLE,
) -> float:
    """``H_eps + int |f|^2 / 2 + cbar |J f|^{4 sigma + 2}``, ``cbar = 1/(2 (sigma+1)^2)``."""
    v = project(f, c)
    u, _, m = _grid(v, oversample)
    high = TWO_PI / m * float(np.sum(abs_power(u.real**2 + u.imag**2, 2.0 * sigma + 1.0)))
    return hamiltonian(f, sigma, c, oversample) + 0.5 * mass(f) + energy_constant(sigma) * high


def lp_integral(f: SpectralField, p: float, oversample: int = DEFAULT_OVERSAMPLE) -> float:
    """``int |f|^p dx`` by trapezoid quadrature."""
    u, _, m = _grid(f, oversample)
    return TWO_PI / m * float(np.sum(abs_power(u.real**2 + u.imag**2, 0.5 * p)))


def record(
    f: SpectralField,
    t: float,
    sigma: float,
    c: Cutoff = INFINITE_CUTOFF,
    oversample: int = DEFAULT_OVERSAMPLE,
) -> InvariantRecord:
    return InvariantRecord(
        t=float(t),
        mass=mass(f),
        momentum=momentum(f),
        hamiltonian=hamiltonian(f, sigma, INFINITE_CUTOFF, oversample),
        hamiltonian_eps=hamiltonian(f, sigma, c, oversample),
        energy_eps=energy(f, sigma, c, oversample),
        h1_norm=hs_norm(f, 1),
        h2_norm=hs_norm(f, 2),
    )


# --- small-data threshold -------------------------------------------------


def sup_norm_constant(num_modes: int | None = None) -> float:
    """``C`` with ``||u||_inf <= C ||u||_{H^1}`` for fields with ``|k| <= N``.

    Cauchy-Schwarz on ``sum |c_k|`` gives ``C^2 = sum_k (1+k^2)^-1 / (2 pi)``;
    the infinite sum is ``pi coth(pi)``.
    """
    if num_modes is None:
        s = math.pi / math.tanh(math.pi)
    else:
        k = np.arange(-num_modes, num_modes + 1, dtype=float)
        s = float(np.sum(1.0 / (1.0 + k * k)))
    return math.sqrt(s / TWO_PI)


def compute_c_sigma(sigma: float, num_modes: int | None = None) -> float:
    """Constant in ``(sigma+1)^-1 ||u||_{L^{4s+2}}^{2s+1} ||u_x|| <= c_sigma ||u||_{H^1}^{2s+2}``.

    Chain used:

    * ``||u||_{L^{4s+2}}^{2s+1} = (int |u|^{4s+2})^{1/2} <= ||u||_inf^{2s} ||u||_{L^2}``
    * ``||u||_inf <= C ||u||_{H^1}`` (``sup_norm_constant``)
    * ``||u||_{L^2} ||u_x||_{L^2} <= ||u||_{H^1}^2 / 2``

    so ``c_sigma = C^{2 sigma} / (2 (sigma + 1))``.  ``num_modes=None`` uses
    the untruncated series, valid for every N.
    """
    return sup_norm_constant(num_modes) ** (2.0 * sigma) / (2.0 * (sigma + 1.0))


def c_sigma_margin(
    f: SpectralField, sigma: float, c_sigma: float, oversample: int = DEFAULT_OVERSAMPLE
) -> float:
    """``c_sigma ||u||_{H^1}^{2s+2} - (s+1)^-1 ||u||_{L^{4s+2}}^{2s+1} ||u_x||``; must be >= 0."""
    lhs = math.sqrt(lp_integral(f, 4.0 * sigma + 2.0, oversample)) * hs_norm(f.derivative(), 0) / (sigma + 1.0)
    return c_sigma * hs_norm(f, 1) ** (2.0 * sigma + 2.0) - lhs


def f_sigma(x: float, c_sigma: float, sigma: float) -> float:
    if x < 0:
        raise ValueError("f_sigma is defined for x >= 0")
    return x * x - c_sigma * x ** (2.0 * sigma + 2.0)


@dataclass(frozen=True)
class DichotomyParams:
    c_sigma: float
    x_star: float
    f_at_x_star: float

    @classmethod
    def from_c_sigma(cls, c_sigma: float, sigma: float) -> "DichotomyParams":
        if not c_sigma > 0:
            raise ValueError("c_sigma must be positive")
        x_star = ((sigma + 1.0) * c_sigma) ** (-1.0 / (2.0 * sigma))
        return cls(c_sigma, x_star, f_sigma(x_star, c_sigma, sigma))


class Dichotomy(str, enum.Enum):
    BELOW = "below"
    ABOVE = "above"
    NOT_APPLICABLE = "not_applicable"


def dichotomy_classify(r: InvariantRecord, d: DichotomyParams) -> Dichotomy:
    if r.mass + r.hamiltonian >= d.f_at_x_star:
        return Dichotomy.NOT_APPLICABLE
    return Dichotomy.BELOW if r.h1_norm < d.x_star else Dichotomy.ABOVE


def plane_wave_invariants(amplitude: complex, k: int, sigma: float) -> tuple[float, float, float]:
    """Closed-form ``(M, P, H)`` of ``A exp(ikx)``."""
    a2 = abs(amplitude) ** 2
    m = TWO_PI * a2
    return m, -0.5 * k * m, k * k * m + k * m * a2**sigma / (sigma + 1.0)
