"""Integrating-factor time stepping of the (mollified) gDNLS flow.

The linear part ``i J d_xx`` is diagonal in Fourier space and is advanced
exactly by ``exp(-i k^2 t)`` phases (identity above the cutoff); explicit
Runge-Kutta only sees ``-J(|J u|^{2 sigma} (J u)_x)``.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson

from . import invariants as inv
from .model import ModelParams, _Workspace
from .spectral import SpectralField, hs_norm, semigroup_phases, sobolev_weights

log = logging.getLogger(__name__)

SCHEMES = ("if_rk4", "if_euler")


class Termination(str, enum.Enum):
    COMPLETED = "completed"
    BLOWUP_ABORT = "blowup_abort"
    NONFINITE_ABORT = "nonfinite_abort"


class NonFiniteError(FloatingPointError):
    """A time step produced NaN or Inf coefficients."""


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_final: float
    scheme: str = "if_rk4"
    snapshot_every: int = 1
    invariant_every: int = 1
    blowup_threshold: float = 1e8
    max_dt: float = 0.5

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.t_final > 0:
            raise ValueError("t_final must be positive")
        if self.dt > self.t_final:
            raise ValueError(f"dt={self.dt} exceeds t_final={self.t_final}")
        if self.dt > self.max_dt:
            raise ValueError(f"dt={self.dt} exceeds max_dt={self.max_dt}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        for name in ("snapshot_every", "invariant_every"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)) or v < 1:
                raise ValueError(f"{name} must be a positive integer")
        if not self.blowup_threshold > 0:
            raise ValueError("blowup_threshold must be positive")
        self.num_steps  # validates commensurability

    @property
    def num_steps(self) -> int:
        n = round(self.t_final / self.dt)
        if n < 1 or abs(n * self.dt - self.t_final) > 1e-9 * self.t_final:
            raise ValueError(f"t_final={self.t_final} is not an integer multiple of dt={self.dt}")
        return n


@dataclass
class Trajectory:
    params: ModelParams
    config: SolverConfig
    snapshots: list[tuple[float, SpectralField]] = field(default_factory=list)
    invariant_trace: list[inv.InvariantRecord] = field(default_factory=list)
    termination: Termination = Termination.COMPLETED

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.snapshots])

    @property
    def initial(self) -> SpectralField:
        return self.snapshots[0][1]

    @property
    def final(self) -> SpectralField:
        return self.snapshots[-1][1]

    def trace(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.invariant_trace])


class _Stepper:
    """Holds the workspace and phase tables for a fixed (N, params, dt)."""

    def __init__(self, num_modes: int, p: ModelParams, dt: float, scheme: str = "if_rk4"):
        self.ws = _Workspace(num_modes, p)
        self.dt = dt
        self.scheme = scheme
        self.e_half = semigroup_phases(num_modes, 0.5 * dt, p.cutoff)
        self.e_full = semigroup_phases(num_modes, dt, p.cutoff)

    def __call__(self, c: np.ndarray) -> np.ndarray:
        nl, h = self.ws.nonlinear_part, self.dt
        if self.scheme == "if_euler":
            return self.e_full * (c + h * nl(c))
        eh, ef = self.e_half, self.e_full
        a = h * nl(c)
        b = h * nl(eh * (c + 0.5 * a))
        ehc = eh * c
        cc = h * nl(ehc + 0.5 * b)
        d = h * nl(ef * c + eh * cc)
        return ef * c + (ef * a + 2.0 * eh * (b + cc) + d) / 6.0


def step(f: SpectralField, p: ModelParams, dt: float, scheme: str = "if_rk4") -> SpectralField:
    """Advance ``f`` by one step of size ``dt``.

    Raises
    ------
    NonFiniteError
        If the new coefficients are not all finite.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}")
    out = _Stepper(f.num_modes, p, dt, scheme)(f.coeffs)
    if not np.all(np.isfinite(out)):
        raise NonFiniteError("time step produced non-finite coefficients")
    return SpectralField(out)


def evolve(
    u0: SpectralField, p: ModelParams, cfg: SolverConfig, *, reverse: bool = False
) -> Trajectory:
    """Integrate from ``u0`` to ``cfg.t_final``.

    Snapshots and invariant records are taken every ``snapshot_every`` /
    ``invariant_every`` steps plus at the final step.  The run stops with
    ``BLOWUP_ABORT`` once ``||u||_{H^2}`` exceeds ``cfg.blowup_threshold``
    and with ``NONFINITE_ABORT`` on NaN/Inf.

    ``reverse=True`` integrates the time-reversed equation
    ``-i v_s + i |v|^{2 sigma} v_x + v_xx = 0``, i.e. steps with ``-dt``;
    reported times stay nonnegative.
    """
    p.cutoff.check(u0.num_modes)
    h2_0 = hs_norm(u0, 2)
    if not cfg.blowup_threshold > h2_0:
        raise ValueError(f"blowup_threshold {cfg.blowup_threshold} must exceed initial H^2 norm {h2_0}")
    stepper = _Stepper(u0.num_modes, p, -cfg.dt if reverse else cfg.dt, cfg.scheme)
    w2 = sobolev_weights(u0.num_modes, 2.0)

    traj = Trajectory(p, cfg)
    rec = lambda f, t: inv.record(f, t, p.sigma, p.cutoff, p.oversample)  # noqa: E731
    traj.snapshots.append((0.0, u0))
    traj.invariant_trace.append(rec(u0, 0.0))

    c = u0.coeffs
    n = cfg.num_steps
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(1, n + 1):
            new = stepper(c)
            t = i * cfg.dt
            if not np.all(np.isfinite(new)):
                log.warning("non-finite coefficients at t=%g", t)
                traj.termination = Termination.NONFINITE_ABORT
                return traj
            c = new
            blown = math.sqrt(inv.TWO_PI * float(np.sum(w2 * (c.real**2 + c.imag**2)))) > cfg.blowup_threshold
            last = i == n or blown
            try:
                if last or i % cfg.invariant_every == 0:
                    traj.invariant_trace.append(rec(SpectralField(c), t))
            except ValueError:
                log.warning("non-finite invariants at t=%g", t)
                traj.termination = Termination.NONFINITE_ABORT
                return traj
            if last or i % cfg.snapshot_every == 0:
                traj.snapshots.append((t, SpectralField(c)))
            if blown:
                log.info("H^2 norm crossed %g at t=%g", cfg.blowup_threshold, t)
                traj.termination = Termination.BLOWUP_ABORT
                return traj
    return traj


def duhamel_residual(traj: Trajectory, t_index: int, max_spacing: float | None = 0.01) -> float:
    """L^2 defect of the mild-solution identity at snapshot ``t_index``.

    Computes ``|| u(t) - S(t) u0 + int_0^t S(t-s) J N(J u(s)) ds ||_{L^2}``
    where ``S`` is the (mollified) free flow and the time integral is
    composite Simpson over the stored snapshots ``0..t_index``.  Snapshots
    must be uniformly spaced; ``max_spacing`` (``None`` disables) guards the
    quadrature density.
    """
    if not 0 <= t_index < len(traj.snapshots):
        raise IndexError(f"t_index {t_index} outside 0..{len(traj.snapshots) - 1}")
    if t_index == 0:
        return 0.0
    if t_index < 2:
        raise ValueError("Duhamel quadrature needs at least 3 snapshots")
    times = traj.times[: t_index + 1]
    h = np.diff(times)
    if not np.allclose(h, h[0], rtol=1e-9, atol=0.0):
        raise ValueError("Duhamel quadrature needs uniformly spaced snapshots")
    if max_spacing is not None and h[0] > max_spacing * (1 + 1e-12):
        raise ValueError(f"snapshot spacing {h[0]:g} exceeds {max_spacing:g}")

    p = traj.params
    u0 = traj.initial
    ws = _Workspace(u0.num_modes, p)
    t = times[-1]
    integrand = np.empty((times.size, u0.coeffs.size), dtype=np.complex128)
    for j, (s, f) in enumerate(traj.snapshots[: t_index + 1]):
        # nonlinear_part already carries the minus sign of the Duhamel term
        integrand[j] = semigroup_phases(u0.num_modes, t - s, p.cutoff) * ws.nonlinear_part(f.coeffs)
    duhamel = simpson(integrand.real, x=times, axis=0) + 1j * simpson(integrand.imag, x=times, axis=0)
    mild = semigroup_phases(u0.num_modes, t, p.cutoff) * u0.coeffs + duhamel
    defect = traj.snapshots[t_index][1].coeffs - mild
    return math.sqrt(inv.TWO_PI * float(np.sum(np.abs(defect) ** 2)))


def plane_wave(num_modes: int, amplitude: complex, k: int) -> SpectralField:
    return SpectralField.from_modes(num_modes, {k: amplitude})


def plane_wave_exact(num_modes: int, amplitude: complex, k: int, sigma: float, t: float) -> SpectralField:
    """``A exp(i(kx - (k^2 + k|A|^{2 sigma}) t))``, an exact solution of the unmollified flow."""
    omega = k * k + k * abs(amplitude) ** (2.0 * sigma)
    return SpectralField.from_modes(num_modes, {k: amplitude * np.exp(-1j * omega * t)})
