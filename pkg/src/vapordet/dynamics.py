"""Single-atom Raman absorption in the Markov limit.

The amplitude of the excited ground sublevel obeys

    d(beta)/dt = eps(t) phi(t) - (A_31 / 2) |eps(t)|^2 beta(t)

with eps(t) = conj(i Omega(t) exp(-i w0 t) / 2 Delta). All routines work in the
frame rotating at w0, so eps(t) = -i Omega(t) / (2 Delta) and the photon drive
phi(t) is the slowly varying envelope. Only the phase of beta depends on this
choice.

Re-emission is booked as the decay-channel flux
p_scatter = int (A_31/2) |eps|^2 |beta|^2 dt, which is what the damping term
removes from the atom.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from .model import atom_count, effective_detuning, efficiency_budget, scatter_loss_term


class IntegrationError(RuntimeError):
    """Raised when an ODE integration stops before reaching its final time."""

    def __init__(self, message, t_reached=None, nfev=None):
        super().__init__(message)
        self.t_reached = t_reached
        self.nfev = nfev


@dataclass(frozen=True)
class PulseShape:
    """Pulse envelope on [0, duration], scaled so the peak drive is 1.

    ``kind="square"`` is 1 on the closed interval. ``kind="sampled"`` linearly
    interpolates complex ``samples`` given on a uniform grid spanning the pulse.
    Outside [0, duration] the envelope is 0.
    """

    kind: str
    duration: float
    samples: np.ndarray = None

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("pulse duration must be positive")
        if self.kind == "square":
            return
        if self.kind != "sampled":
            raise ValueError(f"unknown pulse kind {self.kind!r}")
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1 or s.size < 2:
            raise ValueError("sampled pulse needs a 1-D grid of at least 2 points")
        if not np.all(np.isfinite(s)):
            raise ValueError("sampled pulse contains non-finite values")
        object.__setattr__(self, "samples", s)

    @classmethod
    def square(cls, duration):
        return cls("square", duration)

    @classmethod
    def sampled(cls, duration, samples):
        return cls("sampled", duration, samples)

    @classmethod
    def from_function(cls, duration, func, n=2001):
        t = np.linspace(0.0, duration, n)
        return cls("sampled", duration, func(t))

    @property
    def grid(self):
        if self.kind == "square":
            return np.array([0.0, self.duration])
        return np.linspace(0.0, self.duration, self.samples.size)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        inside = (t >= 0) & (t <= self.duration)
        if self.kind == "square":
            return np.where(inside, 1.0 + 0j, 0j)
        g = self.grid
        val = np.interp(t, g, self.samples.real) + 1j * np.interp(t, g, self.samples.imag)
        return np.where(inside, val, 0j)


@dataclass
class AbsorptionResult:
    beta_final: complex
    p_absorb: float
    p_scatter: float
    times: np.ndarray = None
    trajectory: np.ndarray = None

    def to_csv(self, path):
        write_trajectory_csv(self, path)


def escort_coupling(design, t, envelope=None, convention="ordinary", omega_0=0.0):
    """eps(t) = conj(i Omega(t) exp(-i omega_0 t) / 2 Delta).

    ``envelope`` defaults to a square pulse of length design.pulse_duration;
    Omega(t) = design.omega_e * envelope(t). ``omega_0`` keeps the optical
    carrier phase; the default 0 is the rotating frame.
    """
    if envelope is None:
        envelope = PulseShape.square(design.pulse_duration)
    omega = design.omega_e * envelope(t)
    delta = effective_detuning(design, convention)
    return np.conj(1j * omega * np.exp(-1j * omega_0 * np.asarray(t, dtype=float)) / (2 * delta))


def damping_rate(design, eps):
    """kappa = (A_31 / 2) |eps|^2, the amplitude damping rate."""
    return 0.5 * design.species.A_31 * np.abs(eps) ** 2


def _sat_integral(u):
    # int_0^u (1 - exp(-x))^2 dx, accurate for small u
    if u > 0.5:
        return u + 2 * math.expm1(-u) - 0.5 * math.expm1(-2 * u)
    total, k, fact, power = 0.0, 2, 2.0, u**3
    while True:
        term = (-1) ** k * (2**k - 2) * power / ((k + 1) * fact)
        total += term
        if abs(term) < 1e-18 * abs(total) or k > 60:
            return total
        k += 1
        fact *= k
        power *= u


def solve_markov_square(design, photon_drive, convention="ordinary", n_points=0):
    """Closed-form solution for square escort and photon pulses of length T_p.

    beta(t) = (eps phi / kappa)(1 - exp(-kappa t)), kappa = A_31 |eps|^2 / 2,
    with beta = eps phi t when kappa = 0. ``n_points > 0`` also returns a
    uniformly sampled trajectory.
    """
    T = design.pulse_duration
    eps = complex(escort_coupling(design, 0.5 * T, convention=convention))
    kappa = float(damping_rate(design, eps))
    drive = eps * photon_drive

    def beta_at(t):
        t = np.asarray(t, dtype=float)
        if kappa == 0:
            return drive * t
        return drive * (-np.expm1(-kappa * t)) / kappa

    beta_T = complex(beta_at(T))
    if kappa == 0:
        p_scatter = 0.0
    else:
        p_scatter = abs(drive) ** 2 * _sat_integral(kappa * T) / kappa**2
    times = traj = None
    if n_points:
        times = np.linspace(0.0, T, n_points)
        traj = beta_at(times)
    return AbsorptionResult(beta_T, abs(beta_T) ** 2, p_scatter, times, traj)


def solve_markov_numeric(
    design,
    escort=None,
    photon=None,
    photon_drive=1.0,
    convention="ordinary",
    rtol=1e-10,
    atol=1e-10,
    n_points=0,
    method="DOP853",
):
    """Integrate the Markov equation for arbitrary escort and photon envelopes.

    Escort Rabi frequency is design.omega_e * escort(t); the photon drive is
    photon_drive * photon(t). Integration runs from 0 to the longer pulse's end
    with an adaptive embedded Runge-Kutta pair (``atol`` is absolute on beta).
    The scatter flux integral is carried as an extra ODE component.
    """
    escort = escort or PulseShape.square(design.pulse_duration)
    photon = photon or PulseShape.square(design.pulse_duration)
    delta = effective_detuning(design, convention)
    half_A = 0.5 * design.species.A_31
    t_end = max(escort.duration, photon.duration)

    def rhs(t, y):
        eps = np.conj(1j * design.omega_e * escort(t)) / (2 * delta)
        kappa = half_A * abs(eps) ** 2
        beta = y[0]
        return np.array([eps * photon_drive * photon(t) - kappa * beta, kappa * abs(beta) ** 2], dtype=complex)

    t_eval = np.linspace(0.0, t_end, n_points) if n_points else None
    # the envelope kinks of sampled pulses must not be stepped over blindly
    grids = [p.grid for p in (escort, photon) if p.kind == "sampled"]
    max_step = min((np.diff(g)[0] for g in grids), default=np.inf)
    sol = solve_ivp(
        rhs,
        (0.0, t_end),
        np.zeros(2, dtype=complex),
        method=method,
        rtol=rtol,
        atol=atol,
        t_eval=t_eval,
        max_step=max_step,
    )
    if sol.status != 0:
        raise IntegrationError(
            f"Markov integration failed at t={sol.t[-1]:.6g} s after {sol.nfev} evaluations: {sol.message}",
            t_reached=float(sol.t[-1]),
            nfev=sol.nfev,
        )
    beta_T, scat = sol.y[0, -1], sol.y[1, -1].real
    times, traj = (sol.t, sol.y[0]) if n_points else (None, None)
    return AbsorptionResult(complex(beta_T), abs(beta_T) ** 2, float(scat), times, traj)


def scatter_loss(design, convention="ordinary"):
    """(T_p A_31 Omega_e^2 / 16 Delta^2)^2, the scattering term of the efficiency budget."""
    return scatter_loss_term(design, convention)


def scatter_loss_crosscheck(design, convention="ordinary"):
    """Relate the budget's scattering term to the closed-form square-pulse solution.

    With kappa T_p = (A_31/2)(Omega_e/2 Delta)^2 T_p the budget term is exactly
    (kappa T_p / 2)^2. The flux-booked re-emission per absorbed excitation,
    p_scatter / p_absorb, tends to kappa T_p / 3 for kappa T_p << 1, so
    ``factor = loss / ratio**2`` tends to 9/4 in that limit.
    """
    T = design.pulse_duration
    eps = complex(escort_coupling(design, 0.5 * T, convention=convention))
    kappa = float(damping_rate(design, eps))
    res = solve_markov_square(design, 1.0, convention)
    loss = scatter_loss(design, convention)
    ratio = res.p_scatter / res.p_absorb if res.p_absorb > 0 else 0.0
    return {
        "loss_scatter": loss,
        "kappa_Tp": kappa * T,
        "half_kappa_Tp_squared": (0.5 * kappa * T) ** 2,
        "flux_ratio": ratio,
        "factor": loss / ratio**2 if ratio > 0 else math.nan,
    }


def normalized_photon_drive(design, convention="ordinary"):
    """Per-atom, per-pass square-pulse drive |phi| anchored to the bulk absorption.

    Chosen so that N * q * |beta(T_p)|^2 = 1 - exp(-q l_cell / l_abs), i.e. the
    single-atom picture summed over atoms and passes reproduces the
    transmission term of the efficiency budget.
    """
    budget = efficiency_budget(design, convention)
    target = 1.0 - budget.loss_transmission
    n = atom_count(design)
    if n == 0 or target == 0:
        return 0.0
    per_unit = solve_markov_square(design, 1.0, convention).p_absorb
    return math.sqrt(target / (n * design.passes * per_unit))


def write_trajectory_csv(result, path):
    """time, Re beta, Im beta, |beta|^2 per row."""
    if result.trajectory is None:
        raise ValueError("result carries no trajectory; solve with n_points > 0")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s", "re_beta", "im_beta", "abs_beta_sq"])
        for t, b in zip(result.times, result.trajectory):
            w.writerow([repr(float(t)), repr(float(b.real)), repr(float(b.imag)), repr(float(abs(b) ** 2))])
