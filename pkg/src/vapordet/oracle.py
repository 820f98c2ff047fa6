"""Brute-force single-excitation dynamics of the effective Raman Hamiltonian.

The field is discretized into a uniform comb of modes around omega_0 and the
state is kept as (alpha_lambda, beta_i), one photon in mode lambda or one atom
in |2>. Amplitudes follow

    d(alpha_l)/dt = -sum_i f_li(t) beta_i exp(+i nu_l t)
    d(beta_i)/dt  =  sum_l conj(f_li(t)) alpha_l exp(-i nu_l t)

with nu_l = omega_l - omega_0 and f_li(t) = Omega(r_i, t) conj(g_li) / 2 Delta.
These equations conserve sum |alpha|^2 + sum |beta|^2 exactly, which fixes the
sign convention.

Coupling normalization: |g_l|^2 = A_31 * d_omega / (2 pi) per atom, so that in
the continuum limit the atomic amplitude decays at (A_31/2)|Omega/2 Delta|^2,
the same rate as the Markov equation in :mod:`vapordet.dynamics`. A photon prepared in
alpha_l(0) corresponds to the Markov drive phi_i(t) = i sum_l g_li alpha_l(0)
exp(-i nu_l t), with which both descriptions share the same beta.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .dynamics import IntegrationError, PulseShape
from .model import effective_detuning
from .species import CONSTANTS


@dataclass(frozen=True)
class ModeGrid:
    """Discretized field: absolute angular mode frequencies and mode functions.

    ``mode_functions[l, i]`` is Phi_l(r_i) (dimensionless); ``omega_0`` is the
    frame frequency the comb is centered on.
    """

    frequencies: np.ndarray
    mode_functions: np.ndarray
    quantization_bandwidth: float
    omega_0: float
    positions: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.frequencies, dtype=float)
        phi = np.asarray(self.mode_functions, dtype=complex)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("need at least one mode")
        if np.any(np.diff(w) <= 0):
            raise ValueError("mode frequencies must be strictly increasing")
        if phi.ndim != 2 or phi.shape[0] != w.size:
            raise ValueError("mode_functions must be (modes, atoms)")
        if not np.all(np.isfinite(phi)):
            raise ValueError("mode_functions must be finite")
        object.__setattr__(self, "frequencies", w)
        object.__setattr__(self, "mode_functions", phi)

    @property
    def mode_count(self):
        return self.frequencies.size

    @property
    def atom_count(self):
        return self.mode_functions.shape[1]

    @property
    def offsets(self):
        """nu_l = omega_l - omega_0, computed without cancellation."""
        m = self.mode_count
        return (np.arange(m) - 0.5 * (m - 1)) * self.spacing

    @property
    def spacing(self):
        return self.quantization_bandwidth / self.mode_count


def comb_grid(mode_count, bandwidth, omega_0, positions=None, n_atoms=1, cell_length=0.0, seed=0, dispersive=False):
    """Uniform comb of ``mode_count`` modes spanning ``bandwidth`` (rad/s) around ``omega_0``.

    Mode functions are plane-wave phases exp(i k z_i) at the atom positions.
    By default k is the carrier wavevector omega_0/c for every mode, so the
    coupling matrix factorizes; ``dispersive=True`` uses omega_l/c instead.
    Positions are drawn uniformly along the cell with a seeded generator when
    not given.
    """
    if mode_count < 1:
        raise ValueError("mode_count must be >= 1")
    if positions is None:
        rng = np.random.default_rng(seed)
        positions = np.sort(rng.uniform(0.0, cell_length, n_atoms))
    positions = np.asarray(positions, dtype=float)
    spacing = bandwidth / mode_count
    nu = (np.arange(mode_count) - 0.5 * (mode_count - 1)) * spacing
    w = omega_0 + nu
    k = (w if dispersive else np.full(mode_count, omega_0)) / CONSTANTS.c
    phi = np.exp(1j * np.outer(k, positions))
    return ModeGrid(w, phi, bandwidth, omega_0, positions)


@dataclass
class EffectiveCoupling:
    """f_li(t) = Omega_e * escort(t) * profile_i * conj(g_li) / (2 Delta)."""

    g: np.ndarray
    omega_e: float
    detuning: float
    escort: PulseShape
    profile: np.ndarray
    omega_0: float

    def __call__(self, t):
        amp = self.omega_e * complex(self.escort(t)) * self.profile / (2 * self.detuning)
        return np.conj(self.g) * amp[None, :]

    @property
    def t_end(self):
        return self.escort.duration


def build_coupling(design, grid, escort=None, convention="ordinary", profile=None):
    """Assemble f_li(t) from g_li = G sqrt(omega_l / omega_0) Phi_l(r_i).

    The single calibration scalar G = sqrt(A_31 * d_omega / 2 pi) stands in for
    the dipole matrix element and field normalization.
    """
    escort = escort or PulseShape.square(design.pulse_duration)
    n = grid.atom_count
    profile = np.ones(n) if profile is None else np.asarray(profile, dtype=complex)
    scale = math.sqrt(design.species.A_31 * grid.spacing / (2 * math.pi))
    g = scale * np.sqrt(grid.frequencies / grid.omega_0)[:, None] * grid.mode_functions
    return EffectiveCoupling(
        g=g,
        omega_e=design.omega_e,
        detuning=effective_detuning(design, convention),
        escort=escort,
        profile=profile,
        omega_0=grid.omega_0,
    )


@dataclass
class AmplitudeState:
    alpha: np.ndarray
    beta: np.ndarray
    time: float = 0.0

    @property
    def vector(self):
        return np.concatenate([self.alpha, self.beta])


@dataclass
class Trajectory:
    times: np.ndarray
    alpha: np.ndarray  # (times, modes)
    beta: np.ndarray  # (times, atoms)
    nfev: int = 0
    info: dict = field(default_factory=dict)

    def state(self, k=-1):
        return AmplitudeState(self.alpha[k].copy(), self.beta[k].copy(), float(self.times[k]))

    @property
    def final(self):
        return self.state(-1)

    @property
    def total_excitation(self):
        return np.sum(np.abs(self.alpha) ** 2, axis=1) + np.sum(np.abs(self.beta) ** 2, axis=1)

    @property
    def p_absorb(self):
        return np.sum(np.abs(self.beta) ** 2, axis=1)

    def to_csv(self, path):
        write_trajectory_csv(self, path)


def total_excitation(state):
    """sum |alpha|^2 + sum |beta|^2."""
    return float(np.sum(np.abs(state.alpha) ** 2) + np.sum(np.abs(state.beta) ** 2))


def gaussian_wavepacket(grid, t_center, width, detuning=0.0):
    """Single-photon state whose drive envelope is exp(-(t - t_center)^2 / 4 width^2).

    ``width`` is the rms duration of the intensity profile; ``detuning`` offsets
    the carrier from omega_0 (rad/s).
    """
    nu = grid.offsets
    alpha = np.exp(-((nu - detuning) ** 2) * width**2) * np.exp(1j * nu * t_center)
    alpha /= np.linalg.norm(alpha)
    return AmplitudeState(alpha.astype(complex), np.zeros(grid.atom_count, dtype=complex), 0.0)


def photon_drive(grid, coupling, initial, t):
    """sum_l g_li alpha_l(0) exp(-i nu_l t) for every atom; shape (len(t), atoms).

    Multiplied by Omega(t)/2Delta this is the free-field drive each atom sees,
    i.e. the Markov equation's eps*phi up to the frame phase -i.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    phases = np.exp(-1j * np.outer(t, grid.offsets))
    return (phases * initial.alpha[None, :]) @ coupling.g


def integrate_schrodinger(grid, coupling, initial, t_final, n_points=201, method="rk", rtol=1e-12, atol=1e-14, norm_tol=1e-6):
    """Integrate the mode-resolved amplitude equations from initial.time to t_final.

    ``method="rk"`` integrates the equations as written with an adaptive
    DOP853 pair. ``method="expm"`` moves to the frame alpha~ = alpha exp(-i nu t),
    where the generator is constant wherever the escort is, and propagates with
    the exact unitary; it requires a square escort. Backward integration
    (t_final < initial.time) is allowed. Norm drift above ``norm_tol`` raises
    IntegrationError.
    """
    if t_final == initial.time:
        raise ValueError("t_final must differ from initial.time")
    y0 = initial.vector.astype(complex)
    norm0 = float(np.vdot(y0, y0).real)
    if not math.isclose(norm0, 1.0, rel_tol=0, abs_tol=1e-9):
        raise ValueError(f"initial state is not normalized (norm^2 = {norm0})")
    times = np.linspace(initial.time, t_final, n_points)
    if method == "rk":
        y, nfev = _integrate_rk(grid, coupling, y0, initial.time, t_final, times, rtol, atol)
    elif method == "expm":
        y, nfev = _integrate_expm(grid, coupling, y0, initial.time, times), 0
    else:
        raise ValueError(f"unknown method {method!r}")
    m = grid.mode_count
    traj = Trajectory(times, y[:, :m], y[:, m:], nfev=nfev)
    drift = float(np.max(np.abs(traj.total_excitation - norm0)))
    traj.info["norm_drift"] = drift
    if drift > norm_tol:
        raise IntegrationError(f"norm drifted by {drift:.3g} (> {norm_tol:g})", t_reached=float(times[-1]), nfev=nfev)
    return traj


def _integrate_rk(grid, coupling, y0, t0, t1, times, rtol, atol):
    m = grid.mode_count
    nu = grid.offsets

    def rhs(t, y):
        alpha, beta = y[:m], y[m:]
        f = coupling(t)
        ph = np.exp(1j * nu * t)
        d_alpha = -ph * (f @ beta)
        d_beta = f.conj().T @ (alpha * ph.conj())
        return np.concatenate([d_alpha, d_beta])

    # restart at the escort edges so the discontinuity is never straddled
    backward = t1 < t0
    edges = [t for t in (0.0, coupling.t_end) if min(t0, t1) < t < max(t0, t1)]
    knots = [t0] + sorted(edges, reverse=backward) + [t1]
    out = np.empty((times.size, y0.size), dtype=complex)
    y, nfev = y0, 0
    for a, b in zip(knots[:-1], knots[1:]):
        sel = np.flatnonzero((times >= min(a, b)) & (times <= max(a, b)))
        t_eval = np.unique(np.r_[times[sel], a, b])
        if backward:
            t_eval = t_eval[::-1]
        sol = solve_ivp(rhs, (a, b), y, method="DOP853", rtol=rtol, atol=atol, t_eval=t_eval)
        nfev += sol.nfev
        if sol.status != 0:
            raise IntegrationError(f"oracle integration failed: {sol.message}", t_reached=float(sol.t[-1]), nfev=nfev)
        lookup = dict(zip(sol.t, sol.y.T))
        for k in sel:
            out[k] = lookup[times[k]]
        y = sol.y[:, -1]
    return out, nfev


def _integrate_expm(grid, coupling, y0, t0, times):
    if coupling.escort.kind != "square":
        raise ValueError("expm propagation needs a square escort")
    m = grid.mode_count
    nu = grid.offsets

    def hamiltonian(on):
        # K with d/dt (alpha~, beta) = -i K (alpha~, beta); Hermitian
        f = coupling(0.5 * coupling.t_end) if on else np.zeros_like(coupling.g)
        n = f.shape[1]
        K = np.zeros((m + n, m + n), dtype=complex)
        K[np.arange(m), np.arange(m)] = nu
        K[:m, m:] = -1j * f
        K[m:, :m] = 1j * f.conj().T
        return K

    spectra = {on: np.linalg.eigh(hamiltonian(on)) for on in (True, False)}

    def propagate(y, a, b):
        # piecewise: escort on inside [0, t_end]
        cuts = sorted({a, b, *[t for t in (0.0, coupling.t_end) if min(a, b) < t < max(a, b)]}, reverse=bool(b < a))
        for s, e in zip(cuts[:-1], cuts[1:]):
            mid = 0.5 * (s + e)
            on = 0.0 <= mid <= coupling.t_end
            lam, V = spectra[on]
            y = V @ (np.exp(-1j * lam * (e - s)) * (V.conj().T @ y))
        return y

    # work in the rotating frame alpha~ = alpha exp(-i nu t)
    frame = np.concatenate([np.exp(-1j * nu * t0), np.ones(y0.size - m)])
    y = y0 * frame
    out = np.empty((times.size, y0.size), dtype=complex)
    t_prev = t0
    for k, t in enumerate(times):
        if t != t_prev:
            y = propagate(y, t_prev, t)
            t_prev = t
        back = np.concatenate([np.exp(1j * nu * t), np.ones(y0.size - m)])
        out[k] = y * back
    return out


def markov_prediction(design, grid, coupling, initial, t_final, convention="ordinary", n_samples=1001, **kw):
    """Per-atom Markov absorption probabilities for the same photon and escort.

    Each atom is driven by its own free-field drive (see :func:`photon_drive`);
    coherence between atoms is ignored, as in the Markov model. Assumes a
    spatially uniform escort profile.
    """
    from .dynamics import solve_markov_numeric

    t = np.linspace(0.0, t_final, n_samples)
    drives = photon_drive(grid, coupling, initial, t)
    # eps = -i Omega / 2 Delta in the Markov frame
    drives = 1j * drives
    escort = coupling.escort
    if escort.duration < t_final:
        escort = PulseShape.sampled(t_final, escort(t))
    out = []
    for i in range(grid.atom_count):
        peak = np.max(np.abs(drives[:, i]))
        if peak == 0:
            out.append(0.0)
            continue
        photon = PulseShape.sampled(t_final, drives[:, i] / peak)
        res = solve_markov_numeric(design, escort, photon, photon_drive=peak, convention=convention, **kw)
        out.append(res.p_absorb)
    return np.array(out)


def write_trajectory_csv(traj, path):
    """time, |alpha_l|^2 per mode, |beta_i|^2 per atom, total excitation."""
    m = traj.alpha.shape[1]
    n = traj.beta.shape[1]
    total = traj.total_excitation
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time_s"] + [f"alpha_sq_{l}" for l in range(m)] + [f"beta_sq_{i}" for i in range(n)] + ["total_excitation"])
        for k, t in enumerate(traj.times):
            row = [repr(float(t))]
            row += [repr(float(v)) for v in np.abs(traj.alpha[k]) ** 2]
            row += [repr(float(v)) for v in np.abs(traj.beta[k]) ** 2]
            row.append(repr(float(total[k])))
            w.writerow(row)
