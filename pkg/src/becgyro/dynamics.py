"""Time evolution through rotation-frequency ramps and trap-shape changes.

All propagation happens in the eigenbasis of the isotropic interacting
Hamiltonian at zero rotation.  In that basis the instantaneous Hamiltonian
splits into a diagonal part E_i - omega(t) L_i (the isotropic eigenvalues
tilted by the rotation drive, exact at any omega because L is conserved
without anisotropy) plus the trap-deformation coupling rotated into the
eigenbasis, which only links blocks differing by two units of L.  The
equations of motion for the expansion amplitudes are integrated with the
classic Fehlberg embedded 4(5) Runge-Kutta pair with adaptive steps.

A uniform energy offset (the mean of the instantaneous diagonal) is
removed during stepping to keep the fastest phases small, and the exactly
integrable reference phase is restored afterwards, so final amplitudes
carry their true phases.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import IntegrationError
from .hamiltonian import HamiltonianModel
from .states import ManyBodyState, angular_momentum_moments, l_distribution

__all__ = [
    "RampSegment",
    "RampSchedule",
    "IntegratorConfig",
    "EvolutionResult",
    "IsotropicEigenbasis",
    "integrate_tdse",
    "plan_adiabatic_ramp",
    "sudden_shift",
    "sudden_validity_bound",
    "free_evolution",
    "anisotropy_switch_off",
    "choose_switch_off_duration",
    "anisotropy_continuation_map",
    "TRAP_FREQUENCY_HZ",
]

# reference transverse trap frequency for converting to laboratory seconds
TRAP_FREQUENCY_HZ = 2100.0


@dataclass(frozen=True)
class RampSegment:
    """One linear sweep of the rotation frequency at rate `gamma`.

    A segment with equal endpoints is a constant-frequency hold; its
    length comes from `hold` instead of the sweep rate.
    """

    omega_start: float
    omega_end: float
    gamma: float = 1.0
    hold: float = 0.0

    def __post_init__(self):
        if not (self.gamma > 0) or not math.isfinite(self.gamma):
            raise ValueError("ramp rate must be positive and finite")
        if self.hold < 0:
            raise ValueError("hold time must be nonnegative")
        if self.hold > 0 and self.omega_end != self.omega_start:
            raise ValueError("hold segments must keep the frequency fixed")

    @property
    def duration(self) -> float:
        if self.omega_end == self.omega_start:
            return self.hold
        return abs(self.omega_end - self.omega_start) / self.gamma

    @property
    def rate_signed(self) -> float:
        if self.omega_end == self.omega_start:
            return 0.0
        return math.copysign(self.gamma, self.omega_end - self.omega_start)


@dataclass(frozen=True)
class RampSchedule:
    """Piecewise-linear rotation-frequency program omega(t).

    `segment_gaps` optionally carries the smallest spectral gap found in
    each segment by the adiabatic planner.
    """

    segments: tuple
    segment_gaps: tuple = None

    def __post_init__(self):
        if not self.segments:
            raise ValueError("schedule needs at least one segment")
        for prev, nxt in zip(self.segments, self.segments[1:]):
            if abs(prev.omega_end - nxt.omega_start) > 1e-12:
                raise ValueError("ramp segments must be contiguous")

    @staticmethod
    def linear(omega_start: float, omega_end: float, gamma: float) -> "RampSchedule":
        return RampSchedule(segments=(RampSegment(omega_start, omega_end, gamma),))

    @staticmethod
    def hold(omega: float, duration: float) -> "RampSchedule":
        return RampSchedule(segments=(RampSegment(omega, omega, hold=duration),))

    @property
    def omega_start(self) -> float:
        return self.segments[0].omega_start

    @property
    def omega_end(self) -> float:
        return self.segments[-1].omega_end

    @property
    def total_time(self) -> float:
        return sum(seg.duration for seg in self.segments)

    def seconds(self, trap_frequency_hz: float = TRAP_FREQUENCY_HZ) -> float:
        """Laboratory duration for a trap of the given transverse frequency."""
        return self.total_time / (2.0 * math.pi * trap_frequency_hz)

    def feasible(self, lifetime_s: float = 16.0,
                 trap_frequency_hz: float = TRAP_FREQUENCY_HZ) -> bool:
        """Whether the program fits inside the quoted condensate lifetime."""
        return self.seconds(trap_frequency_hz) <= lifetime_s


@dataclass(frozen=True)
class IntegratorConfig:
    """Adaptive step-control knobs for the embedded 4(5) integrator."""

    rtol: float = 1e-9
    atol: float = 1e-11
    initial_step: float = 1e-2
    max_step: float = 0.5
    max_steps: int = 2_000_000
    norm_drift_bound: float = 1e-6
    renormalize: bool = False
    trace_stride: int = 0  # record a trajectory row every this many accepted steps

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("tolerances must be positive")
        if self.initial_step <= 0 or self.max_step <= 0:
            raise ValueError("step sizes must be positive")


@dataclass
class EvolutionResult:
    """Final state of a propagation run plus its integrator diagnostics."""

    state: ManyBodyState
    total_time: float
    steps_accepted: int
    steps_rejected: int
    norm_drift: float
    renormalizations: int
    fidelity_vs_initial: float
    trajectory: np.ndarray = field(repr=False)  # rows (t, norm, <L>, fidelity)
    config: IntegratorConfig = None


# Fehlberg 4(5) tableau
_RKF_C = np.array([0.0, 1 / 4, 3 / 8, 12 / 13, 1.0, 1 / 2])
_RKF_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_RKF_B5 = np.array([16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55])
_RKF_BERR = _RKF_B5 - np.array([25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0])


class IsotropicEigenbasis:
    """Eigenbasis of the isotropic interacting Hamiltonian at zero rotation.

    Block-diagonalizes diag(e0) + g V per total-L block.  Because L is
    conserved in the isotropic problem, the same eigenvectors diagonalize
    the rotating-frame Hamiltonian at every omega with eigenvalues
    energies - omega * l_values.  The anisotropy operator rotated into
    this basis couples blocks with |Delta L| = 2 and is stored blockwise.
    """

    def __init__(self, basis, energies, l_values, u_blocks, w_blocks):
        self.basis = basis
        self.energies = energies
        self.l_values = l_values
        self.u_blocks = u_blocks  # L -> (d, d) eigenvector matrix
        self.w_blocks = w_blocks  # (L_low, L_high) -> coupling block
        self.dimension = len(energies)

    @staticmethod
    def build(model: HamiltonianModel) -> "IsotropicEigenbasis":
        basis = model.basis
        h_iso = (sp.diags(model.e0) + model.params.g * model.v_op).tocsr()
        energies = np.empty(basis.dimension)
        u_blocks = {}
        for l_value, rng in basis.blocks.items():
            sub = h_iso[rng.start : rng.stop, rng.start : rng.stop].toarray()
            evals, evecs = np.linalg.eigh(sub)
            for col in range(evecs.shape[1]):
                lead = np.argmax(np.abs(evecs[:, col]))
                if evecs[lead, col] < 0:
                    evecs[:, col] = -evecs[:, col]
            energies[rng.start : rng.stop] = evals
            u_blocks[l_value] = evecs
        q = model.q_op.tocsr()
        w_blocks = {}
        l_sorted = sorted(basis.blocks)
        for l_value in l_sorted:
            partner = l_value + 2
            if partner not in basis.blocks:
                continue
            ra = basis.blocks[l_value]
            rb = basis.blocks[partner]
            block = q[ra.start : ra.stop, rb.start : rb.stop].toarray()
            w_blocks[(l_value, partner)] = u_blocks[l_value].T @ block @ u_blocks[partner]
        return IsotropicEigenbasis(
            basis=basis,
            energies=energies,
            l_values=basis.state_l_values().astype(float),
            u_blocks=u_blocks,
            w_blocks=w_blocks,
        )

    def to_eigen(self, fock_vector: np.ndarray) -> np.ndarray:
        out = np.empty_like(fock_vector, dtype=np.complex128)
        for l_value, rng in self.basis.blocks.items():
            out[rng.start : rng.stop] = (
                self.u_blocks[l_value].T @ fock_vector[rng.start : rng.stop]
            )
        return out

    def from_eigen(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.empty_like(coeffs, dtype=np.complex128)
        for l_value, rng in self.basis.blocks.items():
            out[rng.start : rng.stop] = (
                self.u_blocks[l_value] @ coeffs[rng.start : rng.stop]
            )
        return out

    def apply_w(self, coeffs: np.ndarray) -> np.ndarray:
        out = np.zeros_like(coeffs, dtype=np.complex128)
        blocks = self.basis.blocks
        for (la, lb), w in self.w_blocks.items():
            ra, rb = blocks[la], blocks[lb]
            out[ra.start : ra.stop] += w @ coeffs[rb.start : rb.stop]
            out[rb.start : rb.stop] += w.T @ coeffs[ra.start : ra.stop]
        return out

    def ground_index(self, omega: float) -> int:
        return int(np.argmin(self.energies - omega * self.l_values))

    def eigenstate_fock(self, index: int) -> np.ndarray:
        coeffs = np.zeros(self.dimension, dtype=np.complex128)
        coeffs[index] = 1.0
        return self.from_eigen(coeffs)


class _RunStats:
    def __init__(self):
        self.accepted = 0
        self.rejected = 0
        self.renormalizations = 0
        self.h = None
        self.trace = []


def _propagate_linear(
    eig: IsotropicEigenbasis,
    coeffs: np.ndarray,
    duration: float,
    omega0: float,
    omega_rate: float,
    scale0: float,
    scale_rate: float,
    aniso: float,
    cfg: IntegratorConfig,
    stats: _RunStats,
    t_offset: float,
    fidelity_probe=None,
):
    """Advance amplitudes over one interval with linear omega(t) and scale(t).

    Steps the centered amplitudes (mean diagonal removed) and restores the
    analytically integrated reference phase at the end, so the returned
    amplitudes carry the exact accumulated phase.
    """
    if duration == 0.0:
        return coeffs
    e_mean = float(np.mean(eig.energies))
    l_mean = float(np.mean(eig.l_values))
    e_cent = eig.energies - e_mean
    l_cent = eig.l_values - l_mean
    norm0 = np.linalg.norm(coeffs)

    def rhs(t, y):
        omega = omega0 + omega_rate * t
        scale = scale0 + scale_rate * t
        diag = e_cent - omega * l_cent
        out = diag * y
        if aniso != 0.0 and scale != 0.0:
            out = out + (scale * aniso) * eig.apply_w(y)
        return -1j * out

    t = 0.0
    y = coeffs
    h = stats.h if stats.h is not None else cfg.initial_step
    h = min(h, cfg.max_step, duration)
    k = [None] * 6
    while t < duration - 1e-14 * max(1.0, duration):
        h = min(h, duration - t)
        k[0] = rhs(t, y)
        for stage in range(1, 6):
            acc = _RKF_A[stage][0] * k[0]
            for idx in range(1, stage):
                acc = acc + _RKF_A[stage][idx] * k[idx]
            k[stage] = rhs(t + _RKF_C[stage] * h, y + h * acc)
        y5 = y + h * (
            _RKF_B5[0] * k[0]
            + _RKF_B5[2] * k[2]
            + _RKF_B5[3] * k[3]
            + _RKF_B5[4] * k[4]
            + _RKF_B5[5] * k[5]
        )
        err_vec = h * (
            _RKF_BERR[0] * k[0]
            + _RKF_BERR[2] * k[2]
            + _RKF_BERR[3] * k[3]
            + _RKF_BERR[4] * k[4]
            + _RKF_BERR[5] * k[5]
        )
        scale_vec = cfg.atol + cfg.rtol * np.maximum(np.abs(y), np.abs(y5))
        err = math.sqrt(float(np.mean((np.abs(err_vec) / scale_vec) ** 2)))
        if stats.accepted + stats.rejected >= cfg.max_steps:
            raise IntegrationError("step budget exhausted before reaching end time")
        if err <= 1.0:
            t += h
            y = y5
            stats.accepted += 1
            if cfg.renormalize:
                current = np.linalg.norm(y)
                if abs(current - norm0) > 0.5 * cfg.norm_drift_bound:
                    y = y * (norm0 / current)
                    stats.renormalizations += 1
            if cfg.trace_stride and stats.accepted % cfg.trace_stride == 0:
                _record_trace(
                    stats, eig, y, t_offset + t,
                    omega0 + omega_rate * t, scale0 + scale_rate * t,
                    fidelity_probe,
                )
            factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h = min(h * factor, cfg.max_step)
        else:
            stats.rejected += 1
            h = h * max(0.2, 0.9 * err ** -0.2)
        if h <= 1e-15:
            raise IntegrationError("step size collapsed; tolerances unreachable")
    stats.h = h
    # restore the reference phase exp(-i integral(e_mean - omega(t) l_mean))
    omega_integral = omega0 * duration + 0.5 * omega_rate * duration**2
    phase = e_mean * duration - l_mean * omega_integral
    return y * np.exp(-1j * phase)


def _record_trace(stats, eig, coeffs, t, omega, scale, fidelity_probe):
    norm = float(np.linalg.norm(coeffs))
    probs = np.abs(coeffs) ** 2
    total = probs.sum()
    l_mean = float(np.dot(eig.l_values, probs) / total) if total > 0 else math.nan
    fid = math.nan
    if fidelity_probe is not None:
        fid = fidelity_probe(coeffs, omega, scale)
    stats.trace.append((t, norm, l_mean, fid))


def _make_fidelity_probe(model: HamiltonianModel, eig: IsotropicEigenbasis):
    """Overlap of the running state with the instantaneous ground state."""
    from .spectrum import lowest_eigenpairs

    seed = {"v0": None}

    def probe(coeffs, omega, scale):
        h = model.assemble(omega, anisotropy_scale=scale)
        sol = lowest_eigenpairs(h, k=1, seed_vector=seed["v0"])
        ground = sol.states[0].amplitudes
        seed["v0"] = np.real(ground)
        fock = eig.from_eigen(coeffs)
        norm2 = float(np.vdot(fock, fock).real)
        if norm2 == 0:
            return math.nan
        return float(abs(np.vdot(ground, fock)) ** 2 / norm2)

    return probe


def _finish_run(eig, basis, initial, coeffs, total_time, stats, cfg, track_fidelity):
    final_fock = eig.from_eigen(coeffs)
    drift = abs(float(np.linalg.norm(coeffs)) - float(np.linalg.norm(initial.amplitudes)))
    if drift > cfg.norm_drift_bound and not cfg.renormalize:
        raise IntegrationError(
            f"norm drift {drift:.3e} exceeds bound {cfg.norm_drift_bound:.1e};"
            " tighten tolerances"
        )
    state = ManyBodyState(basis=basis, amplitudes=final_fock)
    norm2 = float(np.vdot(final_fock, final_fock).real)
    fid = float(abs(np.vdot(initial.amplitudes, final_fock)) ** 2) / norm2
    trace = (
        np.array(stats.trace)
        if stats.trace
        else np.zeros((0, 4))
    )
    return EvolutionResult(
        state=state,
        total_time=total_time,
        steps_accepted=stats.accepted,
        steps_rejected=stats.rejected,
        norm_drift=drift,
        renormalizations=stats.renormalizations,
        fidelity_vs_initial=fid,
        trajectory=trace,
        config=cfg,
    )


def integrate_tdse(
    model: HamiltonianModel,
    basis,
    initial: ManyBodyState,
    schedule: RampSchedule,
    cfg: IntegratorConfig = None,
    track_fidelity: bool = False,
) -> EvolutionResult:
    """Propagate `initial` through a rotation-frequency schedule.

    The trap anisotropy stays at full strength throughout.  Diagnostics
    include accepted and rejected step counts, the norm drift over the
    run, and, when `cfg.trace_stride` is set, a sampled trajectory of
    (time, norm, <L>, fidelity); the fidelity column is populated only
    when `track_fidelity` is true because it costs one sparse eigensolve
    per sample.
    """
    cfg = cfg or IntegratorConfig()
    if basis is not model.basis and basis.spec != model.basis.spec:
        raise ValueError("basis does not match the model")
    eig = model.isotropic_eigenbasis()
    coeffs = eig.to_eigen(initial.amplitudes)
    stats = _RunStats()
    probe = _make_fidelity_probe(model, eig) if track_fidelity else None
    t_offset = 0.0
    for seg in schedule.segments:
        coeffs = _propagate_linear(
            eig, coeffs, seg.duration, seg.omega_start, seg.rate_signed,
            1.0, 0.0, model.params.anisotropy, cfg, stats, t_offset, probe,
        )
        t_offset += seg.duration
    return _finish_run(eig, model.basis, initial, coeffs, t_offset, stats, cfg,
                       track_fidelity)


def plan_adiabatic_ramp(
    model: HamiltonianModel,
    basis,
    omega_start: float,
    omega_c: float,
    delta_omega: float = 0.01,
    p01: float = 0.01,
    subgrid: int = 10,
    variant: str = "subgrid",
    treatment: str = "exact",
) -> RampSchedule:
    """Segmented ramp whose rate tracks the local spectral gap.

    The sweep [omega_start, omega_c] is cut into pieces of width
    `delta_omega`; in each, the smallest gap between the ground and first
    excited level sets the rate gamma = gap^2 sqrt(p01) / N, keeping the
    excitation probability per segment near p01.  `variant` chooses how
    the per-segment gap is found: "subgrid" scans `subgrid` points inside
    each segment, "endpoint" uses only segment edges (cheaper, less safe).
    `treatment` selects the spectrum the gaps come from: "exact" uses the
    full Hamiltonian, "perturbative" the quasi-degenerate low-L manifold;
    the endpoint should be the critical frequency of the same treatment.
    """
    from .spectrum import YrastManifold, lowest_eigenpairs

    if variant not in ("subgrid", "endpoint"):
        raise ValueError("variant must be 'subgrid' or 'endpoint'")
    if treatment not in ("exact", "perturbative"):
        raise ValueError("treatment must be 'exact' or 'perturbative'")
    if not delta_omega > 0:
        raise ValueError("delta_omega must be positive")
    n_part = model.params.spec.n_particles
    edges = [omega_start]
    while edges[-1] + delta_omega < omega_c - 1e-12:
        edges.append(edges[-1] + delta_omega)
    edges.append(omega_c)

    seed = None
    gap_cache = {}
    manifold = YrastManifold(model) if treatment == "perturbative" else None

    def gap_at(omega):
        nonlocal seed
        if omega not in gap_cache:
            if manifold is not None:
                values, _ = manifold.eigen(omega)
                gap_cache[omega] = float(values[1] - values[0])
            else:
                sol = lowest_eigenpairs(
                    model.assemble(omega), k=2, seed_vector=seed
                )
                seed = np.real(sol.states[0].amplitudes)
                gap_cache[omega] = float(
                    sol.eigenvalues[1] - sol.eigenvalues[0]
                )
        return gap_cache[omega]

    segments = []
    gaps = []
    for lo, hi in zip(edges, edges[1:]):
        if variant == "subgrid":
            points = np.linspace(lo, hi, max(2, subgrid))
        else:
            points = np.array([lo, hi])
        gap = min(gap_at(float(om)) for om in points)
        gamma = gap**2 * math.sqrt(p01) / n_part
        segments.append(RampSegment(lo, hi, gamma))
        gaps.append(gap)
    return RampSchedule(segments=tuple(segments), segment_gaps=tuple(gaps))


def sudden_validity_bound(state: ManyBodyState, gamma_max: float) -> float:
    """Largest frequency jump the sudden approximation tolerates, sqrt(2 gamma / dL)."""
    _, _, dl = angular_momentum_moments(state.normalized())
    if dl == 0:
        return math.inf
    return math.sqrt(2.0 * gamma_max / dl)


def sudden_shift(
    state: ManyBodyState,
    model: HamiltonianModel,
    basis,
    omega_from: float,
    omega_to: float,
    gamma_max: float,
    cfg: IntegratorConfig = None,
) -> EvolutionResult:
    """Rapid linear rotation-frequency jump at the fastest allowed rate.

    With gamma_max = inf the jump is treated as instantaneous and the
    state is returned unchanged (the idealized sudden limit).  The
    reported fidelity_vs_initial measures how well the finite-rate ramp
    approximates that ideal.  A warning is emitted when the jump size is
    not small against the sudden-approximation bound.
    """
    cfg = cfg or IntegratorConfig()
    jump = abs(omega_to - omega_from)
    if math.isinf(gamma_max):
        return EvolutionResult(
            state=ManyBodyState(basis, state.amplitudes.copy()),
            total_time=0.0,
            steps_accepted=0,
            steps_rejected=0,
            norm_drift=0.0,
            renormalizations=0,
            fidelity_vs_initial=1.0,
            trajectory=np.zeros((0, 4)),
            config=cfg,
        )
    bound = sudden_validity_bound(state, gamma_max)
    if jump >= bound:
        warnings.warn(
            f"frequency jump {jump:.3e} is not small against the sudden bound "
            f"{bound:.3e}; the shift will disturb the state",
            stacklevel=2,
        )
    if jump == 0.0:
        return sudden_shift(state, model, basis, omega_from, omega_to, math.inf, cfg)
    schedule = RampSchedule.linear(omega_from, omega_to, gamma_max)
    return integrate_tdse(model, basis, state, schedule, cfg)


DENSE_EVOLUTION_LIMIT = 1600


def free_evolution(
    state: ManyBodyState,
    model: HamiltonianModel,
    basis,
    omega_delta: float,
    tau: float,
    eig=None,
) -> ManyBodyState:
    """Hold the state at fixed rotation frequency for a time tau.

    Applies the eigenphases of the full Hamiltonian (anisotropy on) at
    omega_delta, measured from the ground state: amplitudes on eigenstate
    i pick up exp(-i (E_i - E_0) tau).  Small problems expand over the
    dense eigenpairs; large ones apply the same unitary through the
    action of the matrix exponential plus one sparse solve for the
    ground-state reference energy.  Pass `eig` = (values, vectors) to
    reuse a previously computed dense decomposition.
    """
    if tau < 0:
        raise ValueError("waiting time must be nonnegative")
    if tau == 0:
        return ManyBodyState(basis=basis, amplitudes=state.amplitudes.copy())
    h = None
    if eig is None:
        h = model.assemble(omega_delta, anisotropy_scale=1.0)
        if h.dimension <= DENSE_EVOLUTION_LIMIT:
            eig = np.linalg.eigh(h.matrix.toarray())
    if eig is not None:
        values, vectors = eig
        coeffs = vectors.T @ state.amplitudes
        phases = np.exp(-1j * (values - values[0]) * tau)
        final = vectors @ (phases * coeffs)
        return ManyBodyState(basis=basis, amplitudes=final)
    from scipy.sparse.linalg import expm_multiply

    from .spectrum import lowest_eigenpairs

    e_ground = float(lowest_eigenpairs(h, k=1).eigenvalues[0])
    diag_mean = float(h.matrix.diagonal().mean())
    shifted = (h.matrix - diag_mean * sp.identity(h.dimension, format="csr")).tocsc()
    evolved = expm_multiply(
        (-1j * tau) * shifted, state.amplitudes.astype(np.complex128)
    )
    final = np.exp(-1j * (diag_mean - e_ground) * tau) * evolved
    return ManyBodyState(basis=basis, amplitudes=final)


def anisotropy_switch_off(
    state: ManyBodyState,
    model: HamiltonianModel,
    basis,
    omega_c: float,
    duration: float,
    cfg: IntegratorConfig = None,
) -> EvolutionResult:
    """Ramp the trap deformation linearly to zero at fixed rotation frequency.

    Slow enough ramps preserve the population of each instantaneous
    eigenstate, carrying the state onto angular-momentum eigenstates.
    The result's trajectory and the `leakage` attribute report how much
    population escaped the initially occupied low manifold.

    Norm drift accumulates with duration on this stage, so the default
    configuration renormalizes (counted in the diagnostics, never
    silent).  Pass an explicit IntegratorConfig to make drift a hard
    failure instead.
    """
    cfg = cfg or IntegratorConfig(renormalize=True)
    if duration <= 0:
        raise ValueError("switch-off duration must be positive")
    eig = model.isotropic_eigenbasis()
    coeffs = eig.to_eigen(state.amplitudes)
    occupied = np.abs(coeffs) ** 2 > 1e-12
    stats = _RunStats()
    final = _propagate_linear(
        eig, coeffs, duration, omega_c, 0.0,
        1.0, -1.0 / duration, model.params.anisotropy, cfg, stats, 0.0, None,
    )
    result = _finish_run(eig, model.basis, state, final, duration, stats, cfg, False)
    final_pops = np.abs(final) ** 2
    result.leakage = float(np.sum(final_pops[~occupied]))
    return result


def choose_switch_off_duration(
    state: ManyBodyState,
    model: HamiltonianModel,
    basis,
    omega_c: float,
    start: float = 25.0,
    rel_tol: float = 1e-3,
    max_doublings: int = 7,
    cfg: IntegratorConfig = None,
):
    """Shortest doubling of `start` for which the final L populations settle.

    Runs the switch-off at durations start, 2*start, ... until the block
    populations change by less than rel_tol between consecutive runs.
    Returns (duration, history) with history rows (duration, max change).
    """
    history = []
    prev = None
    duration = start
    for _ in range(max_doublings + 1):
        result = anisotropy_switch_off(state, model, basis, omega_c, duration, cfg)
        dist = l_distribution(result.state.normalized())
        if prev is not None:
            keys = set(dist) | set(prev)
            change = max(abs(dist.get(k, 0.0) - prev.get(k, 0.0)) for k in keys)
            history.append((duration, change))
            if change < rel_tol:
                return duration, history
        prev = dist
        duration *= 2.0
    raise IntegrationError(
        f"switch-off populations did not settle within {max_doublings} doublings"
    )


def anisotropy_continuation_map(
    model: HamiltonianModel,
    omega: float,
    n_track: int = None,
    scale_steps=None,
):
    """Adiabatic continuation of eigenstates from full anisotropy to zero.

    Follows the `n_track` lowest eigenvectors of H(omega, scale) as the
    deformation scale walks from 1 to 0, matching states between steps by
    maximum overlap.  Returns (vectors, l_labels, iso_indices): the
    eigenvectors at full anisotropy (columns), the angular momentum of
    the isotropic eigenstate each one continues into, and that state's
    index in the isotropic eigenbasis ordering.

    This realizes the ideal (infinitely slow) limit of the anisotropy
    switch-off: populations measured on `vectors` before the switch-off
    equal the populations on L eigenstates after it.
    """
    from scipy.linalg import eigh

    basis = model.basis
    dim = basis.dimension
    if n_track is None:
        n_track = min(dim, 400)
    n_track = min(n_track, dim)
    if scale_steps is None:
        scale_steps = (1.0, 0.75, 0.5, 0.35, 0.25, 0.15, 0.08, 0.03, 0.0)

    def tracked(scale):
        h = model.assemble(omega, anisotropy_scale=scale).matrix.toarray()
        _, vecs = eigh(h, subset_by_index=[0, n_track - 1])
        return vecs

    first = tracked(scale_steps[0])
    prev = first
    for scale in scale_steps[1:]:
        current = tracked(scale)
        # row i: tracked state, columns: candidates at this scale
        overlaps = np.abs(prev.T @ current)
        taken = set()
        new_perm = np.empty(n_track, dtype=np.int64)
        for i in range(n_track):
            order = np.argsort(overlaps[i])[::-1]
            for cand in order:
                if cand not in taken:
                    new_perm[i] = cand
                    taken.add(cand)
                    break
        # reordering keeps each tracked state at its row position
        prev = current[:, new_perm]
    # prev now holds isotropic eigenvectors aligned with the tracked order
    eig = model.isotropic_eigenbasis()
    l_labels = np.empty(n_track, dtype=np.int64)
    iso_indices = np.empty(n_track, dtype=np.int64)
    l_state = basis.state_l_values()
    for i in range(n_track):
        coeffs = eig.to_eigen(prev[:, i].astype(np.complex128))
        idx = int(np.argmax(np.abs(coeffs)))
        iso_indices[i] = idx
        l_labels[i] = l_state[idx]
    return first, l_labels, iso_indices
