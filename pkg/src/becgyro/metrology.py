"""Interferometric protocol orchestration and precision estimation.

The protocol prepares the entangled rotating ground state, lets an
external rotation imprint relative phases during a waiting time, undoes
the coupling, and reads out angular momentum.  This module wires those
stages together, models the two measurement schemes (full angular
momentum statistics, or the binary ground-state projector), converts
measured distributions into a rotation-rate uncertainty through error
propagation, and computes the quantum Fisher information that bounds it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dynamics import (
    IntegratorConfig,
    anisotropy_continuation_map,
    anisotropy_switch_off,
    choose_switch_off_duration,
    free_evolution,
    integrate_tdse,
    plan_adiabatic_ramp,
    sudden_shift,
    sudden_validity_bound,
)
from .errors import DeltaInstabilityError
from .hamiltonian import HamiltonianModel
from .spectrum import (
    YrastManifold,
    find_critical_frequency,
    lowest_eigenpairs,
    perturbative_ground,
)
from .states import ManyBodyState, angular_momentum_moments

__all__ = [
    "ProtocolConfig",
    "ProtocolResult",
    "MeasurementModel",
    "PrecisionCurve",
    "shot_noise_limit",
    "qfi_pure",
    "qfi_quadratic_approx",
    "ideal_phase_family",
    "run_protocol",
    "estimate_precision",
]


def shot_noise_limit(n_particles: int) -> float:
    """Precision floor 1/sqrt(N) of N independent unentangled probes."""
    if n_particles < 1:
        raise ValueError("particle number must be at least 1")
    return 1.0 / math.sqrt(n_particles)


def qfi_quadratic_approx(initial_entangled: ManyBodyState, tau: float) -> float:
    """Short-time Fisher information 4 tau^2 Var(L) of the prepared state.

    Valid while the waiting time is small enough that the anisotropic
    part of the generator has not rotated the state appreciably.
    """
    _, _, dl = angular_momentum_moments(initial_entangled.normalized())
    return 4.0 * tau**2 * dl**2


def _aligned(reference: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """Rotate `vector` by a global phase so <reference|vector> >= 0."""
    ov = np.vdot(reference, vector)
    mag = abs(ov)
    if mag == 0.0:
        return vector
    return vector * (np.conj(ov) / mag)


def _qfi_once(family, omega_ext: float, delta: float, center: np.ndarray) -> float:
    plus = _aligned(center, family(omega_ext + delta).normalized().amplitudes)
    minus = _aligned(center, family(omega_ext - delta).normalized().amplitudes)
    dpsi = (plus - minus) / (2.0 * delta)
    value = 4.0 * (
        float(np.vdot(dpsi, dpsi).real) - abs(np.vdot(center, dpsi)) ** 2
    )
    return value


def qfi_pure(state_family, omega_ext: float, delta: float = 1e-4) -> float:
    """Quantum Fisher information of a pure-state family at one parameter value.

    Central differences over `state_family` (a callable omega_ext ->
    ManyBodyState) with global phases aligned to the center state before
    differencing.  The result must be stable under halving `delta` to 1%,
    otherwise DeltaInstabilityError is raised.  Always nonnegative.
    """
    center = state_family(omega_ext).normalized().amplitudes
    coarse = _qfi_once(state_family, omega_ext, delta, center)
    fine = _qfi_once(state_family, omega_ext, 0.5 * delta, center)
    scale = max(abs(fine), abs(coarse), 1e-300)
    if abs(fine - coarse) / scale > 0.01:
        raise DeltaInstabilityError(
            f"Fisher information not stable under step halving: "
            f"{coarse:.6e} at delta={delta:.1e} vs {fine:.6e} at half"
        )
    return max(0.0, fine)


def ideal_phase_family(
    model: HamiltonianModel,
    basis,
    prepared: ManyBodyState,
    omega_c: float,
    tau: float,
    treatment: str = "exact",
):
    """State family omega_ext -> state after ideal coupling and waiting time.

    Uses the instantaneous sudden limit, so the only omega_ext dependence
    is the free evolution under H(omega_c - omega_ext); this is the family
    whose Fisher information the short-time approximation targets.  The
    treatment picks the picture the phases are accumulated in, and must
    match the one that produced `prepared`.
    """
    if treatment not in ("exact", "perturbative"):
        raise ValueError("treatment must be 'exact' or 'perturbative'")
    if treatment == "perturbative":
        manifold = YrastManifold(model)
        start = manifold.project(prepared.amplitudes).astype(np.complex128)

        def family(omega_ext: float) -> ManyBodyState:
            evolved = manifold.evolve(start, omega_c - omega_ext, tau)
            return ManyBodyState(basis=basis, amplitudes=manifold.embed(evolved))

        return family

    def family(omega_ext: float) -> ManyBodyState:
        return free_evolution(prepared, model, basis, omega_c - omega_ext, tau)

    return family


class MeasurementModel:
    """Projective measurement over the isotropic eigenstates at fixed omega.

    Outcomes partition the eigenstate index range: every index belongs to
    exactly one outcome, so the projectors are orthogonal and complete by
    construction.  `labels` carries the outcome values (L eigenvalues, or
    {0, 1} for the binary ground-state test).
    """

    def __init__(self, labels: np.ndarray, groups: tuple, dimension: int):
        self.labels = np.asarray(labels, dtype=float)
        self.groups = tuple(np.asarray(g, dtype=np.int64) for g in groups)
        self.dimension = int(dimension)
        counted = np.concatenate([g for g in self.groups]) if self.groups else []
        if len(counted) != dimension or len(np.unique(counted)) != dimension:
            raise ValueError("outcome groups must partition the eigenstate indices")

    @staticmethod
    def l_moment(basis) -> "MeasurementModel":
        """One outcome per total-L block; outcome value is L itself."""
        labels = []
        groups = []
        for l_value, rng in sorted(basis.blocks.items()):
            labels.append(float(l_value))
            groups.append(np.arange(rng.start, rng.stop, dtype=np.int64))
        return MeasurementModel(np.array(labels), tuple(groups), basis.dimension)

    @staticmethod
    def binomial(eigenbasis, omega: float) -> "MeasurementModel":
        """Binary test: x = 0 in the isotropic ground state at `omega`, x = 1 outside."""
        dim = eigenbasis.dimension
        i0 = eigenbasis.ground_index(omega)
        rest = np.array([i for i in range(dim) if i != i0], dtype=np.int64)
        return MeasurementModel(
            np.array([0.0, 1.0]), (np.array([i0], dtype=np.int64), rest), dim
        )

    def probabilities(self, populations: np.ndarray) -> np.ndarray:
        """Reduce populations over eigenstate indices to outcome probabilities."""
        if populations.shape[0] != self.dimension:
            raise ValueError("population vector has the wrong dimension")
        return np.array([float(populations[g].sum()) for g in self.groups])

    def moments(self, probabilities: np.ndarray):
        mean = float(np.dot(self.labels, probabilities))
        second = float(np.dot(self.labels**2, probabilities))
        return mean, max(0.0, second - mean**2)


@dataclass(frozen=True)
class ProtocolConfig:
    """Everything one full interferometric run depends on.

    `omega_ext_grid` holds the external rotation rates to probe.  The
    guard bound for the sudden stage is checked against the prepared
    state at run time (it depends on the state's L spread).  With
    `omega_c` = None the critical frequency is located first.
    """

    tau: float
    omega_ext_grid: tuple
    omega_c: float = None
    omega_start: float = 0.4
    gamma_max: float = 0.50e-3
    scheme: str = "l_moment"
    sudden_mode: str = "ramped"
    stage1_mode: str = "direct"
    readout_mode: str = "integrated"
    treatment: str = "exact"
    switch_off_duration: float = None
    delta_omega: float = 0.01
    p01: float = 0.01
    critical_bracket: tuple = (0.70, 0.995)
    integrator: IntegratorConfig = None

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("waiting time must be nonnegative")
        if len(self.omega_ext_grid) == 0:
            raise ValueError("external-rotation grid is empty")
        diffs = np.diff(np.asarray(self.omega_ext_grid, dtype=float))
        if len(diffs) and not np.all(diffs > 0):
            raise ValueError("external-rotation grid must be strictly increasing")
        if not (self.gamma_max > 0):
            raise ValueError("gamma_max must be positive (may be inf)")
        if self.scheme not in ("l_moment", "binomial"):
            raise ValueError("scheme must be 'l_moment' or 'binomial'")
        if self.sudden_mode not in ("ramped", "instantaneous"):
            raise ValueError("sudden_mode must be 'ramped' or 'instantaneous'")
        if self.stage1_mode not in ("direct", "ramp"):
            raise ValueError("stage1_mode must be 'direct' or 'ramp'")
        if self.readout_mode not in ("integrated", "adiabatic"):
            raise ValueError("readout_mode must be 'integrated' or 'adiabatic'")
        if self.treatment not in ("exact", "perturbative"):
            raise ValueError("treatment must be 'exact' or 'perturbative'")


@dataclass
class ProtocolResult:
    """Measurement-ready distributions for every probed external rotation."""

    config: ProtocolConfig
    omega_c: float
    prepared: ManyBodyState = field(repr=False)
    omega_ext: np.ndarray
    l_labels: np.ndarray
    p_l: np.ndarray = field(repr=False)  # (n_grid, n_labels)
    p_ground: np.ndarray
    sudden_fidelity_in: np.ndarray
    sudden_fidelity_out: np.ndarray
    completeness: np.ndarray
    readout_leakage: np.ndarray
    n_particles: int
    tau: float

    def distributions_to_csv(self, path) -> None:
        from ._csv import write_csv

        header = ["omega_ext", "p_ground"] + [
            f"p_l_{int(l)}" for l in self.l_labels
        ]
        rows = [
            [self.omega_ext[i], self.p_ground[i]] + list(self.p_l[i])
            for i in range(len(self.omega_ext))
        ]
        write_csv(path, header, rows)


def _prepare_stage_one(model, basis, cfg, omega_c):
    """Entangled ground state at the critical frequency (stage I).

    "direct" takes the stationary state straight from the solver chosen
    by cfg.treatment; "ramp" integrates the full time-dependent problem
    along the planned frequency schedule (exact dynamics, so it tracks
    the exact ground state and pairs naturally with treatment "exact").
    """
    if cfg.stage1_mode == "direct":
        if cfg.treatment == "perturbative":
            return perturbative_ground(model, omega_c, k=1).ground
        solution = lowest_eigenpairs(model.assemble(omega_c), k=1)
        return solution.ground
    schedule = plan_adiabatic_ramp(
        model, basis, cfg.omega_start, omega_c,
        delta_omega=cfg.delta_omega, p01=cfg.p01,
    )
    start = lowest_eigenpairs(model.assemble(cfg.omega_start), k=1).ground
    result = integrate_tdse(model, basis, start, schedule, cfg.integrator)
    return result.state.normalized()


def _run_protocol_manifold(cfg, model, basis, omega_c, prepared, grid, gamma):
    """Protocol stages evaluated inside the first-order manifold picture.

    The prepared state is an eigenstate of the effective quasi-degenerate
    problem, not of the fully assembled matrix, so propagating it with
    the full matrix would dephase it through couplings the first-order
    treatment deliberately leaves out.  All four stages therefore run in
    the same reduced picture: finite-rate frequency jumps, phase
    accumulation at the shifted frequency, and the ideal adiabatic
    removal of the deformation expressed as the eigenvector-continuation
    relabeling of the dressed levels.
    """
    manifold = YrastManifold(model)
    _, vectors_c = manifold.eigen(omega_c)
    start = vectors_c[:, 0].astype(np.complex128)
    labels_map = manifold.switch_off_labels(omega_c)

    model_l = MeasurementModel.l_moment(basis)
    label_pos = {int(l): j for j, l in enumerate(model_l.labels)}
    columns = [label_pos[int(l)] for l in labels_map]

    n_grid = len(grid)
    p_l = np.zeros((n_grid, len(model_l.labels)))
    p_ground = np.empty(n_grid)
    fid_in = np.empty(n_grid)
    fid_out = np.empty(n_grid)
    completeness = np.empty(n_grid)

    ramped = not math.isinf(gamma)
    for i, omega_ext in enumerate(grid):
        omega_delta = omega_c - float(omega_ext)
        coupled = manifold.ramp(start, omega_c, omega_delta, gamma) \
            if ramped else start
        fid_in[i] = float(np.abs(np.vdot(start, coupled)) ** 2)
        waited = manifold.evolve(coupled, omega_delta, cfg.tau)
        decoupled = manifold.ramp(waited, omega_delta, omega_c, gamma) \
            if ramped else waited
        fid_out[i] = float(np.abs(np.vdot(waited, decoupled)) ** 2)
        dressed = vectors_c.T @ decoupled
        pops = np.abs(dressed) ** 2
        for k, col in enumerate(columns):
            p_l[i, col] += pops[k]
        p_ground[i] = pops[0]
        completeness[i] = float(pops.sum())

    return ProtocolResult(
        config=cfg,
        omega_c=omega_c,
        prepared=prepared,
        omega_ext=grid,
        l_labels=model_l.labels,
        p_l=p_l,
        p_ground=p_ground,
        sudden_fidelity_in=fid_in,
        sudden_fidelity_out=fid_out,
        completeness=completeness,
        readout_leakage=np.zeros(n_grid),
        n_particles=basis.spec.n_particles,
        tau=cfg.tau,
    )


def run_protocol(
    cfg: ProtocolConfig,
    model: HamiltonianModel,
    basis,
) -> ProtocolResult:
    """Simulate the four-stage protocol over the configured grid.

    Per external rotation omega_ext the condensate frame frequency jumps
    to omega_c - omega_ext (coupling), accumulates phases for the waiting
    time, jumps back (decoupling), and the trap deformation is removed so
    angular momentum is sharp.  Returns the outcome distributions of both
    measurement schemes for every grid point.  With the perturbative
    treatment every stage runs inside the quasi-degenerate manifold
    picture the prepared state belongs to; with the exact treatment the
    stages integrate the fully assembled matrix.
    """
    eig = model.isotropic_eigenbasis()
    omega_c = cfg.omega_c
    if omega_c is None:
        omega_c = find_critical_frequency(
            model, basis, cfg.critical_bracket, treatment=cfg.treatment
        ).omega_c
    prepared = _prepare_stage_one(model, basis, cfg, omega_c)

    grid = np.asarray(cfg.omega_ext_grid, dtype=float)
    if cfg.sudden_mode == "ramped" and not math.isinf(cfg.gamma_max):
        bound = sudden_validity_bound(prepared, cfg.gamma_max)
        worst = float(np.max(np.abs(grid)))
        if worst >= bound:
            warnings.warn(
                f"largest |omega_ext| {worst:.3e} violates the sudden bound "
                f"{bound:.3e}; coupling stages will disturb the state",
                stacklevel=2,
            )

    gamma = math.inf if cfg.sudden_mode == "instantaneous" else cfg.gamma_max
    if cfg.treatment == "perturbative":
        return _run_protocol_manifold(cfg, model, basis, omega_c, prepared,
                                      grid, gamma)
    readout_map = None
    switch_duration = cfg.switch_off_duration
    if cfg.readout_mode == "adiabatic":
        vectors, l_labels_map, iso_indices = anisotropy_continuation_map(
            model, omega_c
        )
        readout_map = (vectors, iso_indices)
    elif switch_duration is None:
        switch_duration, _ = choose_switch_off_duration(
            prepared, model, basis, omega_c, cfg=cfg.integrator
        )

    model_l = MeasurementModel.l_moment(basis)
    model_bin = MeasurementModel.binomial(eig, omega_c)

    n_grid = len(grid)
    p_l = np.empty((n_grid, len(model_l.labels)))
    p_ground = np.empty(n_grid)
    fid_in = np.empty(n_grid)
    fid_out = np.empty(n_grid)
    completeness = np.empty(n_grid)
    leakage = np.zeros(n_grid)

    for i, omega_ext in enumerate(grid):
        omega_delta = omega_c - float(omega_ext)
        coupled = sudden_shift(
            prepared, model, basis, omega_c, omega_delta, gamma, cfg.integrator
        )
        fid_in[i] = coupled.fidelity_vs_initial
        waited = free_evolution(
            coupled.state.normalized(), model, basis, omega_delta, cfg.tau
        )
        decoupled = sudden_shift(
            waited, model, basis, omega_delta, omega_c, gamma, cfg.integrator
        )
        fid_out[i] = decoupled.fidelity_vs_initial
        final = decoupled.state.normalized()
        if cfg.readout_mode == "adiabatic":
            vectors, iso_indices = readout_map
            amplitudes = vectors.T @ final.amplitudes
            populations = np.zeros(eig.dimension)
            np.add.at(populations, iso_indices, np.abs(amplitudes) ** 2)
        else:
            swept = anisotropy_switch_off(
                final, model, basis, omega_c, switch_duration, cfg.integrator
            )
            populations = np.abs(eig.to_eigen(swept.state.amplitudes)) ** 2
            leakage[i] = swept.leakage
        completeness[i] = float(populations.sum())
        p_l[i] = model_l.probabilities(populations)
        p_ground[i] = model_bin.probabilities(populations)[0]

    return ProtocolResult(
        config=cfg,
        omega_c=omega_c,
        prepared=prepared,
        omega_ext=grid,
        l_labels=model_l.labels,
        p_l=p_l,
        p_ground=p_ground,
        sudden_fidelity_in=fid_in,
        sudden_fidelity_out=fid_out,
        completeness=completeness,
        readout_leakage=leakage,
        n_particles=basis.spec.n_particles,
        tau=cfg.tau,
    )


@dataclass(frozen=True)
class PrecisionCurve:
    """Rotation-rate uncertainty across the probed window, one row per point.

    `delta_omega` is the single-shot uncertainty from error propagation
    (repetitions are factored out); `delta_omega_scaled` multiplies by
    the waiting time for comparison against the shot-noise reference
    1/sqrt(N) in the figures' normalization.  Points where the estimator
    derivative vanishes are flagged divergent, never dropped.
    """

    scheme: str
    omega_ext: np.ndarray
    estimator_mean: np.ndarray
    estimator_variance: np.ndarray
    derivative: np.ndarray
    delta_omega: np.ndarray
    delta_omega_scaled: np.ndarray
    divergent: np.ndarray
    shot_noise: float
    tau: float
    derivative_check: np.ndarray = field(repr=False, default=None)

    def to_csv(self, path) -> None:
        from ._csv import write_csv

        header = [
            "omega_ext",
            "estimator_mean",
            "estimator_derivative",
            "delta_omega_scaled",
            "shot_noise",
            "divergence_flag",
        ]
        rows = [
            [
                self.omega_ext[i],
                self.estimator_mean[i],
                self.derivative[i],
                self.delta_omega_scaled[i],
                self.shot_noise,
                bool(self.divergent[i]),
            ]
            for i in range(len(self.omega_ext))
        ]
        write_csv(path, header, rows)


def _derivative_mismatch(grid: np.ndarray, mean: np.ndarray) -> np.ndarray:
    """Relative disagreement between fine- and coarse-grid derivatives.

    Richardson-style consistency signal: where the two stencils disagree
    the grid is too coarse for the curvature and the derivative (hence
    the precision) is unreliable.
    """
    check = np.full(len(grid), np.nan)
    if len(grid) < 5:
        return check
    fine = np.gradient(mean, grid)
    coarse = np.gradient(mean[::2], grid[::2])
    for j, idx in enumerate(range(0, len(grid), 2)):
        denom = max(abs(fine[idx]), abs(coarse[j]), 1e-300)
        check[idx] = abs(fine[idx] - coarse[j]) / denom
    return check


def estimate_precision(result: ProtocolResult, scheme: str = None) -> PrecisionCurve:
    """Error-propagation uncertainty of the rotation rate across the grid.

    Uses Delta omega = sigma / |d<estimator>/d omega_ext| per shot, with
    the derivative from central differences (one-sided at the edges).
    Divergent points (vanishing derivative) are flagged; the returned
    curve reports tau * Delta omega for direct comparison with 1/sqrt(N).
    """
    scheme = scheme or result.config.scheme
    grid = result.omega_ext
    if len(grid) < 3:
        raise ValueError("need at least 3 grid points to differentiate")
    if scheme == "l_moment":
        mean = result.p_l @ result.l_labels
        second = result.p_l @ result.l_labels**2
        variance = np.maximum(0.0, second - mean**2)
    elif scheme == "binomial":
        p0 = result.p_ground
        mean = 1.0 - p0
        variance = np.maximum(0.0, p0 * (1.0 - p0))
    else:
        raise ValueError("scheme must be 'l_moment' or 'binomial'")
    derivative = np.gradient(mean, grid)
    abs_deriv = np.abs(derivative)
    divergent = abs_deriv < 1e-9 + 0.02 * abs_deriv.max()
    with np.errstate(divide="ignore"):
        delta = np.where(abs_deriv > 0, np.sqrt(variance) / abs_deriv, np.inf)
    return PrecisionCurve(
        scheme=scheme,
        omega_ext=grid,
        estimator_mean=mean,
        estimator_variance=variance,
        derivative=derivative,
        delta_omega=delta,
        delta_omega_scaled=result.tau * delta,
        divergent=divergent,
        shot_noise=shot_noise_limit(result.n_particles),
        tau=result.tau,
        derivative_check=_derivative_mismatch(grid, mean),
    )
