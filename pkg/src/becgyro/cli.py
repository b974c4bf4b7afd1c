"""Batch driver: config handling, subcommands, result files, result cache.

Subcommands cover the package's main computations end to end: energy
spectra over rotation frequency, the entangled ground state and its
two-mode structure, adiabatic ramp planning, the full interferometric
protocol with precision curves, Fisher-information scans, truncation
convergence sweeps, and the oracle self-test.  Every run writes CSV data
plus a JSON summary embedding the resolved configuration and its hash,
so results are reproducible from the summary alone.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from ._csv import write_csv
from .basis import TruncationSpec, build_basis
from .errors import (
    BasisCapacityError,
    BracketError,
    ConfigError,
    ConvergenceError,
    DeltaInstabilityError,
    IntegrationError,
)
from .hamiltonian import HamiltonianModel, ModelParams
from .metrology import (
    ProtocolConfig,
    estimate_precision,
    ideal_phase_family,
    qfi_pure,
    qfi_quadratic_approx,
    run_protocol,
    shot_noise_limit,
)
from .spectrum import (
    find_critical_frequency,
    lowest_eigenpairs,
    perturbative_ground,
    sweep,
)
from .states import angular_momentum_moments, mode_entropy, spdm, two_mode_project

log = logging.getLogger("becgyro")

CACHE_FORMAT_VERSION = 1

NUMERICAL_ERRORS = (
    BasisCapacityError,
    BracketError,
    ConvergenceError,
    DeltaInstabilityError,
    IntegrationError,
    np.linalg.LinAlgError,
)


def default_config() -> dict:
    return {
        "model": {
            "n_particles": 12,
            "coupling_per_particle": 1.0,  # g N / 6; set null and give g directly
            "g": None,
            "anisotropy": 0.03,
            "l_max": None,  # null means N + 4
            "n_ll_max": 2,
        },
        "stage": {
            "omega_start": 0.4,
            "delta_omega": 0.01,
            "p01": 0.01,
            "gamma_max": 0.50e-3,
            "tau": 10.0,
            "omega_c": None,  # null means locate it first
            "omega_ext_halfwidth": 0.005,
            "omega_ext_points": 21,
            "scheme": "l_moment",
            "sudden_mode": "ramped",
            "stage1_mode": "direct",
            "readout_mode": "adiabatic",
            "treatment": "exact",
            "switch_off_duration": None,
            "critical_bracket": [0.70, 0.995],
            "scan_omega_min": 0.0,
            "scan_omega_max": 0.99,
            "scan_points": 34,
            "scan_levels": 6,
            "tau_grid": [0.25, 0.5, 1.0],
            "qfi_delta": 1e-4,
        },
        "solver": {
            "tol": 1e-10,
            "dense_threshold": 2000,
            "rtol": 1e-9,
            "atol": 1e-11,
            "max_step": 0.5,
            "convergence_l_max": None,  # null means [N+2, N+3, N+4]
            "convergence_n_ll": [1, 2],
            "convergence_omega": 0.9,
            "find_critical": False,
        },
        "output": {"directory": "results"},
        "cache": {"directory": "cache", "enable": True},
    }


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool)


_VALIDATORS = {
    ("model", "n_particles"): lambda v: isinstance(v, int) and v >= 1,
    ("model", "coupling_per_particle"): lambda v: v is None or (_is_number(v) and v >= 0),
    ("model", "g"): lambda v: v is None or (_is_number(v) and v >= 0),
    ("model", "anisotropy"): lambda v: _is_number(v) and v >= 0,
    ("model", "l_max"): lambda v: v is None or (isinstance(v, int) and v >= 0),
    ("model", "n_ll_max"): lambda v: isinstance(v, int) and v >= 1,
    ("stage", "omega_start"): lambda v: _is_number(v) and 0 <= v < 1,
    ("stage", "delta_omega"): lambda v: _is_number(v) and v > 0,
    ("stage", "p01"): lambda v: _is_number(v) and 0 < v < 1,
    ("stage", "gamma_max"): lambda v: _is_number(v) and v > 0,
    ("stage", "tau"): lambda v: _is_number(v) and v >= 0,
    ("stage", "omega_c"): lambda v: v is None or (_is_number(v) and 0 < v < 1),
    ("stage", "omega_ext_halfwidth"): lambda v: _is_number(v) and v > 0,
    ("stage", "omega_ext_points"): lambda v: isinstance(v, int) and v >= 3,
    ("stage", "scheme"): lambda v: v in ("l_moment", "binomial"),
    ("stage", "sudden_mode"): lambda v: v in ("ramped", "instantaneous"),
    ("stage", "stage1_mode"): lambda v: v in ("direct", "ramp"),
    ("stage", "readout_mode"): lambda v: v in ("integrated", "adiabatic"),
    ("stage", "treatment"): lambda v: v in ("exact", "perturbative"),
    ("stage", "switch_off_duration"): lambda v: v is None or (_is_number(v) and v > 0),
    ("stage", "critical_bracket"): lambda v: (
        isinstance(v, list) and len(v) == 2
        and all(_is_number(x) for x in v) and v[0] < v[1]
    ),
    ("stage", "scan_omega_min"): lambda v: _is_number(v) and v >= 0,
    ("stage", "scan_omega_max"): lambda v: _is_number(v) and v < 1,
    ("stage", "scan_points"): lambda v: isinstance(v, int) and v >= 2,
    ("stage", "scan_levels"): lambda v: isinstance(v, int) and v >= 1,
    ("stage", "tau_grid"): lambda v: (
        isinstance(v, list) and len(v) >= 1 and all(_is_number(x) and x >= 0 for x in v)
    ),
    ("stage", "qfi_delta"): lambda v: _is_number(v) and v > 0,
    ("solver", "tol"): lambda v: _is_number(v) and v > 0,
    ("solver", "dense_threshold"): lambda v: isinstance(v, int) and v >= 1,
    ("solver", "rtol"): lambda v: _is_number(v) and v > 0,
    ("solver", "atol"): lambda v: _is_number(v) and v > 0,
    ("solver", "max_step"): lambda v: _is_number(v) and v > 0,
    ("solver", "convergence_l_max"): lambda v: v is None or (
        isinstance(v, list) and all(isinstance(x, int) and x >= 0 for x in v)
    ),
    ("solver", "convergence_n_ll"): lambda v: (
        isinstance(v, list) and all(isinstance(x, int) and x >= 1 for x in v)
    ),
    ("solver", "convergence_omega"): lambda v: _is_number(v) and 0 <= v < 1,
    ("solver", "find_critical"): lambda v: isinstance(v, bool),
    ("output", "directory"): lambda v: isinstance(v, str) and len(v) > 0,
    ("cache", "directory"): lambda v: isinstance(v, str) and len(v) > 0,
    ("cache", "enable"): lambda v: isinstance(v, bool),
}


def validate_config(config: dict) -> None:
    """Schema check: every key known, every value in range."""
    defaults = default_config()
    if not isinstance(config, dict):
        raise ConfigError("configuration root must be a mapping")
    for section, content in config.items():
        if section not in defaults:
            raise ConfigError(f"unknown configuration section '{section}'")
        if not isinstance(content, dict):
            raise ConfigError(f"section '{section}' must be a mapping")
        for key, value in content.items():
            if (section, key) not in _VALIDATORS:
                raise ConfigError(f"unknown configuration key '{section}.{key}'")
            if not _VALIDATORS[(section, key)](value):
                raise ConfigError(
                    f"invalid value for '{section}.{key}': {value!r}"
                )


def load_config(path) -> dict:
    """Defaults deep-merged with the JSON file at `path` (optional)."""
    config = default_config()
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                user = json.load(fh)
        except FileNotFoundError:
            raise ConfigError(f"configuration file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"configuration is not valid JSON: {exc}")
        validate_config(user)
        for section, content in user.items():
            config[section].update(content)
    return config


def apply_overrides(config: dict, assignments) -> None:
    """Apply `--set section.key=value` pairs; values parse as JSON literals."""
    for item in assignments or []:
        if "=" not in item:
            raise ConfigError(f"override '{item}' is not of the form key=value")
        dotted, raw = item.split("=", 1)
        parts = dotted.strip().split(".")
        if len(parts) != 2:
            raise ConfigError(f"override key '{dotted}' must be section.key")
        section, key = parts
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        candidate = {section: {key: value}}
        validate_config(candidate)
        config.setdefault(section, {})[key] = value


def resolve_config(config: dict) -> dict:
    """Fill derived defaults (l_max, g) and cross-check the coupling knobs."""
    resolved = json.loads(json.dumps(config))  # deep copy, JSON-clean
    model = resolved["model"]
    n = model["n_particles"]
    if model["l_max"] is None:
        model["l_max"] = n + 4
    cpp = model["coupling_per_particle"]
    g = model["g"]
    if g is None and cpp is None:
        raise ConfigError("one of model.g or model.coupling_per_particle is required")
    if g is None:
        model["g"] = 6.0 * cpp / n
    elif cpp is None:
        model["coupling_per_particle"] = g * n / 6.0
    elif abs(g - 6.0 * cpp / n) > 1e-12 * max(1.0, abs(g)):
        raise ConfigError(
            "model.g and model.coupling_per_particle disagree; set one to null"
        )
    return resolved


def config_hash(resolved: dict) -> str:
    canon = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def build_model(resolved: dict):
    model_cfg = resolved["model"]
    spec = TruncationSpec(
        n_particles=model_cfg["n_particles"],
        l_max=model_cfg["l_max"],
        n_ll_max=model_cfg["n_ll_max"],
    )
    basis = build_basis(spec)
    cache_dir = None
    if resolved["cache"]["enable"]:
        cache_dir = resolved["cache"]["directory"]
    params = ModelParams(
        g=model_cfg["g"], anisotropy=model_cfg["anisotropy"], spec=spec
    )
    return HamiltonianModel(params, basis, cache_dir=cache_dir), basis


# ---------------------------------------------------------------- cache

def cache_key(kind: str, payload: dict) -> str:
    canon = json.dumps({"kind": kind, "payload": payload},
                       sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


def _cache_path(directory, key: str) -> Path:
    return Path(directory) / f"v{CACHE_FORMAT_VERSION}" / f"{key}.bin"


def cache_put(directory, key: str, arrays: dict) -> Path:
    """Store named arrays under the key; bit-exact on the way back out."""
    path = _cache_path(directory, key)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        np.savez(
            fh,
            format_version=np.int64(CACHE_FORMAT_VERSION),
            entry_key=np.bytes_(key.encode("ascii")),
            **{k: np.asarray(v) for k, v in arrays.items()},
        )
    return path


def cache_get(directory, key: str):
    """Arrays stored under the key, or None if absent, stale, or corrupt."""
    path = _cache_path(directory, key)
    if not path.exists():
        return None
    try:
        with np.load(path, allow_pickle=False) as data:
            if int(data["format_version"]) != CACHE_FORMAT_VERSION:
                return None
            if bytes(data["entry_key"]).decode("ascii") != key:
                return None
            return {
                name: data[name]
                for name in data.files
                if name not in ("format_version", "entry_key")
            }
    except Exception as exc:
        log.warning("ignoring corrupt cache entry %s: %s", path, exc)
        return None


def _critical_payload(resolved: dict) -> dict:
    return {
        "model": resolved["model"],
        "solver": {"tol": resolved["solver"]["tol"]},
        "bracket": resolved["stage"]["critical_bracket"],
        "treatment": resolved["stage"]["treatment"],
    }


def _locate_omega_c(resolved, model, basis):
    """Critical frequency from config, cache, or a fresh search."""
    if resolved["stage"]["omega_c"] is not None:
        return float(resolved["stage"]["omega_c"]), "configured"
    use_cache = resolved["cache"]["enable"]
    key = cache_key("omega_c", _critical_payload(resolved))
    if use_cache:
        hit = cache_get(resolved["cache"]["directory"], key)
        if hit is not None:
            return float(hit["omega_c"]), "cached"
    found = find_critical_frequency(
        model, basis, tuple(resolved["stage"]["critical_bracket"]),
        treatment=resolved["stage"]["treatment"],
    )
    if use_cache:
        cache_put(
            resolved["cache"]["directory"], key,
            {"omega_c": np.float64(found.omega_c),
             "evaluations": found.evaluations},
        )
    return found.omega_c, "computed"


# ------------------------------------------------------------- summaries

def _write_summary(out_dir: Path, subcommand: str, resolved: dict, results: dict,
                   outputs) -> Path:
    import scipy

    summary = {
        "subcommand": subcommand,
        "package_version": __version__,
        "numpy_version": np.__version__,
        "scipy_version": scipy.__version__,
        "written_at": datetime.now(timezone.utc).isoformat(),
        "config": resolved,
        "config_hash": config_hash(resolved),
        "results": results,
        "outputs": [str(p) for p in outputs],
    }
    path = out_dir / f"{subcommand.replace('-', '_')}_summary.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=False)
        fh.write("\n")
    return path


def _out_dir(resolved) -> Path:
    out = Path(resolved["output"]["directory"])
    out.mkdir(parents=True, exist_ok=True)
    return out


# ----------------------------------------------------------- subcommands

def cmd_spectrum(resolved: dict) -> dict:
    out = _out_dir(resolved)
    model, basis = build_model(resolved)
    stage = resolved["stage"]
    omegas = np.linspace(stage["scan_omega_min"], stage["scan_omega_max"],
                         stage["scan_points"])
    k = min(stage["scan_levels"], basis.dimension)
    use_cache = resolved["cache"]["enable"]
    key = cache_key("spectrum", {
        "model": resolved["model"],
        "omegas": [float(x) for x in omegas],
        "k": k,
        "tol": resolved["solver"]["tol"],
    })
    energies = None
    if use_cache:
        hit = cache_get(resolved["cache"]["directory"], key)
        if hit is not None:
            energies = hit["energies"]
    if energies is None:
        result = sweep(model, basis, omegas, k=k, tol=resolved["solver"]["tol"])
        energies = result.energies
        if use_cache:
            cache_put(resolved["cache"]["directory"], key,
                      {"energies": energies, "omegas": omegas})
    csv_path = out / "spectrum.csv"
    header = ["omega"] + [f"energy_{i}" for i in range(k)]
    write_csv(csv_path, header,
              [[omegas[i]] + list(energies[i]) for i in range(len(omegas))])
    gaps = energies[:, 1] - energies[:, 0] if k >= 2 else None
    results = {
        "dimension": basis.dimension,
        "levels": k,
        "grid_points": len(omegas),
    }
    if gaps is not None:
        idx = int(np.argmin(gaps))
        results["min_gap"] = float(gaps[idx])
        results["omega_min_gap"] = float(omegas[idx])
    summary = _write_summary(out, "spectrum", resolved, results, [csv_path])
    print(f"spectrum: {len(omegas)} points, dimension {basis.dimension} "
          f"-> {csv_path} ({summary.name})")
    return results


def cmd_ground_state(resolved: dict) -> dict:
    out = _out_dir(resolved)
    model, basis = build_model(resolved)
    omega_c, origin = _locate_omega_c(resolved, model, basis)
    if resolved["stage"]["treatment"] == "perturbative":
        solution = perturbative_ground(model, omega_c, k=2)
    else:
        solution = lowest_eigenpairs(
            model.assemble(omega_c), k=2, tol=resolved["solver"]["tol"]
        )
    ground = solution.ground
    decomposition = two_mode_project(ground)
    orbitals = spdm(ground.normalized())
    mean_l, _second, std_l = angular_momentum_moments(ground)
    n = basis.spec.n_particles
    csv_path = out / "pn_distribution.csv"
    write_csv(
        csv_path,
        ["n_pairs", "p_n", "coefficient_magnitude"],
        [
            [i, decomposition.p_values[i], abs(decomposition.coefficients[i])]
            for i in range(len(decomposition.p_values))
        ],
    )
    results = {
        "omega_c": omega_c,
        "omega_c_origin": origin,
        "gap_at_omega_c": solution.gap,
        "two_mode_fidelity": decomposition.fidelity,
        "mode_entropy_bits": mode_entropy(decomposition),
        "natural_populations": [float(x) for x in orbitals.populations[:4]],
        "l_mean": mean_l,
        "l_std": std_l,
        "l_variance": std_l**2,
        "coupling_per_particle": resolved["model"]["coupling_per_particle"],
    }
    summary = _write_summary(out, "ground-state", resolved, results, [csv_path])
    print(
        f"ground-state: omega_c={omega_c:.4f} ({origin}), two-mode fidelity "
        f"{decomposition.fidelity:.3f} -> {csv_path} ({summary.name})"
    )
    return results


def cmd_ramp_plan(resolved: dict) -> dict:
    from .dynamics import plan_adiabatic_ramp

    out = _out_dir(resolved)
    model, basis = build_model(resolved)
    omega_c, origin = _locate_omega_c(resolved, model, basis)
    stage = resolved["stage"]
    outputs = []
    results = {"omega_c": omega_c, "omega_c_origin": origin}
    for variant in ("subgrid", "endpoint"):
        schedule = plan_adiabatic_ramp(
            model, basis, stage["omega_start"], omega_c,
            delta_omega=stage["delta_omega"], p01=stage["p01"], variant=variant,
            treatment=stage["treatment"],
        )
        csv_path = out / f"ramp_plan_{variant}.csv"
        write_csv(
            csv_path,
            ["omega_start", "omega_end", "min_gap", "gamma", "duration"],
            [
                [seg.omega_start, seg.omega_end, gap, seg.gamma, seg.duration]
                for seg, gap in zip(schedule.segments, schedule.segment_gaps)
            ],
        )
        outputs.append(csv_path)
        results[variant] = {
            "segments": len(schedule.segments),
            "total_time": schedule.total_time,
            "seconds": schedule.seconds(),
            "feasible_16s": schedule.feasible(),
        }
    summary = _write_summary(out, "ramp-plan", resolved, results, outputs)
    sub = results["subgrid"]
    print(
        f"ramp-plan: {sub['segments']} segments, {sub['seconds']:.2f} s "
        f"(feasible: {sub['feasible_16s']}) -> {outputs[0]} ({summary.name})"
    )
    return results


def _protocol_config(resolved: dict, omega_c: float) -> ProtocolConfig:
    from .dynamics import IntegratorConfig

    stage = resolved["stage"]
    solver = resolved["solver"]
    half = stage["omega_ext_halfwidth"]
    grid = np.linspace(-half, half, stage["omega_ext_points"])
    return ProtocolConfig(
        tau=stage["tau"],
        omega_ext_grid=tuple(float(x) for x in grid),
        omega_c=omega_c,
        omega_start=stage["omega_start"],
        gamma_max=stage["gamma_max"],
        scheme=stage["scheme"],
        sudden_mode=stage["sudden_mode"],
        stage1_mode=stage["stage1_mode"],
        readout_mode=stage["readout_mode"],
        switch_off_duration=stage["switch_off_duration"],
        treatment=stage["treatment"],
        delta_omega=stage["delta_omega"],
        p01=stage["p01"],
        critical_bracket=tuple(stage["critical_bracket"]),
        integrator=IntegratorConfig(
            rtol=solver["rtol"], atol=solver["atol"], max_step=solver["max_step"]
        ),
    )


def cmd_protocol(resolved: dict) -> dict:
    out = _out_dir(resolved)
    model, basis = build_model(resolved)
    omega_c, origin = _locate_omega_c(resolved, model, basis)
    cfg = _protocol_config(resolved, omega_c)
    result = run_protocol(cfg, model, basis)
    dist_path = out / "protocol_distributions.csv"
    result.distributions_to_csv(dist_path)
    outputs = [dist_path]
    results = {
        "omega_c": omega_c,
        "omega_c_origin": origin,
        "shot_noise": shot_noise_limit(result.n_particles),
        "tau": result.tau,
        "worst_completeness_defect": float(
            np.max(np.abs(result.completeness - 1.0))
        ),
        "sudden_fidelity_min": float(
            min(result.sudden_fidelity_in.min(), result.sudden_fidelity_out.min())
        ),
    }
    for scheme in ("l_moment", "binomial"):
        curve = estimate_precision(result, scheme)
        path = out / f"precision_{scheme}.csv"
        curve.to_csv(path)
        outputs.append(path)
        good = ~curve.divergent
        results[scheme] = {
            "divergent_points": int(curve.divergent.sum()),
            "best_scaled_precision": float(curve.delta_omega_scaled[good].min())
            if good.any()
            else None,
            "sub_shot_noise_points": int(
                np.sum(curve.delta_omega_scaled[good] < curve.shot_noise)
            ),
        }
    summary = _write_summary(out, "protocol", resolved, results, outputs)
    print(
        f"protocol: omega_c={omega_c:.4f}, {len(result.omega_ext)} grid points "
        f"-> {dist_path} ({summary.name})"
    )
    return results


def cmd_qfi(resolved: dict) -> dict:
    out = _out_dir(resolved)
    model, basis = build_model(resolved)
    omega_c, origin = _locate_omega_c(resolved, model, basis)
    if resolved["stage"]["treatment"] == "perturbative":
        prepared = perturbative_ground(model, omega_c, k=1).ground
    else:
        prepared = lowest_eigenpairs(
            model.assemble(omega_c), k=1, tol=resolved["solver"]["tol"]
        ).ground
    stage = resolved["stage"]
    delta = stage["qfi_delta"]
    rows_tau = []
    for tau in stage["tau_grid"]:
        family = ideal_phase_family(
            model, basis, prepared, omega_c, tau, treatment=stage["treatment"]
        )
        exact = qfi_pure(family, 0.0, delta=delta)
        approx = qfi_quadratic_approx(prepared, tau)
        agree = (
            abs(exact - approx) <= 0.10 * max(abs(exact), abs(approx), 1e-300)
        )
        rows_tau.append([tau, exact, approx, agree])
    tau_path = out / "qfi_vs_tau.csv"
    write_csv(
        tau_path,
        ["tau", "qfi_pure", "qfi_quadratic", "quadratic_valid"],
        rows_tau,
    )
    half = stage["omega_ext_halfwidth"]
    grid = np.linspace(-half, half, min(stage["omega_ext_points"], 9))
    family = ideal_phase_family(
        model, basis, prepared, omega_c, stage["tau"], treatment=stage["treatment"]
    )
    rows_omega = [
        [om, qfi_pure(family, float(om), delta=delta)] for om in grid
    ]
    omega_path = out / "qfi_vs_omega_ext.csv"
    write_csv(omega_path, ["omega_ext", "qfi_pure"], rows_omega)
    results = {
        "omega_c": omega_c,
        "omega_c_origin": origin,
        "qfi_at_tau": {f"{row[0]:g}": row[1] for row in rows_tau},
        "quadratic_valid_all": all(row[3] for row in rows_tau),
        "cramer_rao_floor_at_tau": {
            f"{row[0]:g}": 1.0 / math.sqrt(row[1]) if row[1] > 0 else None
            for row in rows_tau
        },
    }
    summary = _write_summary(out, "qfi", resolved, results, [tau_path, omega_path])
    print(f"qfi: {len(rows_tau)} waiting times, {len(rows_omega)} grid points "
          f"-> {tau_path} ({summary.name})")
    return results


def cmd_convergence(resolved: dict) -> dict:
    out = _out_dir(resolved)
    solver = resolved["solver"]
    n = resolved["model"]["n_particles"]
    l_values = solver["convergence_l_max"] or [n + 2, n + 3, n + 4]
    rows = []
    for n_ll in solver["convergence_n_ll"]:
        for l_max in l_values:
            local = json.loads(json.dumps(resolved))
            local["model"]["l_max"] = int(l_max)
            local["model"]["n_ll_max"] = int(n_ll)
            model, basis = build_model(local)
            sol = lowest_eigenpairs(
                model.assemble(solver["convergence_omega"]), k=2,
                tol=solver["tol"],
            )
            row = [l_max, n_ll, basis.dimension,
                   float(sol.eigenvalues[0]), sol.gap]
            if solver["find_critical"]:
                found = find_critical_frequency(
                    model, basis, tuple(resolved["stage"]["critical_bracket"])
                )
                row.append(found.omega_c)
            else:
                row.append(math.nan)
            rows.append(row)
    csv_path = out / "convergence.csv"
    write_csv(
        csv_path,
        ["l_max", "n_ll_max", "dimension", "energy_0", "gap", "omega_c"],
        rows,
    )
    by_pair = {}
    for row in rows:
        by_pair.setdefault(row[1], []).append(row)
    drifts = {}
    for n_ll, entries in by_pair.items():
        entries.sort(key=lambda r: r[0])
        if len(entries) >= 2:
            drifts[str(n_ll)] = float(
                abs(entries[-1][3] - entries[-2][3])
            )
    results = {
        "rows": len(rows),
        "energy_drift_last_step": drifts,
        "probe_omega": solver["convergence_omega"],
    }
    summary = _write_summary(out, "convergence", resolved, results, [csv_path])
    print(f"convergence: {len(rows)} truncations -> {csv_path} ({summary.name})")
    return results


def cmd_selftest(resolved: dict, fast: bool = True) -> dict:
    from .oracles import selftest_report

    out = _out_dir(resolved)
    report = selftest_report(fast=fast)
    all_ok = True
    for name, ok, detail in report:
        status = "PASS" if ok else "FAIL"
        all_ok = all_ok and ok
        line = f"  [{status}] {name}"
        if detail:
            line += f" ({detail})"
        print(line)
    results = {
        "checks": [
            {"name": name, "passed": bool(ok), "detail": detail}
            for name, ok, detail in report
        ],
        "all_passed": all_ok,
    }
    summary = _write_summary(out, "selftest", resolved, results, [])
    print(f"selftest: {'all passed' if all_ok else 'FAILURES'} ({summary.name})")
    if not all_ok:
        raise ConvergenceError("self-test reported failures")
    return results


_SUBCOMMANDS = {
    "spectrum": cmd_spectrum,
    "ground-state": cmd_ground_state,
    "ramp-plan": cmd_ramp_plan,
    "protocol": cmd_protocol,
    "qfi": cmd_qfi,
    "convergence": cmd_convergence,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="becgyro",
        description="Entangled rotating-condensate gyroscope simulations",
    )
    parser.add_argument("--config", default=None, help="JSON configuration file")
    parser.add_argument(
        "--set", action="append", metavar="SECTION.KEY=VALUE", dest="overrides",
        help="override one configuration value (JSON-literal syntax)",
    )
    parser.add_argument("--output", default=None, help="output directory override")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _SUBCOMMANDS:
        sub.add_parser(name)
    selftest = sub.add_parser("selftest")
    selftest.add_argument(
        "--full", action="store_true",
        help="run the slower, larger oracle comparisons",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        apply_overrides(config, args.overrides)
        if args.output is not None:
            config["output"]["directory"] = args.output
        validate_config(config)
        resolved = resolve_config(config)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.subcommand == "selftest":
            cmd_selftest(resolved, fast=not args.full)
        else:
            _SUBCOMMANDS[args.subcommand](resolved)
    except NUMERICAL_ERRORS as exc:
        print(
            f"numerical failure in '{args.subcommand}': "
            f"[{type(exc).__name__}] {exc}",
            file=sys.stderr,
        )
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
