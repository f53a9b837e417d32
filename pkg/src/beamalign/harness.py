"""Monte Carlo experiment orchestration and machine-readable outputs.

Every random draw of a trial is fixed by (master_seed, trial_index) through
a counter-based seed tree, so re-runs are byte-identical for any worker
count and trial execution order.  CSV bodies therefore contain only
deterministic quantities; wall-clock statistics go to the run manifest.
"""

from __future__ import annotations

import csv
import io
import json
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial
from pathlib import Path

import numpy as np

from . import __version__
from .channel import realize_channel
from .config import ExperimentSpec, RuntimeSetup, apply_sweep_value, config_hash, resolve
from .estimator import m_plus_check, nnls_solve, omp_baseline, select_beam
from .metrics import calibrate_power, pdp, rate_bounds
from .receiver import collect_probe
from .signaling import PowerConfig, gen_codebook, gen_pn

WILSON_Z = 1.959963984540054  # two-sided 95%


@dataclass
class ExperimentResult:
    """Rows plus their serialized forms, ready to write or ship over the API."""

    experiment: str
    rows: list[dict]
    csv_text: str
    manifest: dict


def wilson_interval(successes: int, trials: int) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    z2 = WILSON_Z**2
    p_hat = successes / trials
    center = (p_hat + z2 / (2 * trials)) / (1 + z2 / trials)
    half = (
        WILSON_Z
        * np.sqrt(p_hat * (1 - p_hat) / trials + z2 / (4 * trials**2))
        / (1 + z2 / trials)
    )
    return max(0.0, center - half), min(1.0, center + half)


def _trial_seed_tree(cfg: ExperimentSpec, trial_index: int):
    base = np.random.SeedSequence(entropy=(cfg.master_seed, 0x0BA5EED, trial_index))
    pn_ss, cb_ss, chan_ss, noise_ss = base.spawn(4)
    if cfg.signal.pn_seed is not None:
        pn_ss = np.random.SeedSequence(cfg.signal.pn_seed)
    if cfg.signal.codebook_seed is not None:
        cb_ss = np.random.SeedSequence(cfg.signal.codebook_seed)
    return (
        np.random.default_rng(pn_ss),
        np.random.default_rng(cb_ss),
        np.random.default_rng(chan_ss),
        np.random.default_rng(noise_ss),
    )


def _transmit_power(cfg: ExperimentSpec, setup: RuntimeSetup) -> float:
    if cfg.p_tot_w is not None:
        return cfg.p_tot_w
    return calibrate_power(
        cfg.snr_bbf_db, nominal_paths(setup), setup.noise_psd, setup.system.bandwidth_hz
    )


def nominal_paths(setup: RuntimeSetup):
    """Per-entry (gamma, eta) path list used by the closed-form SNR accounting."""
    return [e if not hasattr(e, "center") else e.center for e in setup.entries]


def run_trial(cfg: ExperimentSpec, trial_index: int) -> dict:
    """One end-to-end beam-alignment trial; deterministic in (master_seed, trial_index)."""
    t_start = time.perf_counter()
    try:
        setup = resolve(cfg)
        system, signal = setup.system, setup.signal
        pn_rng, cb_rng, chan_rng, noise_rng = _trial_seed_tree(cfg, trial_index)
        pn = gen_pn(system.bs_rf_chains, signal.n_chips, pn_rng, seed=cfg.signal.pn_seed)
        codebook = gen_codebook(
            system.bs_antennas,
            system.bs_rf_chains,
            system.ue_antennas,
            system.ue_rf_chains,
            signal.beacon_slots,
            setup.kappa_u,
            setup.kappa_v,
            cb_rng,
            seed=cfg.signal.codebook_seed,
        )
        realization = realize_channel(
            setup.entries, signal.beacon_slots, setup.coherence_slots, chan_rng
        )
        power = PowerConfig(p_tot_w=_transmit_power(cfg, setup), noise_psd=setup.noise_psd)
        probe = collect_probe(
            realization,
            pn,
            codebook,
            power,
            system,
            signal,
            noise_rng,
            ideal_streams=cfg.ideal_streams,
            peak_tap=setup.target_delay_chips,
        )

        target = (setup.target_ue_index, setup.target_bs_index)
        result: dict = {
            "trial": trial_index,
            "coverage_ok": bool(m_plus_check(probe.batch.b).satisfied),
        }
        schemes = ("nnls", "omp") if cfg.scheme == "both" else (cfg.scheme,)
        if "nnls" in schemes:
            estimate = nnls_solve(
                probe.batch.b,
                probe.batch.q,
                floor=probe.batch.noise_floor,
                shape=(system.ue_antennas, system.bs_antennas),
            )
            selection = select_beam(estimate.gamma_star)
            result["nnls"] = bool(
                selection is not None and (selection.ue_index, selection.bs_index) == target
            )
            result["nnls_iterations"] = estimate.iterations
            result["nnls_converged"] = bool(estimate.converged)
        if "omp" in schemes:
            scale = np.sqrt(power.p_dim(system, signal)) * signal.n_chips
            scale /= np.sqrt(setup.kappa_u * setup.kappa_v)
            sensing = probe.batch.b * scale
            omp = omp_baseline(
                probe.peak_samples.reshape(-1),
                sensing,
                sparsity=setup.sparsity,
                shape=(system.ue_antennas, system.bs_antennas),
            )
            result["omp"] = bool(
                omp.selection is not None
                and (omp.selection.ue_index, omp.selection.bs_index) == target
            )
            result["omp_regularized"] = bool(omp.regularized)
        result["elapsed_ms"] = (time.perf_counter() - t_start) * 1e3
        return result
    except Exception as exc:  # attach trial context before propagating
        raise RuntimeError(f"trial {trial_index} failed: {exc}") from exc


def _run_trials(cfg: ExperimentSpec) -> list[dict]:
    indices = range(cfg.trials)
    if cfg.workers <= 1:
        results = [run_trial(cfg, k) for k in indices]
    else:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(partial(run_trial, cfg), indices, chunksize=8))
    return sorted(results, key=lambda r: r["trial"])


def _git_revision() -> str | None:
    try:
        out = subprocess.run(
            ["git", "rev-parse", "HEAD"], capture_output=True, text=True, timeout=5.0,
            cwd=Path(__file__).resolve().parent,
        )
    except OSError:
        return None
    return out.stdout.strip() if out.returncode == 0 else None


def _manifest(cfg: ExperimentSpec, experiment: str, wall_s: float, points: list[dict]) -> dict:
    return {
        "experiment": experiment,
        "package_version": __version__,
        "config": cfg.model_dump(mode="json"),
        "config_sha256": config_hash(cfg),
        "master_seed": cfg.master_seed,
        "git_revision": _git_revision(),
        "wall_time_s": wall_s,
        "points": points,
    }


def _csv_field(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))  # shortest round-trip decimal
    return str(v)


def _csv_text(kind: str, cfg: ExperimentSpec, header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# beamalign-{kind}-v1 config_sha256={config_hash(cfg)} master_seed={cfg.master_seed}\r\n")
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_csv_field(v) for v in row])
    return buf.getvalue()


def run_detection_sweep(cfg: ExperimentSpec) -> ExperimentResult:
    """Detection probability over the configured sweep, one row per (value, scheme)."""
    t0 = time.perf_counter()
    if cfg.sweep is not None:
        variable, values = cfg.sweep.variable, cfg.sweep.values
    else:
        variable, values = "snr_bbf_db", [cfg.snr_bbf_db]

    rows: list[dict] = []
    points: list[dict] = []
    for value in values:
        cfg_v = apply_sweep_value(cfg, variable, value)
        trials = _run_trials(cfg_v)
        schemes = ("nnls", "omp") if cfg_v.scheme == "both" else (cfg_v.scheme,)
        mean_ms = float(np.mean([t["elapsed_ms"] for t in trials]))
        points.append({"value": value, "mean_trial_ms": mean_ms})
        for scheme in schemes:
            successes = sum(1 for t in trials if t[scheme])
            lo, hi = wilson_interval(successes, cfg_v.trials)
            rows.append(
                {
                    "sweep": variable,
                    "value": value,
                    "scheme": scheme,
                    "trials": cfg_v.trials,
                    "successes": successes,
                    "p_d": successes / cfg_v.trials,
                    "wilson_lo": lo,
                    "wilson_hi": hi,
                }
            )
    header = ["sweep", "value", "scheme", "trials", "successes", "p_d", "wilson_lo", "wilson_hi"]
    csv_rows = [[r[h] for h in header] for r in rows]
    return ExperimentResult(
        experiment="detection",
        rows=rows,
        csv_text=_csv_text("detection", cfg, header, csv_rows),
        manifest=_manifest(cfg, "detection", time.perf_counter() - t0, points),
    )


def _expanded_paths(cfg: ExperimentSpec, setup: RuntimeSetup):
    from .channel import expand_clusters

    rng = np.random.default_rng(
        np.random.SeedSequence(entropy=(cfg.master_seed, 0xC1A55))
    )
    return expand_clusters(setup.entries, rng)


def _true_selection(setup: RuntimeSetup):
    from .estimator import BeamSelection

    return BeamSelection(
        ue_index=setup.target_ue_index, bs_index=setup.target_bs_index, strength=1.0
    )


def run_rate_experiment(cfg: ExperimentSpec) -> ExperimentResult:
    """Ergodic rate bounds after a successful alignment, swept over SNR."""
    t0 = time.perf_counter()
    setup = resolve(cfg)
    paths = _expanded_paths(cfg, setup)
    selection = _true_selection(setup)
    if cfg.sweep is not None and cfg.sweep.variable == "snr_bbf_db":
        grid = [float(v) for v in cfg.sweep.values]
    else:
        grid = list(cfg.rate_snr_grid_db)

    rows = []
    for snr_db in grid:
        p_tot = calibrate_power(
            snr_db, nominal_paths(setup), setup.noise_psd, setup.system.bandwidth_hz
        )
        point_key = int(round(snr_db * 1000)) & 0xFFFFFFFF
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(cfg.master_seed, 0x7A7E, point_key))
        )
        bounds = rate_bounds(
            paths, selection, p_tot, setup.noise_psd, setup.system, rng, draws=cfg.rate_draws
        )
        rows.append({"snr_bbf_db": snr_db, "r_ub": bounds.r_ub, "r_lb": bounds.r_lb})
    header = ["snr_bbf_db", "r_ub", "r_lb"]
    csv_rows = [[r[h] for h in header] for r in rows]
    return ExperimentResult(
        experiment="rate",
        rows=rows,
        csv_text=_csv_text("rate", cfg, header, csv_rows),
        manifest=_manifest(cfg, "rate", time.perf_counter() - t0, [{"points": len(rows)}]),
    )


def run_pdp_experiment(cfg: ExperimentSpec) -> ExperimentResult:
    """Average power delay profile before and after alignment."""
    t0 = time.perf_counter()
    setup = resolve(cfg)
    paths = _expanded_paths(cfg, setup)
    p_tot = _transmit_power(cfg, setup)
    rows = []
    for label, selection in (("before", None), ("after", _true_selection(setup))):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(cfg.master_seed, 0x9D9)))
        profile = pdp(paths, selection, p_tot, setup.system, rng, draws=cfg.pdp_draws)
        for tap, energy in enumerate(profile.taps):
            rows.append({"stage": label, "tap": tap, "energy": float(energy)})
    header = ["stage", "tap", "energy"]
    csv_rows = [[r[h] for h in header] for r in rows]
    return ExperimentResult(
        experiment="pdp",
        rows=rows,
        csv_text=_csv_text("pdp", cfg, header, csv_rows),
        manifest=_manifest(cfg, "pdp", time.perf_counter() - t0, [{"points": len(rows)}]),
    )


RUNNERS = {
    "detection": run_detection_sweep,
    "rate": run_rate_experiment,
    "pdp": run_pdp_experiment,
}


def run_experiment(cfg: ExperimentSpec, experiment: str) -> ExperimentResult:
    try:
        runner = RUNNERS[experiment]
    except KeyError:
        raise ValueError(f"unknown experiment {experiment!r}; pick one of {sorted(RUNNERS)}")
    return runner(cfg)


def write_outputs(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write the CSV and manifest of one experiment run into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / f"{result.experiment}.csv"
    manifest_path = out / f"{result.experiment}_manifest.json"
    with csv_path.open("w", newline="") as fh:
        fh.write(result.csv_text)
    with manifest_path.open("w") as fh:
        json.dump(result.manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return [csv_path, manifest_path]
