"""Run orchestration: enumerate -> build -> diagonalize -> observables ->
analysis, with deterministic CSV/JSON persistence and coupling sweeps."""

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import analysis, hamiltonian, observables, solver
from .basis import enumerate_basis
from .errors import ConfigError, DickelatError
from .hamiltonian import ModelParams

SECTOR_DIRS = {1: "plus", -1: "minus", None: "all"}


def fmt(x):
    """Full-precision, locale-free float formatting for CSV cells."""
    if isinstance(x, float) and math.isnan(x):
        return "nan"
    return f"{x:.17g}" if isinstance(x, float) else str(x)


@dataclass
class RunConfig:
    """Everything needed to resolve one run (or a sweep) of the pipeline."""

    params: ModelParams
    basis: str = "coherent-parity"
    n_max: int = 250
    sectors: tuple = (1, -1)
    ops: tuple = ("Jz", "Jx2", "photon_n")
    dp_tol: float = 1e-12
    do_markers: bool = True
    do_dos: bool = True
    do_stats: bool = True
    bin_width: float = analysis.DEFAULT_BIN_WIDTH
    unfold_degree: int = analysis.DEFAULT_UNFOLD_DEGREE
    stat_windows: tuple = ((None, -1.0), (-1.0, 1.0))
    out_dir: Path | None = None
    workers: int = 1
    mem_budget_bytes: int = hamiltonian.MEMORY_BUDGET_BYTES
    solver_driver: str = "evd"
    keep_vectors: bool = False
    gammas: tuple = ()

    def __post_init__(self):
        if self.basis not in ("fock", "coherent", "coherent-parity"):
            raise ConfigError(f"unknown basis {self.basis!r}")
        if self.basis == "coherent-parity":
            if not self.sectors or any(s not in (1, -1) for s in self.sectors):
                raise ConfigError("parity runs need sectors drawn from {+1, -1}")
        for op in self.ops:
            if op not in observables.PERES_OPS:
                raise ConfigError(f"unknown Peres operator {op!r}")
        if self.n_max < 0:
            raise ConfigError("n_max must be >= 0")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.out_dir is not None:
            self.out_dir = Path(self.out_dir)


@dataclass
class SectorResult:
    sector: int | None
    dim: int
    energies: np.ndarray
    parities: np.ndarray
    report: observables.ConvergenceReport | None
    expectations: dict
    lattices: dict
    dos: tuple | None
    markers: analysis.EsqptMarkers | None
    stats: list | None
    residual_report: solver.ResidualReport
    wall_time_s: float
    spectrum: solver.Spectrum | None = None


@dataclass
class RunResult:
    config: RunConfig
    gamma: float
    sectors: list
    manifests: list
    out_dir: Path | None


def _build_matrix(cfg, sector):
    if cfg.basis == "fock":
        return hamiltonian.build_fock(cfg.params, cfg.n_max)
    if cfg.basis == "coherent":
        return hamiltonian.build_coherent(cfg.params, cfg.n_max)
    return hamiltonian.build_coherent_parity(cfg.params, cfg.n_max, sector)


def _window_stats(energies_over_j, windows, degree):
    """Mean gap ratio per E/j window on a converged, single-sector spectrum."""
    out = []
    for lo, hi in windows:
        lo_v = -math.inf if lo is None else lo
        hi_v = math.inf if hi is None else hi
        sel = energies_over_j[(energies_over_j > lo_v) & (energies_over_j < hi_v)]
        sel = analysis.drop_degenerate(sel)
        entry = {"window": [lo, hi], "n_levels": int(sel.size)}
        if sel.size < 50:
            entry["skipped"] = "fewer than 50 levels"
        else:
            try:
                unfolded = analysis.unfold(sel, degree)
                stats = analysis.spacing_stats(unfolded)
                entry["mean_ratio"] = stats.mean_ratio
                entry["unfolded"] = True
            except DickelatError as exc:
                entry["mean_ratio"] = analysis.mean_gap_ratio(sel)
                entry["unfolded"] = False
                entry["note"] = f"unfolding fell back to raw spacings: {exc}"
        out.append(entry)
    return out


def run_sector(cfg: RunConfig, sector):
    """Full pipeline for one sector; returns an in-memory SectorResult."""
    t0 = time.perf_counter()
    matrix = _build_matrix(cfg, sector)
    index = enumerate_basis(matrix.basis)
    spectrum = solver.eigh(matrix, driver=cfg.solver_driver)
    residual = spectrum.residual_report
    del matrix

    if cfg.basis == "fock":
        report = None
        dp = np.full(spectrum.dim, math.nan)
    else:
        report = observables.delta_p(spectrum, index, tolerance=cfg.dp_tol)
        dp = report.delta_p
    parities = observables.parity_labels(spectrum, cfg.params)

    expectations = {}
    lattices = {}
    for op in cfg.ops:
        op_matrix = observables.peres_matrix(op, index, cfg.params)
        expectations[op] = observables.expectation(spectrum, op_matrix)
        del op_matrix
        if report is not None:
            lattices[op] = analysis.lattice(
                spectrum, expectations[op], parities, report, cfg.params, op
            )

    e_over_j = spectrum.energies / cfg.params.j
    dos = None
    if cfg.do_dos:
        dos = analysis.density_of_states(spectrum.energies, cfg.params.j, cfg.bin_width)

    markers = None
    if cfg.do_markers and "Jz" in lattices:
        converged = lattices["Jz"].select(dp < cfg.dp_tol)
        try:
            markers = analysis.esqpt_markers(converged, cfg.bin_width)
        except DickelatError:
            markers = None

    stats = None
    if cfg.do_stats and cfg.basis == "coherent-parity" and report is not None:
        converged_e = e_over_j[dp < cfg.dp_tol]
        stats = _window_stats(converged_e, cfg.stat_windows, cfg.unfold_degree)

    wall = time.perf_counter() - t0
    return SectorResult(
        sector=sector,
        dim=spectrum.dim,
        energies=spectrum.energies,
        parities=parities,
        report=report,
        expectations=expectations,
        lattices=lattices,
        dos=dos,
        markers=markers,
        stats=stats,
        residual_report=residual,
        wall_time_s=wall,
        spectrum=spectrum if cfg.keep_vectors else None,
    )


# ---------------------------------------------------------------------------
# persistence

def _write_text(path: Path, text: str):
    path.write_text(text, encoding="utf-8", newline="")


def _csv(rows, header):
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(c) for c in row))
    return "\n".join(lines) + "\n"


def _sha256(path: Path):
    return "sha256:" + hashlib.sha256(path.read_bytes()).hexdigest()


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not JSON serializable: {type(o)}")


def write_sector_files(cfg, result, sector_dir: Path):
    """Write the per-sector CSV/JSON products; returns {name: sha256}."""
    sector_dir.mkdir(parents=True, exist_ok=True)
    files = {}
    j = cfg.params.j
    dp = result.report.delta_p if result.report is not None else np.full(result.dim, math.nan)

    rows = [
        (k, float(e), float(e / j), int(p), float(d))
        for k, (e, p, d) in enumerate(zip(result.energies, result.parities, dp))
    ]
    path = sector_dir / "energies.csv"
    _write_text(path, _csv(rows, ["index", "energy", "energy_over_j", "parity", "delta_p"]))
    files["energies.csv"] = _sha256(path)

    for op, exp in result.expectations.items():
        rows = [
            (float(e / j), float(x), int(p), float(d))
            for e, x, p, d in zip(result.energies, exp, result.parities, dp)
        ]
        path = sector_dir / f"lattice_{op}.csv"
        _write_text(path, _csv(rows, ["E_over_j", "expval", "parity", "delta_p"]))
        files[f"lattice_{op}.csv"] = _sha256(path)

    if result.dos is not None:
        edges, counts = result.dos
        rows = [
            (float(edges[i]), float(edges[i + 1]), int(counts[i]))
            for i in range(counts.size)
        ]
        path = sector_dir / "dos.csv"
        _write_text(path, _csv(rows, ["bin_left", "bin_right", "count"]))
        files["dos.csv"] = _sha256(path)

    if result.markers is not None:
        path = sector_dir / "markers.json"
        _write_text(
            path,
            json.dumps(
                {
                    "static_marker": result.markers.static_marker,
                    "dynamic_marker": result.markers.dynamic_marker,
                    "bin_width": result.markers.bin_width,
                },
                sort_keys=True,
                indent=1,
                default=_json_default,
            )
            + "\n",
        )
        files["markers.json"] = _sha256(path)

    if result.stats is not None:
        path = sector_dir / "stats.json"
        _write_text(
            path,
            json.dumps(result.stats, sort_keys=True, indent=1, default=_json_default) + "\n",
        )
        files["stats.json"] = _sha256(path)
    return files


def _sector_manifest(cfg, gamma, sector, result=None, files=None, error=None):
    man = {
        "status": "ok" if error is None else "failed",
        "basis": cfg.basis,
        "gamma": gamma,
        "gamma_over_gc": gamma / cfg.params.gamma_c if cfg.params.gamma_c > 0 else None,
        "sector": sector,
        "n_max": cfg.n_max,
        "n_atoms": cfg.params.n_atoms,
        "omega": cfg.params.omega,
        "omega0": cfg.params.omega0,
        "dp_tolerance": cfg.dp_tol,
        "files": files or {},
    }
    if result is not None:
        man.update(
            dim=result.dim,
            converged_count=(
                result.report.converged_count if result.report is not None else None
            ),
            residual_report={
                "max_residual": result.residual_report.max_residual,
                "max_ortho_defect": result.residual_report.max_ortho_defect,
                "h_frobenius": result.residual_report.h_frobenius,
            },
            wall_time_s=result.wall_time_s,
        )
    if error is not None:
        man["error"] = str(error)
    return man


def run(cfg: RunConfig) -> RunResult:
    """Execute one run (all requested sectors) and persist products under
    out_dir/<gamma>/<sector>/.  Raises on failure after flushing a manifest
    with a failure marker."""
    old_budget = hamiltonian.MEMORY_BUDGET_BYTES
    hamiltonian.MEMORY_BUDGET_BYTES = cfg.mem_budget_bytes
    try:
        return _run_inner(cfg)
    finally:
        hamiltonian.MEMORY_BUDGET_BYTES = old_budget


def _run_inner(cfg):
    gamma = cfg.params.gamma
    sectors = list(cfg.sectors) if cfg.basis == "coherent-parity" else [None]
    results, manifests = [], []
    gamma_dir = None
    if cfg.out_dir is not None:
        gamma_dir = cfg.out_dir / f"gamma={gamma:.12g}"
    for sector in sectors:
        sector_dir = None
        if gamma_dir is not None:
            sector_dir = gamma_dir / SECTOR_DIRS[sector]
        try:
            result = run_sector(cfg, sector)
        except Exception as exc:
            if sector_dir is not None:
                sector_dir.mkdir(parents=True, exist_ok=True)
                man = _sector_manifest(cfg, gamma, sector, error=exc)
                _write_text(
                    sector_dir / "manifest.json",
                    json.dumps(man, sort_keys=True, indent=1, default=_json_default) + "\n",
                )
            raise
        files = {}
        if sector_dir is not None:
            files = write_sector_files(cfg, result, sector_dir)
        man = _sector_manifest(cfg, gamma, sector, result=result, files=files)
        if sector_dir is not None:
            _write_text(
                sector_dir / "manifest.json",
                json.dumps(man, sort_keys=True, indent=1, default=_json_default) + "\n",
            )
        results.append(result)
        manifests.append(man)
    return RunResult(cfg, gamma, results, manifests, gamma_dir)


def _summary_row(cfg, gamma, result: RunResult | None, error=None):
    row = {
        "gamma": gamma,
        "gamma_over_gc": gamma / cfg.params.gamma_c if cfg.params.gamma_c > 0 else math.nan,
        "status": "ok" if error is None else "failed",
        "ground_energy": math.nan,
        "ground_e_over_j": math.nan,
        "converged_count": 0,
        "dynamic_marker": math.nan,
        "static_marker": math.nan,
        "ratio_low": math.nan,
        "ratio_mid": math.nan,
    }
    if result is None:
        return row
    ground = min(float(s.energies[0]) for s in result.sectors)
    row["ground_energy"] = ground
    row["ground_e_over_j"] = ground / cfg.params.j
    row["converged_count"] = sum(
        s.report.converged_count for s in result.sectors if s.report is not None
    )
    first = result.sectors[0]
    if first.markers is not None:
        row["dynamic_marker"] = first.markers.dynamic_marker
        row["static_marker"] = first.markers.static_marker
    if first.stats is not None:
        for entry in first.stats:
            key = "ratio_mid" if entry["window"][0] is not None else "ratio_low"
            if "mean_ratio" in entry:
                row[key] = entry["mean_ratio"]
    return row


def sweep(cfg: RunConfig):
    """One run per coupling in cfg.gammas (concurrently up to cfg.workers);
    per-point failures are isolated.  Returns (results, summary_rows) where a
    failed point appears as (gamma, exception) in results."""
    gammas = list(cfg.gammas) if cfg.gammas else [cfg.params.gamma]
    point_cfgs = [
        replace(cfg, params=replace(cfg.params, gamma=g), gammas=()) for g in gammas
    ]

    def one(point_cfg):
        try:
            return run(point_cfg)
        except Exception as exc:
            return exc

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(one, point_cfgs))
    else:
        outcomes = [one(pc) for pc in point_cfgs]

    rows = []
    results = []
    for g, pc, outcome in zip(gammas, point_cfgs, outcomes):
        if isinstance(outcome, Exception):
            rows.append(_summary_row(pc, g, None, error=outcome))
            results.append((g, outcome))
        else:
            rows.append(_summary_row(pc, g, outcome))
            results.append(outcome)

    if cfg.out_dir is not None:
        header = list(rows[0].keys())
        csv_rows = [tuple(r[k] for k in header) for r in rows]
        cfg.out_dir.mkdir(parents=True, exist_ok=True)
        _write_text(cfg.out_dir / "summary.csv", _csv(csv_rows, header))
    return results, rows
