"""
Sampler comparison: the (sampler x seed) run matrix, aggregate tables,
pairwise win counts and plot-data export.
"""

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ams.exceptions import ConfigError, RunAbortedError
from ams.models.experiment_models import ExperimentConfig, RunSummary
from ams.services.experiment_runner import run_dir_name, run_experiment
from ams.services.file_manager import FileManager
from ams.services.metrics_writer import write_rows
from ams.services.statistics import mean_std, win_counts
from ams.utils.formatting import fmt_float, fmt_mean_std

logger = logging.getLogger(__name__)

try:
    from openpyxl import Workbook
    OPENPYXL_AVAILABLE = True
except ImportError:
    OPENPYXL_AVAILABLE = False

COMPARISON_SUMMARY = "summary.json"


@dataclass
class ComparisonTable:
    """
    Mean±std final meta-test loss per (sampler, target) plus win counts.

    Attributes:
        samplers: Row order
        targets: Target domain ids (column order)
        seeds: Seeds that were run
        cells: sampler -> target -> (mean, std) across seeds
        overall: sampler -> (mean, std) of the per-seed mean over targets
        wins: wins[a][b] = seeds where a scored strictly lower than b
        spearman: sampler -> median rank correlation across seeds
        aborted: sampler -> number of aborted runs (left out of every score)
    """
    samplers: List[str]
    targets: List[int]
    seeds: List[int]
    cells: Dict[str, Dict[int, Tuple[float, float]]] = field(default_factory=dict)
    overall: Dict[str, Tuple[float, float]] = field(default_factory=dict)
    wins: Dict[str, Dict[str, int]] = field(default_factory=dict)
    spearman: Dict[str, float] = field(default_factory=dict)
    aborted: Dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            'samplers': self.samplers,
            'targets': self.targets,
            'seeds': self.seeds,
            'cells': {s: {str(t): [_finite(x) for x in v] for t, v in row.items()}
                      for s, row in self.cells.items()},
            'overall': {s: [_finite(x) for x in v] for s, v in self.overall.items()},
            'wins': self.wins,
            'spearman': self.spearman,
            'aborted': self.aborted,
        }


def _finite(x: float) -> Optional[float]:
    """NaN (no completed run) becomes None so the JSON stays strict."""
    return None if math.isnan(x) else x


def _run_job(cfg: ExperimentConfig, seed: int, run_dir: Optional[str]) -> Dict[str, Any]:
    """Process-pool entry point; returns a picklable summary dict, aborted runs included."""
    try:
        _, summary = run_experiment(cfg, seed, run_dir)
    except RunAbortedError as e:
        logger.warning("sampler=%s seed=%d aborted: %s", cfg.sampler.kind, seed, e)
        summary = e.summary if e.summary is not None else RunSummary(
            sampler=cfg.sampler.kind, seed=seed, aborted=str(e))
    return summary.to_dict()


def build_table(runs: Sequence[RunSummary], samplers: Sequence[str]) -> ComparisonTable:
    """Aggregate per-run summaries into a comparison table; aborted runs are only counted."""
    completed = [r for r in runs if not r.aborted]
    targets = sorted({t for r in completed for t in r.final_metatest})
    seeds = sorted({r.seed for r in runs})
    table = ComparisonTable(samplers=list(samplers), targets=targets, seeds=seeds)
    per_seed: Dict[str, Dict[int, float]] = {}
    for kind in samplers:
        mine = [r for r in completed if r.sampler == kind]
        table.aborted[kind] = sum(1 for r in runs if r.sampler == kind and r.aborted)
        table.cells[kind] = {t: mean_std([r.final_metatest[t] for r in mine
                                          if t in r.final_metatest])
                             for t in targets}
        per_seed[kind] = {r.seed: r.mean_final_metatest for r in mine}
        table.overall[kind] = mean_std(list(per_seed[kind].values()))
        rhos = [r.spearman for r in mine]
        table.spearman[kind] = float(np.median(rhos)) if rhos else 0.0
    table.wins = win_counts(per_seed)
    return table


def aggregate_summaries(runs: Sequence[RunSummary]) -> Dict[str, Any]:
    """
    Aggregate fields per sampler: mean/std of final losses, mean counts,
    median rho. Statistics cover the completed runs; n_aborted counts the rest.
    """
    aggregate: Dict[str, Any] = {}
    for kind in sorted({r.sampler for r in runs}):
        every = [r for r in runs if r.sampler == kind]
        mine = [r for r in every if not r.aborted]
        targets = sorted({t for r in mine for t in r.final_metatest})
        counts = (np.mean(np.array([r.sample_counts for r in mine], dtype=np.float64),
                          axis=0).tolist() if mine else [])
        mean, std = mean_std([r.mean_final_metatest for r in mine])
        aggregate[kind] = {
            'n_runs': len(every),
            'n_aborted': len(every) - len(mine),
            'final_metatest': {str(t): dict(zip(('mean', 'std'), mean_std(
                [r.final_metatest[t] for r in mine if t in r.final_metatest])))
                for t in targets},
            'mean_final_metatest': _finite(mean),
            'std_final_metatest': _finite(std),
            'mean_sample_counts': counts,
            'median_spearman': (float(np.median([r.spearman for r in mine]))
                                if mine else None),
        }
    return aggregate


def write_plot_data(runs: Sequence[RunSummary], out_dir: str) -> List[str]:
    """
    plot_loss_curves.csv (sampler,seed,iter,target,loss) and
    plot_sample_counts.csv (sampler,seed,domain,difficulty,count).
    """
    FileManager.ensure_dir(out_dir)
    curves = [[r.sampler, r.seed, int(it), int(t), fmt_float(loss)]
              for r in runs for it, t, loss in r.curve]
    counts = [[r.sampler, r.seed, k, fmt_float(d), c]
              for r in runs
              for k, (d, c) in enumerate(zip(r.difficulties, r.sample_counts))]
    paths = [os.path.join(out_dir, "plot_loss_curves.csv"),
             os.path.join(out_dir, "plot_sample_counts.csv")]
    write_rows(paths[0], ["sampler", "seed", "iter", "target", "loss"], curves)
    write_rows(paths[1], ["sampler", "seed", "domain", "difficulty", "count"], counts)
    return paths


def _table_rows(table: ComparisonTable) -> Tuple[List[str], List[List[str]]]:
    header = (["sampler"] + [f"metatest_{t}" for t in table.targets]
              + ["overall", "spearman", "aborted"]
              + [f"wins_vs_{b}" for b in table.samplers])
    rows = []
    for kind in table.samplers:
        rows.append([kind]
                    + [fmt_mean_std(*table.cells[kind][t]) for t in table.targets]
                    + [fmt_mean_std(*table.overall[kind]), f"{table.spearman[kind]:.4f}",
                       str(table.aborted.get(kind, 0))]
                    + [str(table.wins[kind][b]) for b in table.samplers])
    return header, rows


def export_comparison(table: ComparisonTable, out_dir: str) -> List[str]:
    """Write comparison.json and comparison.csv, plus comparison.xlsx if openpyxl is installed."""
    FileManager.ensure_dir(out_dir)
    paths = [os.path.join(out_dir, "comparison.json"), os.path.join(out_dir, "comparison.csv")]
    FileManager.save_json(paths[0], table.to_dict())
    header, rows = _table_rows(table)
    write_rows(paths[1], header, rows)

    if OPENPYXL_AVAILABLE:
        workbook = Workbook()
        sheet = workbook.active
        sheet.title = "comparison"
        sheet.append(header)
        for row in rows:
            sheet.append(row)
        xlsx_path = os.path.join(out_dir, "comparison.xlsx")
        workbook.save(xlsx_path)
        paths.append(xlsx_path)
    else:
        logger.info("openpyxl not installed; skipping comparison.xlsx")
    return paths


def compare_samplers(cfg: ExperimentConfig, samplers: Sequence[str], seeds: Sequence[int],
                     out_dir: Optional[str] = None, jobs: int = 1) -> Tuple[ComparisonTable, List[RunSummary]]:
    """
    Run every (sampler, seed) pair and tabulate the results.

    Runs are independent processes when jobs > 1; each writes its own
    run directory, so results are identical for any job count. An aborted
    run keeps its place in the returned runs and in summary.json.

    Raises:
        ConfigError: If fewer than two samplers or no seed is given
    """
    if len(samplers) < 2:
        raise ConfigError("a comparison needs at least two samplers", key='compare.samplers')
    if not seeds:
        raise ConfigError("at least one seed is required", key='run.seeds')
    cfg.validate()
    matrix = [(kind, seed) for kind in samplers for seed in seeds]
    jobs_args = [(cfg.with_sampler(kind), seed,
                  os.path.join(out_dir, run_dir_name(kind, seed)) if out_dir else None)
                 for kind, seed in matrix]
    logger.info("compare %d samplers x %d seeds (%d runs, jobs=%d)",
                len(samplers), len(seeds), len(matrix), jobs)

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_run_job, *args) for args in jobs_args]
            results = [f.result() for f in futures]
    else:
        results = [_run_job(*args) for args in jobs_args]

    runs = [RunSummary.from_dict(r) for r in results]
    n_aborted = sum(1 for r in runs if r.aborted)
    if n_aborted:
        logger.warning("%d of %d runs aborted; their scores are left out", n_aborted, len(runs))
    table = build_table(runs, samplers)
    if out_dir:
        FileManager.save_json(os.path.join(out_dir, COMPARISON_SUMMARY),
                              {'runs': [r.to_dict() for r in runs],
                               'aggregate': aggregate_summaries(runs)})
        export_comparison(table, out_dir)
        write_plot_data(runs, out_dir)
    return table, runs
