"""
End-to-end training loop: sampler -> selection -> tasks -> meta-step ->
buffer and policy update, with periodic meta-test evaluation on the target
domains.

Every run directory receives the resolved config, the suite description,
the metrics CSV, the final theta (and policy, for AMS) and summary.json.
"""

import copy
import logging
import os
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Tuple

import numpy as np

from ams.exceptions import NumericError, RunAbortedError
from ams.models.domain_models import DomainSuite, TaskInstance
from ams.models.experiment_models import ExperimentConfig, MetricsRecord, RunSummary
from ams.models.meta_models import AdaptationResult
from ams.services.config_loader import CONFIG_FILENAME, write_config
from ams.services.file_manager import FileManager
from ams.services.meta_learner import evaluate_on_tasks, meta_step
from ams.services.metrics_writer import MetricsWriter
from ams.services.optimizers import Optimizer
from ams.services.samplers import AmsSampler, Sampler, build_sampler, save_policy
from ams.services.statistics import deviation_from_uniform, spearman, tail_mean
from ams.services.task_generator import build_suite, sample_task, save_suite
from ams.services.task_model import TaskModel
from ams.utils import seeding
from ams.utils.formatting import safe_filename

logger = logging.getLogger(__name__)

METRICS_FILENAME = "metrics.csv"
SUMMARY_FILENAME = "summary.json"
THETA_FILENAME = "theta.json"
POLICY_FILENAME = "policy.json"
SUITE_FILENAME = "suite.json"
CHECKPOINT_DIRNAME = "checkpoint"


def suite_from_config(cfg: ExperimentConfig) -> DomainSuite:
    s = cfg.suite
    return build_suite(s.preset, K=s.K, w=s.w, master_seed=s.master_seed, family=s.family,
                       ratio=s.ratio, n_targets=s.n_targets, pool_min=s.pool_min)


def fixed_eval_tasks(suite: DomainSuite, seed: int, n_tasks: int) -> Dict[int, List[TaskInstance]]:
    """Target tasks drawn once per seed, shared by every sampler run on that seed."""
    rng = seeding.make_rng(seed, seeding.EVALUATION)
    return {t.domain_id: [sample_task(suite, t.domain_id, rng) for _ in range(n_tasks)]
            for t in suite.targets}


def run_dir_name(kind: str, seed: int) -> str:
    return f"{safe_filename(kind)}_seed{seed}"


def _write_checkpoint(directory: str, model: TaskModel, sampler: Sampler) -> None:
    FileManager.ensure_dir(directory)
    FileManager.save_json(os.path.join(directory, THETA_FILENAME), model.to_dict())
    if isinstance(sampler, AmsSampler):
        save_policy(sampler, os.path.join(directory, POLICY_FILENAME))


def run_experiment(cfg: ExperimentConfig, seed: int,
                   out_dir: Optional[str] = None) -> Tuple[List[MetricsRecord], RunSummary]:
    """
    Run the full meta-training loop for one seed.

    Args:
        cfg: Validated experiment configuration
        seed: Run seed (theta init, policy init, task and selection streams)
        out_dir: Run directory; nothing is written when None

    Returns:
        (metrics records, run summary)

    Raises:
        ConfigError: On an invalid configuration
        RunAbortedError: On a numeric error; the last-good checkpoint and an
            aborted summary are written first
    """
    cfg.validate()
    suite = suite_from_config(cfg)
    meta, run = cfg.meta, cfg.run
    kind = cfg.sampler.kind

    model = TaskModel.for_suite(suite, rng=seeding.make_rng(seed, seeding.TASK_MODEL_INIT))
    sampler = build_sampler(cfg.sampler, cfg.policy, suite,
                            seeding.make_rng(seed, seeding.POLICY_INIT), checked=run.checked)
    optimizer = Optimizer(meta.optimizer, checked=run.checked)
    task_rng = seeding.make_rng(seed, seeding.TASKS)
    selection_rng = seeding.make_rng(seed, seeding.SELECTION)
    eval_tasks = fixed_eval_tasks(suite, seed, run.eval_tasks)
    target_ids = [t.domain_id for t in suite.targets]

    writer = None
    if out_dir:
        FileManager.ensure_dir(out_dir)
        echoed = cfg.with_sampler(kind)
        echoed.run.seeds = str(seed)
        FileManager.save_text(os.path.join(out_dir, CONFIG_FILENAME), write_config(echoed))
        save_suite(suite, os.path.join(out_dir, SUITE_FILENAME))
        writer = MetricsWriter(os.path.join(out_dir, METRICS_FILENAME), suite.K, target_ids)

    executor = ThreadPoolExecutor(run.task_workers) if run.task_workers > 1 else None
    summary = RunSummary(sampler=kind, seed=seed,
                         difficulties=[d.difficulty for d in suite.sources])
    counts = np.zeros(suite.K, dtype=np.int64)
    records: List[MetricsRecord] = []
    prob_history: List[List[float]] = []

    logger.info("run start sampler=%s variant=%s seed=%d iterations=%d K=%d M=%d",
                kind, meta.variant, seed, run.iterations, suite.K, meta.M)
    try:
        for s in range(1, run.iterations + 1):
            started = time.perf_counter()
            theta_before = model.theta.copy()
            optimizer_before = copy.deepcopy(optimizer.adam)
            sampler_before = sampler.snapshot()
            try:
                P = sampler.probabilities()
                ids = sampler.select(P, meta.M, selection_rng)
                tasks = [sample_task(suite, k, task_rng) for k in ids]
                result = meta_step(model, tasks, meta, optimizer, executor)
                sampler.observe(result.domain_ids, result.query_losses)
                evaluations: Dict[int, AdaptationResult] = {}
                if s % run.eval_every == 0 or s == run.iterations:
                    evaluations = {t: evaluate_on_tasks(model, model.theta, eval_tasks[t],
                                                        run.eval_shots, run.eval_steps,
                                                        meta.alpha)
                                   for t in target_ids}
            except NumericError as e:
                # roll back to the state at the start of iteration s
                model.theta[...] = theta_before
                optimizer.adam = optimizer_before
                sampler.restore(sampler_before)
                summary.iterations = s - 1
                summary.aborted = str(e)
                summary.sample_counts = counts.tolist()
                if out_dir:
                    summary.checkpoint = os.path.join(out_dir, CHECKPOINT_DIRNAME)
                    _write_checkpoint(summary.checkpoint, model, sampler)
                    FileManager.save_json(os.path.join(out_dir, SUMMARY_FILENAME),
                                          summary.to_dict())
                logger.error("run aborted sampler=%s seed=%d at iteration %d: %s",
                             kind, seed, s, e)
                raise RunAbortedError(str(e), s, summary.checkpoint, summary) from e

            for k in ids:
                counts[k] += 1
            prob_history.append(P.tolist())

            metatest: Dict[int, float] = {}
            for t, res in evaluations.items():
                metatest[t] = res.mean
                summary.final_metatest[t] = res.mean
                summary.final_metatest_std[t] = res.std
                summary.curve.append([s, t, res.mean])
            if metatest:
                logger.info("iter %d sampler=%s seed=%d metatest=%s", s, kind, seed,
                            {t: round(v, 6) for t, v in metatest.items()})

            record = MetricsRecord(
                iteration=s, domain_ids=list(ids), probs=P.tolist(),
                buffer=sampler.buffer.values.tolist(), task_losses=list(result.query_losses),
                metatest=metatest,
                wall_ms=(time.perf_counter() - started) * 1000.0 if run.wall_clock else 0.0)
            records.append(record)
            if writer is not None:
                writer.write(record)
            logger.debug("iter %d domains=%s losses=%s", s, ids, result.query_losses)
    finally:
        if writer is not None:
            writer.close()
        if executor is not None:
            executor.shutdown()

    summary.iterations = run.iterations
    summary.sample_counts = counts.tolist()
    summary.spearman = (spearman(summary.difficulties, summary.sample_counts)
                        if suite.K >= 2 else 0.0)
    summary.mean_probs_tail = tail_mean(prob_history)
    summary.theta_fingerprint = model.fingerprint()

    if out_dir:
        _write_checkpoint(out_dir, model, sampler)
        FileManager.save_json(os.path.join(out_dir, SUMMARY_FILENAME), summary.to_dict())
    logger.info("run end sampler=%s seed=%d final=%s spearman=%.4f tail_tv=%.4f", kind, seed,
                summary.final_metatest, summary.spearman,
                deviation_from_uniform(summary.mean_probs_tail))
    return records, summary
