"""Concurrent execution of experiment seeds and report assembly."""

import asyncio
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from lago.errors import DataError, UsageError
from lago.services.experiment import ExperimentConfig, SeedOutcome, load_source, run_seed, stage, with_value
from lago.services.storage import ReportStore

logger = logging.getLogger(__name__)

JobKey = Tuple[int, int]


@dataclass
class Job:
    """One seed of one configuration; key is (sweep index, seed)."""

    key: JobKey
    config: ExperimentConfig
    sweep_value: Optional[float] = None


@dataclass
class ExperimentReport:
    """Assembled results, ordered by (sweep index, seed) whatever the completion order."""

    config: ExperimentConfig
    outcomes: List[SeedOutcome]
    sweep_param: Optional[str] = None
    sweep_values: List[float] = field(default_factory=list)
    tags: List[str] = field(default_factory=list)
    timings: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def rows(self) -> List[Dict[str, Any]]:
        return [row for outcome in self.outcomes for row in outcome.rows(self.sweep_param)]

    def aggregates(self) -> List[Dict[str, Any]]:
        """Mean and population std over seeds, one entry per sweep value."""
        groups: Dict[Any, List[SeedOutcome]] = {}
        for outcome in self.outcomes:
            groups.setdefault(outcome.sweep_value, []).append(outcome)

        result = []
        for value, group in groups.items():
            cosines = np.array([o.evaluation.mean_cosine for o in group])
            errors = np.array([np.mean(o.evaluation.test_rel_error) for o in group])
            objectives = np.array([o.evaluation.objective for o in group])
            result.append({
                "sweep_value": value,
                "seeds": len(group),
                "mean_cosine_mean": float(np.mean(cosines)),
                "mean_cosine_std": float(np.std(cosines)),
                "test_rel_error_mean": float(np.mean(errors)),
                "test_rel_error_std": float(np.std(errors)),
                "objective_mean": float(np.mean(objectives)),
                "max_violation_max": max(o.evaluation.max_violation for o in group),
            })
        return result

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.config.name,
            "config": self.config.echo(),
            "sweep": {"param": self.sweep_param, "values": self.sweep_values} if self.sweep_param else None,
            "results": [outcome.to_dict() for outcome in self.outcomes],
            "aggregates": self.aggregates(),
        }


class ExperimentRunner:
    """Runs seeds concurrently, at most ``workers`` at a time."""

    def __init__(self, workers: int = 1):
        self.workers = workers
        self.semaphore = asyncio.Semaphore(workers)
        self.executor = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="lago-seed")

    async def _run_job(self, job: Job, source) -> SeedOutcome:
        """Run a single job in the thread pool."""
        async with self.semaphore:
            loop = asyncio.get_running_loop()
            graph, instance = source
            try:
                outcome = await loop.run_in_executor(
                    self.executor, run_seed, job.config, job.key[1], graph, instance, job.sweep_value
                )
            except Exception as e:
                logger.error("job failed seed=%d sweep_value=%s: %s", job.key[1], job.sweep_value, e)
                raise
            return outcome

    async def run(
        self,
        config: ExperimentConfig,
        sweep_param: Optional[str] = None,
        sweep_values: Sequence[float] = (),
    ) -> ExperimentReport:
        """
        Run every seed of a configuration, or of each sweep point.

        Args:
            config: Base experiment configuration
            sweep_param: Optional parameter to vary
            sweep_values: Values of the swept parameter

        Returns:
            ExperimentReport with outcomes in (sweep index, seed) order

        Raises:
            LagoError: The failure of the first failing job in that order
        """
        timings: Dict[str, float] = {}
        with stage("load", timings):
            source = load_source(config)

        if sweep_param:
            if len(set(sweep_values)) != len(sweep_values):
                raise UsageError("Sweep values must be distinct")
            points = [(value, with_value(config, sweep_param, value)) for value in sweep_values]
        else:
            points = [(None, config)]

        jobs = []
        for index, (value, point_config) in enumerate(points):
            for seed in point_config.seeds:
                job = Job(key=(index, seed), config=point_config, sweep_value=value)
                jobs.append(job)

        logger.info("experiment start name=%s jobs=%d workers=%d", config.name, len(jobs), self.workers)
        results = await asyncio.gather(*(self._run_job(job, source) for job in jobs), return_exceptions=True)

        by_key = dict(zip((job.key for job in jobs), results))
        for key in sorted(by_key):
            if isinstance(by_key[key], BaseException):
                raise by_key[key]

        outcomes = [by_key[key] for key in sorted(by_key)]
        report = ExperimentReport(
            config=config,
            outcomes=outcomes,
            sweep_param=sweep_param,
            sweep_values=list(sweep_values) if sweep_param else [],
            tags=[job_tag(key, bool(sweep_param)) for key in sorted(by_key)],
        )
        report.timings["experiment"] = timings
        for tag, outcome in zip(report.tags, outcomes):
            report.timings[tag] = outcome.timings
        return report

    def shutdown(self) -> None:
        self.executor.shutdown(wait=True)


def job_tag(key: JobKey, swept: bool) -> str:
    """File-name tag of a job: ``seed<k>`` or ``point<i>_seed<k>``."""
    return f"point{key[0]}_seed{key[1]}" if swept else f"seed{key[1]}"


async def write_report(report: ExperimentReport, store: ReportStore, save_maps: bool = False) -> Dict[str, Any]:
    """
    Write report.json, report.csv, timings.json and any traces or maps.

    Returns:
        Mapping from artifact name to written path
    """
    written: Dict[str, Any] = {}
    try:
        written["report.json"] = await store.write_json("report.json", report.to_dict())
        written["report.csv"] = await store.write_csv("report.csv", report.rows())
        written["timings.json"] = await store.write_json("timings.json", report.timings)
        for suffix, outcome in zip(report.tags, report.outcomes):
            if outcome.trace_csv is not None:
                name = f"trace_{outcome.method}_{suffix}.csv"
                written[name] = await store.write_text(name, outcome.trace_csv)
            if save_maps:
                written[f"maps/{suffix}"] = await store.save_maps(f"maps/{suffix}", outcome.labels, outcome.W)
    except OSError as e:
        error = DataError(f"Cannot write report to {store.output_dir}: {e}")
        error.stage = "report"
        raise error from e
    return written


async def run_experiment(
    config: ExperimentConfig,
    sweep_param: Optional[str] = None,
    sweep_values: Sequence[float] = (),
) -> Tuple[ExperimentReport, Dict[str, Any]]:
    """Run a configuration and write its report below config.output_dir."""
    runner = ExperimentRunner(workers=config.workers)
    try:
        report = await runner.run(config, sweep_param, sweep_values)
    finally:
        runner.shutdown()
    with stage("report", report.timings.setdefault("experiment", {})):
        store = ReportStore(config.output_dir)
        written = await write_report(report, store, save_maps=config.save_maps)
    logger.info("report written dir=%s rows=%d", store.output_dir, len(report.rows()))
    return report, written
