"""Text reports rendered from jinja2 templates and pandas CSV artefacts."""
import logging
import os
from enum import Enum
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple, Union

import pandas as pd
from jinja2 import Environment, FileSystemLoader

from app.models.configurator import TrainReport
from app.models.experiment import CCResult
from app.models.search import GenerationStats
from app.models.simulation import EpisodeMetrics, TraceRow

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Set up Jinja2 environment
TEMPLATE_DIR = os.path.join(os.path.dirname(os.path.dirname(__file__)), "templates")
jinja_env = Environment(
    loader=FileSystemLoader(TEMPLATE_DIR),
    trim_blocks=True,
    lstrip_blocks=True,
    autoescape=False,
)

FLOAT_FORMAT = "%.4f"

METRICS_COLUMNS = ["run", "seed", "total_demand", "total_shortage", "fulfillment_pct", "return"]
TRACE_COLUMNS = ["day", "port", "stock", "demand", "fulfilled", "shortage"]
TRAINING_COLUMNS = ["iteration", "mean_reward", "best_reward", "entropy"]
HISTORY_COLUMNS = ["generation", "best", "mean"]
COMPARE_COLUMNS = ["row", "mean", "ci95", "seeds", "walltime_s"]


class TemplatePath(Enum):
    """Enum representing report template paths for use with render_text."""
    COMPARE = "compare"
    METRICS = "metrics"
    PLAN = "plan"
    TRAINING = "training"
    SEARCH = "search"
    CC = "cc"

    def __str__(self) -> str:
        return self.value


def render_text(template: Union[TemplatePath, str], **kwargs) -> str:
    """
    Load and render a report template.

    Args:
        template: TemplatePath or a name relative to app/templates, with or without .txt.j2
        kwargs: Template variables

    Returns:
        The rendered report, newline terminated
    """
    name = str(template)
    if not name.endswith(".txt.j2"):
        name = name + ".txt.j2"
    return jinja_env.get_template(name).render(**kwargs).rstrip("\n") + "\n"


def render_compare_text(results: Sequence[CCResult], best_index: int) -> str:
    """Aligned table with one row per result; the best row is wrapped in ** markers"""
    width = max(len("Row"), *(len(result.label) + 4 for result in results))
    return render_text(TemplatePath.COMPARE, rows=results, best_index=best_index, width=width)


def _write_frame(frame: pd.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    logger.info(f"Wrote {len(frame)} rows to {path}")
    return path


def write_text(text: str, path: PathLike) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


def metrics_frame(runs: Iterable[Tuple[int, int, EpisodeMetrics]]) -> pd.DataFrame:
    """One row per (run index, episode seed, metrics)"""
    records = [
        {
            "run": run,
            "seed": seed,
            "total_demand": metrics.total_demand,
            "total_shortage": metrics.total_shortage,
            "fulfillment_pct": metrics.fulfillment_pct,
            "return": metrics.discounted_return,
        }
        for run, seed, metrics in runs
    ]
    return pd.DataFrame.from_records(records, columns=METRICS_COLUMNS)


def write_metrics_csv(runs: Iterable[Tuple[int, int, EpisodeMetrics]], path: PathLike) -> Path:
    return _write_frame(metrics_frame(runs), path)


def write_trace_csv(trace: List[TraceRow], path: PathLike) -> Path:
    frame = pd.DataFrame.from_records([row.model_dump() for row in trace], columns=TRACE_COLUMNS)
    return _write_frame(frame, path)


def write_training_csv(report: TrainReport, path: PathLike) -> Path:
    frame = pd.DataFrame.from_records(
        [row.model_dump(include=set(TRAINING_COLUMNS)) for row in report.iterations],
        columns=TRAINING_COLUMNS,
    )
    return _write_frame(frame, path)


def write_history_csv(history: List[GenerationStats], path: PathLike) -> Path:
    frame = pd.DataFrame.from_records([row.model_dump() for row in history], columns=HISTORY_COLUMNS)
    return _write_frame(frame, path)


def compare_frame(results: Sequence[CCResult]) -> pd.DataFrame:
    return pd.DataFrame.from_records(
        [
            {
                "row": result.label,
                "mean": result.mean,
                "ci95": result.ci95,
                "seeds": result.seeds,
                "walltime_s": result.provenance.walltime_s,
            }
            for result in results
        ],
        columns=COMPARE_COLUMNS,
    )


def write_compare_csv(results: Sequence[CCResult], path: PathLike) -> Path:
    return _write_frame(compare_frame(results), path)
