"""
CSV export for per-iteration metrics.
"""

import csv
import logging
from io import StringIO
from typing import List, Optional, Sequence, TextIO

from ams.models.experiment_models import MetricsRecord
from ams.utils.formatting import fmt_float, fmt_optional, join_floats, join_ids

logger = logging.getLogger(__name__)


def metrics_header(K: int, target_ids: Sequence[int]) -> List[str]:
    """iter,domain_ids,P_0..P_{K-1},Q_0..Q_{K-1},task_losses,metatest_<t>...,wall_ms"""
    return (["iter", "domain_ids"]
            + [f"P_{k}" for k in range(K)]
            + [f"Q_{k}" for k in range(K)]
            + ["task_losses"]
            + [f"metatest_{t}" for t in target_ids]
            + ["wall_ms"])


def metrics_row(record: MetricsRecord, target_ids: Sequence[int]) -> List[str]:
    return ([str(record.iteration), join_ids(record.domain_ids)]
            + [fmt_float(p) for p in record.probs]
            + [fmt_float(q) for q in record.buffer]
            + [join_floats(record.task_losses)]
            + [fmt_optional(record.metatest.get(t)) for t in target_ids]
            + [fmt_float(record.wall_ms)])


class MetricsWriter:
    """
    Single-writer metrics CSV, one row per iteration.

    Rows are flushed as they are written so an aborted run keeps every
    completed iteration.
    """

    def __init__(self, filepath: str, K: int, target_ids: Sequence[int]):
        self.filepath = filepath
        self.target_ids = list(target_ids)
        self.rows = 0
        self._file: Optional[TextIO] = open(filepath, 'w', encoding='utf-8', newline='')
        self._writer = csv.writer(self._file, lineterminator='\n')
        self._writer.writerow(metrics_header(K, self.target_ids))

    def write(self, record: MetricsRecord) -> None:
        self._writer.writerow(metrics_row(record, self.target_ids))
        self._file.flush()
        self.rows += 1

    def close(self) -> None:
        if self._file is not None:
            self._file.close()
            self._file = None
            logger.debug("wrote %d metrics rows to %s", self.rows, self.filepath)

    def __enter__(self) -> 'MetricsWriter':
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def export_to_string(records: Sequence[MetricsRecord], K: int,
                     target_ids: Sequence[int]) -> str:
    """Metrics CSV as a string."""
    output = StringIO()
    writer = csv.writer(output, lineterminator='\n')
    writer.writerow(metrics_header(K, target_ids))
    for record in records:
        writer.writerow(metrics_row(record, target_ids))
    return output.getvalue()


def write_rows(filepath: str, header: Sequence[str], rows: Sequence[Sequence[object]]) -> None:
    """Plain CSV table (plot data, comparison tables)."""
    with open(filepath, 'w', encoding='utf-8', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(header)
        writer.writerows(rows)
