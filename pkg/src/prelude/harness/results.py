"""Result rows and deterministic CSV emission."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class ResultRow:
    """One detector's tally after replaying a policy-arrival sequence.

    The headline rate divides false positives by the number of correct
    (loop-free) arrivals, i.e. the fraction of correct rules rejected.
    Because that denominator is a judgement call, the row also carries the
    fraction over all arrivals, so consumers can pick either.
    """

    experiment: str
    detector: str
    path_threshold: int
    installed: int
    rejected: int
    true_loops: int
    false_positives: int

    def __post_init__(self) -> None:
        counts = (self.installed, self.rejected, self.true_loops,
                  self.false_positives)
        if any(c < 0 for c in counts):
            raise ValueError("counters cannot be negative")
        if self.rejected > self.installed:
            raise ValueError("cannot reject more rules than arrived")
        if self.true_loops > self.installed:
            raise ValueError("cannot have more loops than arrivals")
        if self.false_positives > self.rejected:
            raise ValueError("false positives are a subset of rejections")
        if self.false_positives > self.correct:
            raise ValueError("false positives are a subset of correct rules")

    @property
    def correct(self) -> int:
        return self.installed - self.true_loops

    @property
    def fp_rate(self) -> float:
        """Fraction of correct rules rejected."""
        return self.false_positives / max(1, self.correct)

    @property
    def fp_rate_all(self) -> float:
        """Fraction of all arrivals rejected despite being loop-free."""
        return self.false_positives / max(1, self.installed)


EFFECTIVENESS_COLUMNS = (
    "experiment", "detector", "path_threshold", "installed", "rejected",
    "true_loops", "false_positives", "fp_rate", "fp_rate_all",
)


def effectiveness_record(row: ResultRow) -> dict[str, str]:
    return {
        "experiment": row.experiment,
        "detector": row.detector,
        "path_threshold": str(row.path_threshold),
        "installed": str(row.installed),
        "rejected": str(row.rejected),
        "true_loops": str(row.true_loops),
        "false_positives": str(row.false_positives),
        "fp_rate": f"{row.fp_rate:.6f}",
        "fp_rate_all": f"{row.fp_rate_all:.6f}",
    }


def write_csv(path: str | Path, columns: tuple[str, ...],
              records: list[dict[str, str]]) -> Path:
    """Write records (already sorted by the caller) with a header row.

    Newlines are pinned to '\\n' so identical inputs yield identical bytes
    on every platform.
    """
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns),
                                lineterminator="\n")
        writer.writeheader()
        for record in records:
            writer.writerow(record)
    return out
