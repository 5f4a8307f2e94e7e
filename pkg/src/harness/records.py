"""
Result records and their CSV persistence
"""
import csv
import logging
from dataclasses import astuple, dataclass, fields
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple, Union

from ..config.logging_config import get_results_logger
from ..utils.errors import FormatError

logger = logging.getLogger(__name__)

COLUMNS = (
    "attack", "victim", "transfer", "defense", "norm_type", "epsilon", "gamma", "kappa",
    "n_samples", "success_rate", "mean_linf", "mean_l2", "mean_chamfer_sym", "seed",
)
NO_DEFENSE = "none"

RecordKey = Tuple[str, str, str, str, float]


@dataclass(frozen=True)
class ResultRecord:
    """One (attack, victim, transfer, defense, epsilon) cell"""
    attack: str
    victim: str
    transfer: str
    defense: str
    norm_type: str
    epsilon: float
    gamma: float
    kappa: float
    n_samples: int
    success_rate: float
    mean_linf: float
    mean_l2: float
    mean_chamfer_sym: float
    seed: int

    @property
    def key(self) -> RecordKey:
        return (self.attack, self.victim, self.transfer, self.defense, self.epsilon)

    @property
    def cell(self) -> Tuple[str, str, float]:
        """Work unit that produced the record"""
        return (self.attack, self.victim, self.epsilon)

    def to_row(self) -> List[str]:
        # repr round-trips floats exactly
        return [value if isinstance(value, str) else repr(value) for value in astuple(self)]

    @classmethod
    def from_row(cls, row: Dict[str, str]) -> "ResultRecord":
        values = {}
        for field in fields(cls):
            raw = row[field.name]
            if field.type is str:
                values[field.name] = raw
            elif field.type is int:
                values[field.name] = int(raw)
            else:
                values[field.name] = float(raw)
        return cls(**values)


def write_records(records: Iterable[ResultRecord], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(COLUMNS)
        for record in records:
            writer.writerow(record.to_row())
    return path


def read_records(path: Union[str, Path]) -> List[ResultRecord]:
    """Load a results CSV; a torn final line from an interrupted run is dropped"""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as handle:
        lines = handle.read().split("\n")

    if not lines or tuple(lines[0].split(",")) != COLUMNS:
        raise FormatError(f"{path} does not start with the expected header", 0)

    records = []
    body = [line for line in lines[1:] if line]
    for index, row in enumerate(csv.DictReader([lines[0]] + body)):
        try:
            records.append(ResultRecord.from_row(row))
        except (KeyError, TypeError, ValueError) as e:
            if index == len(body) - 1:
                logger.warning(f"Dropping incomplete last line of {path}: {e}")
                break
            raise FormatError(f"malformed result row {index + 1}: {e}", 0, sample_index=index) from e
    return records


class ResultStore:
    """
    Append-only results file with resume support
    Only one writer may append at a time; the grid runner serializes calls
    """

    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.results_logger = get_results_logger()
        self.records: Dict[RecordKey, ResultRecord] = {}
        if self.path.exists():
            for record in read_records(self.path):
                self.records[record.key] = record
            # drop a torn tail before appending
            write_records(self.records.values(), self.path)
            logger.info(f"Resuming from {self.path}: {len(self.records)} records present")

    def has_all(self, keys: Iterable[RecordKey]) -> bool:
        return all(key in self.records for key in keys)

    def append(self, records: List[ResultRecord]) -> None:
        """Persist the records of one finished cell"""
        if not self.path.exists():
            write_records([], self.path)
        with self.path.open("a", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerows(record.to_row() for record in records)
            handle.flush()

        for record in records:
            self.records[record.key] = record
            self.results_logger.info(
                f"attack={record.attack} | victim={record.victim} | transfer={record.transfer} | "
                f"defense={record.defense} | epsilon={record.epsilon} | success_rate={record.success_rate:.4f}"
            )

    def finalize(self, sort_key: Optional[Callable[[ResultRecord], tuple]] = None) -> List[ResultRecord]:
        """Rewrite the file in canonical order so it does not depend on scheduling"""
        ordered = sorted(self.records.values(), key=sort_key or (lambda r: r.key))
        write_records(ordered, self.path)
        return ordered
