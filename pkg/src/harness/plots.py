"""
CSV and SVG emission of grid results
"""
import logging
from pathlib import Path
from typing import List, Sequence, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from ..utils.errors import ValidationError  # noqa: E402
from .records import NO_DEFENSE, ResultRecord, write_records  # noqa: E402

logger = logging.getLogger(__name__)

FORMATS = ("csv", "svg")


def plot_pair(records: Sequence[ResultRecord], victim: str, transfer: str, path: Path) -> Path:
    """Success rate against budget for every attack of one (victim, transfer) pair"""
    fig, ax = plt.subplots(figsize=(5, 3.5))
    try:
        for attack in dict.fromkeys(r.attack for r in records):
            rows = sorted(
                (r.epsilon, r.success_rate) for r in records
                if r.attack == attack and r.victim == victim and r.transfer == transfer and r.defense == NO_DEFENSE
            )
            if rows:
                ax.plot([eps for eps, _ in rows], [rate for _, rate in rows], marker="o", label=attack)

        ax.set_xlabel("epsilon")
        ax.set_ylabel("success rate")
        ax.set_ylim(-0.02, 1.02)
        ax.set_title(f"{victim} -> {transfer}")
        ax.grid(alpha=0.3)
        ax.legend(fontsize="small")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    return path


def emit_results(
    records: Sequence[ResultRecord],
    out_dir: Union[str, Path],
    formats: Sequence[str] = FORMATS,
) -> List[Path]:
    """results.csv plus one <victim>__<transfer>.svg per model pair"""
    if not records:
        raise ValidationError("no records to emit")
    unknown = set(formats) - set(FORMATS)
    if unknown:
        raise ValidationError(f"unknown output formats: {sorted(unknown)}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    if "csv" in formats:
        written.append(write_records(records, out_dir / "results.csv"))

    if "svg" in formats:
        pairs = dict.fromkeys((r.victim, r.transfer) for r in records if r.defense == NO_DEFENSE)
        for victim, transfer in pairs:
            written.append(plot_pair(records, victim, transfer, out_dir / f"{victim}__{transfer}.svg"))

    logger.info(f"Wrote {len(written)} result files to {out_dir}")
    return written
