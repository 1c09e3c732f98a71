"""Rate-distortion point reports (CSV)."""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Union

from apps.core.exceptions import ParseError

logger = logging.getLogger(__name__)

RD_CSV_HEADER = ("label", "lambda", "bpp", "msssim")


@dataclass(frozen=True)
class RdPoint:
    label: str
    lam: float
    bpp: float
    msssim: float


def write_rd_csv(path: Union[str, Path], points: Iterable[RdPoint]) -> list[RdPoint]:
    """Write points sorted by bpp; returns the rows in written order."""
    rows = sorted(points, key=lambda p: (p.bpp, p.label, p.lam))
    with Path(path).open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(RD_CSV_HEADER)
        for point in rows:
            writer.writerow(
                [point.label, repr(point.lam), repr(point.bpp), repr(point.msssim)]
            )
    logger.info("Wrote %d RD points to %s", len(rows), path)
    return rows


def read_rd_csv(path: Union[str, Path]) -> list[RdPoint]:
    with Path(path).open(newline="") as handle:
        reader = csv.reader(handle)
        header = next(reader, None)
        if header is None or tuple(header) != RD_CSV_HEADER:
            raise ParseError(f"unexpected RD header {header!r}", line_number=1)
        points = []
        for number, row in enumerate(reader, start=2):
            try:
                label, lam, bpp, msssim = row
                points.append(RdPoint(label, float(lam), float(bpp), float(msssim)))
            except ValueError as exc:
                raise ParseError(str(exc), line_number=number)
    return points
