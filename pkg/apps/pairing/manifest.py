"""Line-delimited JSON manifest of pair records."""

import json
import logging
from pathlib import Path
from typing import Iterable, Optional, Union

from apps.core.exceptions import ParseError

from .records import PairRecord
from .serializers import PairRecordSerializer

logger = logging.getLogger(__name__)


def dump_record(record: PairRecord) -> str:
    return json.dumps(record.to_dict(), separators=(", ", ": "), allow_nan=False)


def load_record(line: str, line_number: Optional[int] = None) -> PairRecord:
    """Parse and validate one manifest line."""
    try:
        data = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line_number=line_number)
    if not isinstance(data, dict):
        raise ParseError("record must be a JSON object", line_number=line_number)
    serializer = PairRecordSerializer(data=data)
    if not serializer.is_valid():
        problems = "; ".join(
            f"{key}: {' '.join(str(e) for e in errors)}"
            for key, errors in serializer.errors.items()
        )
        raise ParseError(problems, line_number=line_number)
    return serializer.save()


def write_manifest(path: Union[str, Path], records: Iterable[PairRecord]) -> int:
    """Write one record per line; returns the number of records."""
    lines = [dump_record(record) + "\n" for record in records]
    Path(path).write_text("".join(lines))
    logger.info("Wrote %d records to %s", len(lines), path)
    return len(lines)


def read_manifest(path: Union[str, Path]) -> list[PairRecord]:
    records = []
    with Path(path).open() as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            records.append(load_record(line, line_number=number))
    return records
