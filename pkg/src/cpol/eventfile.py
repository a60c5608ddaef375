"""Event files: one header line followed by one row per event.

JSON-lines files start with the header object; CSV files start with a
``# `` comment line holding the same object, then a column header row.
"""
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from types import TracebackType
from typing import IO
from typing import Any
from typing import Dict
from typing import Iterable
from typing import Iterator
from typing import Optional
from typing import Tuple
from typing import Type
from typing import Union

import pandas as pd

from cpol.config import RunConfig
from cpol.enums import OutputFormat
from cpol.errors import EventFileError
from cpol.errors import FormatVersionError
from cpol.events import EVENT_COLUMNS
from cpol.events import coerce_event_frame
from cpol.events import empty_event_frame
from cpol.utils import canonical_json
from cpol.utils import digest64


LOGGER = logging.getLogger(__name__)

FORMAT_VERSION = "1.0.0"
CSV_COMMENT = "# "
EVENT_FLOAT_FORMAT = "%.17g"
DEFAULT_CHUNK_ROWS = 200_000


@dataclass(frozen=True)
class EventFileHeader:
    format_version: str
    effective_config: Dict[str, Any]
    generator_digest: str

    @classmethod
    def for_run(cls, config: RunConfig) -> "EventFileHeader":
        provenance = config.provenance()
        return cls(
            format_version=FORMAT_VERSION,
            effective_config=provenance,
            generator_digest=digest64({"config": provenance, "seed": config.source.seed}),
        )

    def as_dict(self) -> Dict[str, Any]:
        return {
            "format_version": self.format_version,
            "effective_config": self.effective_config,
            "generator_digest": self.generator_digest,
        }

    def to_line(self) -> str:
        return canonical_json(self.as_dict())

    @classmethod
    def from_line(cls, line: str) -> "EventFileHeader":
        try:
            payload = json.loads(line)
            return cls(
                format_version=str(payload["format_version"]),
                effective_config=dict(payload["effective_config"]),
                generator_digest=str(payload["generator_digest"]),
            )
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise EventFileError(f"malformed event file header: {e}") from e

    @property
    def major(self) -> int:
        try:
            return int(self.format_version.split(".")[0])
        except ValueError as e:
            raise EventFileError(f"malformed format version {self.format_version!r}") from e


def check_version(header: EventFileHeader) -> None:
    """Raises FormatVersionError unless the major version matches ours."""
    ours = int(FORMAT_VERSION.split(".")[0])
    if header.major != ours:
        raise FormatVersionError(f"event file format {header.format_version} is not readable by {FORMAT_VERSION}")


def _json_lines(frame: pd.DataFrame) -> str:
    """One JSON object per row; floats keep their shortest round-trip repr."""
    records = frame.astype(object).where(frame.notna(), None).to_dict(orient="records")
    return "".join(json.dumps(record, allow_nan=False) + "\n" for record in records)


def _records_text(frame: pd.DataFrame, fmt: OutputFormat, with_columns: bool) -> str:
    frame = frame[EVENT_COLUMNS]
    if fmt is OutputFormat.JSONL:
        return _json_lines(frame)
    return str(frame.to_csv(index=False, header=with_columns, float_format=EVENT_FLOAT_FORMAT, lineterminator="\n"))


class EventFileWriter:
    """Append-only writer; the header goes out on open.

    Failures raise :class:`EventFileError` with the number of records
    already written.
    """

    def __init__(self, path: Union[str, Path], fmt: OutputFormat, header: EventFileHeader) -> None:
        self.path = Path(path)
        self.fmt = fmt
        self.header = header
        self.records_written = 0
        self._handle: Optional[IO[str]] = None

    def __enter__(self) -> "EventFileWriter":
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._handle = self.path.open("w", encoding="utf-8", newline="")
            prefix = CSV_COMMENT if self.fmt is OutputFormat.CSV else ""
            self._handle.write(prefix + self.header.to_line() + "\n")
            if self.fmt is OutputFormat.CSV:
                self._handle.write(_records_text(empty_event_frame(), self.fmt, with_columns=True))
        except OSError as e:
            raise EventFileError(f"cannot write {self.path}: {e}", self.records_written) from e
        return self

    def write(self, frame: pd.DataFrame) -> None:
        if self._handle is None:
            raise EventFileError("writer is not open", self.records_written)
        try:
            self._handle.write(_records_text(frame, self.fmt, with_columns=False))
        except OSError as e:
            raise EventFileError(f"cannot write {self.path}: {e}", self.records_written) from e
        self.records_written += len(frame)

    def __exit__(
        self,
        exc_type: Optional[Type[BaseException]],
        exc: Optional[BaseException],
        tb: Optional[TracebackType],
    ) -> None:
        if self._handle is not None:
            self._handle.close()
            self._handle = None


def write_event_file(
    path: Union[str, Path],
    fmt: OutputFormat,
    header: EventFileHeader,
    frames: Iterable[pd.DataFrame],
) -> int:
    """Write header and frames; returns the number of records."""
    with EventFileWriter(path, fmt, header) as writer:
        for frame in frames:
            writer.write(frame)
    LOGGER.info("Wrote %d events to %s", writer.records_written, path)
    return writer.records_written


def _open(path: Union[str, Path]) -> IO[str]:
    try:
        return Path(path).open("r", encoding="utf-8", newline="")
    except OSError as e:
        raise EventFileError(f"cannot read {path}: {e}") from e


def _header(handle: IO[str]) -> Tuple[EventFileHeader, bool]:
    first = handle.readline().rstrip("\r\n")
    is_csv = first.startswith(CSV_COMMENT)
    header = EventFileHeader.from_line(first[len(CSV_COMMENT) :] if is_csv else first)
    check_version(header)
    return header, is_csv


def read_event_header(path: Union[str, Path]) -> EventFileHeader:
    """Header of an event file; only the first line is read.

    Raises:
        EventFileError: unreadable file or malformed header
        FormatVersionError: incompatible major format version
    """
    with _open(path) as handle:
        return _header(handle)[0]


def iter_event_chunks(path: Union[str, Path], chunk_rows: int = DEFAULT_CHUNK_ROWS) -> Iterator[pd.DataFrame]:
    """Events of a file in frames of at most ``chunk_rows`` rows.

    The file stays open while the iterator is alive; at most one chunk is
    held in memory at a time.

    Raises:
        EventFileError: unreadable file, malformed header or records
        FormatVersionError: incompatible major format version
    """
    if chunk_rows < 1:
        raise ValueError(f"chunk_rows must be positive, got {chunk_rows}")
    with _open(path) as handle:
        _, is_csv = _header(handle)
        try:
            if is_csv:
                reader = pd.read_csv(handle, chunksize=chunk_rows, float_precision="round_trip")
            else:
                reader = pd.read_json(
                    handle,
                    orient="records",
                    lines=True,
                    chunksize=chunk_rows,
                    dtype=False,
                    convert_dates=False,
                    precise_float=True,
                )
            with reader:
                for frame in reader:
                    yield coerce_event_frame(frame)
        except (ValueError, KeyError) as e:
            raise EventFileError(f"malformed records in {path}: {e}") from e


def read_event_file(path: Union[str, Path]) -> Tuple[EventFileHeader, pd.DataFrame]:
    """Header and all events of a JSON-lines or CSV event file.

    Raises:
        EventFileError: unreadable file, malformed header or records
        FormatVersionError: incompatible major format version
    """
    header = read_event_header(path)
    frames = [frame for frame in iter_event_chunks(path) if len(frame)]
    if not frames:
        return header, empty_event_frame()
    return header, pd.concat(frames, ignore_index=True)
