"""Test cases for the eventfile module."""
import json
from pathlib import Path
from typing import List

import pandas as pd
import pytest

from cpol.config import RunConfig
from cpol.config import SourceConfig
from cpol.enums import OutputFormat
from cpol.errors import EventFileError
from cpol.errors import FormatVersionError
from cpol.eventfile import FORMAT_VERSION
from cpol.eventfile import EventFileHeader
from cpol.eventfile import check_version
from cpol.eventfile import iter_event_chunks
from cpol.eventfile import read_event_file
from cpol.eventfile import read_event_header
from cpol.eventfile import write_event_file
from cpol.events import EVENT_COLUMNS
from cpol.montecarlo import simulate_chunk


@pytest.fixture
def config() -> RunConfig:
    """Small run: two chunks of 500 pairs."""
    return RunConfig(source=SourceConfig(pairs=1000, chunk_size=500, seed=5))


@pytest.fixture
def frames(config: RunConfig) -> List[pd.DataFrame]:
    """Event frames of both chunks."""
    return [simulate_chunk(config.source, config.geometry, k).events for k in range(2)]


def test_jsonl_round_trip(tmp_path: Path, config: RunConfig, frames: List[pd.DataFrame]) -> None:
    """It reads back JSON-lines records exactly."""
    path = tmp_path / "events.jsonl"
    header = EventFileHeader.for_run(config)
    assert write_event_file(path, OutputFormat.JSONL, header, frames) == 1000
    read_header, stream = read_event_file(path)
    assert read_header == header
    expected = pd.concat(frames, ignore_index=True)
    pd.testing.assert_frame_equal(stream, expected[EVENT_COLUMNS])


def test_formats_read_back_identically(tmp_path: Path, config: RunConfig, frames: List[pd.DataFrame]) -> None:
    """It gives the same frame from a JSON-lines and a CSV file of one run."""
    header = EventFileHeader.for_run(config)
    streams = []
    for fmt in OutputFormat:
        path = tmp_path / f"events.{fmt.value}"
        write_event_file(path, fmt, header, frames)
        streams.append(read_event_file(path)[1])
    pd.testing.assert_frame_equal(*streams)


@pytest.mark.parametrize("fmt", list(OutputFormat))
def test_chunked_read_matches_whole_file(
    tmp_path: Path, config: RunConfig, frames: List[pd.DataFrame], fmt: OutputFormat
) -> None:
    """It yields chunks of at most chunk_rows rows that add up to the file."""
    path = tmp_path / f"events.{fmt.value}"
    header = EventFileHeader.for_run(config)
    write_event_file(path, fmt, header, frames)
    chunks = list(iter_event_chunks(path, chunk_rows=300))
    assert [len(c) for c in chunks] == [300, 300, 300, 100]
    assert read_event_header(path) == header
    _, whole = read_event_file(path)
    pd.testing.assert_frame_equal(pd.concat(chunks, ignore_index=True), whole)


def test_chunked_read_reports_malformed_rows(tmp_path: Path, config: RunConfig, frames: List[pd.DataFrame]) -> None:
    """It raises EventFileError when a later row is broken."""
    path = tmp_path / "events.jsonl"
    write_event_file(path, OutputFormat.JSONL, EventFileHeader.for_run(config), frames)
    with path.open("a") as handle:
        handle.write("{not json\n")
    with pytest.raises(EventFileError):
        list(iter_event_chunks(path, chunk_rows=300))


def test_csv_round_trip(tmp_path: Path, config: RunConfig, frames: List[pd.DataFrame]) -> None:
    """It reads back CSV records exactly."""
    path = tmp_path / "events.csv"
    write_event_file(path, OutputFormat.CSV, EventFileHeader.for_run(config), frames)
    assert path.read_text().startswith("# {")
    _, stream = read_event_file(path)
    expected = pd.concat(frames, ignore_index=True)
    pd.testing.assert_frame_equal(stream, expected[EVENT_COLUMNS])


@pytest.mark.parametrize("fmt", list(OutputFormat))
def test_header_only_file(tmp_path: Path, config: RunConfig, fmt: OutputFormat) -> None:
    """It reads a file without events as an empty frame."""
    path = tmp_path / f"empty.{fmt.value}"
    assert write_event_file(path, fmt, EventFileHeader.for_run(config), []) == 0
    header, stream = read_event_file(path)
    assert header.format_version == FORMAT_VERSION
    assert stream.empty
    assert list(stream.columns) == EVENT_COLUMNS


def test_incompatible_major_version(tmp_path: Path, config: RunConfig) -> None:
    """It refuses files written by another major format version."""
    header = EventFileHeader.for_run(config)
    future = EventFileHeader("2.0.0", header.effective_config, header.generator_digest)
    with pytest.raises(FormatVersionError):
        check_version(future)
    path = tmp_path / "future.jsonl"
    write_event_file(path, OutputFormat.JSONL, future, [])
    with pytest.raises(FormatVersionError):
        read_event_file(path)


def test_minor_version_is_accepted(config: RunConfig) -> None:
    """It reads files of the same major version."""
    header = EventFileHeader.for_run(config)
    check_version(EventFileHeader("1.4.2", header.effective_config, header.generator_digest))


def test_malformed_header(tmp_path: Path) -> None:
    """It raises EventFileError on a header that is not a header."""
    path = tmp_path / "broken.jsonl"
    path.write_text(json.dumps({"format": 1}) + "\n")
    with pytest.raises(EventFileError):
        read_event_file(path)
    path.write_text("not json\n")
    with pytest.raises(EventFileError):
        read_event_file(path)


def test_missing_file(tmp_path: Path) -> None:
    """It raises EventFileError for a missing file."""
    with pytest.raises(EventFileError):
        read_event_file(tmp_path / "absent.jsonl")


def test_unwritable_path(tmp_path: Path, config: RunConfig) -> None:
    """It raises EventFileError when the path is a directory."""
    with pytest.raises(EventFileError) as info:
        write_event_file(tmp_path, OutputFormat.JSONL, EventFileHeader.for_run(config), [])
    assert info.value.records_written == 0


def test_digest_depends_on_content_only(config: RunConfig) -> None:
    """It changes with the seed but not with the output path."""
    base = EventFileHeader.for_run(config)
    moved = config.copy(update={"output": config.output.copy(update={"path": "elsewhere.jsonl"})})
    reseeded = config.copy(update={"source": config.source.copy(update={"seed": 6})})
    assert EventFileHeader.for_run(moved).generator_digest == base.generator_digest
    assert EventFileHeader.for_run(reseeded).generator_digest != base.generator_digest
    assert "path" not in base.effective_config["output"]
