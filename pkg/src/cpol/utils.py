import hashlib
import json
import logging
from typing import Any
from typing import Optional

import pendulum


LOG_FORMAT = (
    "%(levelname) -10s %(asctime)s %(name) -30s %(funcName) "
    "-35s %(lineno) -5d: %(message)s"
)

CSV_FLOAT_FORMAT = "%.9g"


def configure_logging(logging_on: bool, log_level: str = "INFO") -> None:
    """Route cpol loggers to stderr when logging is switched on in settings."""
    level = getattr(logging, log_level.upper(), logging.INFO) if logging_on else logging.WARNING
    logging.basicConfig(format=LOG_FORMAT, level=level)
    logging.getLogger("cpol").setLevel(level)


def canonical_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def digest64(payload: Any) -> str:
    """64-bit hex checksum of the canonical JSON form of payload."""
    data = canonical_json(payload).encode("utf-8")
    return hashlib.blake2b(data, digest_size=8).hexdigest()


class BasicLog:
    DEFAULT_FORMAT = "{timestamp} {level:5s}: {log_note:33s}"

    @classmethod
    def format(
        cls,
        level: str,
        log_note: str,
        timestamp: Optional[pendulum.DateTime] = None,
    ) -> str:
        """
        Formats a single line status note for the console.

        Args:
            level: level name, e.g. INFO
            log_note: the note
            timestamp: pendulum.now("UTC") by default

        Returns:
            Formatted string.
        """
        if timestamp is None:
            timestamp = pendulum.now("UTC")
        return cls.DEFAULT_FORMAT.format(
            timestamp=timestamp.isoformat(),
            level=level,
            log_note=log_note,
        )
