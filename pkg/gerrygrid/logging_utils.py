from __future__ import annotations

import logging
import sys
import threading
import time

LOG_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | %(message)s"


def configure_logging(level: str = "INFO") -> None:
    """Route all log output to stderr so stdout only carries command results."""
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format=LOG_FORMAT,
        stream=sys.stderr,
        force=True,
    )


class ProgressReporter:
    """Logs throttled progress lines for long-running loops."""

    def __init__(
        self,
        logger: logging.Logger,
        label: str,
        total: int | None = None,
        interval_seconds: float = 10.0,
    ) -> None:
        self._logger = logger
        self._label = label
        self._total = total
        self._interval = interval_seconds
        self._done = 0
        self._started = time.monotonic()
        self._last_report = self._started
        self._lock = threading.Lock()

    @property
    def done(self) -> int:
        return self._done

    def advance(self, count: int = 1) -> None:
        with self._lock:
            self._done += count
            now = time.monotonic()
            if now - self._last_report < self._interval:
                return
            self._last_report = now
            done = self._done
        self._emit(done, now)

    def finish(self) -> None:
        self._emit(self._done, time.monotonic())

    def _emit(self, done: int, now: float) -> None:
        elapsed = max(now - self._started, 1e-9)
        rate = done / elapsed
        if self._total:
            self._logger.info(
                "%s: %s/%s (%.1f%%, %.0f/s)",
                self._label,
                done,
                self._total,
                100.0 * done / self._total,
                rate,
            )
        else:
            self._logger.info("%s: %s (%.0f/s)", self._label, done, rate)
