"""
Logging configuration for PCAdv toolkit

Root logger: console plus a rotating file. Side loggers (results, performance)
write their own rotating files next to the main log and do not propagate.
"""
import logging
import logging.handlers
from datetime import timedelta
from pathlib import Path
from typing import Any, Dict, Optional

import humanize

from .settings import settings

DATE_FORMAT = '%Y-%m-%d %H:%M:%S'
CONSOLE_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)-25s | %(message)s'
FILE_FORMAT = '%(asctime)s | %(levelname)-8s | %(name)-25s | %(funcName)-20s:%(lineno)-4d | %(message)s'

QUIET_LIBRARIES = ("matplotlib", "PIL", "torch", "asyncio")


def _rotating_handler(path: Path, backup_count: int, fmt: str) -> Optional[logging.Handler]:
    """Size-rotated UTF-8 file handler, or None if the directory is not writable"""
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.handlers.RotatingFileHandler(
            filename=path,
            maxBytes=settings.LOG_MAX_SIZE_MB * 1024 * 1024,
            backupCount=backup_count,
            encoding='utf-8',
        )
    except OSError:
        return None
    handler.setFormatter(logging.Formatter(fmt=fmt, datefmt=DATE_FORMAT))
    return handler


def setup_logging() -> None:
    """Setup logging configuration with rotation and formatting"""
    level = getattr(logging, settings.LOG_LEVEL.upper())
    root_logger = logging.getLogger()
    root_logger.setLevel(level)

    # Reconfiguring replaces handlers from an earlier call
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(logging.Formatter(fmt=CONSOLE_FORMAT, datefmt=DATE_FORMAT))
    root_logger.addHandler(console_handler)

    file_handler = _rotating_handler(Path(settings.LOG_FILE), settings.LOG_BACKUP_COUNT, FILE_FORMAT)
    if file_handler is None:
        root_logger.warning(f"Cannot write {settings.LOG_FILE}, logging to console only")
    else:
        root_logger.addHandler(file_handler)

    for name in QUIET_LIBRARIES:
        logging.getLogger(name).setLevel(logging.WARNING)

    root_logger.debug(f"Log level: {settings.LOG_LEVEL}, log file: {settings.LOG_FILE}")


def _side_logger(name: str, filename: str, tag: str, backup_count: int) -> logging.Logger:
    side_logger = logging.getLogger(name)
    if not side_logger.handlers:
        side_logger.setLevel(logging.INFO)
        handler = _rotating_handler(
            Path(settings.LOG_FILE).parent / filename, backup_count, f'%(asctime)s | {tag} | %(message)s'
        )
        if handler is not None:
            side_logger.addHandler(handler)
            side_logger.propagate = False
    return side_logger


def get_results_logger() -> logging.Logger:
    """One line per persisted grid result"""
    return _side_logger("results", "results.log", "RESULT", settings.LOG_BACKUP_COUNT)


def get_performance_logger() -> logging.Logger:
    """Timings and resource snapshots"""
    return _side_logger("performance", "performance.log", "PERF", 5)


def progress_disabled() -> bool:
    """Progress bars are hidden when the root level is above INFO"""
    return logging.getLogger().getEffectiveLevel() > logging.INFO


class StructuredLogger:
    """key=value | key=value lines for experiment events, errors and timings"""

    def __init__(self, logger_name: str):
        self.logger = logging.getLogger(logger_name)

    def log_experiment_event(self, event: str, **kwargs) -> None:
        self.logger.info(f"Experiment event: {self._format_data({'event': event, **kwargs})}")

    def log_error(self, error: str, **kwargs) -> None:
        self.logger.error(f"Error: {self._format_data({'error': error, **kwargs})}")

    def log_performance(self, operation: str, duration_ms: float, **kwargs) -> None:
        data = {
            "operation": operation,
            "duration_ms": round(duration_ms, 1),
            "duration": humanize.precisedelta(timedelta(milliseconds=duration_ms), minimum_unit="milliseconds"),
            **kwargs,
        }
        get_performance_logger().info(self._format_data(data))

    @staticmethod
    def _format_data(data: Dict[str, Any]) -> str:
        return " | ".join(f"{key}={value}" for key, value in data.items())


# Global structured logger instance
structured_logger = StructuredLogger("structured")
