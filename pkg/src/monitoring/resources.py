"""
Process and host resource snapshots for long experiment runs
"""
import logging
import os
from datetime import datetime
from typing import Any, Dict

import humanize
import psutil

from ..config.logging_config import get_performance_logger
from ..config.settings import settings


def default_worker_count() -> int:
    """PCADV_THREADS capped by the logical CPU count"""
    return max(1, min(settings.PCADV_THREADS, psutil.cpu_count(logical=True) or 1))


class ResourceMonitor:
    """Logs memory and CPU usage at grid start, end and every N cells"""

    def __init__(self, interval: int = None):
        self.logger = logging.getLogger(__name__)
        self.perf_logger = get_performance_logger()
        self.interval = interval or settings.RESOURCE_LOG_INTERVAL
        self.process = psutil.Process(os.getpid())
        self.cells_done = 0
        self.started_at = datetime.utcnow()

    def snapshot(self) -> Dict[str, Any]:
        """Current resource usage"""
        try:
            memory = psutil.virtual_memory()
            rss = self.process.memory_info().rss
            return {
                'rss': humanize.naturalsize(rss, binary=True),
                'rss_bytes': rss,
                'memory_percent': round(memory.percent, 1),
                'cpu_percent': round(psutil.cpu_percent(interval=None), 1),
                'threads': self.process.num_threads(),
            }
        except psutil.Error as e:
            self.logger.warning(f"Resource snapshot failed: {e}")
            return {'error': str(e)}

    def log(self, stage: str) -> Dict[str, Any]:
        data = self.snapshot()
        elapsed = humanize.naturaldelta(datetime.utcnow() - self.started_at)
        fields = " | ".join(f"{key}={value}" for key, value in data.items())
        self.perf_logger.info(f"resources stage={stage} | elapsed={elapsed} | {fields}")
        return data

    def cell_finished(self) -> None:
        self.cells_done += 1
        if self.cells_done % self.interval == 0:
            self.log(f"cell_{self.cells_done}")
