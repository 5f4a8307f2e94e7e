"""
Configuration settings for PCAdv toolkit
"""
import os
from dataclasses import dataclass
from typing import ClassVar, Tuple

import psutil

try:
    from dotenv import load_dotenv  # для локальной разработки
    load_dotenv()
except Exception:
    pass


def _default_threads() -> int:
    """Physical core count, at least 1"""
    return max(1, psutil.cpu_count(logical=False) or 1)


@dataclass
class Settings:
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Worker pool
    PCADV_THREADS: int = int(os.getenv("PCADV_THREADS", "0")) or _default_threads()
    TORCH_THREADS: int = int(os.getenv("TORCH_THREADS", "1"))

    # Filesystem layout
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "./runs")
    DATA_DIR: str = os.getenv("DATA_DIR", "./data")
    MODELS_DIR: str = os.getenv("MODELS_DIR", "./models")

    DEFAULT_SEED: int = int(os.getenv("DEFAULT_SEED", "0"))
    RESOURCE_LOG_INTERVAL: int = int(os.getenv("RESOURCE_LOG_INTERVAL", "10"))

    # Logging settings
    LOG_FILE: str = os.getenv("LOG_FILE", "./logs/pcadv.log")
    LOG_MAX_SIZE_MB: int = int(os.getenv("LOG_MAX_SIZE_MB", "10"))
    LOG_BACKUP_COUNT: int = int(os.getenv("LOG_BACKUP_COUNT", "10"))

    LOG_LEVELS: ClassVar[Tuple[str, ...]] = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")

    def validate(self) -> None:
        """Validate settings"""
        if self.PCADV_THREADS < 1:
            raise ValueError("PCADV_THREADS must be >= 1")
        if self.TORCH_THREADS < 1:
            raise ValueError("TORCH_THREADS must be >= 1")
        if self.LOG_LEVEL.upper() not in self.LOG_LEVELS:
            raise ValueError(f"Unknown LOG_LEVEL: {self.LOG_LEVEL}")
        if self.RESOURCE_LOG_INTERVAL < 1:
            raise ValueError("RESOURCE_LOG_INTERVAL must be >= 1")


# Global settings instance
settings = Settings()
