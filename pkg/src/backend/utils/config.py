"""
Laboratory settings
Read once from the environment (and a local .env file)
"""

import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel, Field, field_validator


class LabSettings(BaseModel):
    """Default grids, tolerances and fan-out"""

    grid_size: int = Field(2000, ge=16)
    r_min: float = Field(1e-5, gt=0.0, lt=1.0)
    cert_grid_size: int = Field(20000, ge=16)
    cert_r_min: float = Field(1e-8, gt=0.0, lt=1.0)
    rayleigh_grid_size: int = Field(4000, ge=16)
    rayleigh_r_min: float = Field(1e-8, gt=0.0, lt=1.0)
    n_jobs: int = 1
    log_level: str = "INFO"

    @field_validator("log_level")
    @classmethod
    def _upper(cls, value: str) -> str:
        return value.upper()


_ENV_KEYS = {
    "grid_size": "MEMSLAB_GRID_SIZE",
    "r_min": "MEMSLAB_R_MIN",
    "cert_grid_size": "MEMSLAB_CERT_GRID_SIZE",
    "cert_r_min": "MEMSLAB_CERT_R_MIN",
    "rayleigh_grid_size": "MEMSLAB_RAYLEIGH_GRID_SIZE",
    "rayleigh_r_min": "MEMSLAB_RAYLEIGH_R_MIN",
    "n_jobs": "MEMSLAB_N_JOBS",
    "log_level": "MEMSLAB_LOG_LEVEL",
}


def settings_from_env() -> LabSettings:
    """Build settings from the current environment without caching"""
    load_dotenv()
    values = {}
    for field, key in _ENV_KEYS.items():
        raw = os.getenv(key)
        if raw is not None and raw.strip():
            values[field] = raw.strip()
    return LabSettings(**values)


@lru_cache(maxsize=1)
def load_settings() -> LabSettings:
    """Settings for this process (runs once)"""
    return settings_from_env()
