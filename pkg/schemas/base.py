"""
Shared base models for on-disk JSON formats.
"""
from typing import Any

import structlog
from pydantic import BaseModel, ConfigDict, model_validator

logger = structlog.get_logger()

FORMAT_VERSION = 1


class FileModel(BaseModel):
    """Tolerant model: unknown fields are dropped with a warning."""
    model_config = ConfigDict(extra="ignore")

    @model_validator(mode="before")
    @classmethod
    def _warn_unknown_fields(cls, data: Any) -> Any:
        if isinstance(data, dict):
            known = set(cls.model_fields)
            unknown = sorted(k for k in data if k not in known)
            if unknown:
                logger.warning("Unknown fields ignored", model=cls.__name__, fields=unknown)
        return data


class VersionedModel(FileModel):
    """Top-level file carrying a format_version."""
    format_version: int = FORMAT_VERSION
