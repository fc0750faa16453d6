"""REST entity service: source entities, converted entities and their chaining."""

from sdv.service.config import ConfigError, EntityConfig, ServiceConfig, load_entities, load_service_config
from sdv.service.producer import (
    BadRequest,
    ConversionError,
    EntityError,
    EntityService,
    FetchError,
    Result,
    UnknownEntity,
)

__all__ = [
    "BadRequest",
    "ConfigError",
    "ConversionError",
    "EntityConfig",
    "EntityError",
    "EntityService",
    "FetchError",
    "Result",
    "ServiceConfig",
    "UnknownEntity",
    "load_entities",
    "load_service_config",
]
