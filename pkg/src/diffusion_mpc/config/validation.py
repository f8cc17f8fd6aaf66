from typing import Any, Dict, List
import json
import logging
from pathlib import Path

import jsonschema

from ..errors import ConfigurationError

SCHEMA_DIR = Path(__file__).parent / 'schemas'


class ConfigurationValidator:
    def __init__(self, schema_dir: Path = SCHEMA_DIR):
        self.logger = logging.getLogger(__name__)
        self.schema_dir = Path(schema_dir)
        self.schemas = self._load_schemas()

    def _load_schemas(self) -> Dict[str, Any]:
        """Load JSON schemas for configuration validation"""
        schemas = {}
        for schema_file in sorted(self.schema_dir.glob('*.json')):
            with open(schema_file) as f:
                schemas[schema_file.stem] = json.load(f)
        return schemas

    def validate_config(self, config: Any, config_type: str) -> List[str]:
        """Every schema violation, as readable messages"""
        schema = self.schemas.get(config_type)
        if not schema:
            return [f"No schema found for config type: {config_type}"]
        validator = jsonschema.Draft7Validator(schema)
        errors = []
        for error in sorted(validator.iter_errors(config), key=lambda e: list(e.path)):
            location = '/'.join(str(p) for p in error.path) or '<root>'
            errors.append(f"{location}: {error.message}")
        return errors

    def require_valid(self, config: Any, config_type: str) -> None:
        errors = self.validate_config(config, config_type)
        if errors:
            for error in errors:
                self.logger.error(f"Invalid {config_type} configuration: {error}")
            raise ConfigurationError(
                f"Invalid {config_type} configuration ({len(errors)} problem(s))",
                {'errors': errors}
            )
