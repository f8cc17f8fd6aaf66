"""Error types raised across the package.

Every error carries a machine-readable ``code`` and a ``details`` dict so the CLI
can render it as a single parsable line.
"""

from typing import Any, Dict, Optional


class DiffusionMPCError(Exception):
    code = "DIFFUSION_MPC_ERROR"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class InvalidArgumentError(DiffusionMPCError, ValueError):
    code = "INVALID_ARGUMENT"


class NumericError(DiffusionMPCError, ArithmeticError):
    code = "NUMERIC_ERROR"


class TrainingError(DiffusionMPCError):
    code = "TRAINING_FAILURE"


class EmptySetError(DiffusionMPCError):
    """A tightened constraint primitive has no interior left"""
    code = "EMPTY_SET"


class InfeasibleProjectionError(DiffusionMPCError):
    code = "INFEASIBLE"


class ConfigurationError(DiffusionMPCError):
    code = "CONFIGURATION"


class CheckpointNotFoundError(DiffusionMPCError, FileNotFoundError):
    code = "CHECKPOINT_MISSING"


class CheckpointFormatError(DiffusionMPCError):
    code = "CHECKPOINT_FORMAT"


class DemoGenerationError(DiffusionMPCError):
    code = "DEMO_GENERATION"


__all__ = [
    "DiffusionMPCError",
    "InvalidArgumentError",
    "NumericError",
    "TrainingError",
    "EmptySetError",
    "InfeasibleProjectionError",
    "ConfigurationError",
    "CheckpointNotFoundError",
    "CheckpointFormatError",
    "DemoGenerationError",
]
