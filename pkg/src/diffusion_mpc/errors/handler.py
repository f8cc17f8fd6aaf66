from typing import Dict, Any, Optional
import json
import logging
import traceback
import uuid
from pydantic import BaseModel

from . import DiffusionMPCError


class ErrorDetail(BaseModel):
    code: str
    message: str
    details: Optional[Dict[str, Any]] = None


class ErrorHandler:
    def __init__(self):
        self.logger = logging.getLogger(__name__)

    def to_detail(self, exc: BaseException) -> ErrorDetail:
        """Convert an exception into a serializable error record"""
        if isinstance(exc, DiffusionMPCError):
            return ErrorDetail(
                code=exc.code,
                message=exc.message,
                details=exc.details or None
            )

        error_id = self._generate_error_id()
        self.logger.error(
            f"Unhandled error {error_id}: {str(exc)}",
            exc_info=True,
            extra={
                'error_id': error_id,
                'traceback': traceback.format_exc()
            }
        )
        return ErrorDetail(
            code="INTERNAL_ERROR",
            message=str(exc) or exc.__class__.__name__,
            details={'error_id': error_id, 'type': exc.__class__.__name__}
        )

    def format_line(self, exc: BaseException) -> str:
        """One-line JSON rendering, safe to parse from a shell pipeline"""
        detail = self.to_detail(exc)
        return json.dumps(detail.model_dump(exclude_none=True), default=str, sort_keys=True)

    def exit_code(self, exc: BaseException) -> int:
        return 1

    def _generate_error_id(self) -> str:
        return uuid.uuid4().hex[:12]
