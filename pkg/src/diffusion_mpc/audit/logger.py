from typing import Any, Dict, Iterator, Optional, Union
import json
import logging
from pathlib import Path

from pydantic import BaseModel


class DiagnosticsLogger:
    """Append-only JSON Lines writer for per-step and per-episode records"""

    def __init__(self, path: Union[str, Path]):
        self.logger = logging.getLogger(__name__)
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._handle = None

    def __enter__(self):
        self._handle = open(self.path, 'a', encoding='utf-8')
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()

    def close(self):
        if self._handle is not None:
            self._handle.close()
            self._handle = None

    def log_event(self, record: Union[BaseModel, Dict[str, Any]], event_type: Optional[str] = None):
        """Write one record as a single JSON line"""
        try:
            if isinstance(record, BaseModel):
                line = record.model_dump_json()
                if event_type:
                    line = json.dumps({'event_type': event_type, **json.loads(line)})
            else:
                payload = dict(record)
                if event_type:
                    payload = {'event_type': event_type, **payload}
                line = json.dumps(payload, default=float)
            if self._handle is not None:
                self._handle.write(line + '\n')
            else:
                with open(self.path, 'a', encoding='utf-8') as f:
                    f.write(line + '\n')
        except (OSError, TypeError, ValueError) as e:
            self.logger.error(f"Failed to write diagnostics record: {str(e)}")


def read_jsonl(path: Union[str, Path]) -> Iterator[Dict[str, Any]]:
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if line:
                yield json.loads(line)
