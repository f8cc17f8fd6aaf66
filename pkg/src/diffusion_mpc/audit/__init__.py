from .logger import DiagnosticsLogger, read_jsonl

__all__ = ['DiagnosticsLogger', 'read_jsonl']
