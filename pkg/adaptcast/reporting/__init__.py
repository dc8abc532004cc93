"""
Persistence and report output
"""

from .formatters import MarkdownFormatter, read_long_csv, write_long_csv
from .store import ModelStore, dump_json

__all__ = ["MarkdownFormatter", "ModelStore", "dump_json", "read_long_csv", "write_long_csv"]
