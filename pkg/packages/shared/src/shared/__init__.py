"""Shared utilities for the waveguide LAP solver packages."""

from shared.csvio import read_header, read_table, read_trace_csv, write_csv, write_summary
from shared.expression import Expression, ExpressionError, compile_expression, cutoff
from shared.logging import configure_logging, get_logger
from shared.types import BaseConfigModel, CellRange

__version__ = "0.1.0"

__all__ = [
    "configure_logging",
    "get_logger",
    "compile_expression",
    "cutoff",
    "Expression",
    "ExpressionError",
    "write_csv",
    "write_summary",
    "read_header",
    "read_table",
    "read_trace_csv",
    "BaseConfigModel",
    "CellRange",
]
