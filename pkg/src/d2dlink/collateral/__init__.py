"""EDA collateral writers and the bump-map reader."""

from .bumpmap import BumpMap, BumpMapError, parse_bump_map, parse_bump_map_text
from .lef import parse_lef_macros, write_lef
from .liberty import cell_tables, expected_tables, parse_liberty, write_liberty
from .report import CSV_COLUMNS, csv_text, metrics_row, write_datasheet
from .sdc import write_sdc
from .verilog import write_verilog

__all__ = [
    "BumpMap", "BumpMapError", "parse_bump_map", "parse_bump_map_text",
    "write_lef", "parse_lef_macros",
    "write_liberty", "parse_liberty", "cell_tables", "expected_tables",
    "CSV_COLUMNS", "csv_text", "metrics_row", "write_datasheet",
    "write_sdc", "write_verilog",
]
