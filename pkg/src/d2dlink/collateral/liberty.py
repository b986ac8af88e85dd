"""Liberty NLDM writer for the txip/rxip cells and a small reader for the subset it emits.

Internal values are SI; the library is written in ns / pF / mW (so internal_power is pJ).
Numbers are printed with ``repr`` so the reader recovers the converted floats exactly.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

import numpy as np

from ..simcore.tables import CharTable

S_TO_NS = 1e9
F_TO_PF = 1e12
J_TO_PJ = 1e12

TX_TEMPLATE = "txip_lut"
RX_TEMPLATE = "rxip_lut"

# (liberty group, CharTable attribute, unit scale)
TIMING_GROUPS = (
    ("cell_rise", "delay_rise", S_TO_NS),
    ("cell_fall", "delay_fall", S_TO_NS),
    ("rise_transition", "slew_rise", S_TO_NS),
    ("fall_transition", "slew_fall", S_TO_NS),
)
POWER_GROUPS = (
    ("rise_power", "energy_rise", J_TO_PJ),
    ("fall_power", "energy_fall", J_TO_PJ),
)


def _num(x: float) -> str:
    return repr(float(x))


def _index(values) -> str:
    return '"' + ", ".join(_num(v) for v in values) + '"'


def _values(grid: np.ndarray, rx: bool, indent: str) -> list[str]:
    rows = grid[:, 0:1].T if rx else grid  # RX tables are one-dimensional in slew
    body = [f'{indent}  "' + ", ".join(_num(v) for v in row) + '"' for row in rows]
    return [f"{indent}values ( \\"] + [b + (", \\" if i < len(body) - 1 else " );") for i, b in enumerate(body)]


def _table(group: str, template: str, grid: np.ndarray, slews_ns, loads_pf, rx: bool, indent: str) -> list[str]:
    out = [f"{indent}{group} ({template}) {{", f"{indent}  index_1 ({_index(slews_ns)});"]
    if not rx:
        out.append(f"{indent}  index_2 ({_index(loads_pf)});")
    out += _values(grid, rx, indent + "  ")
    out.append(f"{indent}}}")
    return out


def _cell(name: str, table: CharTable, in_pin: str, out_pin: str, lanes: int) -> list[str]:
    rx = table.kind == "rx"
    template = RX_TEMPLATE if rx else TX_TEMPLATE
    slews = table.slews * S_TO_NS
    loads = table.loads * F_TO_PF
    out = [f"  cell ({name}) {{",
           "    dont_touch : true;",
           "    dont_use : true;",
           f"    bus_naming_style : \"%s[%d]\";"]
    for lane in range(lanes):
        out += [f"    pin ({in_pin}[{lane}]) {{",
                "      direction : input;",
                f"      capacitance : {_num(table.c_in_F * F_TO_PF)};",
                "    }"]
    for lane in range(lanes):
        out += [f"    pin ({out_pin}[{lane}]) {{",
                "      direction : output;",
                f"      function : \"{in_pin}[{lane}]\";",
                "      timing () {",
                f"        related_pin : \"{in_pin}[{lane}]\";",
                "        timing_sense : positive_unate;"]
        for group, attr, k in TIMING_GROUPS:
            out += _table(group, template, getattr(table, attr) * k, slews, loads, rx, "        ")
        out += ["      }", "      internal_power () {", f"        related_pin : \"{in_pin}[{lane}]\";"]
        for group, attr, k in POWER_GROUPS:
            out += _table(group, template, getattr(table, attr) * k, slews, loads, rx, "        ")
        out += ["      }", "    }"]
    out.append("  }")
    return out


def write_liberty(tx: CharTable, rx: CharTable, *, library: str, vdd: float, lanes: int, fingerprint: str) -> str:
    lines = [f"/* d2dlink txip/rxip NLDM library, config {fingerprint} */",
             f"library ({library}) {{",
             "  delay_model : table_lookup;",
             "  time_unit : \"1ns\";",
             "  voltage_unit : \"1V\";",
             "  current_unit : \"1mA\";",
             "  leakage_power_unit : \"1mW\";",
             "  capacitive_load_unit (1, pf);",
             f"  nom_voltage : {_num(vdd)};",
             "  nom_temperature : 25.0;",
             "  nom_process : 1.0;",
             "  slew_lower_threshold_pct_rise : 20.0;",
             "  slew_upper_threshold_pct_rise : 80.0;",
             "  slew_lower_threshold_pct_fall : 20.0;",
             "  slew_upper_threshold_pct_fall : 80.0;",
             "  input_threshold_pct_rise : 50.0;",
             "  input_threshold_pct_fall : 50.0;",
             "  output_threshold_pct_rise : 50.0;",
             "  output_threshold_pct_fall : 50.0;",
             f"  lu_table_template ({TX_TEMPLATE}) {{",
             "    variable_1 : input_net_transition;",
             "    variable_2 : total_output_net_capacitance;",
             f"    index_1 ({_index(tx.slews * S_TO_NS)});",
             f"    index_2 ({_index(tx.loads * F_TO_PF)});",
             "  }",
             f"  lu_table_template ({RX_TEMPLATE}) {{",
             "    variable_1 : input_net_transition;",
             f"    index_1 ({_index(rx.slews * S_TO_NS)});",
             "  }"]
    lines += _cell("txip", tx, "din", "pad", lanes)
    lines += _cell("rxip", rx, "pad", "dout", lanes)
    lines.append("}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------------- reader


@dataclass
class Group:
    kind: str
    name: str
    attrs: dict[str, object] = field(default_factory=dict)
    groups: list["Group"] = field(default_factory=list)

    def find(self, kind: str, name: str | None = None) -> list["Group"]:
        return [g for g in self.groups if g.kind == kind and (name is None or g.name == name)]


_TOKEN = re.compile(r'\s*(?:(/\*.*?\*/)|("(?:[^"\\]|\\.)*")|(\\\n)|([{}();:,])|([^\s{}();:,"]+))', re.S)


def _tokens(text: str):
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise ValueError(f"liberty: cannot tokenize at offset {pos}")
            return
        pos = m.end()
        comment, string, cont, punct, word = m.groups()
        if comment or cont:
            continue
        yield string if string is not None else (punct if punct is not None else word)


def _unquote(tok: str) -> str:
    return tok[1:-1] if tok.startswith('"') else tok


def parse_liberty(text: str) -> Group:
    """Parse the group/attribute subset written by ``write_liberty``."""
    toks = list(_tokens(text))
    pos = 0

    def parse_group_body(g: Group):
        nonlocal pos
        while toks[pos] != "}":
            key = toks[pos]
            pos += 1
            if toks[pos] == ":":
                g.attrs[key] = _unquote(toks[pos + 1])
                pos += 2
                if toks[pos] == ";":
                    pos += 1
                continue
            if toks[pos] != "(":
                raise ValueError(f"liberty: unexpected token {toks[pos]!r} after {key!r}")
            pos += 1
            args = []
            while toks[pos] != ")":
                if toks[pos] != ",":
                    args.append(_unquote(toks[pos]))
                pos += 1
            pos += 1
            if toks[pos] == "{":
                pos += 1
                sub = Group(key, args[0] if args else "")
                parse_group_body(sub)
                g.groups.append(sub)
            else:
                g.attrs.setdefault(key, [])
                g.attrs[key].append(args)  # complex attribute
                if toks[pos] == ";":
                    pos += 1
        pos += 1

    if toks[pos] != "library":
        raise ValueError("liberty: expected a library group")
    lib = Group("library", _unquote(toks[pos + 2]))
    pos += 5  # library ( name ) {
    parse_group_body(lib)
    return lib


def _floats(s: str) -> np.ndarray:
    return np.array([float(x) for x in s.split(",")])


@dataclass
class LibertyTables:
    """One cell's tables in Liberty units (ns, pF, pJ), as read back."""

    slews_ns: np.ndarray
    loads_pf: np.ndarray | None
    c_in_pf: float
    grids: dict[str, np.ndarray]


def cell_tables(lib: Group, cell: str) -> LibertyTables:
    c = lib.find("cell", cell)[0]
    pins = c.find("pin")
    c_in = float(next(p for p in pins if p.attrs.get("direction") == "input").attrs["capacitance"])
    out = next(p for p in pins if p.attrs.get("direction") == "output")
    grids: dict[str, np.ndarray] = {}
    slews = loads = None
    for sub in out.find("timing") + out.find("internal_power"):
        for t in sub.groups:
            slews = _floats(t.attrs["index_1"][0][0])
            loads = _floats(t.attrs["index_2"][0][0]) if "index_2" in t.attrs else None
            grids[t.kind] = np.array([_floats(r) for r in t.attrs["values"][0]])
    return LibertyTables(slews, loads, c_in, grids)


def expected_tables(table: CharTable) -> LibertyTables:
    """The same tables as ``write_liberty`` renders them, for round-trip comparison."""
    rx = table.kind == "rx"
    grids = {}
    for group, attr, k in TIMING_GROUPS + POWER_GROUPS:
        g = getattr(table, attr) * k
        grids[group] = g[:, 0:1].T if rx else g
    return LibertyTables(table.slews * S_TO_NS, None if rx else table.loads * F_TO_PF, table.c_in_F * F_TO_PF, grids)
