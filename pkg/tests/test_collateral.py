import csv
import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from pyslang import ast, syntax

from d2dlink.collateral import (CSV_COLUMNS, BumpMapError, cell_tables, csv_text, expected_tables, parse_bump_map,
                                parse_bump_map_text, parse_lef_macros, parse_liberty, write_lef, write_liberty,
                                write_sdc, write_verilog)
from d2dlink.simcore.tables import CharTable

from .conftest import DATA


def verilog_diagnostics(text):
    comp = ast.Compilation()
    comp.addSyntaxTree(syntax.SyntaxTree.fromText(text))
    return list(comp.getAllDiagnostics()), comp


# ---------------------------------------------------------------- bump map

def test_shipped_bump_map():
    bm = parse_bump_map(DATA / "bumpmap_x16_12col.txt", 16)
    assert (bm.rows, bm.cols) == (16, 12)
    assert bm.count("tx") == bm.count("rx") == 16
    assert bm.count("other") == 2


def test_bump_map_count_mismatch_names_counts():
    text = "tx . . .\nrx rx . .\n. . . .\nvdd vss . .\n"
    with pytest.raises(BumpMapError, match="rx=2 ≠ lane_count=1"):
        parse_bump_map_text(text, 1)


def test_bump_map_all_empty():
    with pytest.raises(BumpMapError, match="tx=0"):
        parse_bump_map_text(". .\n. .\n", 1)


def test_bump_map_ragged_and_unknown():
    with pytest.raises(BumpMapError, match="ragged"):
        parse_bump_map_text("tx rx\ntx\n", 1)
    with pytest.raises(BumpMapError, match="unknown token"):
        parse_bump_map_text("tx rx gnd\n", 1)


def test_bump_map_comments_and_missing_file(tmp_path):
    bm = parse_bump_map_text("# header\ntx rx  # lane 0\n\nvdd vss\n", 1)
    assert bm.grid == (("tx", "rx"), ("vdd", "vss"))
    with pytest.raises(BumpMapError, match="not found"):
        parse_bump_map(tmp_path / "nope.txt", 1)


# ----------------------------------------------------------------- liberty

def random_tables(seed, n_s=5, n_l=5):
    rng = np.random.default_rng(seed)

    def tab(kind, nl):
        slews = np.sort(rng.uniform(1e-12, 1e-10, n_s))
        loads = np.sort(rng.uniform(1e-16, 1e-13, nl))
        g = [rng.uniform(1e-13, 1e-10, (n_s, nl)) for _ in range(4)] + [rng.uniform(1e-16, 1e-12, (n_s, nl)) for _ in range(2)]
        return CharTable(kind, slews, loads, *g, c_in_F=float(rng.uniform(1e-16, 1e-14)))

    return tab("tx", n_l), tab("rx", 1)


@given(seed=st.integers(0, 2**32 - 1), n_s=st.integers(1, 7), n_l=st.integers(1, 7))
def test_liberty_round_trip_bit_exact(seed, n_s, n_l):
    tx, rx = random_tables(seed, n_s, n_l)
    text = write_liberty(tx, rx, library="lib", vdd=0.8, lanes=2, fingerprint="x")
    lib = parse_liberty(text)
    for name, table in (("txip", tx), ("rxip", rx)):
        got, want = cell_tables(lib, name), expected_tables(table)
        assert np.array_equal(got.slews_ns, want.slews_ns)
        assert (got.loads_pf is None) == (want.loads_pf is None)
        if want.loads_pf is not None:
            assert np.array_equal(got.loads_pf, want.loads_pf)
        assert got.c_in_pf == want.c_in_pf
        assert set(got.grids) == set(want.grids)
        for k in want.grids:
            assert np.array_equal(got.grids[k], want.grids[k]), k
            # dimensions follow the CharTable axes
            assert got.grids[k].shape == ((n_s, n_l) if name == "txip" else (1, n_s))


def test_liberty_header_units_and_cells():
    tx, rx = random_tables(1)
    lib = parse_liberty(write_liberty(tx, rx, library="d2d", vdd=0.8, lanes=3, fingerprint="abc"))
    assert lib.name == "d2d"
    assert lib.attrs["time_unit"] == "1ns" and lib.attrs["leakage_power_unit"] == "1mW"
    assert lib.attrs["capacitive_load_unit"] == [["1", "pf"]]
    assert [c.name for c in lib.find("cell")] == ["txip", "rxip"]
    txip = lib.find("cell", "txip")[0]
    assert len(txip.find("pin")) == 6
    tmpl = lib.find("lu_table_template", "txip_lut")[0]
    assert tmpl.attrs["variable_2"] == "total_output_net_capacitance"


def test_liberty_reader_rejects_garbage():
    with pytest.raises(ValueError):
        parse_liberty("cell (x) { }")


# ----------------------------------------------------------------- verilog

@pytest.mark.parametrize("lanes", [1, 4, 16])
def test_verilog_parses_and_declares_buses(lanes):
    text = write_verilog(lanes=lanes, tx_delays_s=(51.4e-12, 49.6e-12), rx_delays_s=(10e-12, 12.2e-12),
                         fingerprint="f00d")
    diags, comp = verilog_diagnostics(text)
    assert diags == []
    assert sorted(i.name for i in comp.getRoot().topInstances) == ["rxip", "txip"]
    assert f"input  [{lanes - 1}:0] din;" in text and f"output [{lanes - 1}:0] pad;" in text
    assert "`timescale 1ps/1ps" in text and "f00d" in text.splitlines()[0]
    assert text.count("assign #(51, 50) pad[") == lanes
    assert text.count("assign #(10, 12) dout[") == lanes


def test_verilog_rejects_zero_lanes():
    with pytest.raises(ValueError):
        write_verilog(lanes=0, tx_delays_s=(0, 0), rx_delays_s=(0, 0), fingerprint="x")


# --------------------------------------------------------------------- LEF

def test_lef_bump_mode_geometry():
    bm = parse_bump_map(DATA / "bumpmap_x16_12col.txt", 16)
    text = write_lef(pitch_um=112.64, lanes=16, macro_w_um=0, macro_h_um=0, bump_map=bm)
    m = parse_lef_macros(text)["d2d_bumps"]
    assert m["size"] == pytest.approx((1351.68, 1802.24))
    pins = m["pins"]
    named = [p for p in pins if not p.startswith("OTHER_")]
    assert len(named) == sum(1 for _, _, r in bm.sites() if r != "other")
    assert len(pins) - len(named) == bm.count("other")
    w, h = m["size"]
    for x1, y1, x2, y2 in pins.values():
        assert 0 <= x1 < x2 <= w and 0 <= y1 < y2 <= h
        assert x2 - x1 == pytest.approx(0.8 * 112.64, abs=1e-3)
    # first tx bump sits in the top-left site
    assert pins["tx_pad[0]"] == pytest.approx((11.264, 1700.864, 101.376, 1790.976))
    assert "LAYER PAD ;" in text and text.startswith("VERSION 5.8 ;")


def test_lef_lane_mode_and_layer():
    text = write_lef(pitch_um=40, lanes=4, macro_w_um=160, macro_h_um=90, layer="AP")
    macros = parse_lef_macros(text)
    assert set(macros) == {"txip", "rxip"}
    for m in macros.values():
        assert len(m["pins"]) == 4
        for x1, y1, x2, y2 in m["pins"].values():
            assert 0 <= x1 and x2 <= 160 and 0 <= y1 and y2 <= 90
    assert "LAYER AP ;" in text


def test_lef_bump_mode_requires_map():
    with pytest.raises(ValueError):
        write_lef(pitch_um=40, lanes=1, macro_w_um=1, macro_h_um=1, mode="bumps")


# --------------------------------------------------------------------- SDC

def test_sdc_48g_budget_and_line_counts():
    text = write_sdc(lanes=3, ui_s=1e-9 / 48, budget_ui=16, pad_c_F=150e-15, far_slew_s=20e-12, fingerprint="x")
    md = [l for l in text.splitlines() if l.startswith("set_max_delay")]
    assert len(md) == 3 and all(l.split()[1] == "0.3333" for l in md)
    assert sum(l.startswith("set_load 0.150000") for l in text.splitlines()) == 3
    assert sum(l.startswith("set_input_transition 0.020000") for l in text.splitlines()) == 3


def test_sdc_budget_override():
    text = write_sdc(lanes=1, ui_s=1e-9 / 8, budget_ui=10, pad_c_F=1e-13, far_slew_s=1e-11, fingerprint="x")
    assert "set_max_delay 1.2500 " in text


# --------------------------------------------------------------------- CSV

def test_csv_fixed_columns_and_blank_missing():
    text = csv_text([{"pkg": "org", "reach_mm": 2.0, "feasible": False}, {"pkg": "si", "e_tx_fJ": 1 / 3}])
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == list(CSV_COLUMNS) and len(CSV_COLUMNS) == 20
    assert all(len(r) == 20 for r in rows)
    assert rows[1][CSV_COLUMNS.index("feasible")] == "false"
    assert rows[2][CSV_COLUMNS.index("e_tx_fJ")] == "0.333333333333"
