import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from d2dlink.adaptation import EQ_NONE, select_eq, select_termination
from d2dlink.channel import build_ladder, summarize
from d2dlink.config import load_pdk
from d2dlink.simcore.link import LinkSpec, stage_for_width
from d2dlink.simcore.tables import measure_cin
from d2dlink.xcvr import (SizingError, TxDesign, analytic_tx_load, area, even_ceil, fanout, quantize_fin,
                          rx_from_buffer, rx_sizing_search, sim_settings, size_tx_chain, tx_chain_from_final,
                          tx_sizing_search)

from .conftest import make_cfg

G16 = load_pdk("generic16")
G65 = load_pdk("generic65")


def test_fanout_closed_form():
    u = G16.unit_inv
    assert fanout(G16) == pytest.approx(math.e * math.sqrt(1 + u.c_out_fF / u.c_in_fF), rel=1e-15)


@given(st.floats(0.001, 100))
def test_quantize_fin_is_nearest_fin_count(w):
    q = quantize_fin(w, G16)
    w0, p = G16.fin_w0_um, G16.fin_pitch_contrib_um
    # brute force over fin counts
    cands = [w0 + p * (n - 1) for n in range(1, 3000)]
    best = min(cands, key=lambda c: (abs(c - w), -c))
    assert q == pytest.approx(best, abs=1e-9)


def test_quantize_fin_tie_goes_up_and_planar_passthrough():
    w0, p = G16.fin_w0_um, G16.fin_pitch_contrib_um
    tie = w0 + 1.5 * p
    assert quantize_fin(tie, G16) == pytest.approx(w0 + 2 * p)
    assert quantize_fin(0.123, G65) == 0.123


@pytest.mark.parametrize("x,n", [(0.2, 2), (1.0, 2), (2.0, 2), (2.01, 4), (3.0, 4), (5.5, 6), (6.0, 6)])
def test_even_ceil(x, n):
    assert even_ceil(x) == n


@given(c_load=st.floats(1e-15, 2e-11))
def test_size_tx_chain_properties(c_load):
    try:
        d = size_tx_chain(c_load, G16)
    except SizingError:
        assert c_load / (fanout(G16) * G16.unit_inv.c_in_fF * 1e-15 / G16.w_min_um) > G16.w_max_um
        return
    assert d.n_stages % 2 == 0 and d.n_stages >= 2
    assert list(d.widths_um) == sorted(d.widths_um)
    assert d.widths_um[0] == pytest.approx(quantize_fin(G16.w_min_um, G16))
    assert all(w == quantize_fin(w, G16) for w in d.widths_um)


def test_tx_design_rejects_odd_chain():
    with pytest.raises(SizingError):
        TxDesign((1.0, 2.0, 4.0), 3.0)


def test_tx_chain_over_w_max():
    with pytest.raises(SizingError):
        tx_chain_from_final(G16.w_max_um * 2, 4, G16, fanout(G16))


def test_stage_count_grows_with_load():
    ns = [size_tx_chain(c, G16).n_stages for c in (1e-14, 1e-13, 1e-12, 1e-11)]
    assert ns == sorted(ns) and ns[0] < ns[-1]


def test_rx_from_buffer_ratio_and_cin():
    cfg = make_cfg()
    rx = rx_from_buffer(5.0, cfg)
    assert rx.preamp_um <= rx.buffer_um
    assert rx.preamp_um == pytest.approx(quantize_fin(rx.buffer_um / fanout(G16), G16))
    assert measure_cin(stage_for_width(G16, rx.preamp_um), cfg.vdd) == pytest.approx(rx.c_in_F, rel=2e-3)


def test_analytic_tx_load_is_channel_plus_min_rx():
    cfg = make_cfg()
    lad = build_ladder(cfg)
    assert analytic_tx_load(cfg, lad) == pytest.approx(lad.c_total + rx_from_buffer(G16.w_min_um, cfg).c_in_F)


def _ctx(cfg):
    lad = build_ladder(cfg)
    s = summarize(lad, cfg.vdd, cfg.user.data_rate_Gbps)
    term = select_termination(cfg, s)
    return lad, s, term, select_eq(cfg, s, lad)


def test_tx_sizing_search_hits_slew_target():
    cfg = make_cfg(reach_mm=8, data_rate_Gbps=16, sizing_mode="tx_sizing")
    lad, s, term, eq = _ctx(cfg)
    link = LinkSpec(lad, term, eq)
    warm = size_tx_chain(analytic_tx_load(cfg, lad), G16)
    rx = rx_from_buffer(2.0, cfg)
    res = tx_sizing_search(cfg, link, warm, rx.c_in_F)
    target = cfg.user.rise_fall_pct_ui * cfg.ui_s
    assert res.solves <= cfg.sim.tx_search_budget
    assert res.converged
    assert res.slew_s == pytest.approx(target, rel=0.05)


def test_rx_sizing_search_meets_delay_limit():
    cfg = make_cfg(data_rate_Gbps=16)
    res = rx_sizing_search(cfg, 0.2 * cfg.ui_s, cfg.vdd)
    assert res.feasible
    assert res.delay_s <= cfg.user.max_rx_delay_frac_ui * cfg.ui_s


def test_area_bump_grid_and_lane_modes():
    cfg = make_cfg(lane_count=16)
    lad, s, term, eq = _ctx(cfg)
    tx = size_tx_chain(analytic_tx_load(cfg, lad), G16)
    rx = rx_from_buffer(2.0, cfg)
    a = area(tx, rx, eq, term, lad.components["esd"].c_F, cfg, bump_grid=(16, 12))
    assert (a.macro_w_um, a.macro_h_um) == pytest.approx((12 * 112.64, 16 * 112.64))
    b = area(tx, rx, eq, term, lad.components["esd"].c_F, cfg)
    assert b.macro_w_um == pytest.approx(16 * 112.64)
    assert b.macro_w_um * b.macro_h_um >= 16 * b.per_lane_um2 * (1 - 1e-12)
    assert a.per_lane_um2 == pytest.approx(sum((a.active_um2, a.eq_passives_um2, a.term_um2, a.esd_um2, a.bump_ubm_um2)))
    assert a.active_um2 == pytest.approx((sum(tx.widths_um) + rx.preamp_um + rx.buffer_um) * G16.l_gate_um * 3)
