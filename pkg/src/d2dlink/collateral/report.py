"""Datasheet text and the fixed-column metrics CSV."""

from __future__ import annotations

import csv
import io
import math
from typing import Any, Sequence

CSV_COLUMNS = (
    "pkg", "reach_mm", "pitch_um", "rate_Gbps", "lanes", "term_level", "eq_level", "alpha",
    "e_tx_fJ", "e_rx_fJ", "e_ch_fJ", "e_term_fJ", "e_total_pJ_per_bit", "tau_wc_ps", "feasible",
    "n_stages", "area_um2_per_lane", "macro_w_um", "macro_h_um", "selection",
)


def _cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.12g}"
    return str(v)


def csv_text(rows: Sequence[dict[str, Any]], header: bool = True) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow([_cell(row.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def metrics_row(*, cfg, term, eq, point, n_stages: int | None, area, selection: str) -> dict[str, Any]:
    u = cfg.user
    row: dict[str, Any] = dict(pkg=u.pkg_type, reach_mm=float(u.reach_mm), pitch_um=float(u.bump_pitch_um),
                               rate_Gbps=float(u.data_rate_Gbps), lanes=u.lane_count, term_level=term.level,
                               eq_level=eq.level, alpha=float(eq.alpha), selection=selection,
                               feasible=point is not None and point.feasible)
    if point is not None:
        row.update(e_tx_fJ=point.e_tx_J * 1e15, e_rx_fJ=point.e_rx_J * 1e15, e_ch_fJ=point.e_ch_J * 1e15,
                   e_term_fJ=point.e_term_J * 1e15, e_total_pJ_per_bit=point.e_total_J_per_bit * 1e12,
                   tau_wc_ps=point.tau_wc_s * 1e12, n_stages=n_stages)
    if area is not None:
        row.update(area_um2_per_lane=area.per_lane_um2, macro_w_um=area.macro_w_um, macro_h_um=area.macro_h_um)
    return row


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(f"{k}: {_fmt(x)}" for k, x in v.items()) + "}"
    return str(v)


def write_datasheet(*, cfg, summary, term, eq, point, tx, rx, area, selection: str, front_size: int,
                    n_characterizations: int, notes: Sequence[str] = (), status: str = "ok") -> str:
    u = cfg.user
    L: list[str] = [f"d2dlink datasheet  config {cfg.fingerprint}", f"status: {status}", ""]
    L.append("[configuration]")
    for name, val in u.model_dump(mode="json").items():
        L.append(f"  {name} = {_fmt(val)}  ({cfg.provenance.get(name, 'default')})")
    L.append(f"  pdk = {cfg.pdk.name}  ({cfg.provenance.get('pdk', 'default')})")
    L.append("")
    L.append("[hidden constants]")
    for sec, model in cfg.hidden.model_dump(mode="json").items():
        for name, val in model.items():
            key = f"{sec}.{name}"
            tag = "  [override]" if cfg.provenance.get(key) == "override" else ""
            L.append(f"  {key} = {_fmt(val)}{tag}")
    L.append("")
    L.append("[channel]")
    L += [f"  R_ch = {summary.r_ch_ohm:.6g} ohm",
          f"  C_ch = {summary.c_ch_F * 1e15:.6g} fF",
          f"  C_eff = {summary.c_eff_F * 1e15:.6g} fF",
          f"  tau_Elmore = {summary.tau_elmore_s * 1e12:.6g} ps",
          f"  f_3dB = {summary.f_3db_Hz / 1e9:.6g} GHz",
          f"  loss at Nyquist ({summary.f_ny_Hz / 1e9:.6g} GHz) = {summary.loss_nyquist_dB:.6g} dB",
          f"  E_ch = {summary.e_ch_J_per_bit * 1e15:.6g} fJ/bit", ""]
    L.append("[termination]")
    L.append(f"  level = {term.level}  rho = {term.rho:.6g}  L_unterm = {term.l_unterm_mm:.6g} mm")
    if term.terminated:
        L.append(f"  R_T = {term.r_term_ohm:.6g} ohm  V_term = {term.v_term_V:.6g} V  R_bias = {term.r_bias_ohm:.6g} ohm")
        if term.c_ac_F:
            L.append(f"  C_AC = {term.c_ac_F * 1e15:.6g} fF")
    L.append("")
    L.append("[equalization]")
    L.append(f"  level = {eq.level}  alpha = {eq.alpha:g}")
    if eq.enabled:
        L.append(f"  R_eq = {eq.r_eq_ohm:.6g} ohm  C_eq = {eq.c_eq_F * 1e15:.6g} fF  f_zero = {eq.f_zero_Hz / 1e9:.6g} GHz"
                 + ("  (latency cap)" if eq.capped else ""))
    L.append("")
    L.append(f"[design]  selection = {selection}, front size = {front_size}, characterizations = {n_characterizations}")
    if point is None:
        L.append("  no feasible design point")
    else:
        L.append(f"  TX widths (um) = {_fmt(list(tx.widths_um))}  stages = {tx.n_stages}  fanout = {tx.fanout:.4g}")
        L.append(f"  RX preamp = {rx.preamp_um:.6g} um  buffer = {rx.buffer_um:.6g} um  c_in = {rx.c_in_F * 1e15:.6g} fF")
        a = cfg.sim.activity_factor
        L += [f"  E_tx = {point.e_tx_J * 1e15:.6g} fJ/transition",
              f"  E_rx = {point.e_rx_J * 1e15:.6g} fJ/transition",
              f"  E_ch = {point.e_ch_J * 1e15:.6g} fJ/bit",
              f"  E_term = {point.e_term_J * 1e15:.6g} fJ/bit",
              f"  E_total = {point.e_total_J_per_bit * 1e15:.6g} fJ/bit per lane (activity {a:g}), "
              f"{point.e_total_J_per_bit * u.lane_count * 1e15:.6g} fJ/bit over {u.lane_count} lanes",
              f"  tau_rr = {point.tau_rr_s * 1e12:.6g} ps  tau_ff = {point.tau_ff_s * 1e12:.6g} ps  "
              f"tau_wc = {point.tau_wc_s * 1e12:.6g} ps (budget {cfg.latency_budget_s * 1e12:.6g} ps)",
              f"  pad slew = {point.pad_slew_s * 1e12:.6g} ps  far-end slew = {point.far_slew_s * 1e12:.6g} ps",
              f"  refined = {str(point.refined).lower()}"
              + (f"  (LUT estimate shift {point.energy_shift * 100:+.3g} %)" if point.energy_shift is not None else "")]
    L.append("")
    if area is not None:
        L.append("[area]")
        L += [f"  active = {area.active_um2:.6g} um2", f"  EQ passives = {area.eq_passives_um2:.6g} um2",
              f"  termination = {area.term_um2:.6g} um2", f"  ESD = {area.esd_um2:.6g} um2",
              f"  bump UBM = {area.bump_ubm_um2:.6g} um2", f"  per lane = {area.per_lane_um2:.6g} um2",
              f"  macro = {area.macro_w_um:.6g} x {area.macro_h_um:.6g} um", ""]
    if notes:
        L.append("[notes]")
        L += [f"  {n}" for n in notes]
        L.append("")
    return "\n".join(L)
