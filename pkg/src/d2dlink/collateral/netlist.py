"""Link-level SPICE deck: the channel subcircuit plus the selected EQ and termination values."""

from __future__ import annotations

from ..adaptation import EqPlan, TerminationPlan
from ..channel import PiLadder, emit_netlist


def _g(x: float) -> str:
    return f"{x:.6g}"


def link_netlist(ladder: PiLadder, term: TerminationPlan, eq: EqPlan, vdd: float, fingerprint: str) -> str:
    lines = [f"* d2dlink link netlist, config {fingerprint}", ""]
    body = emit_netlist(ladder)
    rx_out = "rx_in" if term.c_ac_F else "rx_pad"
    top = [f"* termination {term.level}, EQ {eq.level} (alpha {eq.alpha:g})",
           f".subckt d2d_link tx_drv {rx_out} gnd"]
    if eq.enabled:
        top += [f"R_eq tx_drv tx_pad {_g(eq.r_eq_ohm)}", f"C_eq tx_drv tx_pad {_g(eq.c_eq_F)}"]
    else:
        top.append("V_short tx_drv tx_pad 0")
    top.append("X_ch tx_pad rx_pad gnd d2d_channel")
    if term.terminated:
        top.append(f"V_term vterm gnd {_g(term.v_term_V)}")
        if term.c_ac_F:
            top += [f"C_ac rx_pad rx_in {_g(term.c_ac_F)}",
                    f"R_term rx_pad vterm {_g(term.r_term_ohm)}",
                    f"R_bias_hi rx_in vdd_rx {_g(term.r_bias_ohm)}",
                    f"R_bias_lo rx_in gnd {_g(term.r_bias_ohm)}",
                    f"V_rx vdd_rx gnd {_g(vdd)}"]
        else:
            top.append(f"R_term rx_pad vterm {_g(term.r_term_ohm)}")
    top.append(".ends d2d_link")
    return "\n".join(lines) + body + "\n" + "\n".join(top) + "\n"
