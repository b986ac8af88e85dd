"""Behavioral Verilog-2001 models for txip and rxip."""

from __future__ import annotations

PS = 1e-12


def _ps(t_s: float) -> int:
    return max(0, int(round(t_s / PS)))


def _module(name: str, din: str, dout: str, lanes: int, rise_s: float, fall_s: float) -> list[str]:
    msb = lanes - 1
    r, f = _ps(rise_s), _ps(fall_s)
    out = [f"module {name} ({din}, {dout});",
           f"  input  [{msb}:0] {din};",
           f"  output [{msb}:0] {dout};",
           "`ifndef SYNTHESIS",
           f"  // inertial per-lane delays: rise {r} ps, fall {f} ps"]
    out += [f"  assign #({r}, {f}) {dout}[{i}] = {din}[{i}];" for i in range(lanes)]
    out += ["`else", f"  assign {dout} = {din};", "`endif", "endmodule"]
    return out


def write_verilog(*, lanes: int, tx_delays_s: tuple[float, float], rx_delays_s: tuple[float, float],
                  fingerprint: str) -> str:
    if lanes < 1:
        raise ValueError("lane_count must be at least 1")
    lines = [f"// d2dlink behavioral link model, config {fingerprint}",
             "`timescale 1ps/1ps",
             ""]
    lines += _module("txip", "din", "pad", lanes, *tx_delays_s)
    lines.append("")
    lines += _module("rxip", "pad", "dout", lanes, *rx_delays_s)
    return "\n".join(lines) + "\n"
