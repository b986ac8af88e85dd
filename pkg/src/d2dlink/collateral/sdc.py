"""SDC interface constraints for the txip -> rxip lane paths."""

from __future__ import annotations


def write_sdc(*, lanes: int, ui_s: float, budget_ui: float, pad_c_F: float, far_slew_s: float,
              fingerprint: str) -> str:
    max_delay_ns = budget_ui * ui_s * 1e9
    lines = [f"# d2dlink interface constraints, config {fingerprint}",
             f"# latency budget {budget_ui:g} UI at UI = {ui_s * 1e12:.4f} ps", ""]
    lines += [f"set_max_delay {max_delay_ns:.4f} -from [get_pins {{txip/din[{i}]}}] -to [get_pins {{rxip/dout[{i}]}}]"
              for i in range(lanes)]
    lines.append("")
    lines += [f"set_load {pad_c_F * 1e12:.6f} [get_pins {{txip/pad[{i}]}}]" for i in range(lanes)]
    lines.append("")
    lines += [f"set_input_transition {far_slew_s * 1e9:.6f} [get_pins {{rxip/pad[{i}]}}]" for i in range(lanes)]
    return "\n".join(lines) + "\n"
