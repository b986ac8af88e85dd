"""Channel parasitics and the distributed pi-ladder network.

All values are SI (ohm, farad, metre, hertz) except where a suffix says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .config import ChannelHidden, LinkConfig

EPS0 = 8.8541878128e-12
MU0 = 4e-7 * math.pi
PAD_WIDTH_FRAC = 0.8

UCIE_PAD_CAP = ((8.0, 300e-15), (16.0, 200e-15), (32.0, 125e-15))

Label = Literal["chip_pad", "bump", "int_pad", "trace_seg", "esd"]


@dataclass(frozen=True)
class ComponentRC:
    r_ohm: float
    c_F: float
    label: Label

    def __post_init__(self):
        if self.r_ohm < 0 or self.c_F < 0:
            raise ValueError(f"{self.label}: negative R or C")
        if self.label == "esd" and self.r_ohm != 0:
            raise ValueError("esd is a pure shunt")


def _require_positive(**kw: float) -> None:
    for k, v in kw.items():
        if not (v > 0 and math.isfinite(v)):
            raise ValueError(f"{k} must be positive and finite, got {v!r}")


def pad_cap(pitch_um: float, eps_r: float, t_ox_um: float) -> float:
    _require_positive(pitch_um=pitch_um, eps_r=eps_r, t_ox_um=t_ox_um)
    w_p = PAD_WIDTH_FRAC * pitch_um * 1e-6
    return EPS0 * eps_r * w_p**2 / (t_ox_um * 1e-6)


def pad_res(pitch_um: float, r_ref_ohm: float = 0.5, w_ref_um: float = 50.0) -> float:
    _require_positive(pitch_um=pitch_um)
    return r_ref_ohm * w_ref_um / (PAD_WIDTH_FRAC * pitch_um)


def ucie_pad_cap(data_rate_Gbps: float) -> tuple[float, bool]:
    """UCIe Standard Package pad budget; returns (c_F, clamped).  Above 32 GT/s the last entry applies."""
    _require_positive(data_rate_Gbps=data_rate_Gbps)
    for rate, c in UCIE_PAD_CAP:
        if data_rate_Gbps <= rate:
            return c, False
    return UCIE_PAD_CAP[-1][1], True


def skin_depth(resistivity: float, f_Hz: float) -> float:
    return math.sqrt(resistivity / (math.pi * f_Hz * MU0)) if f_Hz > 0 else math.inf


def bump_rc(
    pitch_um: float,
    diameter_um: float,
    height_um: float,
    eps_r_underfill: float,
    resistivity: float,
    f_ny_Hz: float,
) -> ComponentRC:
    _require_positive(pitch_um=pitch_um, diameter_um=diameter_um, height_um=height_um,
                      eps_r_underfill=eps_r_underfill, resistivity=resistivity)
    if diameter_um >= pitch_um:
        raise ValueError(f"bump diameter {diameter_um} um must be below pitch {pitch_um} um")
    p, d, h = pitch_um * 1e-6, diameter_um * 1e-6, height_um * 1e-6
    c = math.pi * EPS0 * eps_r_underfill * h / math.acosh(p / d)
    a = d / 2
    r_dc = resistivity * h / (math.pi * a**2)
    delta = skin_depth(resistivity, f_ny_Hz)
    r_ac = resistivity * h / (math.pi * a**2 - math.pi * (a - delta) ** 2) if delta < a else 0.0
    return ComponentRC(math.hypot(r_dc, r_ac), c, "bump")


def trace_rc(pkg_type: str, reach_mm: float, width_um: float, eps_ratio: float = 1.0,
             hidden: ChannelHidden | None = None) -> ComponentRC:
    _require_positive(reach_mm=reach_mm, width_um=width_um, eps_ratio=eps_ratio)
    hidden = hidden or ChannelHidden()
    base = hidden.trace_base[pkg_type]
    c = base.c_fF_per_mm * 1e-15 * reach_mm * (width_um / base.ref_width_um) * eps_ratio
    r = base.r_ohm_per_mm * reach_mm * (base.ref_width_um / width_um)
    return ComponentRC(r, c, "trace_seg")


def esd_cap(pitch_um: float, pkg_type: str, hidden: ChannelHidden | None = None) -> float:
    rows = (hidden or ChannelHidden()).esd_table
    for row in rows:
        if row.max_pitch_um >= pitch_um and row.pkg_type in (pkg_type, "any"):
            return row.c_esd_fF * 1e-15
    return rows[-1].c_esd_fF * 1e-15


# ---------------------------------------------------------------------- ladder

NODE_ORDER = ("tx_pad", "tx_bump", "tx_ipad", "tr0", "tr1", "tr2", "tr3", "tr4", "rx_ipad", "rx_bump", "rx_pad")
TRACE_NODES = ("tr0", "tr1", "tr2", "tr3", "tr4")
TRACE_C_SPLIT = (0.125, 0.25, 0.25, 0.25, 0.125)
N_TRACE_SEGMENTS = 4


@dataclass(frozen=True)
class Edge:
    a: str
    b: str
    r_ohm: float
    label: Label


@dataclass(frozen=True)
class PiLadder:
    """Eleven-node RC ladder from the TX chip pad to the RX chip pad."""

    nodes: tuple[str, ...]
    node_c: tuple[float, ...]
    edges: tuple[Edge, ...]
    coupling: tuple[tuple[str, float], ...]
    components: dict[str, ComponentRC] = field(compare=False)
    warnings: tuple[str, ...] = ()

    @property
    def r_total(self) -> float:
        return math.fsum(e.r_ohm for e in self.edges)

    @property
    def c_total(self) -> float:
        return math.fsum(self.node_c)

    def c_of(self, node: str) -> float:
        return self.node_c[self.nodes.index(node)]

    def c_downstream(self, node: str) -> float:
        """Shunt C strictly past ``node``."""
        return math.fsum(self.node_c[self.nodes.index(node) + 1:])

    def elmore_distributed(self) -> float:
        """sum_i R_i * (C beyond R_i), driven at tx_pad, open at rx_pad."""
        c = np.asarray(self.node_c)
        tail = np.cumsum(c[::-1])[::-1]
        return math.fsum(e.r_ohm * tail[self.nodes.index(e.b)] for e in self.edges)


def channel_components(cfg: LinkConfig) -> tuple[dict[str, ComponentRC], tuple[str, ...]]:
    u, ch = cfg.user, cfg.channel
    warnings = []
    if u.pad_cap_mode == "ucie":
        c_pad, clamped = ucie_pad_cap(u.data_rate_Gbps)
        if clamped:
            warnings.append(f"ucie pad-cap table ends at 32 GT/s; {u.data_rate_Gbps:g} Gb/s uses 125 fF")
        c_ipad = 0.0
        c_esd = 0.0
    else:
        c_pad = pad_cap(u.bump_pitch_um, ch.eps_r_ild, ch.t_ox_um)
        c_ipad = pad_cap(u.bump_pitch_um, ch.eps_r_ild, ch.t_int_um)
        c_esd = esd_cap(u.bump_pitch_um, u.pkg_type, ch)
    r_pad = pad_res(u.bump_pitch_um, ch.pad_r_ref_ohm, ch.pad_w_ref_um)
    bump = bump_rc(u.bump_pitch_um, ch.bump_diameter_um, ch.bump_height_um, ch.eps_r_underfill,
                   ch.bump_resistivity_ohm_m, cfg.f_ny_hz)
    trace = trace_rc(u.pkg_type, u.reach_mm, ch.trace_width_um, ch.trace_eps_ratio, ch)
    comps = {
        "chip_pad": ComponentRC(r_pad, c_pad, "chip_pad"),
        "int_pad": ComponentRC(r_pad, c_ipad, "int_pad"),
        "bump": bump,
        "trace": trace,
        "esd": ComponentRC(0.0, c_esd, "esd"),
    }
    return comps, tuple(warnings)


def build_ladder(cfg: LinkConfig) -> PiLadder:
    comps, warnings = channel_components(cfg)
    cp, ip, b, t, esd = (comps[k] for k in ("chip_pad", "int_pad", "bump", "trace", "esd"))
    node_c = [cp.c_F + esd.c_F, b.c_F, ip.c_F]
    node_c += [t.c_F * s for s in TRACE_C_SPLIT]
    node_c += [ip.c_F, b.c_F, cp.c_F + esd.c_F]
    n = NODE_ORDER
    r_seg = t.r_ohm / N_TRACE_SEGMENTS
    edges = [Edge(n[0], n[1], cp.r_ohm, "chip_pad"), Edge(n[1], n[2], b.r_ohm, "bump"), Edge(n[2], n[3], ip.r_ohm, "int_pad")]
    edges += [Edge(n[3 + i], n[4 + i], r_seg, "trace_seg") for i in range(N_TRACE_SEGMENTS)]
    edges += [Edge(n[7], n[8], ip.r_ohm, "int_pad"), Edge(n[8], n[9], b.r_ohm, "bump"), Edge(n[9], n[10], cp.r_ohm, "chip_pad")]
    coupling: list[tuple[str, float]] = []
    u = cfg.user
    if u.coupling_enabled:
        for name, c in zip(n, node_c):
            if name in TRACE_NODES:
                ratio = u.cc_ratio_trace
            elif name in ("tx_ipad", "rx_ipad"):
                ratio = u.cc_ratio_pad
            else:
                continue
            if ratio * c > 0:
                coupling.append((name, ratio * c))
        if u.cc_rx_pad_fF > 0:
            coupling.append(("rx_pad", u.cc_rx_pad_fF * 1e-15))
    return PiLadder(tuple(n), tuple(node_c), tuple(edges), tuple(coupling), comps, warnings)


@dataclass(frozen=True)
class ChannelSummary:
    r_ch_ohm: float
    c_ch_F: float
    c_eff_F: float
    tau_elmore_s: float
    e_ch_J_per_bit: float
    f_3db_Hz: float
    loss_nyquist_dB: float
    f_ny_Hz: float


def nyquist_loss_dB(f_ny_Hz: float, f_3db_Hz: float) -> float:
    return 10.0 * math.log10(1.0 + (f_ny_Hz / f_3db_Hz) ** 2)


def summarize(ladder: PiLadder, vdd_V: float, data_rate_Gbps: float) -> ChannelSummary:
    r_ch, c_ch = ladder.r_total, ladder.c_total
    comps = ladder.components
    c_eff = 2 * (comps["chip_pad"].c_F + comps["bump"].c_F + comps["int_pad"].c_F) + comps["trace"].c_F + comps["esd"].c_F
    f_ny = data_rate_Gbps * 1e9 / 2
    rc = r_ch * c_ch
    f_3db = 1.0 / (2 * math.pi * rc) if rc > 0 else math.inf
    return ChannelSummary(
        r_ch_ohm=r_ch,
        c_ch_F=c_ch,
        c_eff_F=c_eff,
        tau_elmore_s=rc,
        e_ch_J_per_bit=0.5 * c_eff * vdd_V**2,
        f_3db_Hz=f_3db,
        loss_nyquist_dB=nyquist_loss_dB(f_ny, f_3db),
        f_ny_Hz=f_ny,
    )


def _g(x: float) -> str:
    return f"{x:.6g}"


def emit_netlist(ladder: PiLadder, name: str = "d2d_channel", extra: list[str] | None = None) -> str:
    """SPICE subcircuit text; one element per series R, shunt C and coupling C."""
    lines = [f"* {name}: {len(ladder.nodes)}-node pi-ladder, tx_pad -> rx_pad",
             f".subckt {name} tx_pad rx_pad gnd"]
    for i, e in enumerate(ladder.edges):
        lines.append(f"R{i}_{e.label} {e.a} {e.b} {_g(e.r_ohm)}")
    for node, c in zip(ladder.nodes, ladder.node_c):
        lines.append(f"C_{node} {node} gnd {_g(c)}")
    for node, c in ladder.coupling:
        lines.append(f"CC_{node} {node} {node}_adj {_g(c)}")
    lines.extend(extra or [])
    lines.append(f".ends {name}")
    return "\n".join(lines) + "\n"
