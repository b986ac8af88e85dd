"""Device scaling and the TX-side link network (EQ + ladder + termination + load)."""

from __future__ import annotations

from dataclasses import dataclass

from ..adaptation import EQ_NONE, EqPlan, TerminationPlan
from ..channel import PiLadder
from ..config import PdkDescriptor
from .network import Network
from .transient import Stage


def stage_for_width(pdk: PdkDescriptor, width_um: float) -> Stage:
    """r_on scales as 1/W and capacitances as W, relative to the unit inverter."""
    k = width_um / pdk.w_min_um
    u = pdk.unit_inv
    return Stage(gn=k / u.r_on_n_ohm, gp=k / u.r_on_p_ohm, c_in=k * u.c_in_fF * 1e-15,
                 c_out=k * u.c_out_fF * 1e-15, width_um=width_um)


@dataclass(frozen=True)
class LinkSpec:
    ladder: PiLadder
    term: TerminationPlan
    eq: EqPlan = EQ_NONE

    @property
    def far_node(self) -> str:
        return "rx_in" if self.term.c_ac_F else "rx_pad"

    @property
    def drv_node(self) -> str:
        return "tx_drv" if self.eq.enabled else "tx_pad"

    def r_series(self) -> float:
        return self.ladder.r_total + (self.eq.r_eq_ohm if self.eq.enabled else 0.0)


def link_network(link: LinkSpec, vdd: float, c_load_F: float, c_drv_out_F: float) -> Network:
    """Network seen by the final TX stage; ``c_load_F`` sits on the far-end node.

    Coupling to an adjacent lane is taken as odd-mode switching: each coupling
    capacitance appears as 2*Cc to ground.
    """
    net = Network()
    lad = link.ladder
    if link.eq.enabled:
        net.node("tx_drv")
        net.add_cap("tx_drv", "gnd", c_drv_out_F)
    for name, c in zip(lad.nodes, lad.node_c):
        net.node(name)
        net.add_cap(name, "gnd", c)
    if not link.eq.enabled:
        net.add_cap("tx_pad", "gnd", c_drv_out_F)
    else:
        net.add_res("tx_drv", "tx_pad", link.eq.r_eq_ohm)
        net.add_cap("tx_drv", "tx_pad", link.eq.c_eq_F)
    for e in lad.edges:
        net.add_res(e.a, e.b, e.r_ohm)
    for name, cc in lad.coupling:
        net.add_cap(name, "gnd", 2.0 * cc)
    term = link.term
    if term.terminated:
        net.add_res_to("rx_pad", term.r_term_ohm, term.v_term_V)
    if term.c_ac_F:
        net.node("rx_in")
        net.add_cap("rx_pad", "rx_in", term.c_ac_F)
        net.add_res_to("rx_in", term.r_bias_ohm, vdd)
        net.add_res("rx_in", "gnd", term.r_bias_ohm)
    net.add_cap(link.far_node, "gnd", c_load_F)
    return net


def far_amplitude(link: LinkSpec, vdd: float, r_drv_ohm: float = 0.0) -> float:
    """Half-swing at the RX input around vdd/2 once the edge has settled."""
    if not link.term.terminated:
        return vdd / 2
    r_t = link.term.r_term_ohm
    return (vdd / 2) * r_t / (r_t + link.r_series() + r_drv_ohm)
