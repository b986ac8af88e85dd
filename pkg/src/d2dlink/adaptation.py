"""Termination and passive-EQ selection from channel metrics."""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .channel import ChannelSummary, PiLadder
from .config import LinkConfig

TERM_LEVELS = ("none", "light", "standard", "strong")
TERM_RHO_EDGES = (1.0, 1.25, 1.5)
TERM_R_MULT = {"light": 2.0, "standard": 1.0, "strong": 0.5}
TERM_C_MULT = {"light": 0.5, "standard": 1.0, "strong": 2.0}

EQ_LEVELS = ("none", "l1", "l2", "l3", "aggressive")
EQ_ALPHA = {"none": 0.0, "l1": 0.05, "l2": 0.10, "l3": 0.15, "aggressive": 0.20}

TermLevel = Literal["none", "light", "standard", "strong"]
EqLevel = Literal["none", "l1", "l2", "l3", "aggressive"]


@dataclass(frozen=True)
class TerminationPlan:
    level: TermLevel
    r_term_ohm: float | None
    c_ac_F: float | None
    v_term_V: float
    r_bias_ohm: float
    e_term_J_per_bit: float
    rho: float
    l_unterm_mm: float
    t_tr_s: float = 0.0

    @property
    def terminated(self) -> bool:
        return self.r_term_ohm is not None

    def with_transition(self, t_tr_s: float, vdd_V: float, data_rate_Gbps: float, activity: float) -> "TerminationPlan":
        """Re-evaluate the energy once the pad transition time is known."""
        e = termination_energy(self.r_term_ohm, self.r_bias_ohm, vdd_V, data_rate_Gbps, activity, t_tr_s)
        return TerminationPlan(self.level, self.r_term_ohm, self.c_ac_F, self.v_term_V, self.r_bias_ohm, e,
                               self.rho, self.l_unterm_mm, t_tr_s)


@dataclass(frozen=True)
class EqPlan:
    level: EqLevel
    alpha: float
    c_eq_F: float
    r_eq_ohm: float
    capped: bool

    @property
    def enabled(self) -> bool:
        return self.alpha > 0

    @property
    def f_zero_Hz(self) -> float:
        return 1.0 / (2 * math.pi * self.r_eq_ohm * self.c_eq_F) if self.enabled else math.inf


EQ_NONE = EqPlan("none", 0.0, 0.0, 0.0, False)


def unterm_reach_mm(cfg: LinkConfig) -> float:
    pts = cfg.adaptation.unterm_boundary
    rates = [p.data_rate_Gbps for p in pts]
    reach = [p.l_unterm_mm for p in pts]
    return float(np.interp(cfg.user.data_rate_Gbps, rates, reach))


def termination_level(rho: float) -> TermLevel:
    # bisect_left keeps ties on the lower level ("<=" edges)
    return TERM_LEVELS[bisect.bisect_left(TERM_RHO_EDGES, rho)]


def termination_energy(r_term: float | None, r_bias: float, vdd: float, rate_Gbps: float,
                       activity: float, t_tr_s: float) -> float:
    if r_term is None:
        return 0.0
    e_static = vdd**2 / (2 * r_bias) / (rate_Gbps * 1e9)
    e_dyn = activity * (vdd / 2) ** 2 / r_term * t_tr_s
    return e_static + e_dyn


def estimate_transition_s(cfg: LinkConfig) -> float:
    """Pad 20-80% time before any characterization: the configured rise/fall target."""
    return cfg.user.rise_fall_pct_ui * cfg.ui_s


def select_termination(cfg: LinkConfig, summary: ChannelSummary | None = None,
                       t_tr_s: float | None = None) -> TerminationPlan:
    ad = cfg.adaptation
    l_unterm = unterm_reach_mm(cfg)
    rho = cfg.user.reach_mm / l_unterm
    level = termination_level(rho)
    t_tr = estimate_transition_s(cfg) if t_tr_s is None else t_tr_s
    if level == "none":
        return TerminationPlan(level, None, None, cfg.vdd / 2, ad.r_bias_ohm, 0.0, rho, l_unterm, t_tr)
    r_term = TERM_R_MULT[level] * ad.r_rx_ohm
    c_ac = TERM_C_MULT[level] * ad.c_base_ac_F if cfg.user.ac_coupled else None
    e = termination_energy(r_term, ad.r_bias_ohm, cfg.vdd, cfg.user.data_rate_Gbps, cfg.sim.activity_factor, t_tr)
    return TerminationPlan(level, r_term, c_ac, cfg.vdd / 2, ad.r_bias_ohm, e, rho, l_unterm, t_tr)


def eq_level(loss_dB: float, thresholds: tuple[float, ...]) -> EqLevel:
    return EQ_LEVELS[bisect.bisect_left(list(thresholds), loss_dB)]


def select_eq(cfg: LinkConfig, summary: ChannelSummary, ladder: PiLadder) -> EqPlan:
    if not cfg.user.passive_eq_en:
        return EQ_NONE
    level = eq_level(summary.loss_nyquist_dB, cfg.adaptation.eq_loss_thresholds_dB)
    alpha = EQ_ALPHA[level]
    if alpha == 0:
        return EQ_NONE
    c_eq = alpha * summary.c_ch_F
    r_eq = summary.r_ch_ohm / alpha
    r_cap = cfg.adaptation.eq_latency_cap_ui * cfg.ui_s / ladder.c_downstream("tx_pad")
    if r_eq > r_cap:
        return EqPlan(level, alpha, c_eq, r_cap, True)
    return EqPlan(level, alpha, c_eq, r_eq, False)
