"""TX inverter-chain and two-stage RX sizing, single-sided sizing searches, and macro area."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .adaptation import EQ_NONE, EqPlan, TerminationPlan
from .config import LinkConfig, PdkDescriptor
from .simcore.link import LinkSpec, far_amplitude, stage_for_width
from .simcore.tables import SimSettings, rx_edge, tx_edge
from .simcore.transient import STIM, Stage

E = math.e


class SizingError(ValueError):
    pass


def fanout(pdk: PdkDescriptor) -> float:
    u = pdk.unit_inv
    return E * math.sqrt(1.0 + u.c_out_fF / u.c_in_fF)


def quantize_fin(width_um: float, pdk: PdkDescriptor) -> float:
    """Snap to w0 + pitch*(n_fin - 1) with the nearest n_fin >= 1; ties go to more fins."""
    if pdk.device_type != "finfet":
        return width_um
    w0, p = pdk.fin_w0_um, pdk.fin_pitch_contrib_um
    x = (width_um - w0) / p + 1.0
    n_fin = max(1, math.floor(x + 0.5 + 1e-9))
    return round(w0 + p * (n_fin - 1), 12)


def even_ceil(x: float) -> int:
    n = math.ceil(x - 1e-9)
    return n + (n % 2)


def _unit_cin(pdk: PdkDescriptor) -> float:
    return pdk.unit_inv.c_in_fF * 1e-15


def _quantize_all(widths, pdk: PdkDescriptor) -> tuple[float, ...]:
    return tuple(quantize_fin(w, pdk) for w in widths)


@dataclass(frozen=True)
class TxDesign:
    widths_um: tuple[float, ...]
    fanout: float
    multiplier: float = 1.0
    eq: EqPlan = EQ_NONE

    def __post_init__(self):
        if len(self.widths_um) < 2 or len(self.widths_um) % 2:
            raise SizingError("TX chain needs an even number of stages (>= 2)")

    @property
    def n_stages(self) -> int:
        return len(self.widths_um)

    def stages(self, pdk: PdkDescriptor) -> list[Stage]:
        return [stage_for_width(pdk, w) for w in self.widths_um]

    def r_drive(self, pdk: PdkDescriptor) -> float:
        u = pdk.unit_inv
        return max(u.r_on_n_ohm, u.r_on_p_ohm) * pdk.w_min_um / self.widths_um[-1]


def geometric_widths(w_first: float, w_final: float, n: int) -> list[float]:
    if n == 1:
        return [w_final]
    return [w_first * (w_final / w_first) ** (k / (n - 1)) for k in range(n)]


def tx_chain_from_final(w_final: float, n: int, pdk: PdkDescriptor, f: float, multiplier: float = 1.0,
                        eq: EqPlan = EQ_NONE) -> TxDesign:
    if w_final > pdk.w_max_um * (1 + 1e-12):
        raise SizingError(f"final TX width {w_final:.4g} um exceeds w_max {pdk.w_max_um:g} um; "
                          "split the lane or relax the drive target")
    w_final = max(w_final, pdk.w_min_um)
    widths = _quantize_all(geometric_widths(pdk.w_min_um, w_final, n), pdk)
    widths = tuple(np.maximum.accumulate(widths))
    return TxDesign(widths, f, multiplier, eq)


def size_tx_chain(c_load_F: float, pdk: PdkDescriptor, f: float | None = None, eq: EqPlan = EQ_NONE) -> TxDesign:
    """Analytic tapered chain: even stage count, geometric widths from the minimum device."""
    f = fanout(pdk) if f is None else f
    c_unit = _unit_cin(pdk)
    if c_load_F < c_unit * (1 - 1e-12):
        raise SizingError("load is below one unit-inverter input capacitance")
    n_raw = math.log(c_load_F / c_unit) / math.log(f)
    n = max(2, even_ceil(n_raw))
    w_final = c_load_F / (f * c_unit / pdk.w_min_um)
    return tx_chain_from_final(w_final, n, pdk, f, 1.0, eq)


@dataclass(frozen=True)
class RxDesign:
    preamp_um: float
    buffer_um: float
    c_ext_F: float
    c_in_F: float = 0.0
    feasible: bool = True

    def stages(self, pdk: PdkDescriptor) -> tuple[Stage, Stage]:
        return stage_for_width(pdk, self.preamp_um), stage_for_width(pdk, self.buffer_um)


def rx_load(cfg: LinkConfig) -> float:
    return cfg.sim.rx_load_fanout * _unit_cin(cfg.pdk)


def rx_from_buffer(buffer_um: float, cfg: LinkConfig) -> RxDesign:
    pdk = cfg.pdk
    buf = quantize_fin(max(buffer_um, pdk.w_min_um), pdk)
    pre = quantize_fin(max(pdk.w_min_um, buf / fanout(pdk)), pdk)
    pre = min(pre, buf)
    return RxDesign(pre, buf, rx_load(cfg), stage_for_width(pdk, pre).c_in)


def analytic_tx_load(cfg: LinkConfig, ladder) -> float:
    """Warm-start load for the TX chain: every shunt C of the channel plus a minimum RX."""
    return ladder.c_total + rx_from_buffer(cfg.pdk.w_min_um, cfg).c_in_F


def sim_settings(cfg: LinkConfig, workers: int = 1) -> SimSettings:
    s = cfg.sim
    return SimSettings(vdd=cfg.vdd, ui_s=cfg.ui_s, overdrive_frac=s.overdrive_frac,
                       short_circuit_frac=s.short_circuit_frac, steps_per_ui=s.steps_per_ui,
                       steps_per_tau=s.steps_per_tau, settle_tol_frac=s.settle_tol_frac, max_parallel=workers)


# ------------------------------------------------------------------ searches


@dataclass
class SearchResult:
    design: TxDesign
    slew_s: float
    objective_s: float
    solves: int
    converged: bool
    history: list[tuple[float, float]] = field(default_factory=list)


def tx_sizing_search(cfg: LinkConfig, link: LinkSpec, warm: TxDesign, c_rx_F: float,
                     budget: int | None = None, sim: SimSettings | None = None) -> SearchResult:
    """Golden-section search on log(final-width multiplier) to hit the far-end slew target."""
    s = cfg.sim
    budget = s.tx_search_budget if budget is None else budget
    sim = sim or sim_settings(cfg)
    target = cfg.user.rise_fall_pct_ui * cfg.ui_s
    slew_in = s.tx_input_slew_ui * cfg.ui_s
    pdk = cfg.pdk
    n = warm.n_stages
    w0 = warm.widths_um[-1]
    history: list[tuple[float, float]] = []
    cache: dict[float, tuple[float, float, TxDesign]] = {}

    def evaluate(m: float):
        if m in cache:
            return cache[m]
        if len(history) >= budget:
            return None
        d = tx_chain_from_final(min(w0 * m, pdk.w_max_um), n, pdk, warm.fanout, m, warm.eq)
        res = tx_edge(d.stages(pdk), link, sim, slew_in, c_rx_F, True)
        sl = res.slew(link.far_node)
        obj = abs(sl - target) if not math.isnan(sl) else math.inf
        history.append((m, sl))
        cache[m] = (obj, sl, d)
        return cache[m]

    warm_eval = evaluate(1.0)
    best = warm_eval
    converged = False
    if best[0] <= s.tx_search_tol * target:
        converged = True
    else:
        lo, hi = math.log(s.tx_search_lo), math.log(s.tx_search_hi)
        g = (math.sqrt(5) - 1) / 2
        x1, x2 = hi - g * (hi - lo), lo + g * (hi - lo)
        f1, f2 = evaluate(math.exp(x1)), evaluate(math.exp(x2))
        while f1 is not None and f2 is not None:
            for fx in (f1, f2):
                if fx[0] < best[0]:
                    best = fx
            if math.exp(hi - lo) - 1 < s.tx_search_tol:
                converged = True
                break
            if f1[0] <= f2[0]:
                hi, x2, f2 = x2, x1, f1
                x1 = hi - g * (hi - lo)
                f1 = evaluate(math.exp(x1))
            else:
                lo, x1, f1 = x1, x2, f2
                x2 = lo + g * (hi - lo)
                f2 = evaluate(math.exp(x2))
        for fx in (f1, f2):
            if fx is not None and fx[0] < best[0]:
                best = fx
    if not converged:
        warnings.warn(f"tx_sizing_search stopped after {len(history)} solves without converging", stacklevel=2)
    return SearchResult(best[2], best[1], best[0], len(history), converged, history)


@dataclass
class RxSearchResult:
    design: RxDesign
    delay_s: float
    feasible: bool
    solves: int


def rx_delay(design: RxDesign, cfg: LinkConfig, slew_s: float, amplitude: float, sim: SimSettings) -> float:
    pre, buf = design.stages(cfg.pdk)
    worst = 0.0
    for rising in (True, False):
        res = rx_edge(pre, buf, design.c_ext_F, sim, slew_s, amplitude, rising)
        d = res.delay(STIM, "b1")
        worst = max(worst, d if not math.isnan(d) else math.inf)
    return worst


def rx_sizing_search(cfg: LinkConfig, tx_slew_s: float, amplitude: float, sim: SimSettings | None = None) -> RxSearchResult:
    """Double the buffer until the RX delay fits the UI fraction, then bisect back down."""
    sim = sim or sim_settings(cfg)
    pdk = cfg.pdk
    limit = cfg.user.max_rx_delay_frac_ui * cfg.ui_s
    solves = 0
    w = pdk.w_min_um
    prev_fail = None
    while True:
        d = rx_from_buffer(w, cfg)
        delay = rx_delay(d, cfg, tx_slew_s, amplitude, sim)
        solves += 2
        if delay <= limit:
            break
        prev_fail = w
        if w >= pdk.w_max_um:
            return RxSearchResult(replace(d, feasible=False), delay, False, solves)
        w = min(2 * w, pdk.w_max_um)
    best, best_delay = d, delay
    if prev_fail is not None:
        lo, hi = prev_fail, w
        for _ in range(cfg.sim.rx_search_refine_iters):
            mid = math.sqrt(lo * hi)
            dm = rx_from_buffer(mid, cfg)
            if dm.buffer_um in (best.buffer_um,):
                break
            dl = rx_delay(dm, cfg, tx_slew_s, amplitude, sim)
            solves += 2
            if dl <= limit:
                hi, best, best_delay = mid, dm, dl
            else:
                lo = mid
    return RxSearchResult(best, best_delay, True, solves)


# ---------------------------------------------------------------------- area


@dataclass(frozen=True)
class AreaReport:
    active_um2: float
    eq_passives_um2: float
    term_um2: float
    esd_um2: float
    bump_ubm_um2: float
    macro_w_um: float | None = None
    macro_h_um: float | None = None

    @property
    def per_lane_um2(self) -> float:
        return math.fsum((self.active_um2, self.eq_passives_um2, self.term_um2, self.esd_um2, self.bump_ubm_um2))


def resistor_area(r_ohm: float, sheet: float, strip_um: float) -> float:
    return (r_ohm / sheet) * strip_um**2


def area(tx: TxDesign, rx: RxDesign, eq: EqPlan, term: TerminationPlan, c_esd_F: float,
         cfg: LinkConfig, bump_grid: tuple[int, int] | None = None) -> AreaReport:
    a, pdk, ch = cfg.area, cfg.pdk, cfg.channel
    w_total = sum(tx.widths_um) + rx.preamp_um + rx.buffer_um
    active = w_total * pdk.l_gate_um * a.layout_margin
    eq_area = 0.0
    if eq.enabled:
        eq_area = resistor_area(eq.r_eq_ohm, a.poly_r_sheet_ohm_sq, a.poly_strip_width_um)
        eq_area += eq.c_eq_F * 1e15 / a.mim_density_fF_per_um2
    term_area = 0.0
    if term.terminated:
        term_area = resistor_area(term.r_term_ohm + 2 * term.r_bias_ohm, a.poly_r_sheet_ohm_sq, a.poly_strip_width_um)
        if term.c_ac_F:
            term_area += term.c_ac_F * 1e15 / a.mim_density_fF_per_um2
    esd = 2 * c_esd_F * 1e15 / a.esd_diode_density_fF_per_um2
    p = cfg.user.bump_pitch_um
    d = ch.bump_diameter_um
    ubm_d = d + a.ubm_overhang_um if p >= a.hybrid_bond_max_pitch_um else d
    bumps = 2 * math.pi * (ubm_d / 2) ** 2
    if bump_grid is not None:
        rows, cols = bump_grid
        w, h = cols * p, rows * p
    else:
        w = cfg.user.lane_count * p
        per_lane = math.fsum((active, eq_area, term_area, esd, bumps))
        h = max(2 * p, per_lane * cfg.user.lane_count / w)
    return AreaReport(active, eq_area, term_area, esd, bumps, w, h)
