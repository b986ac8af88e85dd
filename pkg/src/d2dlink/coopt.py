"""Joint TX/RX sizing: N_TX + N_RX characterizations, LUT matching, Pareto front, selection, refinement."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from .adaptation import EqPlan, TerminationPlan
from .channel import ChannelSummary, PiLadder
from .config import LinkConfig
from .simcore.link import LinkSpec, far_amplitude
from .simcore.tables import CharTable, SimSettings, characterize_rx, characterize_tx, interpolate, measure_cin, tx_edge, tx_internal_energy, rx_internal_energy
from .simcore.transient import STIM, SolverError
from .xcvr import (AreaReport, RxDesign, TxDesign, analytic_tx_load, area, fanout, rx_from_buffer, rx_load,
                   rx_sizing_search, sim_settings, size_tx_chain, tx_chain_from_final, tx_sizing_search, quantize_fin)

Strategy = Literal["balanced", "best_power", "best_delay"]
STRATEGIES: tuple[Strategy, ...] = ("balanced", "best_power", "best_delay")


@dataclass(frozen=True)
class DesignPoint:
    index: int
    tx_index: int
    rx_index: int
    e_tx_J: float
    e_rx_J: float
    e_ch_J: float
    e_term_J: float
    e_total_J_per_bit: float
    tau_rr_s: float
    tau_ff_s: float
    tau_wc_s: float
    feasible: bool
    area_um2: float
    refined: bool = False
    clamped: bool = False
    far_slew_s: float = math.nan
    pad_slew_s: float = math.nan
    tx_delay_rise_s: float = math.nan
    tx_delay_fall_s: float = math.nan
    lut_e_total_J: float | None = None
    lut_tau_wc_s: float | None = None
    note: str = ""

    def split_delays(self) -> tuple[tuple[float, float], tuple[float, float]]:
        """((tx_rise, tx_fall), (rx_rise, rx_fall)); refined totals are split in the LUT proportion."""
        lut_rr = self.tx_delay_rise_s
        lut_ff = self.tx_delay_fall_s
        if self.refined and self.lut_tau_wc_s:
            # scale the TX share so TX + RX still sums to each refined total
            k = self.tau_wc_s / self.lut_tau_wc_s
            lut_rr, lut_ff = lut_rr * k, lut_ff * k
        tx = (min(lut_rr, self.tau_rr_s), min(lut_ff, self.tau_ff_s))
        return tx, (self.tau_rr_s - tx[0], self.tau_ff_s - tx[1])

    @property
    def energy_shift(self) -> float | None:
        if self.lut_e_total_J is None:
            return None
        return (self.e_total_J_per_bit - self.lut_e_total_J) / self.lut_e_total_J


def total_energy(activity: float, e_tx: float, e_rx: float, e_ch: float, e_term: float) -> float:
    return activity * (e_tx + e_rx) + e_ch + e_term


def is_feasible(tau_wc: float, budget_s: float) -> bool:
    return bool(tau_wc <= budget_s)


# ------------------------------------------------------------------ pareto


def dominates(a: DesignPoint, b: DesignPoint) -> bool:
    ea, ta, eb, tb = a.e_total_J_per_bit, a.tau_wc_s, b.e_total_J_per_bit, b.tau_wc_s
    return ea <= eb and ta <= tb and (ea < eb or ta < tb)


@dataclass
class ParetoFront:
    members: list[DesignPoint]
    selected: dict[str, DesignPoint] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.members)


def pareto_front(points: list[DesignPoint]) -> ParetoFront:
    """Non-dominated feasible points, ascending energy / descending delay.  Exact duplicates keep the lowest index."""
    feas = sorted((p for p in points if p.feasible), key=lambda p: (p.e_total_J_per_bit, p.tau_wc_s, p.index))
    members: list[DesignPoint] = []
    best_tau = math.inf
    for p in feas:
        if p.tau_wc_s < best_tau:
            members.append(p)
            best_tau = p.tau_wc_s
    front = ParetoFront(members)
    if members:
        front.selected = {s: select(front, s) for s in STRATEGIES}
    return front


def select(front: ParetoFront, strategy: str):
    m = front.members
    if not m:
        raise ValueError("cannot select from an empty Pareto front")
    if strategy == "all":
        return list(m)
    if strategy == "best_power":
        return min(m, key=lambda p: (p.e_total_J_per_bit, p.tau_wc_s, p.index))
    if strategy == "best_delay":
        return min(m, key=lambda p: (p.tau_wc_s, p.e_total_J_per_bit, p.index))
    if strategy == "balanced":
        e = np.array([p.e_total_J_per_bit for p in m])
        t = np.array([p.tau_wc_s for p in m])

        def norm(x):
            span = x.max() - x.min()
            return (x - x.min()) / span if span > 0 else np.zeros_like(x)

        dist = np.hypot(norm(e), norm(t))
        order = sorted(range(len(m)), key=lambda k: (dist[k], m[k].e_total_J_per_bit, m[k].index))
        return m[order[0]]
    raise ValueError(f"unknown selection strategy {strategy!r}")


# ----------------------------------------------------------------- matching


@dataclass
class Context:
    cfg: LinkConfig
    ladder: PiLadder
    summary: ChannelSummary
    term: TerminationPlan
    eq: EqPlan
    sim: SimSettings

    @property
    def link(self) -> LinkSpec:
        return LinkSpec(self.ladder, self.term, self.eq)

    @property
    def c_esd(self) -> float:
        return self.ladder.components["esd"].c_F


def match_pair(tx_table: CharTable, rx_table: CharTable, e_ch_J: float, term: TerminationPlan,
               cfg: LinkConfig, index: int = 0, tx_index: int = 0, rx_index: int = 0, area_um2: float = 0.0) -> DesignPoint:
    """LUT matching: TX at load = RX c_in, then RX at slew = TX output slew, per edge polarity."""
    c_rx = rx_table.c_in_F
    slew_in = cfg.sim.tx_input_slew_ui * cfg.ui_s
    tx = interpolate(tx_table, slew_in, c_rx)
    rx_r = interpolate(rx_table, tx.slew_rise)
    rx_f = interpolate(rx_table, tx.slew_fall)
    tau_rr = tx.delay_rise + rx_r.delay_rise
    tau_ff = tx.delay_fall + rx_f.delay_fall
    tau_wc = max(tau_rr, tau_ff)
    e_rx = 0.5 * (rx_r.energy + rx_f.energy)
    e_term = term.with_transition(tx.pad_slew, cfg.vdd, cfg.user.data_rate_Gbps, cfg.sim.activity_factor).e_term_J_per_bit \
        if term.terminated else 0.0
    e_total = total_energy(cfg.sim.activity_factor, tx.energy, e_rx, e_ch_J, e_term)
    return DesignPoint(index, tx_index, rx_index, tx.energy, e_rx, e_ch_J, e_term, e_total, tau_rr, tau_ff, tau_wc,
                       is_feasible(tau_wc, cfg.latency_budget_s) and math.isfinite(tau_wc), area_um2,
                       clamped=tx.clamped or rx_r.clamped or rx_f.clamped,
                       far_slew_s=0.5 * (tx.slew_rise + tx.slew_fall), pad_slew_s=tx.pad_slew,
                       tx_delay_rise_s=tx.delay_rise, tx_delay_fall_s=tx.delay_fall)


# ------------------------------------------------------------------- grids


def log_grid(center: float, n: int, lo: float, hi: float) -> np.ndarray:
    if n == 1:
        return np.array([center])
    return center * np.exp(np.linspace(math.log(lo), math.log(hi), n))


def build_grid(ctx: Context) -> tuple[list[TxDesign], list[RxDesign], list[str]]:
    cfg, pdk = ctx.cfg, ctx.cfg.pdk
    s = cfg.sim
    notes = []
    warm = size_tx_chain(analytic_tx_load(cfg, ctx.ladder), pdk, eq=ctx.eq)
    w_final = warm.widths_um[-1]
    txs = []
    for m in log_grid(1.0, cfg.user.n_tx_configs, s.grid_min_mult, s.grid_max_mult):
        w = w_final * m
        if w > pdk.w_max_um:
            notes.append(f"TX multiplier {m:.3g} trimmed to w_max")
            w = pdk.w_max_um
        txs.append(tx_chain_from_final(w, warm.n_stages, pdk, warm.fanout, float(m), ctx.eq))
    rx_warm = rx_load(cfg) / (fanout(pdk) * pdk.unit_inv.c_in_fF * 1e-15 / pdk.w_min_um)
    rxs = []
    for m in log_grid(1.0, cfg.user.n_rx_configs, s.grid_min_mult, s.grid_max_mult):
        w = rx_warm * m
        if w > pdk.w_max_um:
            notes.append(f"RX multiplier {m:.3g} trimmed to w_max")
            w = pdk.w_max_um
        rxs.append(rx_from_buffer(w, cfg))
    return txs, rxs, notes


def tx_axes(cfg: LinkConfig, rx_cins: list[float]) -> tuple[np.ndarray, np.ndarray]:
    s = cfg.sim
    if cfg.user.input_slews_ns_override:
        slews = np.array(cfg.user.input_slews_ns_override) * 1e-9
    else:
        slews = log_grid(cfg.ui_s, s.n_slews, s.slew_min_ui, s.slew_max_ui)
    lo, hi = min(rx_cins) * s.load_min_mult, max(rx_cins) * s.load_max_mult
    loads = np.exp(np.linspace(math.log(lo), math.log(hi), s.n_loads)) if s.n_loads > 1 else np.array([min(rx_cins)])
    return slews, loads


def rx_axis(cfg: LinkConfig, tx_tables: list[CharTable]) -> np.ndarray:
    if cfg.user.input_slews_ns_override:
        return np.array(cfg.user.input_slews_ns_override) * 1e-9
    vals = np.concatenate([np.concatenate([t.slew_rise.ravel(), t.slew_fall.ravel()]) for t in tx_tables])
    vals = vals[np.isfinite(vals) & (vals > 0)]
    lo, hi = float(vals.min()), float(vals.max())
    n = cfg.sim.n_slews
    if n == 1 or hi <= lo:
        return np.array([lo])
    return np.exp(np.linspace(math.log(lo), math.log(hi), n))


@dataclass
class CoOptResult:
    tx_designs: list[TxDesign]
    rx_designs: list[RxDesign]
    tx_tables: list[CharTable]
    rx_tables: list[CharTable]
    candidates: list[DesignPoint]
    front: ParetoFront
    refined_front: ParetoFront
    refined: list[DesignPoint]
    n_characterizations: int
    n_refinements: int
    notes: list[str] = field(default_factory=list)
    areas: dict[tuple[int, int], AreaReport] = field(default_factory=dict)

    def final_front(self) -> ParetoFront:
        return self.refined_front if self.refined_front.members else self.front

    def selection(self, strategy: str):
        front = self.final_front()
        if not front.members:
            return None
        return select(front, strategy)


def _pool_map(fn, items, workers):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def characterize_designs(ctx: Context, txs: list[TxDesign], rxs: list[RxDesign], workers: int = 1):
    """Exactly one campaign per TX and per RX design."""
    cfg, pdk = ctx.cfg, ctx.cfg.pdk
    link = ctx.link
    rx_cins = [measure_cin(d.stages(pdk)[0], cfg.vdd) for d in rxs]
    slews, loads = tx_axes(cfg, rx_cins)
    inner = replace(ctx.sim, max_parallel=1)

    def tx_job(d: TxDesign) -> CharTable:
        return characterize_tx(d.stages(pdk), link, slews, loads, inner, cfg.user.rx_slew_source)

    tx_tables = _pool_map(tx_job, txs, workers)
    rx_slews = rx_axis(cfg, tx_tables)
    ref_tx = txs[len(txs) // 2]
    amp = far_amplitude(link, cfg.vdd, ref_tx.r_drive(pdk))

    def rx_job(d: RxDesign) -> CharTable:
        pre, buf = d.stages(pdk)
        return characterize_rx(pre, buf, d.c_ext_F, rx_slews, inner, amp)

    rx_tables = _pool_map(rx_job, rxs, workers)
    rxs = [replace(d, c_in_F=t.c_in_F) for d, t in zip(rxs, rx_tables)]
    return tx_tables, rx_tables, rxs


def cosimulate(ctx: Context, tx: TxDesign, rx: RxDesign, point: DesignPoint) -> DesignPoint:
    """Full TX + ladder + RX transient with exact loading; replaces the LUT estimate."""
    cfg, pdk, sim = ctx.cfg, ctx.cfg.pdk, replace(ctx.sim, max_parallel=1)
    link = ctx.link
    chain = tx.stages(pdk)
    pre, buf = rx.stages(pdk)
    slew_in = cfg.sim.tx_input_slew_ui * cfg.ui_s
    taus, e_tx, e_rx, pads, fars = [], [], [], [], []
    for rising in (True, False):
        res = tx_edge(chain, link, sim, slew_in, pre.c_in, rising, chain_b=[pre, buf], b_load=rx.c_ext_F)
        taus.append(res.delay(STIM, "b1"))
        e_tx.append(tx_internal_energy(res, chain, link, sim))
        e_rx.append(rx_internal_energy(res, pre, buf, rx.c_ext_F, sim, offset=len(chain)))
        pads.append(res.slew("tx_pad"))
        fars.append(res.slew(link.far_node))
    taus = [t if math.isfinite(t) else math.inf for t in taus]
    etx, erx = float(np.mean(e_tx)), float(np.mean(e_rx))
    pad = float(np.mean(pads))
    term = ctx.term
    e_term = term.with_transition(pad, cfg.vdd, cfg.user.data_rate_Gbps, cfg.sim.activity_factor).e_term_J_per_bit \
        if term.terminated else 0.0
    e_total = total_energy(cfg.sim.activity_factor, etx, erx, point.e_ch_J, e_term)
    tau_wc = max(taus)
    return replace(point, e_tx_J=etx, e_rx_J=erx, e_term_J=e_term, e_total_J_per_bit=e_total,
                   tau_rr_s=taus[0], tau_ff_s=taus[1], tau_wc_s=tau_wc,
                   feasible=is_feasible(tau_wc, cfg.latency_budget_s), refined=True,
                   far_slew_s=float(np.mean(fars)), pad_slew_s=pad,
                   lut_e_total_J=point.e_total_J_per_bit, lut_tau_wc_s=point.tau_wc_s)


def refine(ctx: Context, points: list[DesignPoint], txs: list[TxDesign], rxs: list[RxDesign],
           workers: int = 1) -> list[DesignPoint]:
    def job(p: DesignPoint) -> DesignPoint:
        try:
            return cosimulate(ctx, txs[p.tx_index], rxs[p.rx_index], p)
        except SolverError as exc:
            return replace(p, feasible=False, refined=True, note=f"refinement failed: {exc}")

    return _pool_map(job, points, workers)


def evaluate_pairs(ctx: Context, txs, rxs, tx_tables, rx_tables) -> tuple[list[DesignPoint], dict]:
    cfg = ctx.cfg
    points, areas = [], {}
    for i, (tx, tt) in enumerate(zip(txs, tx_tables)):
        for j, (rx, rt) in enumerate(zip(rxs, rx_tables)):
            ar = area(tx, rx, ctx.eq, ctx.term, ctx.c_esd, cfg)
            areas[(i, j)] = ar
            points.append(match_pair(tt, rt, ctx.summary.e_ch_J_per_bit, ctx.term, cfg,
                                     index=i * len(rxs) + j, tx_index=i, rx_index=j, area_um2=ar.per_lane_um2))
    return points, areas


def _finish(ctx: Context, txs, rxs, tx_tables, rx_tables, n_char: int, notes: list[str], workers: int,
            do_refine: bool = True) -> CoOptResult:
    points, areas = evaluate_pairs(ctx, txs, rxs, tx_tables, rx_tables)
    front = pareto_front(points)
    refined = refine(ctx, front.members, txs, rxs, workers) if do_refine else []
    rfront = pareto_front(refined) if refined else ParetoFront([])
    return CoOptResult(txs, rxs, tx_tables, rx_tables, points, front, rfront, refined, n_char, len(refined), notes, areas)


def run_coopt(ctx: Context, workers: int = 1, do_refine: bool = True) -> CoOptResult:
    txs, rxs, notes = build_grid(ctx)
    tx_tables, rx_tables, rxs = characterize_designs(ctx, txs, rxs, workers)
    return _finish(ctx, txs, rxs, tx_tables, rx_tables, len(txs) + len(rxs), notes, workers, do_refine)


def run_sizing(ctx: Context, workers: int = 1) -> CoOptResult:
    """Dispatch on sizing_mode; the single-sided modes yield one candidate pair."""
    cfg, pdk = ctx.cfg, ctx.cfg.pdk
    mode = cfg.user.sizing_mode
    if mode == "co_opt":
        return run_coopt(ctx, workers)
    notes: list[str] = []
    warm = size_tx_chain(analytic_tx_load(cfg, ctx.ladder), pdk, eq=ctx.eq)
    rx_warm_w = rx_load(cfg) / (fanout(pdk) * pdk.unit_inv.c_in_fF * 1e-15 / pdk.w_min_um)
    if mode == "manual":
        ms = cfg.user.manual_sizing
        widths = tuple(quantize_fin(w, pdk) for w in ms.tx_widths_um)
        tx = TxDesign(widths, fanout(pdk), 1.0, ctx.eq)
        pre = quantize_fin(ms.rx_preamp_width_um, pdk)
        buf = quantize_fin(ms.rx_buffer_width_um, pdk)
        rx = RxDesign(pre, buf, rx_load(cfg))
    elif mode == "tx_sizing":
        rx = rx_from_buffer(rx_warm_w, cfg)
        c_rx = measure_cin(rx.stages(pdk)[0], cfg.vdd)
        sr = tx_sizing_search(cfg, ctx.link, warm, c_rx, sim=replace(ctx.sim, max_parallel=1))
        tx = sr.design
        notes.append(f"tx_sizing_search: multiplier {tx.multiplier:.4g}, {sr.solves} solves, "
                     f"far-end slew {sr.slew_s * 1e12:.2f} ps{'' if sr.converged else ' (not converged)'}")
    elif mode == "rx_sizing":
        tx = warm
        c_min = rx_from_buffer(pdk.w_min_um, cfg).c_in_F
        res = tx_edge(tx.stages(pdk), ctx.link, ctx.sim, cfg.sim.tx_input_slew_ui * cfg.ui_s, c_min, True)
        amp = far_amplitude(ctx.link, cfg.vdd, tx.r_drive(pdk))
        rr = rx_sizing_search(cfg, res.slew(ctx.link.far_node), amp, sim=ctx.sim)
        rx = rr.design
        if not rr.feasible:
            notes.append("rx_sizing_search: delay target unreachable at w_max")
    else:
        raise ValueError(f"unknown sizing mode {mode!r}")
    tx_tables, rx_tables, rxs = characterize_designs(ctx, [tx], [rx], workers)
    return _finish(ctx, [tx], rxs, tx_tables, rx_tables, 2, notes, workers)
