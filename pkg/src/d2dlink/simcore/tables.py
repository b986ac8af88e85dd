"""NLDM-style characterization tables, Q/V input-cap measurement and bilinear lookup."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from .link import LinkSpec, link_network
from .network import Network
from .transient import STIM, SolverError, Stage, Stimulus, solve_transient

GRIDS = ("delay_rise", "delay_fall", "slew_rise", "slew_fall", "energy_rise", "energy_fall")


@dataclass
class SimSettings:
    vdd: float
    ui_s: float
    overdrive_frac: float = 0.5
    short_circuit_frac: float = 0.1
    steps_per_ui: float = 200.0
    steps_per_tau: float = 20.0
    settle_tol_frac: float = 1e-3
    max_parallel: int = 1

    def kw(self) -> dict:
        return dict(overdrive_frac=self.overdrive_frac, ui_s=self.ui_s, steps_per_ui=self.steps_per_ui,
                    steps_per_tau=self.steps_per_tau, settle_tol_frac=self.settle_tol_frac)


@dataclass
class CharTable:
    """Grids are indexed [slew, load].  RX tables carry a single load column."""

    kind: Literal["tx", "rx"]
    slews: np.ndarray
    loads: np.ndarray
    delay_rise: np.ndarray
    delay_fall: np.ndarray
    slew_rise: np.ndarray
    slew_fall: np.ndarray
    energy_rise: np.ndarray
    energy_fall: np.ndarray
    c_in_F: float
    pad_slew_rise: np.ndarray | None = None
    pad_slew_fall: np.ndarray | None = None
    amplitude_V: float | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def energy_per_transition(self) -> np.ndarray:
        return 0.5 * (self.energy_rise + self.energy_fall)

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.slews), len(self.loads))


@dataclass(frozen=True)
class Lookup:
    delay_rise: float
    delay_fall: float
    slew_rise: float
    slew_fall: float
    energy: float
    pad_slew: float
    clamped: bool


def _bracket(axis: np.ndarray, x: float) -> tuple[int, int, float, bool]:
    n = len(axis)
    if n == 1:
        return 0, 0, 0.0, x != axis[0]
    clamped = x < axis[0] or x > axis[-1]
    xc = min(max(x, axis[0]), axis[-1])
    j = int(np.searchsorted(axis, xc, side="right")) - 1
    j = min(max(j, 0), n - 2)
    t = (xc - axis[j]) / (axis[j + 1] - axis[j])
    return j, j + 1, t, clamped


def bilinear(grid: np.ndarray, slews: np.ndarray, loads: np.ndarray, slew: float, load: float) -> tuple[float, bool]:
    i0, i1, ti, ci = _bracket(slews, slew)
    j0, j1, tj, cj = _bracket(loads, load)
    g = grid
    v = ((1 - ti) * (1 - tj) * g[i0, j0] + ti * (1 - tj) * g[i1, j0]
         + (1 - ti) * tj * g[i0, j1] + ti * tj * g[i1, j1])
    # exact grid hits avoid round-off from zero weights
    if ti == 0.0 and tj == 0.0:
        v = g[i0, j0]
    return float(v), ci or cj


def interpolate(table: CharTable, slew: float, load: float | None = None) -> Lookup:
    if table.delay_rise.size == 0:
        raise ValueError("empty characterization table")
    load = table.loads[0] if load is None else load
    vals, clamped = {}, False
    for name in ("delay_rise", "delay_fall", "slew_rise", "slew_fall"):
        vals[name], c = bilinear(getattr(table, name), table.slews, table.loads, slew, load)
        clamped |= c
    er, _ = bilinear(table.energy_rise, table.slews, table.loads, slew, load)
    ef, _ = bilinear(table.energy_fall, table.slews, table.loads, slew, load)
    pad = math.nan
    if table.pad_slew_rise is not None:
        pr, _ = bilinear(table.pad_slew_rise, table.slews, table.loads, slew, load)
        pf, _ = bilinear(table.pad_slew_fall, table.slews, table.loads, slew, load)
        pad = 0.5 * (pr + pf)
    return Lookup(vals["delay_rise"], vals["delay_fall"], vals["slew_rise"], vals["slew_fall"],
                  0.5 * (er + ef), pad, clamped)


def measure_cin(stage: Stage, vdd: float, r_probe: float = 1e3) -> float:
    """Input capacitance from a Q/V solve: charge delivered by an ideal step through r_probe."""
    net = Network()
    net.node("g")
    net.add_cap("g", "gnd", stage.c_in)
    net.set_source("g", r_probe)
    res = solve_transient(Stimulus(0.0, vdd, 0.0), vdd, net=net, probes=["g"], settle_tol_frac=1e-6)
    # source energy for a step is V * Q
    return res.e_source_J / vdd**2


def _map(fn, items, workers: int):
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def tx_edge(chain: list[Stage], link: LinkSpec, sim: SimSettings, slew: float, c_load: float, rising: bool,
            chain_b: list[Stage] = (), b_load: float = 0.0, record_every: int = 0):
    """One TX (+ optional RX) transient; returns the raw result and the name of the far node."""
    vdd = sim.vdd
    stim = Stimulus(0.0, vdd, slew) if rising else Stimulus(vdd, 0.0, slew)
    net = link_network(link, vdd, c_load, chain[-1].c_out)
    probes = ["tx_pad", link.far_node] + ([f"b{len(chain_b) - 1}"] if chain_b else [])
    res = solve_transient(stim, vdd, net=net, chain_a=chain[:-1], driver=chain[-1], drv_node=link.drv_node,
                          chain_b=list(chain_b), b_input=link.far_node, b_load_F=b_load, probes=probes,
                          record_every=record_every, **sim.kw())
    return res


def tx_internal_energy(res, chain: list[Stage], link: LinkSpec, sim: SimSettings) -> float:
    n_int = len(chain) - 1
    e = float(np.sum(res.e_stage_J[:n_int]))
    dv = max(0.0, res.swing(link.drv_node))
    e += chain[-1].c_out * sim.vdd * dv
    return e * (1.0 + sim.short_circuit_frac)


def characterize_tx(chain: list[Stage], link: LinkSpec, slews, loads, sim: SimSettings,
                    slew_probe: Literal["channel", "tx_pad"] = "channel") -> CharTable:
    slews, loads = np.asarray(slews, float), np.asarray(loads, float)
    if not len(slews) or not len(loads):
        raise ValueError("characterization axes must be non-empty")
    jobs = [(i, j, r) for i in range(len(slews)) for j in range(len(loads)) for r in (True, False)]

    def one(job):
        i, j, rising = job
        try:
            res = tx_edge(chain, link, sim, float(slews[i]), float(loads[j]), rising)
        except SolverError as exc:
            raise SolverError(f"TX cell slew={slews[i]:.3g}s load={loads[j]:.3g}F: {exc}") from None
        far = link.far_node
        probe = far if slew_probe == "channel" else "tx_pad"
        return (res.delay(STIM, far), res.slew(probe), tx_internal_energy(res, chain, link, sim), res.slew("tx_pad"))

    out = _map(one, jobs, sim.max_parallel)
    shape = (len(slews), len(loads))
    g = {k: np.empty(shape) for k in GRIDS + ("pad_rise", "pad_fall")}
    for (i, j, rising), (d, s, e, ps) in zip(jobs, out):
        sfx = "rise" if rising else "fall"
        g[f"delay_{sfx}"][i, j] = d
        g[f"slew_{sfx}"][i, j] = s
        g[f"energy_{sfx}"][i, j] = e
        g[f"pad_{sfx}"][i, j] = ps
    return CharTable("tx", slews, loads, g["delay_rise"], g["delay_fall"], g["slew_rise"], g["slew_fall"],
                     g["energy_rise"], g["energy_fall"], c_in_F=chain[0].c_in,
                     pad_slew_rise=g["pad_rise"], pad_slew_fall=g["pad_fall"])


def rx_edge(pre: Stage, buf: Stage, c_ext: float, sim: SimSettings, slew: float, amplitude: float, rising: bool):
    vdd = sim.vdd
    lo, hi = vdd / 2 - amplitude, vdd / 2 + amplitude
    stim = Stimulus(lo, hi, slew) if rising else Stimulus(hi, lo, slew)
    return solve_transient(stim, vdd, chain_b=[pre, buf], b_input=STIM, b_load_F=c_ext, probes=["b1"], **sim.kw())


def rx_internal_energy(res, pre: Stage, buf: Stage, c_ext: float, sim: SimSettings, offset: int = 0) -> float:
    e_pre = res.e_stage_J[offset]
    e_buf = res.e_stage_J[offset + 1]
    # the buffer's supply energy also charges the external load; keep only its own drain share
    e = e_pre + e_buf * buf.c_out / (buf.c_out + c_ext)
    return float(e) * (1.0 + sim.short_circuit_frac)


def characterize_rx(pre: Stage, buf: Stage, c_ext: float, slews, sim: SimSettings, amplitude: float) -> CharTable:
    slews = np.asarray(slews, float)
    if not len(slews):
        raise ValueError("characterization axes must be non-empty")
    jobs = [(i, r) for i in range(len(slews)) for r in (True, False)]

    def one(job):
        i, rising = job
        res = rx_edge(pre, buf, c_ext, sim, float(slews[i]), amplitude, rising)
        return res.delay(STIM, "b1"), res.slew("b1"), rx_internal_energy(res, pre, buf, c_ext, sim)

    out = _map(one, jobs, sim.max_parallel)
    shape = (len(slews), 1)
    g = {k: np.empty(shape) for k in GRIDS}
    for (i, rising), (d, s, e) in zip(jobs, out):
        sfx = "rise" if rising else "fall"
        g[f"delay_{sfx}"][i, 0] = d
        g[f"slew_{sfx}"][i, 0] = s
        g[f"energy_{sfx}"][i, 0] = e
    c_in = measure_cin(pre, sim.vdd)
    return CharTable("rx", slews, np.array([c_ext]), g["delay_rise"], g["delay_fall"], g["slew_rise"], g["slew_fall"],
                     g["energy_rise"], g["energy_fall"], c_in_F=c_in, amplitude_V=amplitude)
