"""Transient solve entry point: state layout, DC/initial conditions, step selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .kernel import BDF_K, GAMMA, run_kernel
from .network import GMIN, Network

LEVEL_FRACS = (0.2, 0.5, 0.8)
STIM = "in"


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class Stage:
    """Switched-resistor inverter: conductances, input cap and own output (drain) cap."""

    gn: float
    gp: float
    c_in: float
    c_out: float
    width_um: float = 0.0


@dataclass(frozen=True)
class Stimulus:
    v_from: float
    v_to: float
    slew_20_80_s: float = 0.0

    @property
    def t_ramp(self) -> float:
        return self.slew_20_80_s / (LEVEL_FRACS[2] - LEVEL_FRACS[0])

    @property
    def rising(self) -> bool:
        return self.v_to > self.v_from


@dataclass
class TransientResult:
    crossings: dict[str, tuple[float, float, float]]
    e_stage_J: np.ndarray
    e_source_J: float
    t_end_s: float
    steps: int
    dt_s: float
    state_names: list[str]
    v_initial: np.ndarray
    v_final_expected: np.ndarray
    v_end: np.ndarray
    waveforms: np.ndarray | None = field(default=None, repr=False)

    def t50(self, name: str) -> float:
        return self.crossings[name][1]

    def delay(self, a: str, b: str) -> float:
        return self.t50(b) - self.t50(a)

    def slew(self, name: str) -> float:
        c = self.crossings[name]
        return abs(c[2] - c[0])

    def completed(self, names) -> bool:
        return all(not math.isnan(x) for n in names for x in self.crossings[n])

    def swing(self, name: str) -> float:
        i = self.state_names.index(name)
        return self.v_final_expected[i] - self.v_initial[i]

    def dump(self, path) -> None:
        """Time/voltage columns for every state node."""
        if self.waveforms is None:
            raise ValueError("solve ran without waveform recording")
        header = "t_s " + " ".join(self.state_names)
        np.savetxt(path, self.waveforms, header=header, fmt="%.9e")


def _logic(u: float, vdd: float) -> float:
    return 0.0 if u > vdd / 2 else vdd


def _fast_state(net: Network, b: np.ndarray, g_extra: np.ndarray, v_ref: np.ndarray) -> np.ndarray:
    """State after fast transients: slow (bias) resistors open, floating islands keep the charge of v_ref."""
    C, Gf, _ = net.matrices(include_slow=False)
    A = Gf + g_extra
    N = sla.null_space(A, rcond=1e-12)
    if N.shape[1] == 0:
        return np.linalg.solve(A, b)
    M = np.vstack([A, N.T @ C])
    rhs = np.concatenate([b, N.T @ C @ v_ref])
    sol, *_ = np.linalg.lstsq(M, rhs, rcond=None)
    return sol


def _dc_state(net: Network, b: np.ndarray, g_extra: np.ndarray) -> np.ndarray:
    _, G, _ = net.matrices(include_slow=True)
    A = G + g_extra + GMIN * np.eye(net.n)
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"singular DC conductance matrix ({exc})") from None


def solve_transient(
    stimulus: Stimulus,
    vdd: float,
    *,
    net: Network | None = None,
    chain_a: list[Stage] = (),
    driver: Stage | None = None,
    drv_node: str | None = None,
    chain_b: list[Stage] = (),
    b_input: str = STIM,
    b_load_F: float = 0.0,
    probes: list[str] = (),
    overdrive_frac: float = 0.5,
    dt: float | None = None,
    ui_s: float | None = None,
    steps_per_ui: float = 200.0,
    steps_per_tau: float = 20.0,
    t_max: float | None = None,
    max_steps: int = 200_000,
    settle_tol_frac: float = 1e-3,
    record_every: int = 0,
) -> TransientResult:
    """Simulate one input edge through ``chain_a -> driver -> net -> chain_b``.

    Chain A stage k drives ``a{k}``; its node capacitance is its own c_out plus the next
    stage's c_in.  ``driver`` is the last TX stage and connects to ``drv_node``; the caller
    includes its c_out in the network.  Chain B reads ``b_input`` and its stage k drives
    ``b{k}``; the last stage is loaded by ``b_load_F``.
    """
    chain_a, chain_b = list(chain_a), list(chain_b)
    net = net or Network()
    n_a, n_net, n_b = len(chain_a), net.n, len(chain_b)
    names = [STIM] + [f"a{k}" for k in range(n_a)] + list(net.names) + [f"b{k}" for k in range(n_b)]
    net_off = 1 + n_a
    b_off = net_off + n_net
    pos = {nm: i for i, nm in enumerate(names)}
    if driver is not None and (drv_node is None or drv_node not in net.names):
        raise SolverError(f"driver node {drv_node!r} is not a network node")

    # chain A node caps and inputs
    a_gn = np.array([s.gn for s in chain_a], dtype=float)
    a_gp = np.array([s.gp for s in chain_a], dtype=float)
    nxt = [s.c_in for s in chain_a[1:]] + ([driver.c_in] if driver is not None else [0.0])
    a_c = np.array([s.c_out + c for s, c in zip(chain_a, nxt)], dtype=float)
    a_in = np.array([0] + [1 + k for k in range(n_a - 1)], dtype=np.int64)[:n_a]
    drv_in = n_a if n_a > 0 else 0  # global index of the driver gate

    b_first = pos[b_input] if n_b else 0
    b_gn = np.array([s.gn for s in chain_b], dtype=float)
    b_gp = np.array([s.gp for s in chain_b], dtype=float)
    nxt_b = [s.c_in for s in chain_b[1:]] + [b_load_F]
    b_c = np.array([s.c_out + c for s, c in zip(chain_b, nxt_b)], dtype=float)
    b_in = np.array([b_first] + [b_off + k for k in range(n_b - 1)], dtype=np.int64)[:n_b]
    if np.any(a_c <= 0) or np.any(b_c <= 0):
        raise SolverError("every inverter output node needs positive capacitance")

    # logical chain levels at both ends of the edge
    def chain_levels(u0: float, stages: int) -> list[float]:
        out, u = [], u0
        for _ in range(stages):
            u = _logic(u, vdd)
            out.append(u)
        return out

    v_init = np.zeros(len(names))
    v_fin = np.zeros(len(names))
    v_init[0], v_fin[0] = stimulus.v_from, stimulus.v_to
    v_init[1:net_off] = chain_levels(stimulus.v_from, n_a)
    v_fin[1:net_off] = chain_levels(stimulus.v_to, n_a)

    d = net.idx(drv_node) if driver is not None else -1
    if n_net:
        C, G, s = net.matrices()
        for row in range(n_net):
            if C[row, row] <= 0 and G[row, row] <= 0:
                raise SolverError(f"network node {net.names[row]!r} has neither capacitance nor conductance")

        def static(gate: float, u_src: float) -> tuple[np.ndarray, np.ndarray]:
            g = np.zeros((n_net, n_net))
            b = s.copy()
            if d >= 0:
                out_high = _logic(gate, vdd) > 0
                gd = driver.gp if out_high else driver.gn
                g[d, d] += gd
                if out_high:
                    b[d] += gd * vdd
            if net.gsrc:
                b[0] += net.gsrc * u_src
            return g, b

        gate0 = v_init[drv_in] if n_a else stimulus.v_from
        gate1 = v_fin[drv_in] if n_a else stimulus.v_to
        g0, b0 = static(gate0, stimulus.v_from)
        g1, b1 = static(gate1, stimulus.v_to)
        v_ref = 0.5 * (_dc_state(net, b0, g0) + _dc_state(net, b1, g1))
        v_init[net_off:b_off] = _fast_state(net, b0, g0, v_ref)
        v_fin[net_off:b_off] = _fast_state(net, b1, g1, v_ref)
    if n_b:
        v_init[b_off:] = chain_levels(v_init[b_first], n_b)
        v_fin[b_off:] = chain_levels(v_fin[b_first], n_b)

    # time step
    if dt is None:
        cands = []
        if ui_s:
            cands.append(ui_s / steps_per_ui)
        if stimulus.t_ramp > 0:
            cands.append(stimulus.t_ramp / 20)
        for c, gn, gp in zip(np.concatenate([a_c, b_c]), np.concatenate([a_gn, b_gn]), np.concatenate([a_gp, b_gp])):
            cands.append(c / max(gn, gp) / steps_per_tau)
        if d >= 0:
            cands.append(net.node_cap(drv_node) / max(driver.gn, driver.gp) / steps_per_tau)
        if net.gsrc:
            cands.append(net.node_cap(net.names[0]) / net.gsrc / steps_per_tau)
        if not cands:
            raise SolverError("cannot choose a time step: no time constants and no UI given")
        dt = min(cands)
    if t_max is None:
        t_max = stimulus.t_ramp + max_steps * dt

    # network operators
    if n_net:
        C, G, s = net.matrices()
        G = G + GMIN * np.eye(n_net)
        a1 = 2.0 / (GAMMA * dt)
        a2 = 1.0 / (BDF_K * dt)
        try:
            M1inv = np.linalg.inv(a1 * C + G)
            M2inv = np.linalg.inv(a2 * C + G)
        except np.linalg.LinAlgError:
            raise SolverError("singular step matrix") from None
        P1 = M1inv @ (a1 * C - G)
        Q2 = M2inv @ (a2 * C)
        w1 = M1inv @ (2.0 * s)
        w2 = M2inv @ s
        z1 = M1inv[:, d].copy() if d >= 0 else np.zeros(n_net)
        z2 = M2inv[:, d].copy() if d >= 0 else np.zeros(n_net)
        zs1 = M1inv[:, 0].copy() if net.gsrc else np.zeros(n_net)
        zs2 = M2inv[:, 0].copy() if net.gsrc else np.zeros(n_net)
    else:
        P1 = Q2 = np.zeros((0, 0))
        w1 = w2 = z1 = z2 = zs1 = zs2 = np.zeros(0)

    probe_names = list(dict.fromkeys([STIM, *probes]))
    for p in probe_names:
        if p not in pos:
            raise SolverError(f"unknown probe {p!r}")
    pidx = np.array([pos[p] for p in probe_names], dtype=np.int64)
    fr = np.array(LEVEL_FRACS)
    levels = v_init[pidx, None] + fr[None, :] * (v_fin[pidx] - v_init[pidx])[:, None]

    drv = driver or Stage(0.0, 0.0, 0.0, 0.0)
    cross, e_stage, e_src, t_end, steps, v_end, rec = run_kernel(
        v_init, v_fin, float(vdd), float(overdrive_frac * vdd), float(dt), float(t_max), int(max_steps),
        float(stimulus.v_from), float(stimulus.v_to), float(stimulus.t_ramp),
        a_gn, a_gp, a_c, a_in,
        float(drv.gn), float(drv.gp), int(drv_in), int(d),
        int(net_off), P1, Q2, w1, w2, z1, z2, zs1, zs2, float(net.gsrc),
        b_gn, b_gp, b_c, b_in,
        pidx, levels, float(settle_tol_frac * vdd), 32, int(record_every),
    )
    crossings = {p: tuple(float(x) for x in cross[i]) for i, p in enumerate(probe_names)}
    return TransientResult(crossings, e_stage, float(e_src), float(t_end), int(steps), float(dt), names,
                           v_init, v_fin, v_end, rec if record_every else None)
