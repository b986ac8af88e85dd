"""Single-point and sweep orchestration: pipeline, artifacts, manifests."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any

from . import __version__
from .adaptation import EqPlan, TerminationPlan, select_eq, select_termination
from .channel import ChannelSummary, PiLadder, build_ladder, summarize
from .collateral import (BumpMap, BumpMapError, csv_text, metrics_row, parse_bump_map, write_datasheet, write_lef,
                         write_liberty, write_sdc, write_verilog)
from .collateral.netlist import link_netlist
from .config import ConfigError, LinkConfig, SweepSpec, expand_sweep
from .coopt import CoOptResult, Context, DesignPoint, ParetoFront, run_sizing
from .simcore.tables import tx_edge
from .simcore.transient import STIM
from .xcvr import AreaReport, RxDesign, SizingError, TxDesign, area, sim_settings

log = logging.getLogger(__name__)

ARTIFACT_STEM = "d2dlink"
EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 3


@dataclass
class PipelineResult:
    cfg: LinkConfig
    ladder: PiLadder
    summary: ChannelSummary
    term: TerminationPlan
    eq: EqPlan
    sizing: CoOptResult
    strategy: str
    point: DesignPoint | None
    tx: TxDesign | None
    rx: RxDesign | None
    area: AreaReport | None
    bump_map: BumpMap | None
    notes: list[str] = field(default_factory=list)

    @property
    def status(self) -> str:
        return "ok" if self.point is not None and self.point.feasible else "infeasible"


def _representative(sizing: CoOptResult, strategy: str) -> DesignPoint | None:
    """The point reported in the datasheet and CSV; for "all" this is the balanced pick."""
    return sizing.selection("balanced" if strategy == "all" else strategy)


def run_pipeline(cfg: LinkConfig, workers: int = 1, strategy: str | None = None) -> PipelineResult:
    """channel -> adaptation -> sizing / co-optimization -> refinement; no file I/O besides the bump map."""
    strategy = strategy or cfg.user.pareto_selection
    bump_map = None
    if cfg.user.bump_map_path:
        bump_map = parse_bump_map(cfg.resolve_path(cfg.user.bump_map_path), cfg.user.lane_count)
    ladder = build_ladder(cfg)
    summary = summarize(ladder, cfg.vdd, cfg.user.data_rate_Gbps)
    term = select_termination(cfg, summary)
    eq = select_eq(cfg, summary, ladder)
    ctx = Context(cfg, ladder, summary, term, eq, sim_settings(cfg, workers))
    notes = list(ladder.warnings)
    try:
        sizing = run_sizing(ctx, workers)
    except SizingError as exc:
        # the drive target itself is out of reach: report infeasible with an empty frontier
        sizing = CoOptResult([], [], [], [], [], ParetoFront([]), ParetoFront([]), [], 0, 0)
        notes.append(f"sizing: {exc}")
    point = _representative(sizing, strategy)
    notes += sizing.notes
    tx = rx = ar = None
    if point is not None:
        tx, rx = sizing.tx_designs[point.tx_index], sizing.rx_designs[point.rx_index]
        grid = (bump_map.rows, bump_map.cols) if bump_map is not None else None
        ar = area(tx, rx, eq, term, ctx.c_esd, cfg, bump_grid=grid)
        if term.terminated:
            term = term.with_transition(point.pad_slew_s, cfg.vdd, cfg.user.data_rate_Gbps, cfg.sim.activity_factor)
    else:
        notes.append("no design point meets the latency budget")
    return PipelineResult(cfg, ladder, summary, term, eq, sizing, strategy, point, tx, rx, ar, bump_map, notes)


def frontier_csv(pr: PipelineResult) -> str:
    """Every LUT candidate and every refined front member (energy vs worst-case delay)."""
    head = "stage,index,tx_index,rx_index,n_stages,tx_multiplier,e_total_pJ_per_bit,tau_wc_ps,feasible,on_front\n"
    rows = []
    lut_front = {p.index for p in pr.sizing.front.members}
    ref_front = {p.index for p in pr.sizing.refined_front.members}
    for stage, pts, front in (("lut", pr.sizing.candidates, lut_front), ("refined", pr.sizing.refined, ref_front)):
        for p in pts:
            tx = pr.sizing.tx_designs[p.tx_index]
            rows.append(f"{stage},{p.index},{p.tx_index},{p.rx_index},{tx.n_stages},{tx.multiplier:.12g},"
                        f"{p.e_total_J_per_bit * 1e12:.12g},{p.tau_wc_s * 1e12:.12g},"
                        f"{str(p.feasible).lower()},{str(p.index in front).lower()}")
    return head + "\n".join(rows) + ("\n" if rows else "")


def build_artifacts(pr: PipelineResult) -> dict[str, str]:
    """File name -> text for every enabled artifact; datasheet always present."""
    cfg, u, fp = pr.cfg, pr.cfg.user, pr.cfg.fingerprint
    front = pr.sizing.final_front()
    out: dict[str, str] = {}
    out["datasheet.txt"] = write_datasheet(
        cfg=cfg, summary=pr.summary, term=pr.term, eq=pr.eq, point=pr.point, tx=pr.tx, rx=pr.rx, area=pr.area,
        selection=pr.strategy, front_size=len(front), n_characterizations=pr.sizing.n_characterizations,
        notes=pr.notes, status=pr.status)
    if u.save_netlists:
        out[f"{ARTIFACT_STEM}.sp"] = link_netlist(pr.ladder, pr.term, pr.eq, cfg.vdd, fp)
    if u.save_metrics_csv:
        row = metrics_row(cfg=cfg, term=pr.term, eq=pr.eq, point=pr.point,
                          n_stages=pr.tx.n_stages if pr.tx else None, area=pr.area, selection=pr.strategy)
        out["metrics.csv"] = csv_text([row])
        out["frontier.csv"] = frontier_csv(pr)
    p = pr.point
    if p is None:
        return out
    tx_t, rx_t = pr.sizing.tx_tables[p.tx_index], pr.sizing.rx_tables[p.rx_index]
    if u.save_lib:
        out[f"{ARTIFACT_STEM}.lib"] = write_liberty(tx_t, rx_t, library=f"d2dlink_{cfg.pdk.name}", vdd=cfg.vdd,
                                                    lanes=u.lane_count, fingerprint=fp)
        out[f"{ARTIFACT_STEM}.sdc"] = write_sdc(lanes=u.lane_count, ui_s=cfg.ui_s, budget_ui=cfg.sim.latency_budget_ui,
                                                pad_c_F=pr.ladder.c_of("tx_pad"), far_slew_s=p.far_slew_s,
                                                fingerprint=fp)
    if u.generate_verilog:
        tx_d, rx_d = p.split_delays()
        out[f"{ARTIFACT_STEM}.v"] = write_verilog(lanes=u.lane_count, tx_delays_s=tx_d, rx_delays_s=rx_d,
                                                  fingerprint=fp)
    if u.generate_lef:
        out[f"{ARTIFACT_STEM}.lef"] = write_lef(pitch_um=u.bump_pitch_um, lanes=u.lane_count,
                                                macro_w_um=pr.area.macro_w_um, macro_h_um=pr.area.macro_h_um,
                                                bump_map=pr.bump_map, layer=cfg.area.lef_pin_layer)
    return out


def _umask() -> int:
    mask = os.umask(0)
    os.umask(mask)
    return mask


def _write_atomic(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o666 & ~_umask())  # mkstemp creates 0600
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_waveforms(pr: PipelineResult, out_dir: Path) -> list[str]:
    """Full-path transient of the reported pair, one file per edge."""
    if pr.point is None:
        return []
    cfg, pdk = pr.cfg, pr.cfg.pdk
    link = Context(cfg, pr.ladder, pr.summary, pr.term, pr.eq, sim_settings(cfg)).link
    pre, buf = pr.rx.stages(pdk)
    names = []
    for rising in (True, False):
        res = tx_edge(pr.tx.stages(pdk), link, sim_settings(cfg), cfg.sim.tx_input_slew_ui * cfg.ui_s, pre.c_in,
                      rising, chain_b=[pre, buf], b_load=pr.rx.c_ext_F, record_every=1)
        name = f"waveform_{'rise' if rising else 'fall'}.txt"
        res.dump(out_dir / name)
        names.append(name)
    log.debug("waveforms: %s delay %g", names, res.delay(STIM, "b1"))
    return names


@dataclass
class PointStatus:
    name: str
    status: str  # ok | infeasible | error
    wall_s: float
    outputs: list[str]
    fingerprint: str | None = None
    message: str = ""
    kind: str = ""  # validation | internal, for errors
    csv_row: dict[str, Any] | None = None


def execute_point(cfg: LinkConfig, out_dir: Path, strategy: str | None, workers: int,
                  debug_waveforms: bool = False, name: str = ".") -> PointStatus:
    """Run one point and write its artifacts; never raises."""
    t0 = time.perf_counter()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        pr = run_pipeline(cfg, workers, strategy)
        arts = build_artifacts(pr)
        for fname, text in arts.items():
            _write_atomic(out_dir / fname, text)
        outputs = sorted(arts)
        if debug_waveforms:
            outputs += dump_waveforms(pr, out_dir)
        row = metrics_row(cfg=cfg, term=pr.term, eq=pr.eq, point=pr.point,
                          n_stages=pr.tx.n_stages if pr.tx else None, area=pr.area, selection=pr.strategy)
        msg = "" if pr.status == "ok" else "; ".join(n for n in pr.notes if n.startswith("sizing:") or "latency" in n)
        return PointStatus(name, pr.status, time.perf_counter() - t0, outputs, cfg.fingerprint, msg, csv_row=row)
    except (ConfigError, BumpMapError) as exc:
        return PointStatus(name, "error", time.perf_counter() - t0, [], cfg.fingerprint, str(exc), "validation")
    except Exception as exc:  # isolate crashes to this point
        log.debug("point %s failed:\n%s", name, traceback.format_exc())
        return PointStatus(name, "error", time.perf_counter() - t0, [], cfg.fingerprint,
                           f"{type(exc).__name__}: {exc}", "internal")


@dataclass
class RunManifest:
    mode: str
    fingerprint: str
    points: list[PointStatus]
    started: str
    wall_s: float
    workers: int
    outputs: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        errs = [p for p in self.points if p.status == "error"]
        if any(p.kind == "internal" for p in errs):
            return EXIT_INTERNAL
        if errs or any(p.status == "infeasible" for p in self.points):
            return EXIT_FAIL
        return EXIT_OK

    def to_dict(self) -> dict[str, Any]:
        return {
            "tool": "d2dlink",
            "version": __version__,
            "mode": self.mode,
            "config_fingerprint": self.fingerprint,
            "started_utc": self.started,
            "wall_s": round(self.wall_s, 3),
            "workers": self.workers,
            "exit_code": self.exit_code,
            "outputs": self.outputs,
            "points": [{"name": p.name, "status": p.status, "message": p.message, "error_kind": p.kind or None,
                        "fingerprint": p.fingerprint, "wall_s": round(p.wall_s, 3), "outputs": p.outputs}
                       for p in self.points],
        }

    def write(self, out_dir: Path) -> Path:
        path = out_dir / "manifest.json"
        _write_atomic(path, json.dumps(self.to_dict(), indent=2) + "\n")
        return path


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run_single(cfg: LinkConfig, out_dir: str | Path, strategy: str | None = None, workers: int | None = None,
               debug_waveforms: bool = False) -> RunManifest:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    workers = workers or cfg.user.max_parallel
    started, t0 = _now(), time.perf_counter()
    st = execute_point(cfg, out_dir, strategy, workers, debug_waveforms)
    man = RunManifest("single", cfg.fingerprint, [st], started, time.perf_counter() - t0, workers, list(st.outputs))
    man.write(out_dir)
    return man


def _sweep_job(args) -> PointStatus:
    cfg, out_dir, strategy, debug = args
    return execute_point(cfg, out_dir, strategy, 1, debug, name=out_dir.name)


def run_sweep(spec: SweepSpec, out_dir: str | Path, strategy: str | None = None, workers: int | None = None,
              debug_waveforms: bool = False) -> RunManifest:
    """Point-level process pool; each point runs single-threaded so total solves stay within ``workers``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    points = expand_sweep(spec)
    workers = max(1, workers or spec.base.user.max_parallel)
    started, t0 = _now(), time.perf_counter()
    jobs = [(cfg, out_dir / name, strategy, debug_waveforms) for name, cfg in points]
    if workers == 1 or len(jobs) == 1:
        statuses = [_sweep_job(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as ex:
            statuses = list(ex.map(_sweep_job, jobs))  # map keeps expansion order
    rows = []
    for (name, cfg), st in zip(points, statuses):
        if st.csv_row is not None:
            rows.append(st.csv_row)
        else:
            u = cfg.user
            rows.append(dict(pkg=u.pkg_type, reach_mm=float(u.reach_mm), pitch_um=float(u.bump_pitch_um),
                             rate_Gbps=float(u.data_rate_Gbps), lanes=u.lane_count, feasible=False,
                             selection=strategy or u.pareto_selection))
    agg = "sweep_metrics.csv"
    _write_atomic(out_dir / agg, csv_text(rows))
    man = RunManifest("sweep", spec.base.fingerprint, statuses, started, time.perf_counter() - t0, workers, [agg])
    man.write(out_dir)
    return man


def summary_line(man: RunManifest) -> str:
    counts: dict[str, int] = {}
    for p in man.points:
        counts[p.status] = counts.get(p.status, 0) + 1
    parts = ", ".join(f"{k}={v}" for k, v in sorted(counts.items()))
    return f"{man.mode}: {len(man.points)} point(s), {parts}, {man.wall_s:.1f} s"

