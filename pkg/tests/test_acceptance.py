"""The twelve acceptance criteria, one test each; a summary line per criterion prints at the end of the run."""

import csv
import json
import math
import random
import time

import numpy as np
import pytest

from d2dlink.adaptation import (EQ_ALPHA, EQ_LEVELS, select_eq, termination_energy, termination_level)
from d2dlink.channel import bump_rc, build_ladder, pad_cap, summarize, trace_rc, ucie_pad_cap
from d2dlink.collateral import cell_tables, expected_tables, parse_lef_macros, parse_liberty
from d2dlink.config import ChannelHidden, from_dict, sweep_from_dict
from d2dlink.coopt import dominates, pareto_front
from d2dlink.driver import run_sweep
from d2dlink.simcore import Stimulus, solve_transient
from d2dlink.simcore.tables import interpolate
from d2dlink.simcore.transient import STIM

from . import oracles as O
from .conftest import GOLDEN, make_cfg
from .test_collateral import verilog_diagnostics
from .test_coopt import _table, brute_front, pt
from .test_simcore import dense_oracle, rc_ladder

ORG = dict(pkg_type="org", bump_pitch_um=112.64)
SI = dict(pkg_type="si", bump_pitch_um=25.0)


def test_c01_channel_formula_suite(criterion):
    with criterion(1, "channel formula suite vs oracles, lumped Elmore exact, < 1 s") as c:
        t0 = time.perf_counter()
        rng = random.Random(11)
        worst = 0.0
        h = ChannelHidden()
        for _ in range(100):
            p = rng.uniform(10, 150)
            d, hgt = p * rng.uniform(0.3, 0.8), rng.uniform(10, 60)
            er, t = rng.uniform(3, 4.5), rng.uniform(0.5, 25)
            rho, f = rng.uniform(1.5e-8, 1e-7), rng.uniform(1e9, 3e10)
            pkg = rng.choice(["si", "org"])
            base = h.trace_base[pkg]
            reach, w = rng.uniform(1, 50), base.ref_width_um * rng.uniform(0.5, 2)
            b = bump_rc(p, d, hgt, er, rho, f)
            tr = trace_rc(pkg, reach, w, 1.0, h)
            r_o, c_o = O.trace_rc(base.c_fF_per_mm, base.r_ohm_per_mm, base.ref_width_um, reach, w)
            r_t, r_b, vdd = rng.uniform(25, 200), rng.uniform(1e4, 1e7), rng.uniform(0.6, 1.1)
            rate, a, t_tr = rng.uniform(2, 64), rng.uniform(0.1, 1), rng.uniform(1e-12, 1e-10)
            errs = [O.rel(pad_cap(p, er, t), O.pad_cap(p, er, t)),
                    O.rel(b.c_F, O.bump_c(p, d, hgt, er)), O.rel(b.r_ohm, O.bump_r(d, hgt, rho, f)),
                    O.rel(tr.r_ohm, r_o), O.rel(tr.c_F, c_o),
                    O.rel(termination_energy(r_t, r_b, vdd, rate, a, t_tr), O.term_energy(r_t, r_b, vdd, rate, a, t_tr))]
            cfg = make_cfg(pkg_type=pkg, reach_mm=reach, bump_pitch_um=p, data_rate_Gbps=rate)
            s = summarize(build_ladder(cfg), cfg.vdd, rate)
            f3 = O.f3db(s.r_ch_ohm, s.c_ch_F)
            errs += [O.rel(s.f_3db_Hz, f3), O.rel(s.loss_nyquist_dB, O.nyquist_loss_db(s.f_ny_Hz, f3))]
            assert s.tau_elmore_s == s.r_ch_ohm * s.c_ch_F
            worst = max(worst, *(float(e) for e in errs))
        dt = time.perf_counter() - t0
        c.detail = f"worst rel err {worst:.1e}"
        assert worst < 1e-9
        assert dt < 1.0, f"took {dt:.2f} s"


def test_c02_pad_energy_calibration(criterion):
    with criterion(2, "pad switching energy: organic 112.64 um in [50, 80] fJ, silicon 25 um in [3, 6] fJ") as c:
        org, si = make_cfg(**ORG), make_cfg(**SI)
        e_org = 0.5 * build_ladder(org).components["chip_pad"].c_F * 0.8**2 * 1e15
        e_si = 0.5 * build_ladder(si).components["chip_pad"].c_F * 0.8**2 * 1e15
        c.detail = f"organic {e_org:.1f} fJ, silicon {e_si:.2f} fJ"
        assert org.vdd == si.vdd == 0.8
        assert 50 <= e_org <= 80 and 3 <= e_si <= 6


def test_c03_ucie_pad_cap(criterion):
    with criterion(3, "UCIe pad cap 300/200/125 fF at 8/16/32 Gb/s"):
        assert [ucie_pad_cap(r)[0] for r in (8, 16, 32)] == [300e-15, 200e-15, 125e-15]


def test_c04_termination_table(criterion):
    with criterion(4, "termination levels incl. ties resolving low"):
        got = [termination_level(r) for r in (0.5, 1.0, 1.1, 1.25, 1.4, 1.5, 2.0)]
        assert got == ["none", "none", "light", "light", "standard", "standard", "strong"]


def test_c05_eq_zero_at_f3db(criterion):
    with criterion(5, "EQ zero 1/(2 pi R_eq C_eq) = f_3dB to 1e-12, every alpha x 50 channels") as c:
        rng = random.Random(12)
        worst, n = 0.0, 0
        for k, level in enumerate(EQ_LEVELS[1:], start=1):
            # thresholds placed so that exactly k of them lie below any positive loss
            th = [1e-12 * (i + 1) if i < k else 1e6 * (i + 1) for i in range(4)]
            for _ in range(50):
                cfg = make_cfg(pkg_type=rng.choice(["si", "org"]), reach_mm=rng.uniform(1, 50),
                               bump_pitch_um=rng.uniform(20, 150), data_rate_Gbps=rng.uniform(2, 64),
                               passive_eq_en=True,
                               adaptation_hidden={"eq_loss_thresholds_dB": th, "eq_latency_cap_ui": 1e9})
                lad = build_ladder(cfg)
                s = summarize(lad, cfg.vdd, cfg.user.data_rate_Gbps)
                eq = select_eq(cfg, s, lad)
                assert eq.level == level and eq.alpha == EQ_ALPHA[level] and not eq.capped
                worst = max(worst, abs(eq.f_zero_Hz - s.f_3db_Hz) / s.f_3db_Hz)
                n += 1
        c.detail = f"{n} channels, worst rel err {worst:.1e}"
        assert worst <= 1e-12


def test_c06_transient_oracle(criterion):
    with criterion(6, "solver: single pole 0.5 %, ladders 0.2 % vs expm oracle, energy 1 %, < 10 s") as c:
        t0 = time.perf_counter()
        net, _ = rc_ladder([1e3], [1e-12])
        res = solve_transient(Stimulus(0.0, 1.0, 0.0), 1.0, net=net, probes=["n0"])
        tau = 1e-9
        e1 = abs(res.delay(STIM, "n0") / (math.log(2) * tau) - 1)
        e2 = abs(res.slew("n0") / (math.log(4) * tau) - 1)
        e3 = abs(res.e_source_J / 1e-12 - 1)
        assert e1 < 5e-3 and e2 < 5e-3 and e3 < 1e-2
        rng = np.random.default_rng(13)
        worst_lad, worst_e = 0.0, e3
        for n in range(1, 6):
            for _ in range(4):
                rs, cs = list(rng.uniform(10, 1e3, n)), list(rng.uniform(1e-14, 1e-12, n))
                net, names = rc_ladder(rs, cs)
                res = solve_transient(Stimulus(0.0, 1.0, 0.0), 1.0, net=net, probes=[names[-1]])
                t20, t50, t80 = dense_oracle(net, names, names[-1])
                worst_lad = max(worst_lad, abs(res.delay(STIM, names[-1]) / t50 - 1),
                                abs(res.slew(names[-1]) / (t80 - t20) - 1))
                worst_e = max(worst_e, abs(res.e_source_J / sum(cs) - 1))
        dt = time.perf_counter() - t0
        c.detail = f"pole {max(e1, e2):.1e}, ladders {worst_lad:.1e}, energy {worst_e:.1e}"
        assert worst_lad < 2e-3 and worst_e < 1e-2
        assert dt < 10, f"took {dt:.1f} s"


def test_c07_coopt_bookkeeping(criterion, reference_run):
    with criterion(7, "campaign count N_TX + N_RX, Pareto vs brute force x 200, LUT exact at nodes") as c:
        pr, _ = reference_run
        u = pr.cfg.user
        assert pr.sizing.n_characterizations == u.n_tx_configs + u.n_rx_configs
        assert len(pr.sizing.tx_tables) + len(pr.sizing.rx_tables) == pr.sizing.n_characterizations
        rng = np.random.default_rng(14)
        for _ in range(200):
            n = int(rng.integers(1, 80))
            pts = [pt(i, float(rng.integers(1, 30)), float(rng.uniform(1, 10)), bool(rng.random() > 0.2))
                   for i in range(n)]
            assert [p.index for p in pareto_front(pts).members] == [p.index for p in brute_front(pts)]
        for table in pr.sizing.tx_tables[:2] + [_table(rng)]:
            for i, s in enumerate(table.slews):
                for j, l in enumerate(table.loads):
                    lk = interpolate(table, s, l)
                    assert lk.delay_rise == table.delay_rise[i, j] and lk.slew_fall == table.slew_fall[i, j]
        c.detail = f"{pr.sizing.n_characterizations} characterizations"


def _best_power_sweep(tmp_path, tag, geom, reaches, workers=1):
    base = from_dict(dict(**geom, reach_mm=reaches[0], data_rate_Gbps=48.0, lane_count=1, pareto_selection="best_power",
                          save_netlists=False, save_lib=False, generate_verilog=False, generate_lef=False))
    man = run_sweep(sweep_from_dict({"reaches_mm": reaches}, base), tmp_path / tag, workers=workers)
    rows = list(csv.DictReader((tmp_path / tag / "sweep_metrics.csv").open()))
    return man, rows


def test_c08_crossover(criterion, tmp_path):
    with criterion(8, "48 Gb/s best-power crossover: si cheaper 2-4 mm, org cheaper >= 15 mm, cross in [5, 20] mm, < 5 min") as c:
        t0 = time.perf_counter()
        reaches = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0]
        _, org = _best_power_sweep(tmp_path, "org", ORG, reaches)
        _, si = _best_power_sweep(tmp_path, "si", SI, reaches)
        assert all(r["feasible"] == "true" for r in org + si)
        e_org = np.array([float(r["e_total_pJ_per_bit"]) for r in org])
        e_si = np.array([float(r["e_total_pJ_per_bit"]) for r in si])
        diff = e_org - e_si
        crossings = []
        for k in range(len(reaches) - 1):
            if diff[k] > 0 >= diff[k + 1]:
                x0, x1 = reaches[k], reaches[k + 1]
                crossings.append(x0 + (x1 - x0) * diff[k] / (diff[k] - diff[k + 1]))
        dt = time.perf_counter() - t0
        c.detail = f"crossover at {', '.join(f'{x:.1f}' for x in crossings) or 'none'} mm"
        assert all(diff[i] > 0 for i, r in enumerate(reaches) if r <= 4)
        assert all(diff[i] < 0 for i, r in enumerate(reaches) if r >= 15)
        assert crossings and all(5 <= x <= 20 for x in crossings)
        assert dt < 300, f"took {dt:.0f} s"


def test_c09_stage_count_step(criterion, tmp_path):
    with criterion(9, "organic 48 Gb/s stage count even, non-decreasing, steps over 2-50 mm, < 10 min") as c:
        t0 = time.perf_counter()
        reaches = [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0]
        _, rows = _best_power_sweep(tmp_path, "org", ORG, reaches)
        assert all(r["feasible"] == "true" for r in rows)
        n = [int(r["n_stages"]) for r in rows]
        dt = time.perf_counter() - t0
        c.detail = "stages " + " ".join(str(x) for x in n)
        assert all(x % 2 == 0 for x in n)
        assert all(a <= b for a, b in zip(n, n[1:]))
        assert len(set(n)) > 1
        assert dt < 600


def test_c10_refinement_consistency(criterion, reference_run):
    with criterion(10, "reference config: refined vs LUT energy < 10 % per point, refined set non-dominated") as c:
        pr, _ = reference_run
        refined = pr.sizing.refined
        assert refined
        shifts = [abs(p.energy_shift) for p in refined]
        front = pr.sizing.refined_front.members
        for a in front:
            assert not any(dominates(b, a) for b in refined if b.feasible)
        c.detail = f"{len(refined)} points, max shift {100 * max(shifts):.3f} %"
        assert max(shifts) < 0.10


def test_c11_collateral_validity(criterion, reference_run):
    with criterion(11, "Liberty round trip, Verilog parses, LEF pins inside macro, golden files byte-for-byte") as c:
        pr, arts = reference_run
        lib = parse_liberty(arts["d2dlink.lib"])
        p = pr.point
        for name, table in (("txip", pr.sizing.tx_tables[p.tx_index]), ("rxip", pr.sizing.rx_tables[p.rx_index])):
            got, want = cell_tables(lib, name), expected_tables(table)
            assert np.array_equal(got.slews_ns, want.slews_ns) and got.c_in_pf == want.c_in_pf
            assert all(np.array_equal(got.grids[k], want.grids[k]) for k in want.grids)
        diags, _ = verilog_diagnostics(arts["d2dlink.v"])
        assert diags == []
        for m in parse_lef_macros(arts["d2dlink.lef"]).values():
            w, h = m["size"]
            assert all(0 <= x1 < x2 <= w and 0 <= y1 < y2 <= h for x1, y1, x2, y2 in m["pins"].values())
        frozen = sorted(f.name for f in GOLDEN.iterdir() if f.is_file())
        for name in frozen:
            assert arts[name] == (GOLDEN / name).read_text(), f"{name} differs from golden"
        c.detail = f"{len(frozen)} golden files"


def test_c12_determinism(criterion, tmp_path):
    with criterion(12, "sweep aggregate CSV byte-identical for 1 and 8 workers"):
        base = from_dict(dict(**ORG, reach_mm=5.0, data_rate_Gbps=32.0, lane_count=4,
                              save_lib=False, generate_verilog=False, generate_lef=False))
        spec = sweep_from_dict({"pkg_types": ["org", "si"], "reaches_mm": [3.0, 12.0, 30.0], "bump_pitches_um": [45.0]}, base)
        run_sweep(spec, tmp_path / "w1", workers=1)
        run_sweep(spec, tmp_path / "w8", workers=8)
        a = (tmp_path / "w1" / "sweep_metrics.csv").read_bytes()
        assert a == (tmp_path / "w8" / "sweep_metrics.csv").read_bytes()
        for d in (tmp_path / "w1").iterdir():
            if d.is_dir():
                for f in d.iterdir():
                    if f.name != "manifest.json":
                        assert f.read_bytes() == (tmp_path / "w8" / d.name / f.name).read_bytes()
