import math
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from d2dlink.adaptation import (EQ_ALPHA, eq_level, select_eq, select_termination, termination_energy,
                                termination_level, unterm_reach_mm)
from d2dlink.channel import build_ladder, summarize

from . import oracles as O
from .conftest import make_cfg

TABLE2 = {0.5: "none", 1.0: "none", 1.1: "light", 1.25: "light", 1.4: "standard", 1.5: "standard", 2.0: "strong"}


@pytest.mark.parametrize("rho,level", sorted(TABLE2.items()))
def test_termination_table_with_ties_low(rho, level):
    assert termination_level(rho) == level


@given(st.floats(0, 10), st.floats(0, 10))
def test_termination_level_monotone(a, b):
    order = ("none", "light", "standard", "strong")
    lo, hi = sorted((a, b))
    assert order.index(termination_level(lo)) <= order.index(termination_level(hi))


def test_unterm_boundary_interpolates_and_clamps():
    assert unterm_reach_mm(make_cfg(data_rate_Gbps=8)) == 25
    assert unterm_reach_mm(make_cfg(data_rate_Gbps=12)) == pytest.approx(21.5)
    assert unterm_reach_mm(make_cfg(data_rate_Gbps=4)) == 25
    assert unterm_reach_mm(make_cfg(data_rate_Gbps=64)) == 9


def test_termination_plan_values():
    cfg = make_cfg(reach_mm=30, data_rate_Gbps=8)  # rho = 1.2
    t = select_termination(cfg)
    assert t.level == "light" and t.r_term_ohm == 100 and t.c_ac_F is None and t.v_term_V == 0.4
    cfg_ac = make_cfg(reach_mm=60, data_rate_Gbps=8, ac_coupled=True)  # rho = 2.4
    t = select_termination(cfg_ac)
    assert t.level == "strong" and t.r_term_ohm == 25 and t.c_ac_F == pytest.approx(2e-12)
    assert select_termination(make_cfg(reach_mm=5)).e_term_J_per_bit == 0


def test_termination_energy_matches_oracle():
    rng = random.Random(5)
    for _ in range(100):
        args = (rng.uniform(20, 200), rng.uniform(1e4, 1e7), rng.uniform(0.5, 1.2), rng.uniform(1, 64),
                rng.uniform(0.1, 1), rng.uniform(1e-12, 1e-10))
        assert O.rel(termination_energy(*args), O.term_energy(*args)) < 1e-9


def test_termination_energy_zero_when_unterminated():
    assert termination_energy(None, 1e6, 0.8, 16, 0.5, 1e-11) == 0.0


@pytest.mark.parametrize("loss,level", [(0.5, "none"), (1.0, "none"), (1.5, "l1"), (2.0, "l1"), (3.0, "l2"),
                                        (3.5, "l2"), (4.0, "l3"), (5.0, "l3"), (6.0, "aggressive")])
def test_eq_level_ties_low(loss, level):
    assert eq_level(loss, (1.0, 2.0, 3.5, 5.0)) == level


def test_eq_disabled_returns_none():
    cfg = make_cfg(reach_mm=50, data_rate_Gbps=64)
    lad = build_ladder(cfg)
    assert not select_eq(cfg, summarize(lad, cfg.vdd, 64), lad).enabled


def test_eq_zero_equals_f3db_uncapped():
    rng = random.Random(6)
    seen = set()
    for _ in range(300):
        cfg = make_cfg(pkg_type="si", bump_pitch_um=25, reach_mm=rng.uniform(4, 40), data_rate_Gbps=rng.uniform(8, 64),
                       passive_eq_en=True, adaptation_hidden={"eq_latency_cap_ui": 1e6})
        lad = build_ladder(cfg)
        s = summarize(lad, cfg.vdd, cfg.user.data_rate_Gbps)
        eq = select_eq(cfg, s, lad)
        if not eq.enabled:
            continue
        assert not eq.capped
        seen.add(eq.level)
        assert eq.alpha == EQ_ALPHA[eq.level]
        assert abs(eq.f_zero_Hz - s.f_3db_Hz) / s.f_3db_Hz < 1e-12
    assert seen  # at least some EQ levels exercised


def test_eq_latency_cap_applies():
    cfg = make_cfg(pkg_type="si", bump_pitch_um=25, reach_mm=30, data_rate_Gbps=32, passive_eq_en=True,
                   adaptation_hidden={"eq_latency_cap_ui": 1e-6})
    lad = build_ladder(cfg)
    eq = select_eq(cfg, summarize(lad, cfg.vdd, 32), lad)
    assert eq.enabled and eq.capped
    assert eq.r_eq_ohm == pytest.approx(1e-6 * cfg.ui_s / lad.c_downstream("tx_pad"))
