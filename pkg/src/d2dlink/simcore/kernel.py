"""Compiled fixed-step TR-BDF2 integrator for inverter chains around a linear RC network.

Coupling is one-way (gate inputs load their driver only through fixed capacitance),
so every step is solved exactly in order: stimulus, chain A, network, chain B.
The network carries at most one switched driver, handled by a rank-1
Sherman-Morrison update on precomputed inverses.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

GAMMA = 2.0 - math.sqrt(2.0)
BDF_K = (1.0 - GAMMA) / (2.0 - GAMMA)
BDF_A = 1.0 / (GAMMA * (2.0 - GAMMA))
BDF_B = (1.0 - GAMMA) ** 2 / (GAMMA * (2.0 - GAMMA))


@njit(cache=True, nogil=True)
def _stim(t, v_from, v_to, t_ramp):
    if t_ramp <= 0.0:
        return v_to
    x = t / t_ramp
    if x <= 0.0:
        return v_from
    if x >= 1.0:
        return v_to
    return v_from + (v_to - v_from) * x


@njit(cache=True, nogil=True)
def _cond(u, gn, gp, vdd, half, width):
    """Pull-down and pull-up conductance for gate voltage u (dead zone at vdd/2)."""
    xn = (u - half) / width
    xp = (half - u) / width
    if xn < 0.0:
        xn = 0.0
    elif xn > 1.0:
        xn = 1.0
    if xp < 0.0:
        xp = 0.0
    elif xp > 1.0:
        xp = 1.0
    return gn * xn, gp * xp


@njit(cache=True, nogil=True)
def _scalar_stage(v0, u0, ug, u1, gn, gp, c, vdd, half, width, h, e_acc, k):
    """One TR-BDF2 step of a single inverter output node; accumulates supply energy."""
    gn0, gp0 = _cond(u0, gn, gp, vdd, half, width)
    gng, gpg = _cond(ug, gn, gp, vdd, half, width)
    gn1, gp1 = _cond(u1, gn, gp, vdd, half, width)
    a1 = 2.0 * c / (GAMMA * h)
    vg = ((a1 - gn0 - gp0) * v0 + (gp0 + gpg) * vdd) / (a1 + gng + gpg)
    a2 = c / (BDF_K * h)
    v1 = (a2 * (BDF_A * vg - BDF_B * v0) + gp1 * vdd) / (a2 + gn1 + gp1)
    i0 = gp0 * (vdd - v0)
    ig = gpg * (vdd - vg)
    i1 = gp1 * (vdd - v1)
    e_acc[k] += vdd * (0.5 * (i0 + ig) * GAMMA * h + 0.5 * (ig + i1) * (1.0 - GAMMA) * h)
    return vg, v1


@njit(cache=True, nogil=True)
def _cross(t0, t1, v0, v1, level):
    if v1 == v0:
        return t0
    return t0 + (level - v0) / (v1 - v0) * (t1 - t0)


@njit(cache=True, nogil=True)
def run_kernel(
    v_init, v_final, vdd, width, h, t_max, max_steps,
    v_from, v_to, t_ramp,
    a_gn, a_gp, a_c, a_in,
    drv_gn, drv_gp, drv_in, drv_node,
    net_off, P1, Q2, w1, w2, z1, z2, zs1, zs2, gsrc,
    b_gn, b_gp, b_c, b_in,
    probes, levels, settle_tol, check_every, record_every,
):
    n_state = v_init.shape[0]
    n_a = a_gn.shape[0]
    n_net = w1.shape[0]
    n_b = b_gn.shape[0]
    b_off = net_off + n_net
    half = 0.5 * vdd
    n_probe = probes.shape[0]

    v0 = v_init.copy()
    vg = np.empty(n_state)
    v1 = np.empty(n_state)
    e_stage = np.zeros(n_a + 1 + n_b)
    e_src = 0.0
    cross_t = np.full((n_probe, levels.shape[1]), np.nan)
    # crossing direction per probe from its own swing
    sign = np.empty(n_probe)
    for p in range(n_probe):
        sign[p] = 1.0 if v_final[probes[p]] >= v_init[probes[p]] else -1.0

    n_rec = 0
    if record_every > 0:
        rec = np.empty((max_steps // record_every + 2, n_state + 1))
        rec[0, 0] = 0.0
        rec[0, 1:] = v0
        n_rec = 1
    else:
        rec = np.empty((0, n_state + 1))

    y = np.empty(n_net)
    tmp = np.empty(n_net)
    t = 0.0
    step = 0
    done = False
    while step < max_steps and not done:
        tg = t + GAMMA * h
        t1 = t + h
        v0[0] = _stim(t, v_from, v_to, t_ramp)
        # stimulus
        vg[0] = _stim(tg, v_from, v_to, t_ramp)
        v1[0] = _stim(t1, v_from, v_to, t_ramp)
        u_src0 = v0[0]
        # chain A
        for k in range(n_a):
            i = 1 + k
            j = a_in[k]
            vg[i], v1[i] = _scalar_stage(v0[i], v0[j], vg[j], v1[j], a_gn[k], a_gp[k], a_c[k],
                                         vdd, half, width, h, e_stage, k)
        # network
        if n_net > 0:
            if drv_node >= 0:
                dn0, dp0 = _cond(v0[drv_in], drv_gn, drv_gp, vdd, half, width)
                dng, dpg = _cond(vg[drv_in], drv_gn, drv_gp, vdd, half, width)
                dn1, dp1 = _cond(v1[drv_in], drv_gn, drv_gp, vdd, half, width)
            else:
                dn0 = dp0 = dng = dpg = dn1 = dp1 = 0.0
            d = drv_node
            vd0 = v0[net_off + d] if d >= 0 else 0.0
            # stage 1 (trapezoid over gamma*h)
            coef = 0.0
            if d >= 0:
                coef = (dp0 + dpg) * vdd - (dn0 + dp0) * vd0
            cs = gsrc * (u_src0 + vg[0])
            for r in range(n_net):
                acc = w1[r] + z1[r] * coef + zs1[r] * cs
                for c in range(n_net):
                    acc += P1[r, c] * v0[net_off + c]
                y[r] = acc
            if d >= 0:
                gg = dng + dpg
                f = gg * y[d] / (1.0 + gg * z1[d])
                for r in range(n_net):
                    y[r] -= z1[r] * f
            for r in range(n_net):
                vg[net_off + r] = y[r]
            # stage 2 (BDF2)
            for r in range(n_net):
                tmp[r] = BDF_A * y[r] - BDF_B * v0[net_off + r]
            coef = dp1 * vdd if d >= 0 else 0.0
            cs = gsrc * v1[0]
            for r in range(n_net):
                acc = w2[r] + z2[r] * coef + zs2[r] * cs
                for c in range(n_net):
                    acc += Q2[r, c] * tmp[c]
                v1[net_off + r] = acc
            if d >= 0:
                gg = dn1 + dp1
                f = gg * v1[net_off + d] / (1.0 + gg * z2[d])
                for r in range(n_net):
                    v1[net_off + r] -= z2[r] * f
                vdg = vg[net_off + d]
                vd1 = v1[net_off + d]
                i0 = dp0 * (vdd - vd0)
                ig = dpg * (vdd - vdg)
                i1 = dp1 * (vdd - vd1)
                e_stage[n_a] += vdd * (0.5 * (i0 + ig) * GAMMA * h + 0.5 * (ig + i1) * (1.0 - GAMMA) * h)
            if gsrc > 0.0:
                # ideal source energy, u * gsrc * (u - v_node0)
                i0 = gsrc * (u_src0 - v0[net_off])
                ig = gsrc * (vg[0] - vg[net_off])
                i1 = gsrc * (v1[0] - v1[net_off])
                e_src += 0.5 * (u_src0 * i0 + vg[0] * ig) * GAMMA * h + 0.5 * (vg[0] * ig + v1[0] * i1) * (1.0 - GAMMA) * h
        # chain B
        for k in range(n_b):
            i = b_off + k
            j = b_in[k]
            vg[i], v1[i] = _scalar_stage(v0[i], v0[j], vg[j], v1[j], b_gn[k], b_gp[k], b_c[k],
                                         vdd, half, width, h, e_stage, n_a + 1 + k)
        # crossings
        for p in range(n_probe):
            q = probes[p]
            for l in range(levels.shape[1]):
                if math.isnan(cross_t[p, l]):
                    lev = levels[p, l]
                    s = sign[p]
                    if s * (vg[q] - lev) >= 0.0:
                        cross_t[p, l] = _cross(t, tg, v0[q], vg[q], lev)
                    elif s * (v1[q] - lev) >= 0.0:
                        cross_t[p, l] = _cross(tg, t1, vg[q], v1[q], lev)
        for i in range(n_state):
            v0[i] = v1[i]
        t = t1
        step += 1
        if record_every > 0 and step % record_every == 0:
            rec[n_rec, 0] = t
            rec[n_rec, 1:] = v0
            n_rec += 1
        if step % check_every == 0 and t >= t_ramp:
            ok = True
            for p in range(n_probe):
                for l in range(levels.shape[1]):
                    if math.isnan(cross_t[p, l]):
                        ok = False
            if ok:
                for i in range(n_state):
                    if abs(v0[i] - v_final[i]) > settle_tol:
                        ok = False
                        break
            done = ok
        if t >= t_max:
            break
    return cross_t, e_stage, e_src, t, step, v0, rec[:n_rec]
