#!/usr/bin/env python3
"""Writes data/case14.json from the public IEEE 14-bus test case.

Values are converted to per-unit on a 100 MVA base. Transformer tap ratios are
dropped (the model has no transformers). Thermal ratings are not part of the
original case; they are set from an AC power flow at the case's own dispatch.
"""
import json
import pathlib
import sys

import numpy as np

BASE_MVA = 100.0

# bus  Pd     Qd     Bs
BUSES = [
    (1, 0.0, 0.0, 0.0), (2, 21.7, 12.7, 0.0), (3, 94.2, 19.0, 0.0), (4, 47.8, -3.9, 0.0),
    (5, 7.6, 1.6, 0.0), (6, 11.2, 7.5, 0.0), (7, 0.0, 0.0, 0.0), (8, 0.0, 0.0, 0.0),
    (9, 29.5, 16.6, 19.0), (10, 9.0, 5.8, 0.0), (11, 3.5, 1.8, 0.0), (12, 6.1, 1.6, 0.0),
    (13, 13.5, 5.8, 0.0), (14, 14.9, 5.0, 0.0),
]
# bus  Pg     Vg     Qmax Qmin Pmax   c2         c1
GENS = [
    (1, 232.4, 1.060, 10.0, 0.0, 332.4, 0.0430293, 20.0),
    (2, 40.0, 1.045, 50.0, -40.0, 140.0, 0.25, 20.0),
    (3, 0.0, 1.010, 40.0, 0.0, 100.0, 0.01, 40.0),
    (6, 0.0, 1.070, 24.0, -6.0, 100.0, 0.01, 40.0),
    (8, 0.0, 1.090, 24.0, -6.0, 100.0, 0.01, 40.0),
]
# from to  r        x        b
BRANCHES = [
    (1, 2, 0.01938, 0.05917, 0.0528), (1, 5, 0.05403, 0.22304, 0.0492),
    (2, 3, 0.04699, 0.19797, 0.0438), (2, 4, 0.05811, 0.17632, 0.0340),
    (2, 5, 0.05695, 0.17388, 0.0346), (3, 4, 0.06701, 0.17103, 0.0128),
    (4, 5, 0.01335, 0.04211, 0.0), (4, 7, 0.0, 0.20912, 0.0), (4, 9, 0.0, 0.55618, 0.0),
    (5, 6, 0.0, 0.25202, 0.0), (6, 11, 0.09498, 0.19890, 0.0), (6, 12, 0.12291, 0.25581, 0.0),
    (6, 13, 0.06615, 0.13027, 0.0), (7, 8, 0.0, 0.17615, 0.0), (7, 9, 0.0, 0.11001, 0.0),
    (9, 10, 0.03181, 0.08450, 0.0), (9, 14, 0.12711, 0.27038, 0.0), (10, 11, 0.08205, 0.19207, 0.0),
    (12, 13, 0.22092, 0.19988, 0.0), (13, 14, 0.17093, 0.34802, 0.0),
]
RATING_MARGIN = 1.3
EMERGENCY_FACTOR = 1.2
MIN_RATING = 0.1


def series(r, x):
    d = r * r + x * x
    return r / d, -x / d


def branch_flows(v, th, g, b, bch, o, d):
    t = th[o] - th[d]
    po = g * v[o] ** 2 - g * np.cos(t) * v[o] * v[d] - b * np.sin(t) * v[o] * v[d]
    qo = -(b + bch / 2) * v[o] ** 2 + b * np.cos(t) * v[o] * v[d] - g * np.sin(t) * v[o] * v[d]
    return po, qo


def power_flow():
    n = len(BUSES)
    y = np.zeros((n, n), dtype=complex)
    for f, t, r, x, bch in BRANCHES:
        g, b = series(r, x)
        ys = complex(g, b)
        i, j = f - 1, t - 1
        y[i, i] += ys + 0.5j * bch
        y[j, j] += ys + 0.5j * bch
        y[i, j] -= ys
        y[j, i] -= ys
    for k, (_, _, _, bs) in enumerate(BUSES):
        y[k, k] += 1j * bs / BASE_MVA
    pg = np.zeros(n)
    vset = {}
    for bus, p, vg, *_ in GENS:
        pg[bus - 1] += p / BASE_MVA
        vset[bus - 1] = vg
    pd = np.array([b[1] for b in BUSES]) / BASE_MVA
    qd = np.array([b[2] for b in BUSES]) / BASE_MVA
    slack = 0
    pv = [k for k in vset if k != slack]
    pq = [k for k in range(n) if k not in vset]
    v = np.ones(n)
    for k, vg in vset.items():
        v[k] = vg
    th = np.zeros(n)
    ang = [k for k in range(n) if k != slack]
    for _ in range(30):
        vc = v * np.exp(1j * th)
        s = vc * np.conj(y @ vc)
        mis = np.concatenate([(s.real - (pg - pd))[ang], (s.imag + qd)[pq]])
        if np.max(np.abs(mis)) < 1e-12:
            break
        # Finite-difference Jacobian is plenty for 14 buses.
        z = np.concatenate([th[ang], v[pq]])
        jac = np.zeros((len(mis), len(z)))
        for c in range(len(z)):
            zz = z.copy()
            zz[c] += 1e-7
            th2, v2 = th.copy(), v.copy()
            th2[ang] = zz[: len(ang)]
            v2[pq] = zz[len(ang):]
            vc2 = v2 * np.exp(1j * th2)
            s2 = vc2 * np.conj(y @ vc2)
            mis2 = np.concatenate([(s2.real - (pg - pd))[ang], (s2.imag + qd)[pq]])
            jac[:, c] = (mis2 - mis) / 1e-7
        z = z - np.linalg.solve(jac, mis)
        th[ang] = z[: len(ang)]
        v[pq] = z[len(ang):]
    else:
        sys.exit("power flow did not converge")
    return v, th


def main(out):
    v, th = power_flow()
    buses = []
    for bus, pd, qd, bs in BUSES:
        rec = {"id": str(bus), "v_min_base": 0.94, "v_max_base": 1.06, "v_min_emer": 0.90,
               "v_max_emer": 1.10}
        if pd:
            rec["p_load"] = pd / BASE_MVA
        if qd:
            rec["q_load"] = qd / BASE_MVA
        if bs:
            rec["b_shunt"] = bs / BASE_MVA
        buses.append(rec)
    gens = []
    for bus, _, _, qmax, qmin, pmax, c2, c1 in GENS:
        gens.append({
            "id": f"G{bus}", "bus": str(bus), "p_min": 0.0, "p_max": pmax / BASE_MVA,
            "q_min": qmin / BASE_MVA, "q_max": qmax / BASE_MVA, "drop_const": pmax / BASE_MVA,
            "cost": {"c0": 0.0, "c1": round(c1 * BASE_MVA, 10),
                     "c2": round(c2 * BASE_MVA * BASE_MVA, 10)},
        })
    branches = []
    for f, t, r, x, bch in BRANCHES:
        g, b = series(r, x)
        po, qo = branch_flows(v, th, g, b, bch, f - 1, t - 1)
        pd_, qd_ = branch_flows(v, th, g, b, bch, t - 1, f - 1)
        smax = max(np.hypot(po, qo) / v[f - 1], np.hypot(pd_, qd_) / v[t - 1])
        rate = round(max(RATING_MARGIN * smax, MIN_RATING), 4)
        branches.append({
            "id": f"L{f}-{t}", "from_bus": str(f), "to_bus": str(t), "g_series": g,
            "b_series": b, "b_charge": bch, "rate_base": rate,
            "rate_emer": round(EMERGENCY_FACTOR * rate, 4),
        })
    contingencies = [{"id": f"gen-{g['id']}", "kind": "generator", "element": g["id"]} for g in gens]
    for e in branches:
        if e["id"] == "L7-8":  # radial: islands bus 8
            continue
        contingencies.append({"id": f"line-{e['id']}", "kind": "branch", "element": e["id"]})
    curve = {"slope1": 1e5, "slope2": 5e5, "bin1_width": 0.02}
    doc = {"name": "case14", "base_mva": BASE_MVA, "buses": buses, "generators": gens,
           "branches": branches, "penalties": {"s": curve, "p": curve, "q": curve},
           "contingencies": contingencies}
    pathlib.Path(out).write_text(json.dumps(doc, indent=1) + "\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "data/case14.json")
