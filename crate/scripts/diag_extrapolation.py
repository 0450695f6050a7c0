#!/usr/bin/env python3
"""Diagnose how the BRF/albedo-vs-BRF regression extrapolates to albedo=1
in the four-stream model, as a function of leaf albedo and R:T split."""

import numpy as np
import reference_pipeline as rp

WL = rp.WL
zero = np.zeros_like(WL)


def flat_leaf_curve(lai=5.0, ratio=0.47):
    print(f"LAI={lai}: BRF(omega) curve for flat leaves, R = {ratio}*omega")
    us = np.linspace(0.2, 1.0, 17)
    brfs = []
    for u in us:
        r = np.full_like(WL, u * ratio)
        t = np.full_like(WL, u * (1 - ratio))
        brf = rp.foursail(r, t, lai, 0.0, 0.0, 0.01, 30.0, 0.0, 0.0, zero)[400]
        brfs.append(brf)
    brfs = np.array(brfs)
    y = brfs / us
    # secant slope of y vs brf on low range vs near 1
    for i in (2, 8, 14):
        k = (y[i + 1] - y[i]) / (brfs[i + 1] - brfs[i])
        print(f"  omega~{us[i]:.2f}: BRF={brfs[i]:.4f}  local slope={k:.4f}")
    # regression from the [0.4, 0.9] albedo range extrapolated to omega=1
    m = (us >= 0.55) & (us <= 0.95)
    kk, bb, _ = rp.linfit(brfs[m], y[m])
    print(f"  fit on omega in [0.55,0.95]: k={kk:.4f} b={bb:.4f} dasf={bb/(1-kk):.4f} true={brfs[-1]:.4f}")


oc = rp.load_constants()
import make_leaf_absorption_tables as mk
oc = dict(oc)
oc["k_cab"] = mk.k_chlorophyll()
oc["k_lma"] = mk.k_dry_matter(1.0)

rr, tr = rp.prospect(oc, **rp.REFERENCE_BIOCHEM)
omega_r = rr + tr
print("omega_r window:", omega_r[310], omega_r[350], omega_r[390])
print("R share of reference leaf at 750:", rr[350] / omega_r[350])

n15 = np.full_like(WL, 1.5)
rn, tn = rp.plate_model(n15, np.zeros_like(WL), 1.5)
print("non-absorbing leaf: R =", rn[0], "T =", tn[0])

for lai in (1.0, 3.0, 5.0, 7.0):
    nonabs = rp.foursail(rn, tn, lai, 0.0, 0.0, 0.01, 30.0, 0.0, 0.0, zero)[400]
    brf = rp.foursail(rr, tr, lai, 0.0, 0.0, 0.01, 30.0, 0.0, 0.0, zero)
    k, b, r2 = rp.regress_brf(brf, omega_r)
    d0 = b / (1 - k)
    print(f"LAI={lai}: dasf0(ref leaf)={d0:.4f} nonabs={nonabs:.4f} ratio={d0/nonabs:.4f}")

flat_leaf_curve(5.0, ratio=rn[0])
flat_leaf_curve(5.0, ratio=0.5)
