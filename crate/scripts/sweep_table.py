#!/usr/bin/env python3
"""Full 20-configuration sweep table (LAI 1-7, six LIDFs, VZA 0-60) at a
given NIR dry-matter level; prints rRMSE pairs, means and non-absorbing
anchors for tuning and for freezing expected statistics."""

import sys

import numpy as np

import reference_pipeline as rp
import tune_pipeline as tp

WL = rp.WL
zero = np.zeros_like(WL)

LIDFS = {
    "plan": (1.0, 0.0),
    "erec": (-1.0, 0.0),
    "plag": (0.0, -1.0),
    "extr": (0.0, 1.0),
    "sphe": (-0.35, -0.15),
    "unif": (0.0, 0.0),
}


def main(nir_level, n):
    oc = tp.with_klma(nir_level)
    leaves = tp.sample_leaves(n, np.random.default_rng(7))
    print(f"retained {len(leaves)} leaves; nir_level={nir_level}")

    # precompute leaf optics
    rr, tr = rp.prospect(oc, **rp.REFERENCE_BIOCHEM)
    omega_r = rr + tr
    optics = []
    for cab, car, lma, ewt in leaves:
        r, t = rp.prospect(oc, n_struct=1.5, cab=cab, car=car, anth=0.0,
                           brown=0.0, ewt=ewt, lma=lma)
        optics.append((r, t))
    n15 = np.full_like(WL, 1.5)
    rn, tn = rp.plate_model(n15, np.zeros_like(WL), 1.5)

    configs = []
    for lai in range(1, 8):
        configs.append(("lai", lai, dict(lai=float(lai), ab=(0.0, 0.0), vza=0.0, raa=0.0)))
    for name, ab in LIDFS.items():
        configs.append(("lidf", name, dict(lai=5.0, ab=ab, vza=0.0, raa=0.0)))
    for vza in range(0, 61, 10):
        configs.append(("vza", vza, dict(lai=5.0, ab=(0.0, 0.0), vza=float(vza), raa=180.0)))

    # train DC model on the default configuration
    recs, _ = tp.run(oc, leaves=leaves)
    c, rmse, r2fit = tp.fit_dc(recs)
    print(f"refit DC coefficients: {np.round(c, 4)} rmse={rmse:.5f} r2={r2fit:.3f}")
    cp = (9.3894, -15.1453, -3.5058, -0.0227)

    reductions = []
    for axis, val, cfg in configs:
        d0s, sds, ids_, idp = [], [], [], []
        for (r, t) in optics:
            brf = rp.foursail(r, t, cfg["lai"], cfg["ab"][0], cfg["ab"][1],
                              0.01, 30.0, cfg["vza"], cfg["raa"], zero)
            k, b, _ = rp.regress_brf(brf, omega_r)
            k0, b0, _ = rp.regress_brf(brf, r + t)
            dasf0 = b0 / (1 - k0)
            sd = b / (1 - k)
            dcr = np.exp(c[0] * brf[310] + c[1] * brf[1860] + c[2]) + c[3]
            dcp = np.exp(cp[0] * brf[310] + cp[1] * brf[1860] + cp[2]) + cp[3]
            d0s.append(dasf0)
            sds.append(sd)
            ids_.append(b / (1 - k - dcr))
            idp.append(b / (1 - k - dcp))
        nonabs = rp.foursail(rn, tn, cfg["lai"], cfg["ab"][0], cfg["ab"][1],
                             0.01, 30.0, cfg["vza"], cfg["raa"], zero)[400]
        r_s = tp.rrmse(sds, d0s)
        r_i = tp.rrmse(ids_, d0s)
        r_p = tp.rrmse(idp, d0s)
        m0, ms, mi = np.mean(d0s), np.mean(sds), np.mean(ids_)
        reductions.append((r_s - r_i) / r_s)
        flag = "OK " if r_i < r_s else "BAD"
        anchor = "OK " if abs(mi - nonabs) <= abs(ms - nonabs) else "BAD"
        print(f"{axis}={val:>4}: rrmse sd={r_s:6.2f} id={r_i:6.2f} idp={r_p:6.2f} {flag}"
              f" | d0={m0:.3f} sd={ms:.3f} id={mi:.3f} star={nonabs:.3f}"
              f" ratio={m0/nonabs:.3f} anchor={anchor}")
    print(f"average rrmse reduction: {100*np.mean(reductions):.1f}%")


if __name__ == "__main__":
    nir = float(sys.argv[1]) if len(sys.argv) > 1 else 1.0
    n = int(sys.argv[2]) if len(sys.argv) > 2 else 300
    main(nir, n)
