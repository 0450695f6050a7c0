#!/usr/bin/env python3
"""Builds data/prospect_constants.csv: leaf refractive index and specific
absorption coefficients on the 400-2500 nm, 1 nm grid.

The table is a synthetic reconstruction anchored to published leaf-optics
measurements:
  * n(lambda): smooth decline from ~1.53 (blue) to ~1.38 (SWIR), typical of
    fresh-leaf plate-model calibrations.
  * k_cab (cm^2/ug): in-vivo chlorophyll a+b shape - Soret band near 430 nm,
    red peak near 680 nm, exponential red-edge tail vanishing past ~800 nm.
  * k_car (cm^2/ug): carotenoid absorption confined to 400-560 nm.
  * k_anth (cm^2/ug): anthocyanin green-band absorption near 530 nm.
  * k_brown (unitless): brown-pigment decay from blue to ~900 nm.
  * k_ewt (cm^-1): pure-water absorption (Palmer & Williams / Kou et al.
    anchor points), log-interpolated.
  * k_lma (cm^2/g): dry-matter absorption - weak, nearly flat through the
    NIR plateau, cellulose/lignin features near 1720, 2100 and 2300 nm.

Usage: python3 scripts/make_leaf_absorption_tables.py [out.csv]
"""

import sys

import numpy as np
from scipy.interpolate import PchipInterpolator

WL = np.arange(400, 2501, 1).astype(float)


def pchip(points, clip_zero=True):
    xs = np.array([p[0] for p in points], float)
    ys = np.array([p[1] for p in points], float)
    f = PchipInterpolator(xs, ys, extrapolate=True)
    out = f(WL)
    if clip_zero:
        out = np.maximum(out, 0.0)
    return out


def log_pchip(points):
    xs = np.array([p[0] for p in points], float)
    ys = np.log(np.array([p[1] for p in points], float))
    f = PchipInterpolator(xs, ys, extrapolate=True)
    return np.exp(f(WL))


def gauss(center, width, height):
    return height * np.exp(-0.5 * ((WL - center) / width) ** 2)


def refractive_index():
    return pchip(
        [
            (400, 1.530),
            (450, 1.498),
            (500, 1.472),
            (550, 1.459),
            (600, 1.451),
            (650, 1.446),
            (700, 1.443),
            (800, 1.439),
            (900, 1.436),
            (1000, 1.433),
            (1200, 1.428),
            (1400, 1.424),
            (1600, 1.419),
            (1800, 1.413),
            (2000, 1.406),
            (2200, 1.397),
            (2400, 1.387),
            (2500, 1.382),
        ],
        clip_zero=False,
    )


def k_chlorophyll():
    k = (
        gauss(430, 32, 0.090)
        + gauss(465, 28, 0.045)
        + gauss(550, 60, 0.006)
        + gauss(625, 25, 0.020)
        + gauss(680, 16, 0.062)
    )
    # red-edge tail, anchored so a 16 ug/cm^2 leaf keeps ~0.6 albedo at 710 nm
    tail = pchip(
        [
            (688, 0.0420),
            (695, 0.0260),
            (700, 0.0170),
            (705, 0.0120),
            (710, 0.0088),
            (715, 0.0068),
            (720, 0.0053),
            (730, 0.0034),
            (740, 0.0022),
            (750, 0.0014),
            (760, 0.0009),
            (770, 0.00058),
            (780, 0.00038),
            (790, 0.00024),
            (800, 0.00015),
            (810, 0.00008),
            (820, 0.0),
            (830, 0.0),
        ]
    )
    k = np.where(WL <= 688, k, np.maximum(tail, 0.0))
    k[WL > 820] = 0.0
    return k


def k_carotenoid():
    k = gauss(452, 26, 0.048) + gauss(485, 22, 0.042) + gauss(425, 20, 0.030)
    k[WL > 580] = 0.0
    fade = np.clip((580.0 - WL) / 20.0, 0.0, 1.0)
    return k * np.where(WL > 560, fade, 1.0)


def k_anthocyanin():
    k = gauss(529, 32, 0.045) + gauss(560, 25, 0.018)
    k[WL > 650] = 0.0
    fade = np.clip((650.0 - WL) / 25.0, 0.0, 1.0)
    return k * np.where(WL > 625, fade, 1.0)


def k_brown():
    k = 0.60 * np.exp(-(WL - 400.0) / 180.0)
    k[WL > 1000] = 0.0
    fade = np.clip((1000.0 - WL) / 50.0, 0.0, 1.0)
    return k * np.where(WL > 950, fade, 1.0)


def k_water():
    # cm^-1; anchors follow the pure-water absorption spectrum
    return log_pchip(
        [
            (400, 5.0e-5),
            (500, 2.5e-4),
            (600, 2.2e-3),
            (650, 3.2e-3),
            (700, 6.0e-3),
            (740, 2.5e-2),
            (760, 2.6e-2),
            (800, 2.0e-2),
            (850, 4.3e-2),
            (900, 6.8e-2),
            (950, 2.8e-1),
            (970, 4.5e-1),
            (1000, 3.6e-1),
            (1100, 1.7e-1),
            (1150, 5.0e-1),
            (1200, 1.04),
            (1250, 0.90),
            (1300, 1.20),
            (1350, 2.8),
            (1400, 12.0),
            (1450, 28.5),
            (1500, 20.0),
            (1550, 10.0),
            (1600, 6.7),
            (1650, 5.6),
            (1700, 5.5),
            (1750, 6.3),
            (1800, 8.0),
            (1850, 14.0),
            (1900, 103.0),
            (1940, 125.0),
            (2000, 69.0),
            (2050, 43.0),
            (2100, 26.0),
            (2150, 19.0),
            (2200, 16.5),
            (2260, 19.0),
            (2300, 28.0),
            (2400, 52.0),
            (2500, 78.0),
        ]
    )


def k_dry_matter(nir_level=1.0):
    # cm^2/g; weak nearly-flat NIR baseline, SWIR cellulose/lignin features
    base = pchip(
        [
            (400, 2.0),
            (500, 2.2),
            (600, 2.4),
            (700, 2.6),
            (750, 2.65),
            (800, 2.8),
            (900, 3.0),
            (1000, 3.4),
            (1100, 3.9),
            (1200, 4.4),
            (1300, 5.2),
        ]
    )
    swir = pchip(
        [
            (1300, 5.2),
            (1400, 7.0),
            (1500, 11.0),
            (1600, 18.0),
            (1720, 38.0),
            (1780, 30.0),
            (1850, 26.0),
            (1950, 30.0),
            (2050, 44.0),
            (2100, 52.0),
            (2150, 50.0),
            (2200, 49.0),
            (2260, 60.0),
            (2320, 65.0),
            (2380, 60.0),
            (2450, 54.0),
            (2500, 50.0),
        ]
    )
    return np.where(WL <= 1300, base * nir_level, swir)


def main():
    out = sys.argv[1] if len(sys.argv) > 1 else "data/prospect_constants.csv"
    cols = {
        "n": refractive_index(),
        "k_cab": k_chlorophyll(),
        "k_car": k_carotenoid(),
        "k_anth": k_anthocyanin(),
        "k_brown": k_brown(),
        "k_ewt": k_water(),
        "k_lma": k_dry_matter(),
    }
    with open(out, "w") as f:
        f.write("wavelength_nm," + ",".join(cols.keys()) + "\n")
        for i, wl in enumerate(WL):
            vals = ",".join(f"{cols[c][i]:.8g}" for c in cols)
            f.write(f"{int(wl)},{vals}\n")
    print(f"wrote {out}: {len(WL)} rows")
    for c, v in cols.items():
        print(f"  {c}: min {v.min():.4g} max {v.max():.4g} @710 {v[310]:.4g} @790 {v[390]:.4g} @2260 {v[1860]:.4g}")


if __name__ == "__main__":
    main()
