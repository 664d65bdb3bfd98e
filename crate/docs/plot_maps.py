#!/usr/bin/env python3
"""Quick-look plots for smartspin CSV outputs (not part of the tool).

Usage: plot_maps.py <csv> [out.png]
Picks a renderer from the header row.
"""
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def pivot(rows, x, y, z):
    xs = sorted(set(r[x] for r in rows))
    ys = sorted(set(r[y] for r in rows))
    grid = np.full((len(xs), len(ys)), np.nan)
    xi = {v: i for i, v in enumerate(xs)}
    yi = {v: i for i, v in enumerate(ys)}
    for r in rows:
        grid[xi[r[x]], yi[r[y]]] = r[z]
    return np.array(xs), np.array(ys), grid


def main():
    path = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else path.rsplit(".", 1)[0] + ".png"
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        rows = [dict(zip(header, map(float, line.split(",")))) for line in fh if line.strip()]

    fig, ax = plt.subplots(figsize=(5, 4), dpi=150)
    if header[:2] == ["delta_nu_mhz", "delta_omega_frac"]:
        xs, ys, grid = pivot(rows, "delta_nu_mhz", "delta_omega_frac", "fidelity")
        im = ax.pcolormesh(ys, xs, grid, vmin=0, vmax=1, shading="auto")
        ax.set_xlabel("amplitude offset (frac)")
        ax.set_ylabel("detuning offset (MHz)")
        fig.colorbar(im, label="fidelity")
    elif header[:2] == ["sigma_nu_mhz", "sigma_omega_frac"]:
        xs, ys, grid = pivot(rows, "sigma_nu_mhz", "sigma_omega_frac", "infidelity")
        im = ax.pcolormesh(ys, xs, np.log10(np.maximum(grid, 1e-12)), shading="auto")
        ax.set_xlabel("sigma_omega (frac)")
        ax.set_ylabel("sigma_nu (MHz)")
        fig.colorbar(im, label="log10 infidelity")
    elif header[0] == "t_us" and "x" in header:
        ax.plot([r["x"] for r in rows], [r["y"] for r in rows], lw=0.8)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_aspect("equal")
    elif header[0] == "freq_mhz":
        ax.semilogy([r["freq_mhz"] for r in rows], [max(r["susceptibility"], 1e-12) for r in rows])
        ax.set_xlabel("probe frequency (MHz)")
        ax.set_ylabel("susceptibility")
    elif header[0] == "ramp_time_us":
        for key in sorted(set((r["dnu1_mhz"], r["dnu2_mhz"]) for r in rows)):
            sel = [r for r in rows if (r["dnu1_mhz"], r["dnu2_mhz"]) == key]
            sel.sort(key=lambda r: r["ramp_time_us"])
            ax.plot([r["ramp_time_us"] for r in sel], [r["p_s11"] for r in sel], lw=0.8)
        ax.set_xlabel("ramp time (us)")
        ax.set_ylabel("P S(1,1)")
    elif header[0] == "epsilon_ghz":
        for col in header[1:]:
            ax.plot([r["epsilon_ghz"] for r in rows], [r[col] for r in rows], lw=0.8)
        ax.set_xlabel("epsilon (GHz)")
        ax.set_ylabel("energy (GHz)")
    else:
        raise SystemExit(f"no renderer for columns {header}")
    fig.tight_layout()
    fig.savefig(out)
    print(out)


if __name__ == "__main__":
    main()
