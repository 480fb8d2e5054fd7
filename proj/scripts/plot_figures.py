#!/usr/bin/env python3
"""Paper-style panels from the CSV/JSON written by scripts/run_figures.sh.

Usage: python3 scripts/plot_figures.py [figures dir]
Writes fig2.png, fig3.png and fig4.png into the same directory.
"""
import json
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd


def csv(path):
    return pd.read_csv(path, comment="#")


def band_surface(ax, path, title):
    df = csv(path)
    n = int(round(np.sqrt(len(df))))
    kx = df["kx"].to_numpy().reshape(n, n)
    ky = df["ky"].to_numpy().reshape(n, n)
    for col in [c for c in df.columns if c.startswith("E")]:
        ax.plot_surface(kx, ky, df[col].to_numpy().reshape(n, n), cmap="viridis", linewidth=0, alpha=0.8)
    ax.set_title(title)
    ax.set_xlabel("$k_x d_x$")
    ax.set_ylabel("$k_y d_y$")
    ax.set_zlabel("E / V$_1$")


def dos_bars(ax, path, title, color):
    df = csv(path)
    ax.bar(0.5 * (df["bin_lo"] + df["bin_hi"]), df["count"], width=df["bin_hi"] - df["bin_lo"], color=color)
    ax.set_title(title)
    ax.set_xlabel("E / V$_1$")
    ax.set_ylabel("states")


def fig2(root):
    fig = plt.figure(figsize=(11, 8))
    band_surface(fig.add_subplot(2, 2, 1, projection="3d"), root / "fig2_bands_square/bands.csv", "square bands")
    band_surface(fig.add_subplot(2, 2, 2, projection="3d"), root / "fig2_bands_lieb/bands.csv", "Lieb bands")
    ax = fig.add_subplot(2, 2, 3)
    dos_bars(ax, root / "fig2_dos_square/dos.csv", "square DOS (361 sites)", "tab:green")
    inset = ax.inset_axes([0.62, 0.55, 0.35, 0.4])
    dos_bars(inset, root / "fig2_dos_square_large/dos.csv", "2601", "tab:green")
    ax = fig.add_subplot(2, 2, 4)
    dos_bars(ax, root / "fig2_dos_lieb/dos.csv", "Lieb DOS (280 sites)", "tab:blue")
    inset = ax.inset_axes([0.62, 0.55, 0.35, 0.4])
    dos_bars(inset, root / "fig2_dos_lieb_large/dos.csv", "1976", "tab:blue")
    fig.tight_layout()
    fig.savefig(root / "fig2.png", dpi=150)


def fig3(root):
    fig, (a, b) = plt.subplots(1, 2, figsize=(11, 4))
    data = csv(Path(__file__).resolve().parent.parent / "data/fig3d_synthetic.csv")
    curve = csv(root / "fig3d_fit/fit_curve.csv")
    a.plot(data.iloc[:, 0], data.iloc[:, 1], "o", label="synthetic fixture")
    a.plot(curve["lambda_nm"], curve["V_fit_cm-1"], "-", label="quadratic fit")
    a.set_xlabel("$\\lambda$ (nm)")
    a.set_ylabel("V (cm$^{-1}$)")
    a.legend()
    for name, color, label in [("square", "tab:green", "square"), ("lieb_a", "k", "Lieb A"), ("lieb_b", "tab:blue", "Lieb B")]:
        df = csv(root / f"fig3e_sweep/sweep_{name}.csv")
        b.plot(df["lambda_nm"], df["R"], "o-", color=color, label=label)
    b.set_xlabel("$\\lambda$ (nm)")
    b.set_ylabel("R")
    b.legend()
    fig.tight_layout()
    fig.savefig(root / "fig3.png", dpi=150)


def profile_image(ax, path, title):
    df = csv(path)
    lattice = df[df["sublattice"] != "E"]
    ax.scatter(lattice["x_um"], lattice["y_um"], c=lattice["intensity"], s=18, cmap="inferno")
    em = df[df["sublattice"] == "E"]
    ax.scatter(em["x_um"], em["y_um"], c="cyan", s=30, marker="s")
    ax.set_aspect("equal")
    ax.set_title(title, fontsize=9)
    ax.set_xticks([])
    ax.set_yticks([])


def fig4(root):
    runs = [("fig4_square_weak", "square V$_2$/V$_1$=0.5", "tab:red"),
            ("fig4_square_strong", "square V$_2$/V$_1$=1.5", "tab:green"),
            ("fig4_lieb_A_weak", "Lieb A V$_2$/V$_1$=0.5", "tab:red"),
            ("fig4_lieb_B_weak", "Lieb B V$_2$/V$_1$=0.5", "tab:blue")]
    fig = plt.figure(figsize=(12, 7))
    for i, (name, label, _) in enumerate(runs):
        profile_image(fig.add_subplot(2, 4, i + 1), root / name / "profile_z5.csv", label + ", z=5 cm")
    ax = fig.add_subplot(2, 2, 3)
    for name, label, color in runs[:2]:
        df = csv(root / name / "qe_population.csv")
        ax.plot(df["z"], df["qe_population"], color=color, label=label)
    ax.set_xlabel("z (cm)")
    ax.set_ylabel("emitter population")
    ax.legend()
    ax = fig.add_subplot(2, 2, 4)
    for name, label, color in runs[2:]:
        df = csv(root / name / "qe_population.csv")
        ax.plot(df["z"], df["qe_population"], color=color, label=label)
    ax.set_xlabel("z (cm)")
    ax.legend()
    fig.tight_layout()
    fig.savefig(root / "fig4.png", dpi=150)


def main():
    root = Path(sys.argv[1] if len(sys.argv) > 1 else "figures")
    fig2(root)
    fig3(root)
    fig4(root)
    for name in ["fig4_square_weak", "fig4_square_strong", "fig4_lieb_A_weak", "fig4_lieb_B_weak"]:
        rep = json.loads((root / name / "revivals.json").read_text())
        print(f"{name}: decayed={rep['decayed']} revivals={len(rep['revivals'])} max={rep['max_revival']:.3g}")


if __name__ == "__main__":
    main()
