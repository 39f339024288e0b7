"""Plot a Z-process dump written by `zchange zpath`.

Usage: python3 scripts/plot_zpath.py zpath.csv [out.png]

Needs matplotlib, which is not a package dependency.
"""

import sys

import numpy as np


def main() -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    src = sys.argv[1]
    out = sys.argv[2] if len(sys.argv) > 2 else src.rsplit(".", 1)[0] + ".png"
    with open(src) as fh:
        header = fh.readline().strip().split(",")
    data = np.loadtxt(src, delimiter=",", skiprows=1, ndmin=2)
    u = data[:, 0]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    for j, name in enumerate(header[1:-1], start=1):
        ax.plot(u, data[:, j], lw=0.8, label=name)
    ax.plot(u, data[:, -1], color="k", lw=1.2, label="norm")
    k = int(np.argmax(data[:, -1]))
    ax.axvline(u[k], color="r", ls="--", lw=0.8)
    ax.set_xlabel("u")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
