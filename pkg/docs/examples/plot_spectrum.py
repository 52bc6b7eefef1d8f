"""Plot one or more spectrum/profile CSVs emitted by the runner.

Usage:
    python plot_spectrum.py out_fig2/transmission_spectrum_*.csv

The package itself never renders plots; this script is the reference for
turning its CSV output into figures.  The x axis is taken from the first
column (detuning_khz for spectra, time_us for profiles) and each file
becomes one labelled curve.
"""

import csv
import sys

import matplotlib.pyplot as plt


def load(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    x = [float(r[0]) for r in body]
    y = [float(r[1]) for r in body]
    # channel plus the fixed scan coordinate make a usable label
    label = f"{body[0][2]} ({header[3]}={body[0][3]})"
    return header[0], x, y, label


def main(paths):
    if not paths:
        raise SystemExit(__doc__)
    xlabel = None
    for path in paths:
        xlabel, x, y, label = load(path)
        plt.plot(x, y, label=label)
    plt.xlabel(xlabel)
    plt.ylabel("value")
    plt.legend()
    plt.tight_layout()
    plt.show()


if __name__ == "__main__":
    main(sys.argv[1:])
