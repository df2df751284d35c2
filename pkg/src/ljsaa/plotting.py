"""Scatter output for coordinates: a gnuplot script and a rendered PNG."""

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

GNUPLOT_TEMPLATE = """\
# kappa/sigma scatter of scenario coordinates
set datafile separator ','
set key top left
set xlabel 'kappa'
set ylabel 'sigma'
set title 'scenario coordinates'
set terminal pngcairo size 800,600
set output 'scatter_gnuplot.png'
plot '{csv}' every ::1 using 2:3 with points pt 7 ps 0.6 title 'scenarios'
"""


def gnuplot_script(csv_name="coordinates.csv"):
    return GNUPLOT_TEMPLATE.format(csv=csv_name)


def write_gnuplot_script(path, csv_name="coordinates.csv"):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(gnuplot_script(csv_name))


def write_scatter_png(path, coords, representatives=None, title="scenario coordinates"):
    """Render usable coordinates; ``representatives`` (indices) are ringed."""
    pts = [c for c in coords if c.usable]
    fig, ax = plt.subplots(figsize=(7, 5), dpi=100)
    ax.scatter([c.kappa for c in pts], [c.sigma for c in pts], s=10, color="tab:blue",
               label="scenarios")
    if representatives:
        reps = set(representatives)
        sel = [c for c in pts if c.k in reps]
        ax.scatter([c.kappa for c in sel], [c.sigma for c in sel], s=60, facecolors="none",
                   edgecolors="tab:red", label="representatives")
    ax.set_xlabel("kappa")
    ax.set_ylabel("sigma")
    ax.set_title(title)
    ax.legend(loc="upper left")
    fig.tight_layout()
    # no Software/date metadata so reruns produce identical files
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
