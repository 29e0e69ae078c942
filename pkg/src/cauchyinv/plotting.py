"""Report figures.  Uses the Agg canvas directly, so no pyplot state is touched."""

import math

import matplotlib
import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

golden_mean = (math.sqrt(5.0) - 1.0) / 2.0
fig_width = 6.5

params = {
    "font.family": "DejaVu Sans",
    "font.size": 8,
    "axes.labelsize": 8,
    "axes.titlesize": 9,
    "legend.fontsize": 7,
    "xtick.labelsize": 7,
    "ytick.labelsize": 7,
    "lines.linewidth": 1.0,
    "image.cmap": "gray",
    "image.interpolation": "nearest",
    "savefig.dpi": 120,
}

# PNG metadata normally carries the matplotlib version; drop it for byte-stable files
_SAVE_METADATA = {"Software": None}


def _figure(nrows, ncols, height=None):
    with matplotlib.rc_context(params):
        fig = Figure(figsize=(fig_width, height or fig_width * golden_mean))
        FigureCanvasAgg(fig)
        axes = fig.subplots(nrows, ncols, squeeze=False)
    return fig, axes


def _save(fig, path):
    with matplotlib.rc_context(params):
        fig.tight_layout()
        fig.savefig(path, metadata=_SAVE_METADATA)


def plot_walks(path, walks):
    """``walks`` maps a label to a Grid1D."""
    with matplotlib.rc_context(params):
        fig, axes = _figure(1, len(walks), height=2.4)
        for ax, (label, g) in zip(axes[0], walks.items()):
            ax.plot(g.t, g.values, color="k")
            ax.set_title(label)
            ax.set_xlabel("t")
        _save(fig, path)


def plot_realizations(path, images):
    with matplotlib.rc_context(params):
        fig, axes = _figure(1, len(images), height=fig_width / max(len(images), 1) + 0.4)
        for ax, (label, img) in zip(axes[0], images.items()):
            ax.imshow(img)
            ax.set_title(label)
            ax.set_axis_off()
        _save(fig, path)


def plot_modality(path, a_values=(0.5, 1.0, 2.0)):
    """Conditional densities of a middle value between neighbours -a and a."""
    from .priors import conditional_site_density

    with matplotlib.rc_context(params):
        fig, axes = _figure(1, 3, height=2.2)
        x = np.linspace(-4.0, 4.0, 801)
        for a in a_values:
            d = conditional_site_density(a, x)
            axes[0, 0].plot(x, d / d.max(), label=f"a={a:g}")
            g = np.exp(-0.5 * ((x - a) ** 2 + (x + a) ** 2))
            axes[0, 1].plot(x, g / g.max(), label=f"a={a:g}")
            t = np.exp(-(np.abs(x - a) + np.abs(x + a)))
            axes[0, 2].plot(x, t / t.max(), label=f"a={a:g}")
        for ax, title in zip(axes[0], ("Cauchy", "Gaussian", "TV")):
            ax.set_title(title)
            ax.set_xlabel("middle value")
            ax.legend(frameon=False)
        _save(fig, path)


def plot_deconvolution(path, truth, data, estimates):
    """``estimates`` maps a label to ``(t, values)``."""
    n = len(estimates) + 2
    ncols = 2
    nrows = math.ceil(n / ncols)
    with matplotlib.rc_context(params):
        fig, axes = _figure(nrows, ncols, height=1.8 * nrows)
        flat = axes.ravel()
        flat[0].plot(truth[0], truth[1], color="k")
        flat[0].set_title("truth")
        flat[1].plot(data[0], data[1], ".", color="k", markersize=2)
        flat[1].set_title("noisy data")
        for ax, (label, (t, v)) in zip(flat[2:], estimates.items()):
            ax.plot(truth[0], truth[1], color="0.7")
            ax.plot(t, v, color="k")
            ax.set_title(label)
        for ax in flat[n:]:
            ax.set_axis_off()
        _save(fig, path)


def plot_tomography(path, images, vmin=0.0, vmax=1.0):
    n = len(images)
    ncols = 3
    nrows = math.ceil(n / ncols)
    with matplotlib.rc_context(params):
        fig, axes = _figure(nrows, ncols, height=2.3 * nrows)
        flat = axes.ravel()
        for ax, (label, img) in zip(flat, images.items()):
            ax.imshow(img, vmin=vmin, vmax=vmax)
            ax.set_title(label)
        for ax in flat:
            ax.set_axis_off()
        _save(fig, path)


def plot_cross_sections(path, coords, horizontal, vertical):
    """Profiles through the image centre; each dict maps method -> 1D array."""
    with matplotlib.rc_context(params):
        fig, axes = _figure(1, 2, height=2.6)
        for ax, prof, title in ((axes[0, 0], horizontal, "horizontal"), (axes[0, 1], vertical, "vertical")):
            for label, v in prof.items():
                style = dict(color="k", linewidth=1.5) if label == "truth" else {}
                ax.plot(coords, v, label=label, **style)
            ax.set_title(title)
        axes[0, 1].legend(frameon=False)
        _save(fig, path)
