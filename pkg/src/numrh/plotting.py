"""Optional figure output for the command line; matplotlib is imported lazily."""


def save_figure(path, x, curves, labels, xlabel, ylabel, logy=False):
    """Line plot of curves against x, saved as a PNG without timestamps."""
    try:
        import matplotlib
    except ImportError as exc:
        raise RuntimeError("--plot needs matplotlib; install numrh[plot]") from exc
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(5.0, 3.4))
    for y, lab in zip(curves, labels):
        ax.plot(x, y, lw=1.2, label=lab)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150, metadata={"Software": None})
    plt.close(fig)
