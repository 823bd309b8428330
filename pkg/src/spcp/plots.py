"""Figure rendering for solve and benchmark reports.

Figures are written next to the trace CSVs; the CSV stays the canonical
record. Matplotlib is imported lazily with the Agg backend so headless
runs and non-plotting code paths stay light.
"""

__all__ = ["plot_trace", "plot_comparison"]


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _positive_series(times, values):
    pts = [(t, v) for t, v in zip(times, values) if v is not None and v > 0]
    return ([p[0] for p in pts], [p[1] for p in pts])


def plot_trace(trace, path, title=None):
    """Objective / residual / reference-error decay for a single run."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    secs = trace.column("seconds")
    drew = False
    for name, style in (("objective", "-"), ("residual", "--"), ("rel_error", "-.")):
        t, v = _positive_series(secs, trace.column(name))
        if t:
            ax.semilogy(t, v, style, label=name.replace("_", " "))
            drew = True
    ax.set_xlabel("seconds")
    ax.set_ylabel("value")
    if title:
        ax.set_title(title)
    if drew:
        ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_comparison(traces, path, title=None, column="rel_error"):
    """Error-versus-time comparison across solvers.

    ``traces`` maps solver names to SolveTrace objects; falls back to the
    objective column when no reference errors were recorded.
    """
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.5, 4.5))
    used_column = column
    for name, trace in traces.items():
        t, v = _positive_series(trace.column("seconds"), trace.column(column))
        if not t:
            used_column = "objective"
            t, v = _positive_series(trace.column("seconds"), trace.column("objective"))
        if t:
            ax.loglog(t, v, label=name)
    ax.set_xlabel("seconds")
    ax.set_ylabel("relative error" if used_column == "rel_error" else used_column)
    if title:
        ax.set_title(title)
    ax.legend()
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
