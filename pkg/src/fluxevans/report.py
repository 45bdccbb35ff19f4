"""Result serialization: columnar text files, structured summaries, figures.

Everything here is pure output formatting: callers hand over computed
objects (profiles, Evans samples, contour results, low-frequency fits) and
get deterministic text files plus rendered figures.  No numerics happen
here beyond trivial transformations for display.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import yaml  # noqa: E402


def _atomic_write(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w") as fh:
        fh.write(text)
    os.replace(tmp, path)


def save_columnar(path, header, rows, fmt="{: .12e}"):
    """Write a whitespace-delimited table with a commented header line."""
    lines = ["# " + "  ".join(header)]
    for row in rows:
        cells = []
        for c in row:
            if isinstance(c, (int, np.integer)):
                cells.append(f"{int(c):d}")
            else:
                cells.append(fmt.format(float(c)))
        lines.append("  ".join(cells))
    _atomic_write(path, "\n".join(lines) + "\n")


def save_summary(path, data):
    """Write a nested key/value summary as YAML (atomically)."""
    _atomic_write(path, yaml.safe_dump(data, sort_keys=True,
                                       default_flow_style=False))


def _freq_columns(freq):
    return [freq.lam.real, freq.lam.imag] + [float(x) for x in freq.xi]


def sample_rows(samples):
    """Rows (Re lam, Im lam, xi..., Re value, Im value, log_scale,
    conditioning) for a list of Evans samples."""
    return [_freq_columns(s.freq)
            + [s.value.real, s.value.imag, s.log_scale, s.conditioning]
            for s in samples]


def sample_header(d_minus_1):
    return (["re_lambda", "im_lambda"]
            + [f"xi{j}" for j in range(2, d_minus_1 + 2)]
            + ["re_value", "im_value", "log_scale", "conditioning"])


# --- figures ----------------------------------------------------------------

def plot_profile(profile, path):
    """Profile components and stored derivative over the grid."""
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    for i in range(profile.values.shape[1]):
        ax0.plot(profile.grid, profile.values[:, i].real,
                 label=f"component {i}")
        ax1.plot(profile.grid, profile.derivative[:, i].real)
    ax0.set_ylabel("state")
    ax0.legend(loc="best", fontsize=8)
    ax1.set_ylabel("derivative")
    ax1.set_xlabel("x1")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_samples(samples, path, title="Evans samples"):
    """Modulus and phase of the scaled values along a sample list."""
    vals = np.array([s.value for s in samples])
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax0.plot(np.abs(vals), marker=".")
    ax0.set_ylabel("|value|")
    ax0.set_title(title)
    ax1.plot(np.unwrap(np.angle(vals)), marker=".")
    ax1.set_ylabel("unwrapped phase")
    ax1.set_xlabel("sample index")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_contour(result, path):
    """Contour in the frequency plane plus the image curve of values."""
    lams = np.array([f.lam for f in result.contour])
    vals = np.array([s.value for s in result.samples])
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4.5))
    ax0.plot(lams.real, lams.imag, ".-", ms=3)
    ax0.set_xlabel("Re lambda")
    ax0.set_ylabel("Im lambda")
    ax0.set_title("contour")
    ax1.plot(vals.real, vals.imag, ".-", ms=3)
    ax1.axhline(0.0, color="k", lw=0.5)
    ax1.axvline(0.0, color="k", lw=0.5)
    ax1.set_xlabel("Re value")
    ax1.set_ylabel("Im value")
    ax1.set_title(f"image (winding = {result.winding})")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_lowfreq(fit, path):
    """Per-angle constants and inviscid determinant magnitudes."""
    idx = np.arange(len(fit.angles))
    gs = [g if g is not None else np.nan + 0j for g in fit.gamma_estimates]
    gs = np.array(gs, dtype=complex)
    fig, (ax0, ax1) = plt.subplots(2, 1, figsize=(7, 6), sharex=True)
    ax0.plot(idx, gs.real, "o-", label="Re")
    ax0.plot(idx, gs.imag, "s--", label="Im")
    ax0.set_ylabel("limit constant")
    ax0.legend()
    ax0.set_title(f"spread = {fit.spread:.3e}")
    ax1.plot(idx, np.abs(np.array(fit.delta_values)), "o-")
    ax1.set_ylabel("|Delta|")
    ax1.set_xlabel("angle index")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_regime_scan(shell_samples, windings, path):
    """Shell conditioning panel and per-slice winding panel."""
    fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(10, 4.5))
    vals = np.array([abs(s.value) for s in shell_samples])
    conds = np.array([s.conditioning for s in shell_samples])
    ax0.semilogy(vals, "o-", label="|value|")
    ax0.semilogy(conds, "s--", label="sigma_min")
    ax0.set_xlabel("shell sample index")
    ax0.legend()
    ax0.set_title("small-frequency shell")
    xs = np.arange(len(windings))
    ax1.bar(xs, [w for _, w, _ in windings])
    ax1.set_xticks(xs)
    ax1.set_xticklabels([f"{x:g}" for x, _, _ in windings], fontsize=8)
    ax1.set_xlabel("transverse frequency slice")
    ax1.set_ylabel("winding")
    ax1.set_title("intermediate-frequency windings")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
