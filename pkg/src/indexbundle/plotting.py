"""Figures written next to the report.

All functions take plain result objects and an output path, draw on a fresh
figure and close it; nothing is shown interactively.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

plt.rcParams.update({"figure.dpi": 110, "font.size": 10, "axes.grid": True, "grid.alpha": 0.3})


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return str(path)


def plot_eigenvalue_path(path, filename, title=None):
    """Eigenvalues of a sampled symmetric path against the path parameter."""
    ev = np.linalg.eigvalsh(path.samples)
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(path.parameters, ev, color="tab:blue", lw=1)
    ax.axhline(0.0, color="k", lw=0.8)
    for name, a, _ in path.segments:
        ax.axvline(path.parameters[a], color="tab:gray", ls=":", lw=0.8)
        ax.text(path.parameters[a], ax.get_ylim()[1], f" {name}", va="top", fontsize=8)
    ax.set_xlabel("path parameter")
    ax.set_ylabel("eigenvalue")
    ax.set_title(title or "spectrum along the path")
    return _save(fig, filename)


def _fibre_angle(frames):
    # direction of the first column, as an angle on the projective line
    return np.array([np.arctan2(F[1, 0], F[0, 0]) if F.shape[1] else np.nan for F in frames])


def plot_loop_bundle(result, filename):
    """Direction of the stable fibres at +inf and -inf around the loop."""
    fig, ax = plt.subplots(figsize=(6, 3.5))
    for b, label in ((result.bundle_plus, "stable at +inf"), (result.bundle_minus, "stable at -inf")):
        ang = np.unwrap(_fibre_angle(b.frames))
        ax.plot(b.params, ang, marker=".", ms=3, label=f"{label} (holonomy {b.holonomy_sign:+d})")
    ax.set_xlabel("loop parameter s")
    ax.set_ylabel("transported fibre angle [rad]")
    ax.set_title(f"w1 of index bundle: {result.w1_index}")
    ax.legend(fontsize=8)
    return _save(fig, filename)


def plot_scan(scan, filename):
    """Smallest principal angle over the torus grid, flagged cells marked."""
    angles = np.array([c.smallest_angle for c in scan.cells]).reshape(scan.grid_shape)
    flagged = np.array(scan.flagged) if scan.flagged else np.zeros((0, len(scan.grid_shape)), dtype=int)
    if len(scan.grid_shape) == 1:
        R = scan.grid_shape[0]
        theta = -np.pi + 2 * np.pi * np.arange(R) / R
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.plot(theta, angles, lw=1)
        if len(flagged):
            ax.plot(theta[flagged[:, 0]], angles[flagged[:, 0]], "rx", label="kernel detected")
            ax.legend(fontsize=8)
        ax.set_xlabel("theta")
        ax.set_ylabel("smallest angle E^s vs E^u [rad]")
    elif len(scan.grid_shape) == 2:
        fig, ax = plt.subplots(figsize=(5, 4.5))
        im = ax.imshow(angles.T, origin="lower", extent=(-np.pi, np.pi, -np.pi, np.pi), cmap="viridis")
        fig.colorbar(im, ax=ax, label="smallest angle [rad]")
        if len(flagged):
            R1, R2 = scan.grid_shape
            ax.plot(-np.pi + 2 * np.pi * flagged[:, 0] / R1, -np.pi + 2 * np.pi * flagged[:, 1] / R2, "r.", ms=3)
        ax.set_xlabel("theta_1")
        ax.set_ylabel("theta_2")
        ax.grid(False)
    else:
        # higher tori: histogram of the angles instead of a map
        fig, ax = plt.subplots(figsize=(6, 3.5))
        ax.hist(angles.ravel(), bins=50)
        ax.set_xlabel("smallest angle [rad]")
    ax.set_title(f"{len(scan.flagged)} flagged cells, wrap counts {tuple(scan.wrap_counts)}")
    return _save(fig, filename)
