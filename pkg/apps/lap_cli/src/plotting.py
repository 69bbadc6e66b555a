"""Optional SVG figures; needs the ``plot`` extra (matplotlib)."""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from waveguide import Contour, Crossing, CrossingClass, DispersionDiagram  # noqa: E402


def plot_dispersion(
    diagram: DispersionDiagram, k2: float, crossings: list[Crossing], path: Path
) -> Path:
    """Band functions over alpha with the k^2 level and the crossings marked."""
    alphas, bands = diagram.wrapped()
    fig, ax = plt.subplots(figsize=(6, 4))
    for band in range(diagram.n_bands):
        ax.plot(alphas, bands[band], color="black", linewidth=1.0)
    ax.axhline(k2, color="tab:blue", linestyle="--", linewidth=0.8, label=f"$k^2$ = {k2:g}")
    for crossing in crossings:
        color = "tab:red" if crossing.crossing_class is CrossingClass.RUS else "tab:green"
        ax.plot(crossing.alpha, k2, "o", color=color, markersize=5)
    ax.set_xlim(-np.pi, np.pi)
    ax.set_xlabel(r"$\alpha$")
    ax.set_ylabel(r"$\mu_n(\alpha)$")
    ax.legend(loc="upper right")
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path


def plot_contour(contour: Contour, path: Path) -> Path:
    """The contour against the unit circle, detours coloured by side."""
    t = np.linspace(-np.pi, np.pi, 512)
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(np.cos(t), np.sin(t), color="lightgray", linewidth=0.8)
    points = contour.sample(128)
    for segment in sorted({s for _, s in points}):
        z = np.array([p for p, s in points if s == segment])
        ax.plot(z.real, z.imag, linewidth=1.2)
    for crossing in contour.crossings:
        ax.plot(crossing.z.real, crossing.z.imag, "x", color="black")
    ax.set_aspect("equal")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    return path
