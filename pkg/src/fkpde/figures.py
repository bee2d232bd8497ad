"""Rendering of benchmark reports to figure files.

One PNG per case: the per-frame relative error curves (mean across seeds),
log-scaled, written next to the delimited output.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def render_error_curves(results: dict, out_stem: str) -> list:
    """Write `<out_stem>_<case>.png` for every non-blown-up case; returns paths."""
    paths = []
    cfg = results.get("config", {})
    for case in results["cases"]:
        ok = [r for r in case["seeds"] if not r["blowup"]]
        if not ok:
            continue
        frames = range(1, len(ok[0]["per_frame_l2"]) + 1)
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        for key, marker, label in (("per_frame_l2", "o", r"rel $\ell_2$"),
                                   ("per_frame_linf", "s", r"rel $\ell_\infty$")):
            curves = [r[key] for r in ok]
            mean = [sum(col) / len(col) for col in zip(*curves)]
            ax.semilogy(frames, [100 * v for v in mean], marker=marker, ms=4, label=label)
        ax.set_xlabel("frame")
        ax.set_ylabel("relative error (%)")
        ax.set_title(f"{cfg.get('suite', '?')} {case['case']} — {cfg.get('solver', '?')}")
        ax.grid(True, which="both", alpha=0.3)
        ax.legend()
        fig.tight_layout()
        path = f"{out_stem}_{case['case']}.png"
        fig.savefig(path, dpi=130)
        plt.close(fig)
        paths.append(path)
    return paths
