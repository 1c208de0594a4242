"""Figure rendering for run reports.

One PNG per system, next to the CSV: the state amplitude history on
top, the storage function against the initial-plus-supplied energy
below (with the closed-form mode energy as a dotted reference when the
run is cavity-driven).
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_STATE_LABEL = {"scalar": "max |d(phi)/dt|  (V/s)",
                "vector": "max |d(A)/dt|  (V/m)"}


def render_run_figure(result, path) -> None:
    """Render one system's time series to a PNG file."""
    rows = result.rows
    steps = [r.step for r in rows]
    fig, (ax_top, ax_bot) = plt.subplots(2, 1, figsize=(6.4, 6.0), sharex=True)

    state = [r.max_abs_state for r in rows]
    ax_top.plot(steps, state, color="tab:blue", lw=1.2, label="state")
    if rows[0].max_abs_potential is not None:
        ax_top.plot(steps, [r.max_abs_potential for r in rows],
                    color="tab:green", lw=1.2, label="potential")
        ax_top.legend(loc="best", fontsize=8)
    finite = [v for v in state if v > 0.0]
    if finite and max(finite) > 1e3 * min(finite):
        ax_top.set_yscale("log")
    ax_top.set_ylabel(_STATE_LABEL.get(result.which, "max |state|"))
    ax_top.set_title(f"{result.which} potential system")

    ax_bot.plot(steps, [r.storage for r in rows], color="tab:blue", lw=1.4,
                label="storage")
    ax_bot.plot(steps, [r.init_plus_supplied for r in rows], color="tab:red",
                lw=1.0, ls="--", label="initial + supplied")
    if result.exact_energy is not None:
        ax_bot.axhline(result.exact_energy, color="black", lw=1.0, ls=":",
                       label="exact mode energy")
    energies = [abs(r.storage) for r in rows if r.storage > 0.0]
    if energies and max(energies) > 1e3 * min(energies):
        ax_bot.set_yscale("log")
    ax_bot.set_xlabel("step")
    ax_bot.set_ylabel("energy (J)")
    ax_bot.legend(loc="best", fontsize=8)

    for ax in (ax_top, ax_bot):
        ax.spines["right"].set_visible(False)
        ax.spines["top"].set_visible(False)

    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
