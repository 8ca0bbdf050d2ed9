"""Regenerate the bundled scenario files under src/sentinel/data/.

The 20-vehicle topology is drawn from a seeded generator (seed FIG1_SEED); the
seed was picked because its initial state verifies safe and the supervised run
completes every route without touching the bad set.  It is one representative
topology with the stated counts, not a reconstruction of a specific layout.
"""

from __future__ import annotations

from sentinel import scenarios
from sentinel.simharness import fixture_path, write_scenario

BUILDERS = {
    "fig3": scenarios.fig3_scenario,
    "fig1": scenarios.fig1_scenario,
    "single": scenarios.single_vehicle_scenario,
    "forced_overlap": scenarios.forced_overlap_scenario,
    "head_on": scenarios.head_on_scenario,
}

if __name__ == "__main__":
    for name, build in BUILDERS.items():
        path = fixture_path(name)
        write_scenario(build(), path)
        print(f"wrote {path}")
