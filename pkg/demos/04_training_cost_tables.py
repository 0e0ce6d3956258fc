#!/usr/bin/env python3
"""Walkthrough: retrain-all vs train-once-merge-as-needed accounting.

Two modes coexist:
  * measured mode: the scenario carries observed wall-clock hours and
    dollar costs; the module recomputes the reduction percentages.
  * predictive mode: only per-language hours and a GPU rate are given;
    merged-path wall-clock time is the LPT makespan on the available slots.
"""

import json
from pathlib import Path

from loramerge import (
    CostScenario,
    initial_setup,
    render_table,
    scenario_from_json_dict,
    update_language,
)

DATA = Path(__file__).parent / "data"


def main():
    for name in ("small_rollout.json", "case_study.json"):
        scenario = scenario_from_json_dict(json.loads((DATA / name).read_text()))
        print(f"== measured scenario {name} ==")
        print(render_table(initial_setup(scenario), update_language(scenario)))

    # predictive mode: no measured costs, one homogeneous GPU rate
    scenario = CostScenario(
        per_language_hours={"en": 2.0, "de": 1.6, "fr": 1.8, "ja": 2.1, "zh": 1.9},
        combined_hours=6.5,
        parallel_slots=3,  # only 3 GPUs free: LPT packs 5 jobs onto them
        rate_per_gpu_hour=32.0,
        merge_overhead_hours=0.2,
    )
    report = initial_setup(scenario)
    print("== predictive scenario (3 slots, $32/GPU-hour) ==")
    print(render_table(report))
    print(f"LPT makespan packs {len(scenario.per_language_hours)} jobs into "
          f"{report.merged_time_hours - scenario.merge_overhead_hours:.1f}h of wall clock")


if __name__ == "__main__":
    main()
