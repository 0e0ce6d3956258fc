"""Training-time and training-cost comparison: retrain-all vs merge.

The combined path trains one model on the pooled multilingual dataset; the
merged path trains per-language adapters that can run concurrently, so its
wall-clock time is the makespan of the language jobs on the available slots
(longest-processing-time-first greedy) plus the merge overhead.  Updating
one language retrains only that adapter on the merged path but the whole
model on the combined path.

Costs follow total GPU-hours times an hourly rate.  Measured costs rarely
follow a single rate across both paths (different instance mixes), so a
scenario may carry directly measured cost figures that bypass the rate
model; the rate model is the planning fallback and assumes one homogeneous
GPU rate.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import ParameterError, ReductionUndefinedError, ValidationError


def reduction_pct(baseline: float, value: float) -> float:
    """Percentage reduction from ``baseline`` to ``value``: 100 (a-b)/a."""
    if baseline > 0:
        return 100.0 * (baseline - value) / baseline
    if baseline == 0 and value == 0:
        return 0.0
    raise ReductionUndefinedError(
        f"reduction from baseline 0 to {value} is undefined"
    )


def lpt_makespan(hours: Iterable[float], slots: int) -> float:
    """Makespan of greedy longest-processing-time-first on ``slots`` machines."""
    jobs = sorted((float(h) for h in hours), reverse=True)
    if not jobs:
        return 0.0
    if slots < 1:
        raise ParameterError(f"parallel slots must be >= 1, got {slots}")
    loads = [0.0] * min(slots, len(jobs))
    heapq.heapify(loads)
    for job in jobs:
        heapq.heappush(loads, heapq.heappop(loads) + job)
    return max(loads)


def _require_number(value, what: str) -> float:
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{what} must be a number, got {value!r}") from None
    if not math.isfinite(value):
        raise ValidationError(f"{what} must be finite, got {value!r}")
    return value


def _require_hours(value, what: str) -> float:
    value = _require_number(value, what)
    if value < 0:
        raise ValidationError(f"{what} must be >= 0, got {value!r}")
    return value


@dataclass(frozen=True)
class LanguageUpdate:
    """A single-language refresh: retrain one adapter vs retrain everything."""

    label: str
    retrain_hours: float
    combined_retrain_hours: float

    def __post_init__(self) -> None:
        if not isinstance(self.label, str) or not self.label:
            raise ValidationError("update label must be a non-empty string")
        object.__setattr__(
            self, "retrain_hours", _require_hours(self.retrain_hours, "update retrain_hours")
        )
        object.__setattr__(
            self,
            "combined_retrain_hours",
            _require_hours(self.combined_retrain_hours, "update combined_retrain_hours"),
        )


@dataclass(frozen=True)
class MeasuredCosts:
    """Directly measured dollar figures that bypass the rate model."""

    initial_combined_cost: float | None = None
    initial_merged_cost: float | None = None
    update_combined_cost: float | None = None
    update_merged_cost: float | None = None


@dataclass(frozen=True)
class CostScenario:
    per_language_hours: Mapping[str, float]
    combined_hours: float
    parallel_slots: int = 1
    rate_per_gpu_hour: float = 0.0
    merge_overhead_hours: float = 0.0
    combined_gpus: float = 1.0
    update: LanguageUpdate | None = None
    measured: MeasuredCosts | None = None

    def __post_init__(self) -> None:
        hours = {
            label: _require_hours(value, f"hours for {label!r}")
            for label, value in dict(self.per_language_hours).items()
        }
        object.__setattr__(self, "per_language_hours", hours)
        object.__setattr__(
            self, "combined_hours", _require_hours(self.combined_hours, "combined_hours")
        )
        object.__setattr__(
            self,
            "merge_overhead_hours",
            _require_hours(self.merge_overhead_hours, "merge_overhead_hours"),
        )
        if not isinstance(self.parallel_slots, int) or self.parallel_slots < 1:
            raise ValidationError(
                f"parallel_slots must be a positive integer, got {self.parallel_slots!r}"
            )
        object.__setattr__(
            self,
            "rate_per_gpu_hour",
            _require_hours(self.rate_per_gpu_hour, "rate_per_gpu_hour"),
        )
        gpus = _require_number(self.combined_gpus, "combined_gpus")
        if gpus <= 0:
            raise ValidationError(f"combined_gpus must be > 0, got {self.combined_gpus!r}")
        object.__setattr__(self, "combined_gpus", gpus)


@dataclass(frozen=True)
class ComparisonReport:
    combined_time_hours: float
    merged_time_hours: float
    combined_cost: float
    merged_cost: float
    time_reduction_pct: float
    cost_reduction_pct: float
    scenario: CostScenario

    def to_json_dict(self) -> dict:
        return {
            "combined_time_hours": self.combined_time_hours,
            "merged_time_hours": self.merged_time_hours,
            "combined_cost": self.combined_cost,
            "merged_cost": self.merged_cost,
            "time_reduction_pct": self.time_reduction_pct,
            "cost_reduction_pct": self.cost_reduction_pct,
            "scenario": scenario_to_json_dict(self.scenario),
        }


def _build_report(
    scenario: CostScenario,
    combined_time: float,
    merged_time: float,
    combined_cost: float,
    merged_cost: float,
) -> ComparisonReport:
    return ComparisonReport(
        combined_time_hours=combined_time,
        merged_time_hours=merged_time,
        combined_cost=combined_cost,
        merged_cost=merged_cost,
        time_reduction_pct=reduction_pct(combined_time, merged_time),
        cost_reduction_pct=reduction_pct(combined_cost, merged_cost),
        scenario=scenario,
    )


def initial_setup(scenario: CostScenario) -> ComparisonReport:
    """Compare first-time training: pooled dataset vs parallel per-language jobs."""
    if not scenario.per_language_hours:
        raise ParameterError("scenario has no per-language hours")
    merged_time = (
        lpt_makespan(scenario.per_language_hours.values(), scenario.parallel_slots)
        + scenario.merge_overhead_hours
    )
    combined_time = scenario.combined_hours

    measured = scenario.measured or MeasuredCosts()
    if measured.initial_merged_cost is not None:
        merged_cost = measured.initial_merged_cost
    else:
        gpu_hours = sum(scenario.per_language_hours.values()) + scenario.merge_overhead_hours
        merged_cost = gpu_hours * scenario.rate_per_gpu_hour
    if measured.initial_combined_cost is not None:
        combined_cost = measured.initial_combined_cost
    else:
        combined_cost = combined_time * scenario.rate_per_gpu_hour * scenario.combined_gpus
    return _build_report(scenario, combined_time, merged_time, combined_cost, merged_cost)


def update_language(scenario: CostScenario) -> ComparisonReport:
    """Compare refreshing one language: one adapter vs full combined retrain."""
    if scenario.update is None:
        raise ParameterError("scenario has no update block")
    upd = scenario.update
    merged_time = upd.retrain_hours + scenario.merge_overhead_hours
    combined_time = upd.combined_retrain_hours

    measured = scenario.measured or MeasuredCosts()
    if measured.update_merged_cost is not None:
        merged_cost = measured.update_merged_cost
    else:
        merged_cost = merged_time * scenario.rate_per_gpu_hour
    if measured.update_combined_cost is not None:
        combined_cost = measured.update_combined_cost
    else:
        combined_cost = combined_time * scenario.rate_per_gpu_hour * scenario.combined_gpus
    return _build_report(scenario, combined_time, merged_time, combined_cost, merged_cost)


def _pct_cell(pct: float) -> str:
    arrow = "↓" if pct >= 0 else "↑"
    return f"({abs(pct):.1f}% {arrow})"


def render_table(
    initial: ComparisonReport | None = None, update: ComparisonReport | None = None
) -> str:
    """Aligned text table: a Training Time block and, when any cost figure is
    nonzero, a Training Cost block, rendered at 1 decimal place."""
    rows_time = []
    rows_cost = []
    if initial is not None:
        rows_time.append(
            (
                "Initial Setup",
                f"{initial.combined_time_hours:g}h",
                f"{initial.merged_time_hours:g}h {_pct_cell(initial.time_reduction_pct)}",
            )
        )
        rows_cost.append(
            (
                "Initial Setup",
                f"${initial.combined_cost:g}",
                f"${initial.merged_cost:g} {_pct_cell(initial.cost_reduction_pct)}",
            )
        )
    if update is not None:
        rows_time.append(
            (
                "Update/Add Language",
                f"{update.combined_time_hours:g}h",
                f"{update.merged_time_hours:g}h {_pct_cell(update.time_reduction_pct)}",
            )
        )
        rows_cost.append(
            (
                "Update/Add Language",
                f"${update.combined_cost:g}",
                f"${update.merged_cost:g} {_pct_cell(update.cost_reduction_pct)}",
            )
        )
    if not rows_time:
        raise ParameterError("nothing to render")

    have_costs = any(
        r.combined_cost != 0 or r.merged_cost != 0 for r in (initial, update) if r is not None
    )

    blocks = [_render_block("Training Time", rows_time)]
    if have_costs:
        blocks.append(_render_block("Training Cost", rows_cost))
    return "\n".join(blocks)


def _render_block(title: str, rows: list[tuple[str, str, str]]) -> str:
    header = ("Model", "Combined Model", "Merged Model")
    widths = [
        max(len(header[i]), *(len(row[i]) for row in rows)) for i in range(3)
    ]
    lines = [title]
    lines.append("  ".join(header[i].ljust(widths[i]) for i in range(3)).rstrip())
    for row in rows:
        lines.append("  ".join(row[i].ljust(widths[i]) for i in range(3)).rstrip())
    return "\n".join(lines) + "\n"


_SCENARIO_KEYS = {
    "per_language_hours",
    "combined_hours",
    "parallel_slots",
    "rate_per_gpu_hour",
    "merge_overhead_hours",
    "combined_gpus",
    "update",
    "measured",
}
_UPDATE_KEYS = {"label", "retrain_hours", "combined_retrain_hours"}
_MEASURED_KEYS = {
    "initial_combined_cost",
    "initial_merged_cost",
    "update_combined_cost",
    "update_merged_cost",
}


def scenario_from_json_dict(doc: dict) -> CostScenario:
    if not isinstance(doc, dict):
        raise ParameterError("scenario must be a JSON object")
    unknown = sorted(set(doc) - _SCENARIO_KEYS)
    if unknown:
        raise ParameterError(f"unknown scenario keys: {unknown}")
    for key in ("per_language_hours", "combined_hours"):
        if key not in doc:
            raise ParameterError(f"scenario is missing {key!r}")
    if not isinstance(doc["per_language_hours"], dict):
        raise ParameterError("per_language_hours must be an object of label -> hours")

    update = None
    if doc.get("update") is not None:
        upd = doc["update"]
        if not isinstance(upd, dict) or set(upd) != _UPDATE_KEYS:
            raise ParameterError(f"update must carry exactly {sorted(_UPDATE_KEYS)}")
        update = LanguageUpdate(upd["label"], upd["retrain_hours"], upd["combined_retrain_hours"])

    measured = None
    if doc.get("measured") is not None:
        meas = doc["measured"]
        if not isinstance(meas, dict) or not set(meas) <= _MEASURED_KEYS:
            raise ParameterError(f"measured keys must be among {sorted(_MEASURED_KEYS)}")
        measured = MeasuredCosts(
            **{k: _require_number(v, f"measured {k}") for k, v in meas.items()}
        )

    return CostScenario(
        per_language_hours=doc["per_language_hours"],
        combined_hours=doc["combined_hours"],
        parallel_slots=doc.get("parallel_slots", 1),
        rate_per_gpu_hour=doc.get("rate_per_gpu_hour", 0.0),
        merge_overhead_hours=doc.get("merge_overhead_hours", 0.0),
        combined_gpus=doc.get("combined_gpus", 1.0),
        update=update,
        measured=measured,
    )


def scenario_to_json_dict(scenario: CostScenario) -> dict:
    doc: dict = {
        "per_language_hours": dict(scenario.per_language_hours),
        "combined_hours": scenario.combined_hours,
        "parallel_slots": scenario.parallel_slots,
        "rate_per_gpu_hour": scenario.rate_per_gpu_hour,
        "merge_overhead_hours": scenario.merge_overhead_hours,
        "combined_gpus": scenario.combined_gpus,
    }
    if scenario.update is not None:
        doc["update"] = {
            "label": scenario.update.label,
            "retrain_hours": scenario.update.retrain_hours,
            "combined_retrain_hours": scenario.update.combined_retrain_hours,
        }
    if scenario.measured is not None:
        doc["measured"] = {
            k: v
            for k, v in (
                ("initial_combined_cost", scenario.measured.initial_combined_cost),
                ("initial_merged_cost", scenario.measured.initial_merged_cost),
                ("update_combined_cost", scenario.measured.update_combined_cost),
                ("update_merged_cost", scenario.measured.update_merged_cost),
            )
            if v is not None
        }
    return doc
