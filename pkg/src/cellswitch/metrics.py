"""Run-level metrics: energy, saving against all-always-on, CO2 and throughput."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .netmodel import MacroCell, SwitchDecision, UsageError, served_rb
from .traffic import TrafficTrace

# kg of CO2 per kWh.
ZETA = 0.2556
J_PER_KWH = 3.6e6

RESULTS_HEADER = ("policy", "slot", "power_w", "mbs_load", "n_off", "throughput_rbe")
SUMMARY_HEADER = ("policy", "total_energy_j", "energy_saved_j", "co2_saved_kg",
                  "wall_clock_s", "candidates")


@dataclass(frozen=True)
class RunReport:
    policy_name: str
    slot_minutes: int
    per_slot_power: tuple[float, ...]
    per_slot_mbs_load: tuple[float, ...]
    per_slot_off: tuple[frozenset[int], ...]
    per_slot_throughput: tuple[float, ...]
    per_slot_candidates: tuple[int, ...]
    total_energy: float
    energy_saved_vs_aao: float
    co2_kg: float
    co2_saved_kg: float
    wall_clock: float | None
    run_key: str = ""

    @property
    def n_slots(self) -> int:
        return len(self.per_slot_power)

    @property
    def candidates_evaluated(self) -> int:
        return sum(self.per_slot_candidates)

    @property
    def max_slot_candidates(self) -> int:
        return max(self.per_slot_candidates, default=0)


def slot_seconds(slot_minutes: int) -> float:
    return slot_minutes * 60.0


def total_energy(per_slot_power: Iterable[float], slot_minutes: int) -> float:
    """Joules over the run, holding each slot's power for the whole slot."""
    dt = slot_seconds(slot_minutes)
    return sum(p * dt for p in per_slot_power)


def co2_saved(energy_saved_j: float, zeta: float = ZETA) -> float:
    """kg of CO2 avoided by saving ``energy_saved_j`` joules."""
    if energy_saved_j < 0:
        raise UsageError(f"energy saving must be non-negative, got {energy_saved_j}")
    return zeta * (energy_saved_j / J_PER_KWH)


def co2_emitted(energy_j: float, zeta: float = ZETA) -> float:
    return zeta * (energy_j / J_PER_KWH)


def energy_saved(report: RunReport, aao_report: RunReport) -> float:
    if (report.run_key != aao_report.run_key or report.n_slots != aao_report.n_slots
            or report.slot_minutes != aao_report.slot_minutes):
        raise UsageError("reports come from different traces or cells")
    return aao_report.total_energy - report.total_energy


def avg_throughput(trace: TrafficTrace, decisions: Sequence[SwitchDecision],
                   cell: MacroCell) -> list[float]:
    """Per-slot traffic carried by the macro and active small cells, in RB-equivalents."""
    if len(decisions) != trace.n_slots:
        raise UsageError(f"{len(decisions)} decisions for {trace.n_slots} slots")
    return [served_rb(cell, trace.sbs_loads[t], d) for t, d in enumerate(decisions)]


def build_report(policy: str, trace: TrafficTrace, cell: MacroCell, powers: Sequence[float],
                 decisions: Sequence[SwitchDecision], candidates: Sequence[int],
                 aao_energy: float, wall_clock: float | None, zeta: float = ZETA,
                 run_key: str = "") -> RunReport:
    energy = total_energy(powers, trace.slot_minutes)
    saved = aao_energy - energy
    if saved < 0:
        # Within rounding of AAO; anything larger means a policy lost energy.
        if saved < -1e-6 * max(aao_energy, 1.0):
            raise UsageError(f"{policy} used more energy than all-always-on")
        saved = 0.0
    return RunReport(
        policy_name=policy,
        slot_minutes=trace.slot_minutes,
        per_slot_power=tuple(powers),
        per_slot_mbs_load=tuple(d.mbs_load_after for d in decisions),
        per_slot_off=tuple(d.off_set for d in decisions),
        per_slot_throughput=tuple(avg_throughput(trace, decisions, cell)),
        per_slot_candidates=tuple(candidates),
        total_energy=energy,
        energy_saved_vs_aao=saved,
        co2_kg=co2_emitted(energy, zeta),
        co2_saved_kg=co2_saved(saved, zeta),
        wall_clock=wall_clock,
        run_key=run_key,
    )


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def write_results_csv(reports: Iterable[RunReport], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULTS_HEADER)
        for r in reports:
            for t in range(r.n_slots):
                w.writerow([r.policy_name, t, _fmt(r.per_slot_power[t]), _fmt(r.per_slot_mbs_load[t]),
                            len(r.per_slot_off[t]), _fmt(r.per_slot_throughput[t])])


def summary_row(r: RunReport) -> list[str]:
    return [r.policy_name, _fmt(r.total_energy), _fmt(r.energy_saved_vs_aao),
            _fmt(r.co2_saved_kg), _fmt(r.wall_clock), str(r.candidates_evaluated)]


def write_summary_csv(reports: Iterable[RunReport], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_HEADER)
        for r in reports:
            w.writerow(summary_row(r))
