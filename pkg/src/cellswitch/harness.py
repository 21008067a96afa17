"""Scenario construction, per-slot policy runs, SBS-count sweeps and CSV output."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from . import metrics
from .netmodel import SMALL_KINDS, BSKind, MacroCell, UsageError
from .clustering import clear_caches
from .switching import DEFAULT_B_TH, ES_MAX_SBS, POLICIES, PolicyInput, run_policy
from .traffic import (
    DEFAULT_SLOT_MINUTES,
    GridMapping,
    TrafficTrace,
    ingest_cdr,
    read_cdr_csv,
    read_trace_csv,
    slots_for,
    synth_trace,
)

log = logging.getLogger(__name__)

# Largest N at which sweeps still include exhaustive search.
SWEEP_ES_LIMIT = 20
SWEEP_HEADER = ("n_sbs",) + metrics.SUMMARY_HEADER
DEFAULT_MIX = {"rrh": 0.25, "micro": 0.25, "pico": 0.25, "femto": 0.25}


@dataclass(frozen=True)
class Scenario:
    seed: int = 42
    n_sbs: int = 20
    sbs_kind_mix: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_MIX))
    b_th: int = DEFAULT_B_TH
    policies: tuple[str, ...] = POLICIES
    slot_minutes: int = DEFAULT_SLOT_MINUTES
    horizon_minutes: int = 24 * 60
    # {"source": "synthetic", "amplitude": .., "noise": ..}
    # {"source": "cdr", "path": .., "mbs_grids": [a, b], "sbs_grids": [..]} (or "grid_seed")
    # {"source": "file", "path": ..} for a trace written by gen-trace
    trace: Mapping[str, Any] = field(default_factory=lambda: {"source": "synthetic"})
    mbs_max_load: float = 1.0
    zeta: float = metrics.ZETA
    es_max_sbs: int = ES_MAX_SBS
    record_wall_clock: bool = True

    def __post_init__(self):
        mix = {BSKind.parse(k).value: float(v) for k, v in dict(self.sbs_kind_mix).items()}
        if BSKind.MACRO.value in mix:
            raise UsageError("the kind mix may only name small-cell kinds")
        if any(v < 0 for v in mix.values()) or abs(sum(mix.values()) - 1.0) > 1e-9:
            raise UsageError(f"kind proportions must be non-negative and sum to 1, got {mix}")
        object.__setattr__(self, "sbs_kind_mix", mix)
        pols = tuple(p.strip().lower() for p in self.policies)
        for p in pols:
            if p not in POLICIES:
                raise UsageError(f"unknown policy {p!r}; expected a subset of {','.join(POLICIES)}")
        object.__setattr__(self, "policies", pols)
        object.__setattr__(self, "trace", dict(self.trace))
        if self.n_sbs < 0:
            raise UsageError("n_sbs must be >= 0")
        if self.b_th < 1:
            raise UsageError("b_th must be >= 1")
        if "es" in pols and self.n_sbs > self.es_max_sbs:
            raise UsageError(f"ES is capped at {self.es_max_sbs} small cells (scenario has {self.n_sbs})")
        slots_for(self.horizon_minutes, self.slot_minutes)

    @property
    def n_slots(self) -> int:
        return slots_for(self.horizon_minutes, self.slot_minutes)

    def replace(self, **changes) -> Scenario:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["policies"] = list(self.policies)
        return d


_SCENARIO_FIELDS = {f.name for f in dataclasses.fields(Scenario)}


def scenario_from_dict(data: Mapping[str, Any]) -> Scenario:
    unknown = set(data) - _SCENARIO_FIELDS
    if unknown:
        raise UsageError(f"unknown scenario keys: {', '.join(sorted(unknown))}")
    data = dict(data)
    if isinstance(data.get("policies"), str):
        data["policies"] = tuple(data["policies"].split(","))
    elif "policies" in data:
        data["policies"] = tuple(data["policies"])
    try:
        return Scenario(**data)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def load_scenario(path: str | Path) -> Scenario:
    """Read a JSON scenario file; missing keys take the defaults."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    return scenario_from_dict(data)


def assign_kinds(n: int, mix: Mapping[str, float]) -> list[BSKind]:
    """Deterministic kind sequence following ``mix``.

    Each position takes the kind furthest behind its target count, ties going
    to the RRH, micro, pico, femto order. The first ``m`` kinds never depend on
    ``n``, and equal quarters cycle through the four kinds.
    """
    props = [(k, float(mix.get(k.value, 0.0))) for k in SMALL_KINDS]
    counts = {k: 0 for k in SMALL_KINDS}
    out = []
    for j in range(n):
        kind = max(props, key=lambda kp: (kp[1] * (j + 1) - counts[kp[0]], kp[1] > 0))[0]
        counts[kind] += 1
        out.append(kind)
    return out


def build_cell(scn: Scenario) -> MacroCell:
    return MacroCell.from_kinds(assign_kinds(scn.n_sbs, scn.sbs_kind_mix), scn.mbs_max_load)


def build_trace(scn: Scenario, cell: MacroCell) -> TrafficTrace:
    src = dict(scn.trace)
    kind = src.pop("source", "synthetic")
    if kind == "synthetic":
        params = {k: float(src[k]) for k in ("amplitude", "noise") if k in src}
        return synth_trace(scn.seed, scn.n_slots, scn.n_sbs, cell.kinds, scn.slot_minutes, **params)
    if kind == "cdr":
        rows = read_cdr_csv(src["path"])
        if "sbs_grids" in src:
            mapping = GridMapping(tuple(src["mbs_grids"]), tuple(src["sbs_grids"]), src.get("grid_seed"))
        else:
            seed = int(src.get("grid_seed", scn.seed))
            mapping = GridMapping.draw((r[0] for r in rows), scn.n_sbs, seed)
        trace = ingest_cdr(rows, mapping, cell, scn.slot_minutes)
    elif kind == "file":
        trace = read_trace_csv(src["path"])
    else:
        raise UsageError(f"unknown trace source {kind!r}")
    if trace.slot_minutes != scn.slot_minutes:
        raise UsageError(f"trace uses {trace.slot_minutes} min slots, scenario {scn.slot_minutes}")
    return trace


def run_key(trace: TrafficTrace, cell: MacroCell) -> str:
    h = hashlib.sha256()
    h.update(trace.mbs_load.tobytes())
    h.update(trace.sbs_loads.tobytes())
    h.update(repr((trace.slot_minutes, cell)).encode())
    return h.hexdigest()[:16]


def _run_policy_over_trace(name: str, scn: Scenario, cell: MacroCell, trace: TrafficTrace):
    powers, decisions, candidates = [], [], []
    # Each policy is timed from a cold clustering cache.
    clear_caches()
    start = time.perf_counter()
    for t in range(trace.n_slots):
        inp = PolicyInput(cell, trace.sbs_loads[t], float(trace.mbs_load[t]))
        out = run_policy(name, inp, seed=scn.seed, b_th=scn.b_th, es_max_sbs=scn.es_max_sbs)
        powers.append(out.power)
        decisions.append(out.decision)
        candidates.append(out.search_stats.candidates_evaluated)
    return powers, decisions, candidates, time.perf_counter() - start


def run_trace(scn: Scenario, cell: MacroCell, trace: TrafficTrace) -> list[metrics.RunReport]:
    """Run every policy of ``scn`` slot by slot over ``trace``."""
    if trace.n_sbs != cell.n_sbs:
        raise UsageError(f"trace has {trace.n_sbs} small cells, scenario {cell.n_sbs}")
    if trace.n_slots != scn.n_slots:
        raise UsageError(f"trace has {trace.n_slots} slots, scenario expects {scn.n_slots}")
    key = run_key(trace, cell)
    runs = {}
    for name in dict.fromkeys(("aao",) + scn.policies):
        log.info("running %s over %d slots with %d small cells", name, trace.n_slots, cell.n_sbs)
        runs[name] = _run_policy_over_trace(name, scn, cell, trace)
    aao_energy = metrics.total_energy(runs["aao"][0], trace.slot_minutes)
    reports = []
    for name in scn.policies:
        powers, decisions, candidates, wall = runs[name]
        reports.append(metrics.build_report(
            name, trace, cell, powers, decisions, candidates, aao_energy,
            wall if scn.record_wall_clock else None, scn.zeta, key))
    return reports


def run_scenario(scn: Scenario) -> list[metrics.RunReport]:
    cell = build_cell(scn)
    return run_trace(scn, cell, build_trace(scn, cell))


def sweep(n_values: Sequence[int], template: Scenario,
          es_limit: int = SWEEP_ES_LIMIT) -> list[tuple[int, list[metrics.RunReport]]]:
    """One run per small-cell count; ES is dropped above ``es_limit``."""
    if list(n_values) != sorted(n_values):
        raise UsageError("n values must be sorted ascending")
    results = []
    for n in n_values:
        pols = tuple(p for p in template.policies if p != "es" or n <= min(es_limit, template.es_max_sbs))
        results.append((n, run_scenario(template.replace(n_sbs=n, policies=pols))))
    return results


# --- output ---------------------------------------------------------------------

def _metadata(scn: Scenario, trace_meta: Mapping | None = None) -> dict:
    return {
        "scenario": scn.to_dict(),
        "conventions": {
            "zeta_units": "kg CO2 per kWh",
            "throughput_units": "resource-block equivalents",
            "offload_currency": "resource blocks",
            "normalization": "per-station peak",
            "kmeans": {"restarts": 10, "max_iter": 300, "k_max": "min(10, n)"},
        },
        "trace": dict(trace_meta or {}),
    }


def write_run(reports: Sequence[metrics.RunReport], scn: Scenario, out_dir: str | Path,
              trace_meta: Mapping | None = None) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    metrics.write_results_csv(reports, out / "results.csv")
    metrics.write_summary_csv(reports, out / "summary.csv")
    (out / "metadata.json").write_text(
        json.dumps(_metadata(scn, trace_meta), indent=2, sort_keys=True, default=str) + "\n",
        encoding="utf-8")


def write_sweep(results: Iterable[tuple[int, Sequence[metrics.RunReport]]], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SWEEP_HEADER)
        for n, reports in results:
            for r in reports:
                w.writerow([n] + metrics.summary_row(r))
